"""Coefficient recursion validated through the compound-law identity.

Two independent derivations must meet: the one-pass Cbar recursion, and the
survival function of a compound truncated-geometric count built by Panjer
convolution.  Cbar_k = Cbar_0 * Fbar_{N*}(k) ties them together term by term.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from gdruin import (
    NbmSpec,
    RuinQuery,
    cbar_sequence,
    compound_geo_zero_mass,
    nbm_claims_pmf,
    nstar_sequence,
    psi_nbm,
    psi_pk,
    psi_recursion,
)

SPECS = [
    NbmSpec((1.0,), 0.6),
    NbmSpec((0.5, 0.5), 0.7),
    NbmSpec((0.2, 0.3, 0.5), 0.8),
    NbmSpec((0.7, 0.1, 0.1, 0.1), 0.75),
]
SPEC_IDS = ["geo", "two", "three", "four"]


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_cbar_equals_scaled_compound_survival(spec):
    k_max = 400
    seq = cbar_sequence(spec, k_max)
    ns = nstar_sequence(seq.f_ne, seq.rho, k_max)
    np.testing.assert_allclose(
        seq.cbar, seq.c0 * ns.fbar_nstar, rtol=1e-12, atol=1e-15
    )


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_cbar_invariants(spec):
    seq = cbar_sequence(spec, 300)
    assert seq.c0 == pytest.approx(spec.claim_mean, rel=1e-15)
    assert np.all(seq.cbar >= 0.0)
    assert np.all(np.diff(seq.cbar) <= 1e-15)
    assert seq.cbar[-1] < seq.c0


def test_nstar_is_a_probability_law():
    spec = NbmSpec((0.5, 0.5), 0.7)
    seq = cbar_sequence(spec, 600)
    ns = nstar_sequence(seq.f_ne, seq.rho, 600)
    assert ns.f_nstar[0] == 0.0
    assert ns.fbar_nstar[0] == 1.0
    total = math.fsum(ns.f_nstar.tolist())
    assert total == pytest.approx(1.0, abs=1e-12)
    # survival must be the suffix sums of the mass function
    direct = 1.0 - np.cumsum(ns.f_nstar)
    np.testing.assert_allclose(ns.fbar_nstar, direct, rtol=0, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_zero_mass_closed_form_against_convolution(spec):
    """P(S = 0) closed form vs an explicit generating-function sum."""
    seq = cbar_sequence(spec, 800)
    ns = nstar_sequence(seq.f_ne, seq.rho, 800)
    assert ns.fbar_nstar[-1] < 1e-14  # truncation safe for the sum below
    p = spec.p
    direct = math.fsum(
        f * p**k for k, f in enumerate(ns.f_nstar.tolist())
    )
    closed = compound_geo_zero_mass(seq.f_ne, p, seq.rho)
    assert closed == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_maximum_reaches_one_with_pgf_complement(spec):
    """1 - psi(1) equals the zero mass of the all-time maximum by pgf algebra."""
    from gdruin import nbm_equilibrium

    mu = spec.claim_mean
    p = spec.p
    eq = nbm_equilibrium(spec)
    g_ne = math.fsum(q * p ** (i + 1) for i, q in enumerate(eq.weights))
    assert 1.0 - psi_nbm(spec, 1) == pytest.approx(
        (1.0 - mu) / (1.0 - mu * g_ne), rel=1e-11
    )


# -- agreement of all three solvers ---------------------------------------------


@pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
def test_psi_nbm_matches_recursion_and_series(spec):
    claims = nbm_claims_pmf(spec, tail_tol=1e-15)
    psi_r = psi_recursion(RuinQuery(claims=claims, u_max=15))
    for u in range(16):
        a = psi_nbm(spec, u)
        assert a == pytest.approx(psi_r[u], abs=1e-10)
        assert a == pytest.approx(psi_pk(claims, u, tail_tol=1e-12), abs=1e-10)


def test_psi_nbm_invariants():
    spec = NbmSpec((0.3, 0.7), 0.65)
    vals = [psi_nbm(spec, u) for u in range(25)]
    assert vals[0] == spec.claim_mean
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))


def test_coefficient_regrowth_is_deterministic():
    spec = NbmSpec((0.5, 0.5), 0.7)
    short = cbar_sequence(spec, 64)
    long = cbar_sequence(spec, 2000)
    np.testing.assert_array_equal(short.cbar, long.cbar[:65])
    # cached evaluation stays stable when the table regrows behind it
    before = psi_nbm(spec, 2)
    psi_nbm(spec, 40)
    assert psi_nbm(spec, 2) == before


def test_rejects_missing_net_profit():
    with pytest.raises(ValueError):
        psi_nbm(NbmSpec((1.0,), 0.4), 3)  # claim mean 1.5
    with pytest.raises(ValueError):
        cbar_sequence(NbmSpec((1.0,), 0.5), 10)  # claim mean exactly 1
