"""Distribution layer checked against scipy and mpmath oracles.

Every negative binomial primitive is compared with scipy.stats.nbinom,
the mixed Poisson masses with either closed forms (degenerate, exponential,
Erlang) or high-precision mpmath quadrature (Pareto, lognormal), and the
mixture-closure identities with direct elementwise recomputation.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from gdruin import (
    DiscretePmf,
    GridBudgetError,
    MixingDistribution,
    NbmSpec,
    discretize_mixing,
    equilibrium,
    erlangm_to_nbm,
    geometric_pmf,
    mp_claims_pmf,
    mp_pmf,
    nb_cdf,
    nb_pmf,
    nb_sf,
    nbm_claims_pmf,
    nbm_equilibrium,
    nbm_pmf,
)

nb_args = st.tuples(
    st.integers(min_value=1, max_value=300),
    st.floats(min_value=0.05, max_value=0.95),
    st.integers(min_value=0, max_value=1500),
)


# -- negative binomial primitives ----------------------------------------------


@given(nb_args)
@settings(max_examples=200, deadline=None)
def test_nb_pmf_matches_scipy(args):
    k, p, x = args
    ref = sps.nbinom.pmf(x, k, p)
    assert nb_pmf(k, p, x) == pytest.approx(ref, rel=1e-10, abs=1e-300)


@given(nb_args)
@settings(max_examples=200, deadline=None)
def test_nb_cdf_sf_match_scipy(args):
    k, p, x = args
    assert nb_cdf(k, p, x) == pytest.approx(sps.nbinom.cdf(x, k, p), rel=1e-10, abs=1e-300)
    assert nb_sf(k, p, x) == pytest.approx(sps.nbinom.sf(x, k, p), rel=1e-10, abs=1e-300)
    assert nb_cdf(k, p, x) + nb_sf(k, p, x) == pytest.approx(1.0, abs=1e-12)


def test_nb_pmf_small_cases_by_hand():
    # k=1 is plain geometric: p (1-p)^x
    assert nb_pmf(1, 0.25, 3) == pytest.approx(0.25 * 0.75**3, rel=1e-14)
    # k=2, x=2: C(3,2) p^2 q^2
    assert nb_pmf(2, 0.5, 2) == pytest.approx(3 * 0.25 * 0.25, rel=1e-14)


# -- DiscretePmf container -------------------------------------------------------


@given(
    st.lists(st.floats(min_value=0.01, max_value=10.0), min_size=1, max_size=40),
    st.floats(min_value=0.0, max_value=0.3),
)
@settings(max_examples=150, deadline=None)
def test_discrete_pmf_survival_is_exact_suffix_sum(raw, tail_frac):
    total = math.fsum(raw) / (1.0 - tail_frac) if tail_frac else math.fsum(raw)
    pmf = np.asarray(raw) / total
    tail = max(0.0, 1.0 - math.fsum(pmf.tolist()))
    mean = float(np.dot(np.arange(pmf.size), pmf)) + tail * pmf.size
    dist = DiscretePmf(pmf, tail_mass=tail, mean=mean)
    for x in range(dist.support_max + 1):
        direct = math.fsum(pmf[x + 1 :].tolist()) + tail
        assert dist.sf(x) == pytest.approx(direct, rel=1e-12, abs=1e-15)
    assert dist.sf(-1) == 1.0
    assert dist.sf(dist.support_max + 5) == tail
    assert dist.f(dist.support_max + 1) == 0.0


def test_discrete_pmf_rejects_bad_mass():
    with pytest.raises(ValueError):
        DiscretePmf(np.array([0.5, 0.4]))  # short of 1
    with pytest.raises(ValueError):
        DiscretePmf(np.array([0.5, -0.1, 0.6]))
    with pytest.raises(ValueError):
        DiscretePmf(np.array([0.5, 0.3]), tail_mass=0.2)  # mean required


def test_geometric_pmf_closed_form():
    p = 0.6
    dist = geometric_pmf(p, tail_tol=1e-12)
    assert dist.mean == pytest.approx((1 - p) / p, rel=1e-15)
    for x in range(0, dist.support_max, 7):
        assert dist.f(x) == pytest.approx(p * (1 - p) ** x, rel=1e-13)
        assert dist.sf(x) == pytest.approx((1 - p) ** (x + 1), rel=1e-11)
    assert dist.tail_mass < 1e-12


def test_equilibrium_is_scaled_survival():
    dist = geometric_pmf(0.7)
    eq = equilibrium(dist)
    for x in range(12):
        assert eq.f(x) == pytest.approx(dist.sf(x) / dist.mean, rel=1e-12)
    # geometric is a fixed point of the equilibrium transform
    for x in range(12):
        assert eq.f(x) == pytest.approx(dist.f(x), rel=1e-11)


# -- negative binomial mixtures ---------------------------------------------------


def test_nbm_pmf_is_the_scipy_mixture():
    spec = NbmSpec((0.2, 0.5, 0.3), 0.7)
    for x in range(40):
        ref = sum(
            w * sps.nbinom.pmf(x, i + 1, 0.7) for i, w in enumerate(spec.weights)
        )
        assert nbm_pmf(spec, x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_nbm_claims_pmf_mass_and_mean():
    spec = NbmSpec((0.4, 0.6), 0.65)
    claims = nbm_claims_pmf(spec, tail_tol=1e-13)
    assert math.fsum(claims.pmf.tolist()) + claims.tail_mass == pytest.approx(1.0, abs=1e-14)
    assert claims.mean == pytest.approx(spec.claim_mean, rel=1e-14)
    direct = float(np.dot(np.arange(claims.pmf.size), claims.pmf))
    assert direct == pytest.approx(spec.claim_mean, rel=1e-10)


def test_nbm_equilibrium_matches_elementwise_transform():
    """The mixture family is closed under the equilibrium transform.

    The transformed spec must reproduce survival/mean of the original claim
    law mass-by-mass, which is the property the ruin series relies on.
    """
    spec = NbmSpec((0.3, 0.45, 0.25), 0.6)
    eq_spec = nbm_equilibrium(spec)
    claims = nbm_claims_pmf(spec, tail_tol=1e-15)
    eq_direct = equilibrium(claims)
    for x in range(60):
        assert nbm_pmf(eq_spec, x) == pytest.approx(eq_direct.f(x), rel=1e-10, abs=1e-16)


@pytest.mark.parametrize("beta", [1.5, 3.0])
def test_erlang_mixture_to_nbm_identity(beta):
    # mixing a Poisson rate over a mixture of Erlangs gives exactly an NBM law
    weights = (0.25, 0.5, 0.25)
    mix = MixingDistribution.erlang_mixture(weights, beta)
    spec = erlangm_to_nbm(weights, beta)
    assert spec.p == pytest.approx(beta / (beta + 1.0), rel=1e-15)
    for x in range(30):
        assert mp_pmf(mix, x) == pytest.approx(nbm_pmf(spec, x), rel=1e-12, abs=1e-300)


# -- mixing laws -----------------------------------------------------------------


def test_mixing_survival_against_scipy():
    xs = np.linspace(0.0, 8.0, 33)
    cases = [
        (MixingDistribution.exponential(2.0), sps.expon(scale=0.5)),
        (MixingDistribution.erlang(2, 3.0), sps.gamma(a=2, scale=1 / 3)),
        (MixingDistribution.pareto(3.0, 1.0), sps.lomax(c=3.0, scale=1.0)),
        (MixingDistribution.lognormal(-1.0, 1.0), sps.lognorm(s=1.0, scale=math.exp(-1))),
    ]
    for mix, frozen in cases:
        np.testing.assert_allclose(mix.sf(xs), frozen.sf(xs), rtol=1e-10, atol=1e-14)
        np.testing.assert_allclose(mix.cdf(xs), frozen.cdf(xs), rtol=1e-10, atol=1e-14)


def test_mixing_means():
    assert MixingDistribution.exponential(2.0).mean == pytest.approx(0.5)
    assert MixingDistribution.erlang(2, 3.0).mean == pytest.approx(2 / 3)
    assert MixingDistribution.pareto(3.0, 1.0).mean == pytest.approx(0.5)
    assert MixingDistribution.lognormal(-1.0, 1.0).mean == pytest.approx(math.exp(-0.5))
    assert not math.isfinite(MixingDistribution.pareto(1.0, 1.0).mean)


def test_mp_pmf_degenerate_is_poisson():
    mix = MixingDistribution.degenerate(0.8)
    for x in range(15):
        assert mp_pmf(mix, x) == pytest.approx(sps.poisson.pmf(x, 0.8), rel=1e-12)


def test_mp_pmf_exponential_is_geometric():
    beta = 2.5
    mix = MixingDistribution.exponential(beta)
    q = 1.0 / (1.0 + beta)
    for x in range(25):
        assert mp_pmf(mix, x) == pytest.approx((1 - q) * q**x, rel=1e-12)


def test_mp_pmf_erlang_is_negative_binomial():
    mix = MixingDistribution.erlang(2, 3.0)
    for x in range(25):
        ref = sps.nbinom.pmf(x, 2, 0.75)
        assert mp_pmf(mix, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize(
    "mix",
    [MixingDistribution.pareto(3.0, 1.0), MixingDistribution.lognormal(-1.0, 1.0)],
    ids=["pareto", "lognormal"],
)
def test_mp_pmf_quadrature_against_mpmath(mix):
    """Mass values that need numerical integration, re-derived at 30 digits."""
    if mix.kind == "pareto":
        alpha, theta = mix.params
        dens = lambda lam: alpha * theta**alpha / (theta + lam) ** (alpha + 1)
    else:
        m, s = mix.params
        dens = lambda lam: mpmath.exp(-((mpmath.log(lam) - m) ** 2) / (2 * s**2)) / (
            lam * s * mpmath.sqrt(2 * mpmath.pi)
        )
    with mpmath.workdps(30):
        for x in (0, 1, 2, 5, 9):
            f = lambda lam: mpmath.exp(-lam) * lam**x / mpmath.factorial(x) * dens(lam)
            ref = float(mpmath.quad(f, [0, x + 1, mpmath.inf]))
            assert mp_pmf(mix, x) == pytest.approx(ref, rel=1e-9)


def test_mp_claims_pmf_windowed_and_complete():
    mix = MixingDistribution.erlang(2, 3.0)
    short = mp_claims_pmf(mix, x_max=6)
    assert short.support_max == 6
    assert short.mean == pytest.approx(2 / 3, rel=1e-15)
    full = mp_claims_pmf(mix, tail_tol=1e-10)
    for x in range(7):
        assert short.f(x) == pytest.approx(full.f(x), rel=1e-13)
    assert short.tail_mass == pytest.approx(
        math.fsum(full.pmf[7:].tolist()) + full.tail_mass, rel=1e-9
    )


# -- grid discretization -----------------------------------------------------------


def test_discretize_matches_cdf_differences():
    mix = MixingDistribution.erlang(2, 3.0)
    n = 10
    d = discretize_mixing(mix, n)
    assert d.n == n
    assert d.p_n == pytest.approx(n / (n + 1.0), rel=1e-15)
    ks = np.arange(1, len(d.weights) + 1, dtype=float)
    ref = np.asarray(mix.cdf(ks / n)) - np.asarray(mix.cdf((ks - 1) / n))
    np.testing.assert_allclose(np.asarray(d.weights), ref, rtol=1e-9, atol=1e-16)
    assert math.fsum(d.weights) + d.residual == pytest.approx(1.0, abs=1e-12)


def test_discretize_budget_guard():
    with pytest.raises(GridBudgetError):
        discretize_mixing(MixingDistribution.pareto(3.0, 1.0), 500, cap=1000)


def test_mass_at_rate_zero_cannot_be_discretized():
    with pytest.raises(ValueError):
        discretize_mixing(MixingDistribution.degenerate(0.0), 10)
    # a point mass away from zero is fine: one grid bucket carries everything
    d = discretize_mixing(MixingDistribution.degenerate(0.5), 10)
    assert math.fsum(d.weights) == pytest.approx(1.0, abs=1e-12)
    assert d.weights[4] == pytest.approx(1.0, abs=1e-12)
