"""Ruin probabilities for negative binomial mixture claims.

For claims with an NBM(pi, p) law the ruin probability has a closed series
representation: with Z_u ~ NegBin(u, 1-p),

    psi(u) = sum_{k>=0} Cbar_k nb(u, 1-p)(k) = E[ Cbar_{Z_u} ],   u >= 1,

where the coefficients follow the one-pass convolution recursion

    Cbar_0 = E(N) (1-p)/p
    Cbar_k = Cbar_0 [ sum_{i=1}^{k} f_Ne(i) Cbar_{k-i} + Fbar_Ne(k) ]

driven by the equilibrium weights f_Ne(i) = Fbar_N(i-1)/E(N).  The sequence
equals (1-rho) Fbar_{N*}(k) for a compound truncated-geometric N*, which is
exposed separately as a cross-check.

Coefficient sequences are cached per spec and regrown geometrically, so
repeated psi queries at different surpluses share one table.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distributions import NbmSpec, nb_sf, nbm_equilibrium, _nb_logpmf

__all__ = [
    "CoefficientSeq",
    "NStarSeq",
    "cbar_sequence",
    "nstar_sequence",
    "psi_nbm",
    "compound_geo_zero_mass",
]

# Neglected NegBin(u, 1-p) tail mass in the psi series.
_SERIES_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CoefficientSeq:
    """Cbar coefficients of one mixture spec, with the pieces that built them."""

    source: NbmSpec
    cbar: np.ndarray
    rho: float
    f_ne: np.ndarray
    fbar_ne: np.ndarray

    @property
    def c0(self) -> float:
        return float(self.cbar[0])


def cbar_sequence(spec: NbmSpec, k_max: int) -> CoefficientSeq:
    """Coefficients Cbar_0..Cbar_k_max for the given mixture.

    Requires the net profit condition E(N)(1-p)/p < 1.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    c0 = spec.claim_mean
    if not 0.0 < c0 < 1.0:
        raise ValueError(f"net profit condition requires E(N)(1-p)/p < 1, got {c0}")
    eq = nbm_equilibrium(spec)
    f_ne = np.asarray(eq.weights)  # f_ne[i-1] is the weight on i
    fbar = eq.weight_survival()  # fbar[k] = P(Ne > k), k = 0..len(f_ne)
    kw = f_ne.size

    cbar = np.empty(k_max + 1)
    cbar[0] = c0
    for k in range(1, k_max + 1):
        idx = min(k, kw)
        conv = float(np.dot(f_ne[:idx], cbar[k - idx:k][::-1]))
        cbar[k] = c0 * (conv + float(fbar[min(k, kw)]))
    return CoefficientSeq(
        source=spec, cbar=cbar, rho=1.0 - c0, f_ne=f_ne, fbar_ne=fbar
    )


@dataclass(frozen=True, eq=False)
class NStarSeq:
    """Law of N* = N_1 + ... + N_M with M truncated geometric of parameter rho."""

    f_nstar: np.ndarray
    fbar_nstar: np.ndarray
    rho: float


def nstar_sequence(pi_e: Sequence[float], rho: float, k_max: int) -> NStarSeq:
    """Panjer-style compounding of the weight law pi_e over a TGeometric(rho) count.

    ``f_nstar[k]`` and ``fbar_nstar[k]`` are the mass and survival at k;
    index 0 carries f(0) = 0 and survival 1.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    fn = np.zeros(k_max + 1)
    w = np.asarray(pi_e, dtype=float)
    m = min(k_max, w.size)
    fn[1 : m + 1] = w[:m]
    # survival of the base law: P(N > k), including mass beyond the stored span
    fbar_n = np.append(np.cumsum(fn[::-1])[::-1][1:], 0.0)
    fbar_n = fbar_n + max(0.0, 1.0 - math.fsum(fn.tolist()))

    f_star = np.zeros(k_max + 1)
    fbar_star = np.empty(k_max + 1)
    fbar_star[0] = 1.0
    for k in range(1, k_max + 1):
        conv_f = float(np.dot(fn[1:k], f_star[1:k][::-1]))
        f_star[k] = (1.0 - rho) * conv_f + rho * fn[k]
        conv_s = float(np.dot(fn[1 : k + 1], fbar_star[:k][::-1]))
        fbar_star[k] = (1.0 - rho) * conv_s + fbar_n[k]
    return NStarSeq(f_nstar=f_star, fbar_nstar=fbar_star, rho=rho)


def compound_geo_zero_mass(pi: Sequence[float], p: float, rho: float) -> float:
    """P(S = 0) for S an NBM(pi*, p) compound: rho G_N(p) / (1 - (1-rho) G_N(p))."""
    g = math.fsum(q * p ** (i + 1) for i, q in enumerate(pi))
    return rho * g / (1.0 - (1.0 - rho) * g)


# -- cached psi evaluation ---------------------------------------------------

_cache_lock = threading.Lock()
_coeff_cache: dict[NbmSpec, CoefficientSeq] = {}


def _coefficients(spec: NbmSpec, k_max: int) -> CoefficientSeq:
    with _cache_lock:
        seq = _coeff_cache.get(spec)
        if seq is None or seq.cbar.size <= k_max:
            target = max(k_max + 1, 64)
            size = seq.cbar.size if seq is not None else 64
            while size < target:
                size *= 2
            seq = cbar_sequence(spec, size - 1)
            _coeff_cache[spec] = seq
        return seq


def _series_k_hi(u: int, p: float) -> int:
    # smallest power-of-two-ish bound with NegBin(u, 1-p) tail below tolerance
    k_hi = max(64, int(u * p / (1.0 - p)))
    while nb_sf(u, 1.0 - p, k_hi) >= _SERIES_TOL:
        k_hi *= 2
        if k_hi > 1 << 28:
            raise RuntimeError("series truncation bound exceeded 2^28 terms")
    return k_hi


def psi_nbm(spec: NbmSpec, u: int) -> float:
    """Ruin probability at integer surplus u for NBM(pi, p) claims."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    c0 = spec.claim_mean
    if not 0.0 < c0 < 1.0:
        raise ValueError(f"net profit condition requires E(N)(1-p)/p < 1, got {c0}")
    if u == 0:
        return c0
    k_hi = _series_k_hi(u, spec.p)
    seq = _coefficients(spec, k_hi)
    x = np.arange(k_hi + 1, dtype=float)
    weights = np.exp(_nb_logpmf(float(u), 1.0 - spec.p, x))
    return float(np.dot(seq.cbar[: k_hi + 1], weights))
