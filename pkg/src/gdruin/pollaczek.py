"""Ruin probabilities as a geometric compound of ladder heights.

The maximal aggregate loss decomposes into a Geometric(1 - mu) number of
independent ladder heights, each with the equilibrium law of the claims.
That gives the series

    psi(u) = (1 - mu) sum_{k>=1} mu^k P(Y*_1 + ... + Y*_k >= u)

used here as an independent oracle against the forward recursion.  Only the
convolution values on 0..u-1 matter for a fixed u, so the cdf powers are
built on that window; truncating the series index at k_cut leaves a
remainder below mu^(k_cut+1)/(1-mu), which is pushed under ``tail_tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscretePmf, equilibrium

__all__ = ["ConvolutionTable", "psi_pk", "severity_at_zero"]


@dataclass(frozen=True, eq=False)
class ConvolutionTable:
    """Cdf values of the k-fold ladder height sums on a fixed window.

    ``powers[k - 1][x]`` is P(Y*_1 + ... + Y*_k <= x) for x = 0..width-1.
    """

    base: DiscretePmf
    powers: np.ndarray
    k_cut: int


def _ladder_cdf_powers(fe: DiscretePmf, width: int, k_cut: int) -> np.ndarray:
    pmf_win = fe.pmf[:width].copy()
    if pmf_win.size < width:
        pmf_win = np.pad(pmf_win, (0, width - pmf_win.size))
    powers = np.empty((k_cut, width))
    conv = pmf_win.copy()
    powers[0] = np.cumsum(conv)
    for k in range(1, k_cut):
        conv = np.convolve(conv, pmf_win)[:width]
        powers[k] = np.cumsum(conv)
    return powers


def psi_pk(claims: DiscretePmf, u: int, tail_tol: float = 1e-10) -> float:
    """Evaluate the geometric compound series at surplus u.

    The result is exact within the window (convolutions on 0..u-1 involve no
    truncation) except for the series cut, whose remainder is below
    ``tail_tol``.  Needs mean < 1 and, for u >= 1, stored claim support
    through u - 1.
    """
    mu = claims.mean
    if not 0.0 < mu < 1.0:
        raise ValueError(f"series requires 0 < mean < 1, got {mu}")
    if u < 0:
        raise ValueError("u must be nonnegative")
    if u == 0:
        return mu
    if claims.tail_mass > 0.0 and claims.support_max < u - 1:
        raise ValueError(
            f"claim support ends at {claims.support_max}; need survival through {u - 1}"
        )
    if not 0.0 < tail_tol < 1.0:
        raise ValueError("tail_tol must lie in (0, 1)")

    # mu^(k_cut+1)/(1-mu) < tail_tol
    k_cut = max(1, math.ceil(math.log(tail_tol * (1.0 - mu)) / math.log(mu)))
    fe = equilibrium(claims)
    table = ConvolutionTable(
        base=fe, powers=_ladder_cdf_powers(fe, width=u, k_cut=k_cut), k_cut=k_cut
    )
    terms = [
        mu ** k * (1.0 - table.powers[k - 1][u - 1]) for k in range(1, k_cut + 1)
    ]
    return (1.0 - mu) * math.fsum(terms)


def severity_at_zero(claims: DiscretePmf, w: int) -> float:
    """P(deficit at ruin <= w, ruin occurs) from surplus zero.

    Equals sum_{x=0}^{w} P(Y > x); its first difference in w is the claim
    survival, and the w -> infinity limit is the mean, i.e. psi(0).
    """
    if w < 0:
        return 0.0
    return math.fsum(claims.sf(x) for x in range(w + 1))
