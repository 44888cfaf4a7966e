"""Exact ruin probabilities by forward recursion.

The surplus process is U(t) = u + t - S(t) with iid integer claims, one unit
of premium per period, and ruin at the first t >= 1 with U(t) <= 0.  Under
the net profit condition E(Y) < 1 the ruin probabilities satisfy

    psi(0)   = E(Y)
    psi(u+1) = ( psi(u) - sum_{y=1}^{u} f(y) psi(u+1-y) - P(Y > u) ) / f(0)

which this module evaluates with compensated summation and a residual check,
since the division by f(0) can amplify rounding when f(0) is small.

A compound binomial variant (claims arrive with probability p per period,
strictly positive claim sizes) is handled by converting to an equivalent
all-periods claim law and back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DiscretePmf

__all__ = [
    "RuinQuery",
    "CompoundBinomialSpec",
    "psi_recursion",
    "psi_geometric_closed",
    "gerber_recursion",
    "convert_cb_to_gd",
    "convert_gd_to_cb",
]

# Residual beyond this means the recursion output cannot be trusted.
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RuinQuery:
    """Claims plus the largest initial surplus to evaluate."""

    claims: DiscretePmf
    u_max: int

    def __post_init__(self):
        if int(self.u_max) != self.u_max or self.u_max < 0:
            raise ValueError("u_max must be a nonnegative integer")
        object.__setattr__(self, "u_max", int(self.u_max))


def psi_recursion(query: RuinQuery) -> np.ndarray:
    """Ruin probabilities psi(0..u_max), exact up to floating point.

    Requirements on the claim law: f(0) > 0, mean < 1, and stored support
    through u_max - 1 so every survival value the recursion reads is exact
    rather than a truncation bound.

    The recursion is numerically backward-stable here: perturbation modes
    grow like the reciprocal roots of f̂(w) = w, and under the net profit
    condition that equation has no root inside (0, 1), so no error mode
    grows geometrically.  Growth is at most linear in u, and a residual
    check on the defining identity guards the result anyway.
    """
    claims = query.claims
    u_max = query.u_max
    f0 = claims.f(0)
    if f0 <= 0.0:
        raise ValueError("recursion needs f(0) > 0; shift or convert the claim law")
    mu = claims.mean
    if not mu < 1.0:
        raise ValueError(f"net profit condition requires mean < 1, got {mu}")
    if u_max >= 1 and claims.tail_mass > 0.0 and claims.support_max < u_max - 1:
        # with zero declared tail the stored survivals are exact at any depth
        raise ValueError(
            "claim support ends at "
            f"{claims.support_max} but survival values through {u_max - 1} are needed; "
            "rebuild the claims with a smaller tail tolerance"
        )

    psi = np.empty(u_max + 1)
    psi[0] = mu
    pmf = claims.pmf
    for u in range(u_max):
        terms = [psi[u], -claims.sf(u)]
        y_hi = min(u, claims.support_max)
        if y_hi >= 1:
            terms.extend((-pmf[y] * psi[u + 1 - y] for y in range(1, y_hi + 1)))
        psi[u + 1] = math.fsum(terms) / f0

    _check_residual(psi, claims)

    bad = psi < -1e-12
    if np.any(bad):
        raise RuntimeError(f"recursion produced psi({np.argmax(bad)}) < -1e-12")
    if np.any(np.diff(psi) > 1e-12):
        raise RuntimeError("recursion output is not nonincreasing")
    psi = np.clip(psi, 0.0, 1.0)
    return np.minimum.accumulate(psi)


def _check_residual(psi: np.ndarray, claims: DiscretePmf) -> None:
    """Re-evaluate the defining identity at every step and bound the defect."""
    pmf = claims.pmf
    worst = 0.0
    for u in range(psi.size - 1):
        y_hi = min(u, claims.support_max)
        terms = [claims.f(0) * psi[u + 1], -psi[u], claims.sf(u)]
        terms.extend(pmf[y] * psi[u + 1 - y] for y in range(1, y_hi + 1))
        worst = max(worst, abs(math.fsum(terms)))
    if worst > _RESIDUAL_TOL:
        raise RuntimeError(
            f"recursion residual {worst:.3e} exceeds {_RESIDUAL_TOL:.0e}; "
            "claim law is too extreme for double precision"
        )


def psi_geometric_closed(p: float, u: int) -> float:
    """Closed-form ruin probability for Geometric(p) claims.

    For p > 1/2 (mean below one) psi(u) = ((1-p)/p)^(u+1); the boundary
    p <= 1/2 means certain ruin.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if u < 0:
        raise ValueError("u must be nonnegative")
    if p <= 0.5:
        return 1.0
    return ((1.0 - p) / p) ** (u + 1)


# ---------------------------------------------------------------------------
# Compound binomial bridge
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CompoundBinomialSpec:
    """Per-period claim probability p and the size law of a positive claim.

    ``claim_pmf`` is the distribution of the claim amount given one occurs;
    its mass at zero must be zero, otherwise the occurrence probability is
    not identifiable.
    """

    p: float
    claim_pmf: DiscretePmf

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if self.claim_pmf.f(0) != 0.0:
            raise ValueError("conditional claim size must be strictly positive")

    @property
    def mean(self) -> float:
        """Unconditional mean claim per period."""
        return self.p * self.claim_pmf.mean


def convert_cb_to_gd(spec: CompoundBinomialSpec) -> DiscretePmf:
    """Fold the occurrence probability into a single per-period claim law.

    f(0) = 1 - p and f(y) = p g(y) for y >= 1, where g is the conditional
    size law.  Ruin probabilities agree path by path, since the aggregate
    per-period claim streams are identical in law.
    """
    g = spec.claim_pmf
    pmf = spec.p * g.pmf.copy()
    pmf[0] = 1.0 - spec.p
    return DiscretePmf(pmf, tail_mass=spec.p * g.tail_mass, mean=spec.mean)


def convert_gd_to_cb(claims: DiscretePmf) -> CompoundBinomialSpec:
    """Inverse of :func:`convert_cb_to_gd`; needs f(0) < 1."""
    q0 = claims.f(0)
    if q0 >= 1.0:
        raise ValueError("claim law is degenerate at zero")
    p = 1.0 - q0
    g = claims.pmf / p
    g[0] = 0.0
    total = math.fsum(g.tolist())
    cond = DiscretePmf(g, tail_mass=max(0.0, 1.0 - total), mean=claims.mean / p)
    return CompoundBinomialSpec(p=p, claim_pmf=cond)


def gerber_recursion(spec: CompoundBinomialSpec, u_max: int) -> np.ndarray:
    """Ruin probabilities for the compound binomial model, psi(0) = p E(X)."""
    return psi_recursion(RuinQuery(claims=convert_cb_to_gd(spec), u_max=u_max))
