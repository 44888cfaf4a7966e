"""Distribution machinery for integer claims, mixing laws, and their transforms.

Claim amounts live on {0, 1, 2, ...}.  Three representations matter here:

* :class:`DiscretePmf` -- a dense probability vector with an explicit tail
  remainder; the common currency every solver consumes.
* :class:`NbmSpec` -- a negative binomial mixture NBM(pi, p): a countable
  mixture of NegBin(k, p) components sharing p, with weights pi over
  k = 1, 2, ...  The family is closed under the equilibrium transform,
  which is what makes the coefficient recursion for ruin probabilities work.
* :class:`MixingDistribution` -- a nonnegative law for a random Poisson
  rate.  The induced mixed Poisson claim distribution either collapses to
  an NBM (Erlang-type mixing) or is evaluated by adaptive quadrature.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, special

__all__ = [
    "DiscretePmf",
    "MixingDistribution",
    "NbmSpec",
    "DiscretizationSpec",
    "QuadratureError",
    "GridBudgetError",
    "nb_pmf",
    "nb_cdf",
    "nbm_pmf",
    "equilibrium",
    "nbm_equilibrium",
    "mp_pmf",
    "erlangm_to_nbm",
    "discretize_mixing",
    "geometric_pmf",
    "nbm_claims_pmf",
    "mp_claims_pmf",
]

# Mass-balance tolerance for stored distributions.
_SUM_TOL = 1e-12
# Certified absolute tolerance for mixed Poisson quadrature.
_QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive integration could not certify the requested tolerance."""


class GridBudgetError(RuntimeError):
    """A tail-driven grid exceeded its configured size cap."""


# ---------------------------------------------------------------------------
# Claim distributions on {0, 1, 2, ...}
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscretePmf:
    """Probability mass function on {0, ..., support_max} plus a declared tail.

    Parameters
    ----------
    pmf : array_like
        ``pmf[x]`` is P(Y = x) for x = 0..len(pmf)-1.
    tail_mass : float, optional
        Probability beyond ``support_max``.  Stored values plus the tail must
        account for all mass (within 1e-12).
    mean : float, optional
        E(Y).  Required when ``tail_mass`` exceeds 1e-9, because a truncated
        vector no longer determines the mean.

    Notes
    -----
    ``survival[x]`` holds P(Y > x), accumulated from the high end of the
    support so small tail values keep full relative precision.  Beyond the
    stored support :meth:`sf` returns the declared tail mass, which is an
    upper bound on the true survival there; solvers that need exact survival
    values validate that the stored support is long enough.
    """

    pmf: np.ndarray
    tail_mass: float = 0.0
    mean: float = None  # type: ignore[assignment]
    survival: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pmf = np.ascontiguousarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size == 0:
            raise ValueError("pmf must be a nonempty 1-D array")
        if np.any(pmf < 0.0) or not np.all(np.isfinite(pmf)):
            raise ValueError("pmf values must be finite and nonnegative")
        if not 0.0 <= self.tail_mass <= 1.0:
            raise ValueError("tail_mass must lie in [0, 1]")
        total = math.fsum(pmf.tolist()) + self.tail_mass
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"pmf plus tail_mass must sum to 1, got {total!r}")
        object.__setattr__(self, "pmf", pmf)

        upper = np.cumsum(pmf[::-1])[::-1]  # upper[x] = sum_{y >= x} pmf[y]
        survival = np.empty_like(pmf)
        survival[:-1] = upper[1:] + self.tail_mass
        survival[-1] = self.tail_mass
        object.__setattr__(self, "survival", survival)

        if self.mean is None:
            if self.tail_mass > 1e-9:
                raise ValueError("mean must be supplied when tail_mass exceeds 1e-9")
            mean = float(np.dot(np.arange(pmf.size, dtype=float), pmf))
            object.__setattr__(self, "mean", mean)
        else:
            object.__setattr__(self, "mean", float(self.mean))

    @property
    def support_max(self) -> int:
        return self.pmf.size - 1

    def f(self, x: int) -> float:
        """P(Y = x); zero outside the stored support."""
        if x < 0 or x > self.support_max:
            return 0.0
        return float(self.pmf[x])

    def sf(self, x: int) -> float:
        """P(Y > x); the declared tail mass beyond the stored support."""
        if x < 0:
            return 1.0
        if x >= self.support_max:
            return float(self.tail_mass)
        return float(self.survival[x])


def geometric_pmf(p: float, tail_tol: float = 1e-12) -> DiscretePmf:
    """Geometric claim law f(y) = p (1-p)^y on {0, 1, ...}.

    The support is truncated where the survival (1-p)^(y+1) drops below
    ``tail_tol``; the remainder is carried as declared tail mass and the mean
    (1-p)/p is stored exactly.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if not 0.0 < tail_tol < 1.0:
        raise ValueError("tail_tol must lie in (0, 1)")
    lq = math.log1p(-p)
    n = max(1, math.ceil(math.log(tail_tol) / lq))
    y = np.arange(n, dtype=float)
    pmf = p * np.exp(y * lq)
    tail = math.exp(n * lq)  # (1-p)^n = P(Y > n-1)
    return DiscretePmf(pmf, tail_mass=tail, mean=(1.0 - p) / p)


def equilibrium(dist: DiscretePmf) -> DiscretePmf:
    """Ladder-height (equilibrium) transform f_e(y) = P(Y > y) / E(Y).

    Raises
    ------
    ValueError
        If the mean is zero or not finite.
    """
    mu = dist.mean
    if not math.isfinite(mu) or mu <= 0.0:
        raise ValueError("equilibrium transform needs a finite positive mean")
    pmf_e = dist.survival / mu
    total = math.fsum(pmf_e.tolist())
    # Certified quadrature noise of ~1e-10 per stored mass can push the
    # total visibly past 1 on long supports; genuine inconsistencies show
    # up orders of magnitude larger than this band.
    if total > 1.0 + 1e-8:
        raise ValueError("inconsistent survival values: equilibrium mass exceeds 1")
    if total > 1.0:
        pmf_e = pmf_e / total
        total = math.fsum(pmf_e.tolist())
    return DiscretePmf(pmf_e, tail_mass=max(0.0, 1.0 - total))


# ---------------------------------------------------------------------------
# Negative binomial machinery
# ---------------------------------------------------------------------------


def _check_nb_args(k: int, p: float) -> None:
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")


def _nb_logpmf(k: float, p: float, x: np.ndarray) -> np.ndarray:
    # log C(k+x-1, x) + k log p + x log(1-p), safe for k + x in the millions
    return (
        special.gammaln(k + x)
        - special.gammaln(k)
        - special.gammaln(x + 1.0)
        + k * math.log(p)
        + x * math.log1p(-p)
    )


def nb_pmf(k: int, p: float, x: int) -> float:
    """Negative binomial mass C(k+x-1, x) p^k (1-p)^x at x = 0, 1, 2, ...

    Evaluated in log space through the log-gamma function so large shapes and
    arguments stay finite.
    """
    _check_nb_args(k, p)
    if x < 0:
        return 0.0
    return float(np.exp(_nb_logpmf(float(k), p, np.asarray(float(x)))))


def nb_pmf_block(k: int, p: float, x_hi: int) -> np.ndarray:
    """Vector of nb_pmf(k, p, x) for x = 0..x_hi (inclusive)."""
    _check_nb_args(k, p)
    x = np.arange(x_hi + 1, dtype=float)
    return np.exp(_nb_logpmf(float(k), p, x))


def nb_cdf(k: int, p: float, x: int) -> float:
    """P(NegBin(k, p) <= x), via the regularized incomplete beta function."""
    _check_nb_args(k, p)
    if x < 0:
        return 0.0
    return float(special.betainc(k, x + 1.0, p))


def nb_sf(k: int, p: float, x: int) -> float:
    """P(NegBin(k, p) > x), computed without cancellation."""
    _check_nb_args(k, p)
    if x < 0:
        return 1.0
    return float(special.betainc(x + 1.0, k, 1.0 - p))


@dataclass(frozen=True)
class NbmSpec:
    """Negative binomial mixture NBM(pi, p).

    ``weights[i]`` is the mixing weight q_{i+1} on the NegBin(i+1, p)
    component; mixture indices start at 1.  ``residual`` is mass beyond the
    stored weights, nonzero only for truncated constructions such as grid
    discretizations of a mixing law.
    """

    weights: tuple[float, ...]
    p: float
    residual: float = 0.0

    def __post_init__(self):
        w = tuple(float(q) for q in self.weights)
        if not w:
            raise ValueError("at least one mixture weight is required")
        if any(q < 0.0 or not math.isfinite(q) for q in w):
            raise ValueError("mixture weights must be finite and nonnegative")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if not 0.0 <= self.residual <= 1.0:
            raise ValueError("residual must lie in [0, 1]")
        if abs(math.fsum(w) + self.residual - 1.0) > _SUM_TOL:
            raise ValueError("mixture weights plus residual must sum to 1")
        object.__setattr__(self, "weights", w)

    @property
    def weight_mean(self) -> float:
        """E(N) over the stored weights (the residual contributes nothing)."""
        return math.fsum((i + 1) * q for i, q in enumerate(self.weights))

    @property
    def claim_mean(self) -> float:
        """E of the mixture: E(N) (1-p)/p."""
        return self.weight_mean * (1.0 - self.p) / self.p

    def weight_survival(self) -> np.ndarray:
        """P(N > j) for j = 0..len(weights), accumulated from the high end."""
        arr = np.asarray(self.weights, dtype=float)
        tails = np.cumsum(arr[::-1])[::-1]  # tails[i] = P(N >= i+1)
        return np.append(tails, 0.0) + self.residual


def nbm_pmf(spec: NbmSpec, x: int) -> float:
    """Mixture mass sum_k q_k nb_pmf(k, p, x); the residual is excluded."""
    if x < 0:
        return 0.0
    k = np.arange(1, len(spec.weights) + 1, dtype=float)
    logs = (
        special.gammaln(k + x)
        - special.gammaln(k)
        - special.gammaln(x + 1.0)
        + k * math.log(spec.p)
        + x * math.log1p(-spec.p)
    )
    return float(np.dot(np.asarray(spec.weights), np.exp(logs)))


def nbm_pmf_block(spec: NbmSpec, x_hi: int) -> np.ndarray:
    """Vector of nbm_pmf(spec, x) for x = 0..x_hi."""
    x = np.arange(x_hi + 1, dtype=float)
    out = np.zeros(x_hi + 1)
    for i, q in enumerate(spec.weights):
        if q > 0.0:
            out += q * np.exp(_nb_logpmf(float(i + 1), spec.p, x))
    return out


def nbm_claims_pmf(spec: NbmSpec, tail_tol: float = 1e-12) -> DiscretePmf:
    """Materialize the mixture as a DiscretePmf, truncated at ``tail_tol``.

    Intended for specs with modest weight counts; the exact mean
    E(N)(1-p)/p is stored alongside.  The spec's residual must already sit
    below ``tail_tol``.
    """
    if spec.residual > tail_tol:
        raise ValueError("spec residual exceeds the requested tail tolerance")
    x_hi = 64
    while True:
        pmf = nbm_pmf_block(spec, x_hi)
        tail = 1.0 - math.fsum(pmf.tolist()) - spec.residual
        if tail < tail_tol:
            break
        if x_hi > 4_000_000:
            raise GridBudgetError("mixture support exceeds 4e6 points")
        x_hi *= 2
    # trim trailing entries the tail bound makes redundant
    keep = pmf.size
    while keep > 1 and pmf[keep - 1] == 0.0:
        keep -= 1
    pmf = pmf[:keep]
    tail = max(0.0, 1.0 - math.fsum(pmf.tolist()))
    return DiscretePmf(pmf, tail_mass=tail, mean=spec.claim_mean)


def nbm_equilibrium(spec: NbmSpec) -> NbmSpec:
    """Equilibrium of the mixture: weights F̄_N(j-1)/E(N) for j >= 1, same p.

    The weight index starts at 1, matching the mixture convention.
    """
    if spec.residual > 1e-9:
        raise ValueError("equilibrium weights need the full mixture; residual too large")
    en = spec.weight_mean
    if not math.isfinite(en) or en <= 0.0:
        raise ValueError("E(N) must be finite and positive")
    surv = spec.weight_survival()  # surv[j] = P(N > j), j = 0..K
    w_e = surv[:-1] / en  # weight on j = 1..K is P(N > j-1)/E(N)
    resid = max(0.0, 1.0 - math.fsum(w_e.tolist()))
    return NbmSpec(tuple(w_e), spec.p, residual=resid)


# ---------------------------------------------------------------------------
# Mixing laws for a random Poisson rate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixingDistribution:
    """Nonnegative law for a random Poisson rate.

    Use the classmethod constructors.  ``kind`` selects the family, ``params``
    carries its parameters, ``weights`` is only used by the Erlang mixture,
    and ``atoms`` holds (support, cdf) tuples for tabulated laws.
    """

    kind: str
    params: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    atoms: tuple[tuple[float, ...], tuple[float, ...]] | None = None

    # -- constructors -------------------------------------------------------

    @classmethod
    def exponential(cls, beta: float) -> "MixingDistribution":
        """Exponential rate law with rate beta (mean 1/beta)."""
        if beta <= 0.0:
            raise ValueError("beta must be positive")
        return cls("exponential", (float(beta),))

    @classmethod
    def erlang(cls, shape: int, beta: float) -> "MixingDistribution":
        """Erlang(shape, beta): sum of `shape` exponentials of rate beta."""
        if int(shape) != shape or shape < 1:
            raise ValueError("shape must be a positive integer")
        if beta <= 0.0:
            raise ValueError("beta must be positive")
        return cls("erlang", (int(shape), float(beta)))

    @classmethod
    def erlang_mixture(cls, weights: Sequence[float], beta: float) -> "MixingDistribution":
        """Mixture of Erlang(k, beta) components, k = 1..len(weights)."""
        w = tuple(float(q) for q in weights)
        if not w or any(q < 0.0 for q in w):
            raise ValueError("weights must be nonnegative and nonempty")
        if abs(math.fsum(w) - 1.0) > _SUM_TOL:
            raise ValueError("weights must sum to 1")
        if beta <= 0.0:
            raise ValueError("beta must be positive")
        return cls("erlang_mixture", (float(beta),), weights=w)

    @classmethod
    def pareto(cls, alpha: float, theta: float) -> "MixingDistribution":
        """Pareto with survival (theta/(theta+x))^alpha; mean theta/(alpha-1)."""
        if alpha <= 0.0 or theta <= 0.0:
            raise ValueError("alpha and theta must be positive")
        return cls("pareto", (float(alpha), float(theta)))

    @classmethod
    def lognormal(cls, m: float, s: float) -> "MixingDistribution":
        """Lognormal: log of the rate is Normal(m, s^2)."""
        if s <= 0.0:
            raise ValueError("s must be positive")
        return cls("lognormal", (float(m), float(s)))

    @classmethod
    def degenerate(cls, value: float) -> "MixingDistribution":
        """Point mass: the plain Poisson(value) case."""
        if value < 0.0:
            raise ValueError("value must be nonnegative")
        return cls("degenerate", (float(value),))

    @classmethod
    def from_cdf_table(cls, support: Sequence[float], cdf: Sequence[float]) -> "MixingDistribution":
        """Tabulated law with atoms at `support` and cumulative values `cdf`."""
        xs = tuple(float(v) for v in support)
        cs = tuple(float(v) for v in cdf)
        if len(xs) != len(cs) or not xs:
            raise ValueError("support and cdf must be nonempty and equally long")
        if any(x < 0.0 for x in xs) or any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("support must be nonnegative and strictly increasing")
        if any(not 0.0 <= c <= 1.0 for c in cs) or any(b < a for a, b in zip(cs, cs[1:])):
            raise ValueError("cdf values must be nondecreasing within [0, 1]")
        if abs(cs[-1] - 1.0) > 1e-9:
            raise ValueError("cdf must reach 1 at the last support point")
        return cls("user_cdf", atoms=(xs, cs))

    @classmethod
    def load_cdf_table(cls, path: str) -> "MixingDistribution":
        """Read a two-column CSV ``lambda,cdf`` (header optional)."""
        xs: list[float] = []
        cs: list[float] = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().startswith("#"):
                    continue
                try:
                    x, c = float(row[0]), float(row[1])
                except ValueError:
                    continue  # header line
                xs.append(x)
                cs.append(c)
        return cls.from_cdf_table(xs, cs)

    # -- law ----------------------------------------------------------------

    @property
    def mean(self) -> float:
        if self.kind == "exponential":
            return 1.0 / self.params[0]
        if self.kind == "erlang":
            return self.params[0] / self.params[1]
        if self.kind == "erlang_mixture":
            beta = self.params[0]
            return math.fsum((i + 1) * q for i, q in enumerate(self.weights)) / beta
        if self.kind == "pareto":
            alpha, theta = self.params
            return theta / (alpha - 1.0) if alpha > 1.0 else math.inf
        if self.kind == "lognormal":
            m, s = self.params
            return math.exp(m + 0.5 * s * s)
        if self.kind == "degenerate":
            return self.params[0]
        xs, cs = self.atoms  # type: ignore[misc]
        deltas = np.diff(np.concatenate(([0.0], np.asarray(cs))))
        return float(np.dot(np.asarray(xs), deltas))

    def sf(self, x):
        """Survival P(rate > x); accepts scalars or arrays."""
        arr = np.asarray(x, dtype=float)
        if self.kind == "exponential":
            out = np.where(arr <= 0.0, 1.0, np.exp(-self.params[0] * np.maximum(arr, 0.0)))
        elif self.kind == "erlang":
            shape, beta = self.params
            out = np.where(arr <= 0.0, 1.0, special.gammaincc(shape, beta * np.maximum(arr, 0.0)))
        elif self.kind == "erlang_mixture":
            beta = self.params[0]
            t = beta * np.maximum(arr, 0.0)
            out = np.zeros_like(arr)
            for i, q in enumerate(self.weights):
                if q > 0.0:
                    out = out + q * special.gammaincc(i + 1.0, t)
            out = np.where(arr <= 0.0, 1.0, out)
        elif self.kind == "pareto":
            alpha, theta = self.params
            out = np.where(arr <= 0.0, 1.0, (theta / (theta + np.maximum(arr, 0.0))) ** alpha)
        elif self.kind == "lognormal":
            m, s = self.params
            safe = np.maximum(arr, np.finfo(float).tiny)
            out = np.where(arr <= 0.0, 1.0, 0.5 * special.erfc((np.log(safe) - m) / (s * math.sqrt(2.0))))
        elif self.kind == "degenerate":
            out = np.where(arr < self.params[0], 1.0, 0.0)
        else:
            xs, cs = self.atoms  # type: ignore[misc]
            idx = np.searchsorted(np.asarray(xs), arr, side="right")
            cdf_ext = np.concatenate(([0.0], np.asarray(cs)))
            out = 1.0 - cdf_ext[idx]
        if np.ndim(x) == 0:
            return float(out)
        return out

    def cdf(self, x):
        """P(rate <= x)."""
        out = 1.0 - np.asarray(self.sf(x))
        if np.ndim(x) == 0:
            return float(out)
        return out

    def _pdf(self, lam: float) -> float:
        """Density, only defined for the absolutely continuous quadrature kinds."""
        if self.kind == "pareto":
            alpha, theta = self.params
            return alpha * theta**alpha / (theta + lam) ** (alpha + 1.0)
        if self.kind == "lognormal":
            m, s = self.params
            if lam <= 0.0:
                return 0.0
            z = (math.log(lam) - m) / s
            return math.exp(-0.5 * z * z) / (lam * s * math.sqrt(2.0 * math.pi))
        raise ValueError(f"no density for mixing kind {self.kind!r}")


def erlangm_to_nbm(weights: Sequence[float], beta: float) -> NbmSpec:
    """Erlang-mixture rate with rate parameter beta gives NBM(pi, beta/(beta+1))."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    return NbmSpec(tuple(float(q) for q in weights), beta / (beta + 1.0))


def _poisson_logpmf(lam: float, x: np.ndarray) -> np.ndarray:
    return x * math.log(lam) - lam - special.gammaln(x + 1.0)


def mp_pmf(mix: MixingDistribution, x: int) -> float:
    """Mixed Poisson mass P(X = x) = E[ e^{-rate} rate^x / x! ].

    Closed forms are used for Erlang-type and atomic mixing; Pareto and
    lognormal mixing fall back to certified adaptive quadrature (absolute
    tolerance 1e-10, :class:`QuadratureError` when the budget is exceeded).
    """
    if x < 0:
        return 0.0
    kind = mix.kind
    if kind == "exponential":
        beta = mix.params[0]
        return nb_pmf(1, beta / (beta + 1.0), x)
    if kind == "erlang":
        shape, beta = mix.params
        return nb_pmf(int(shape), beta / (beta + 1.0), x)
    if kind == "erlang_mixture":
        return nbm_pmf(erlangm_to_nbm(mix.weights, mix.params[0]), x)
    if kind == "degenerate":
        lam = mix.params[0]
        if lam == 0.0:
            return 1.0 if x == 0 else 0.0
        return float(np.exp(_poisson_logpmf(lam, np.asarray(float(x)))))
    if kind == "user_cdf":
        xs, cs = mix.atoms  # type: ignore[misc]
        deltas = np.diff(np.concatenate(([0.0], np.asarray(cs))))
        total = 0.0
        for lam, d in zip(xs, deltas):
            if d <= 0.0:
                continue
            if lam == 0.0:
                total += d if x == 0 else 0.0
            else:
                total += d * float(np.exp(_poisson_logpmf(lam, np.asarray(float(x)))))
        return total
    return _mp_pmf_quad(mix, x)


def _mp_pmf_quad(mix: MixingDistribution, x: int) -> float:
    # substitute rate = t/(1-t) so the integral runs over (0, 1)
    lgx = special.gammaln(x + 1.0)

    def integrand(t: float) -> float:
        if t <= 0.0 or t >= 1.0:
            return 0.0
        lam = t / (1.0 - t)
        if lam <= 0.0:
            return 0.0
        logpois = x * math.log(lam) - lam - lgx
        if logpois < -745.0:  # exp underflows; the density cannot rescue it
            return 0.0
        return math.exp(logpois) * mix._pdf(lam) / ((1.0 - t) * (1.0 - t))

    mean = mix.mean
    pts = sorted({mean / (1.0 + mean), x / (1.0 + x) if x > 0 else 0.5})
    with warnings.catch_warnings():
        # the error estimate below is checked against _QUAD_TOL directly;
        # scipy's advisory warning adds nothing the caller can act on
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            integrand, 0.0, 1.0, points=list(pts), epsabs=1e-13, epsrel=1e-11, limit=400
        )
    if err > _QUAD_TOL:
        raise QuadratureError(
            f"mixed Poisson mass at x={x}: quadrature error {err:.2e} exceeds {_QUAD_TOL:.0e}"
        )
    return val


def mp_claims_pmf(
    mix: MixingDistribution,
    x_max: int | None = None,
    tail_tol: float = 1e-12,
) -> DiscretePmf:
    """Materialize the mixed Poisson claim law as a DiscretePmf.

    With ``x_max`` given, the vector covers exactly 0..x_max and the remainder
    is declared tail mass (the exact recursion only reads that far).  Without
    it, the support grows until the tail drops below ``tail_tol``; note this
    costs one quadrature per support point for Pareto/lognormal mixing.
    """
    mean = mix.mean
    if not math.isfinite(mean):
        raise ValueError("mixing law must have a finite mean")
    if x_max is not None:
        vals = np.array([mp_pmf(mix, x) for x in range(x_max + 1)])
        return _as_claims(vals, mean)
    vals_list: list[float] = []
    acc = 0.0
    x = 0
    while True:
        v = mp_pmf(mix, x)
        vals_list.append(v)
        new_acc = acc + v
        # once additions stop moving the accumulator the vector is as
        # complete as float64 can express; the exact fsum remainder below
        # becomes the declared tail, whatever tolerance was asked for
        saturated = x >= 1 and v > 0.0 and new_acc == acc
        acc = new_acc
        if x >= 1 and (1.0 - acc < tail_tol or saturated):
            break
        if x > 1_000_000:
            raise GridBudgetError("mixed Poisson support exceeds 1e6 points")
        x += 1
    return _as_claims(np.asarray(vals_list), mean)


def _as_claims(vals: np.ndarray, mean: float) -> DiscretePmf:
    # quadrature noise can push the total a few ulp past 1; renormalize that
    total = math.fsum(vals.tolist())
    if total > 1.0 + 1e-9:
        raise ValueError(f"claim masses sum to {total!r}, beyond rounding slack")
    if total > 1.0:
        vals = vals / total
        total = math.fsum(vals.tolist())
    return DiscretePmf(vals, tail_mass=max(0.0, 1.0 - total), mean=mean)


# ---------------------------------------------------------------------------
# Grid discretization of a mixing law
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscretizationSpec:
    """Weights q(k, n) = F(k/n) - F((k-1)/n) of a mixing law on the grid k/n.

    ``weights[k-1]`` holds q(k, n) for k = 1..K_max; ``residual`` is the
    survival beyond the last grid point.  ``p_n`` = n/(n+1) is the matching
    negative binomial parameter.
    """

    n: int
    p_n: float
    weights: np.ndarray
    residual: float
    source: MixingDistribution

    def to_nbm(self) -> NbmSpec:
        return NbmSpec(tuple(self.weights), self.p_n, residual=self.residual)


def discretize_mixing(
    mix: MixingDistribution,
    n: int,
    mass_tol: float = 1e-12,
    cap: int = 2_000_000,
) -> DiscretizationSpec:
    """Project a mixing law onto the lattice {k/n : k >= 1}.

    The grid stops at the smallest K with survival(K/n) < ``mass_tol``;
    heavier tails than ``cap`` grid points raise :class:`GridBudgetError`.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    if not 0.0 < mass_tol < 1.0:
        raise ValueError("mass_tol must lie in (0, 1)")
    n = int(n)

    f0 = float(mix.cdf(0.0))
    if f0 > 0.0:
        raise ValueError("mixing law puts mass at rate 0; grid weights would not sum to 1")
    block = 4096
    cdf_vals = [f0]
    k_hi = 0
    while True:
        ks = np.arange(k_hi + 1, min(k_hi + block, cap) + 1, dtype=float)
        if ks.size == 0:
            raise GridBudgetError(f"mixing grid exceeds {cap} points at n={n}")
        vals = np.asarray(mix.cdf(ks / n), dtype=float)
        cdf_vals.extend(vals.tolist())
        k_hi = int(ks[-1])
        if 1.0 - cdf_vals[-1] < mass_tol:
            break
        if k_hi >= cap:
            raise GridBudgetError(f"mixing grid exceeds {cap} points at n={n}")
    cdf_arr = np.asarray(cdf_vals)
    weights = np.diff(cdf_arr)
    weights = np.maximum(weights, 0.0)  # guard monotone round-off
    residual = max(0.0, 1.0 - float(cdf_arr[-1]))
    return DiscretizationSpec(
        n=n, p_n=n / (n + 1.0), weights=weights, residual=residual, source=mix
    )
