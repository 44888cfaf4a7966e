"""Ruin probability approximations for mixed Poisson claims.

A mixed Poisson claim law with mixing distribution F on the positive axis is
the n -> infinity limit of NBM claims built from the grid weights
q(k, n) = F(k/n) - F((k-1)/n) with p_n = n/(n+1).  Two approximations follow:

* method 1 evaluates the coefficient series directly,
      psi(u) ~= sum_k Cbar_{k,n} nb(u, 1/(1+n))(k),
  truncated by the pmf-floor rule: only indices where the NegBin(u, 1/(1+n))
  mass exceeds a floor are kept, scanning from the mean upward for the last
  crossing (and downward for the first, when the skipped lower mass is
  certifiably negligible).
* method 2 replaces the series by a Monte Carlo average of Cbar at NegBin
  draws, with a sample standard error.

The coefficients use the limiting substitution Cbar_{0,n} = E(Lambda); the
raw grid sum survives only inside the equilibrium-weight normalization.
Everything is memoized per (mixing law, grid settings), so sweeping u is
cheap after the first call.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy import special

from .distributions import (
    DiscretePmf,
    GridBudgetError,
    MixingDistribution,
    mp_claims_pmf,
    _nb_logpmf,
)
from .recursion import RuinQuery, psi_recursion

__all__ = [
    "MpApproxConfig",
    "MpCoefficientSeq",
    "mp_coefficients",
    "psi_mp_method1",
    "psi_mp_method2",
    "psi_mp_exact_reference",
]

# When the grid hits its cap, the last survival value must already be below
# this for the discarded tail to be ignorable; otherwise the law is too
# heavy-tailed for the configured budget.
_CAP_SF_TOL = 1e-9
# Mass certificate for starting the method-1 sum above k = 0.
_LOWER_MASS_TOL = 1e-9


@dataclass(frozen=True)
class MpApproxConfig:
    """Grid and sampling parameters for the two approximation methods.

    ``n`` is the grid refinement, ``m`` the Monte Carlo sample size of
    method 2, ``pmf_floor`` the series truncation floor, ``grid_tol`` the
    survival level at which the mixing grid stops, ``grid_cap`` the hard
    grid budget, and ``seed`` makes method 2 reproducible.
    """

    n: int = 500
    m: int = 1000
    pmf_floor: float = 1e-5
    grid_tol: float = 1e-16
    grid_cap: int = 2_000_000
    seed: int | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")
        if not self.pmf_floor > 0.0:
            raise ValueError("pmf_floor must be positive")
        if not 0.0 < self.grid_tol < 1.0:
            raise ValueError("grid_tol must lie in (0, 1)")
        if int(self.grid_cap) != self.grid_cap or self.grid_cap < 1:
            raise ValueError("grid_cap must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "grid_cap", int(self.grid_cap))

    @property
    def p_n(self) -> float:
        return self.n / (self.n + 1.0)


@dataclass(frozen=True, eq=False)
class MpCoefficientSeq:
    """Grid coefficients for one mixing law at one refinement.

    ``cbar_n[k]`` is Cbar_{k,n}; ``f_ne`` and ``fbar_ne`` are the grid
    equilibrium weights and their tails; ``grid_sum`` is the raw survival sum
    sum_j Fbar(j/n) over the stored grid.
    """

    source: MixingDistribution
    n: int
    cbar_n: np.ndarray
    c0: float
    f_ne: np.ndarray
    fbar_ne: np.ndarray
    grid_sum: float
    grid_points: int
    grid_residual_sf: float


# -- grid survival values, cached per (mix, n, tolerance, cap) ---------------

_grid_lock = threading.Lock()
_grid_cache: dict[tuple, np.ndarray] = {}
_coeff_lock = threading.Lock()
_coeff_cache: dict[tuple, MpCoefficientSeq] = {}


def _grid_survival(mix: MixingDistribution, cfg: MpApproxConfig) -> np.ndarray:
    """Fbar(j/n) for j = 0..J, stopping at grid_tol or the cap.

    At the cap the last stored survival must be below 1e-9, a pointwise
    certificate that the discarded tail cannot move the normalizing sum at
    the accuracy the approximations work to.
    """
    key = (mix, cfg.n, cfg.grid_tol, cfg.grid_cap)
    with _grid_lock:
        cached = _grid_cache.get(key)
    if cached is not None:
        return cached

    n = cfg.n
    block = 1 << 16
    chunks: list[np.ndarray] = []
    j0 = 0
    while True:
        hi = min(j0 + block, cfg.grid_cap + 1)
        js = np.arange(j0, hi, dtype=float)
        vals = np.asarray(mix.sf(js / n), dtype=float)
        keep = np.nonzero(vals < cfg.grid_tol)[0]
        if keep.size:
            chunks.append(vals[: keep[0]])
            break
        chunks.append(vals)
        j0 = hi
        if j0 > cfg.grid_cap:
            last = chunks[-1][-1] if chunks[-1].size else 1.0
            if last > _CAP_SF_TOL:
                raise GridBudgetError(
                    f"mixing survival still {last:.2e} after {cfg.grid_cap} grid "
                    f"points at n={n}; tail too heavy for this budget"
                )
            break
    grid = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    if grid.size == 0:
        raise ValueError("mixing law has no mass above 0")
    with _grid_lock:
        _grid_cache[key] = grid
    return grid


def _build_coefficients(
    mix: MixingDistribution, cfg: MpApproxConfig, k_max: int
) -> MpCoefficientSeq:
    elam = mix.mean
    if not 0.0 < elam < 1.0:
        raise ValueError(f"net profit condition requires E(Lambda) < 1, got {elam}")
    grid = _grid_survival(mix, cfg)
    j_max = grid.size - 1

    # All tail sums in extended precision: the coefficient identity is
    # checked downstream to 1e-12 and double accumulation over ~1e6 grid
    # points would eat most of that budget.
    grid_ld = grid.astype(np.longdouble)
    gsum = grid_ld.sum()

    kw = min(k_max, j_max + 1)  # stored equilibrium weights f_Ne(1..kw)
    f_ne = np.asarray(grid_ld[:kw] / gsum, dtype=float)

    fbar_ne = np.zeros(k_max + 1)
    top = min(k_max, j_max)
    # suffix[j] = sum_{l >= j} grid[l]; fbar_ne[k] = suffix[k]/gsum for k <= j_max
    suffix = np.cumsum(grid_ld[: top + 1][::-1])[::-1]
    suffix += grid_ld[top + 1 :].sum()
    fbar_ne[: top + 1] = np.asarray(suffix / gsum, dtype=float)

    cbar = np.empty(k_max + 1)
    cbar[0] = elam
    for k in range(1, k_max + 1):
        idx = min(k, kw)
        conv = float(np.dot(f_ne[:idx], cbar[k - idx:k][::-1]))
        cbar[k] = elam * (conv + fbar_ne[k])
    return MpCoefficientSeq(
        source=mix,
        n=cfg.n,
        cbar_n=cbar,
        c0=elam,
        f_ne=f_ne,
        fbar_ne=fbar_ne,
        grid_sum=float(gsum),
        grid_points=grid.size,
        grid_residual_sf=float(grid[-1]),
    )


def mp_coefficients(
    mix: MixingDistribution, cfg: MpApproxConfig, k_max: int
) -> MpCoefficientSeq:
    """Coefficients Cbar_{0..k_max, n}, memoized and regrown geometrically."""
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    key = (mix, cfg.n, cfg.grid_tol, cfg.grid_cap)
    with _coeff_lock:
        seq = _coeff_cache.get(key)
        if seq is None or seq.cbar_n.size <= k_max:
            size = max(64, seq.cbar_n.size if seq is not None else 64)
            while size <= k_max:
                size *= 2
            seq = _build_coefficients(mix, cfg, size - 1)
            _coeff_cache[key] = seq
        return seq


# -- method 1: truncated series ----------------------------------------------


def _series_window(u: int, cfg: MpApproxConfig) -> tuple[int, int, np.ndarray]:
    """Indices [k_lo, k_hi] passing the pmf floor, plus the pmf values on 0..k_hi."""
    n = cfg.n
    mean = u * n
    sigma = math.sqrt(u * n * (n + 1.0))
    span = int(mean + 12.0 * sigma) + 64
    x = np.arange(span + 1, dtype=float)
    logpmf = _nb_logpmf(float(u), 1.0 / (1.0 + n), x)
    pmf = np.exp(logpmf)
    above = np.nonzero(pmf > cfg.pmf_floor)[0]
    if above.size == 0:
        raise ValueError(
            f"every NegBin({u}, 1/{n + 1}) mass is below pmf_floor={cfg.pmf_floor}; "
            "lower the floor or the grid refinement"
        )
    k_hi = int(above[-1])
    k_lo = int(above[0])
    if k_lo > 0:
        # drop the lower stub only when its mass is certifiably negligible
        below_mass = float(special.betainc(u, k_lo, 1.0 / (1.0 + n)))
        if below_mass >= _LOWER_MASS_TOL:
            k_lo = 0
    return k_lo, k_hi, pmf


def psi_mp_method1(mix: MixingDistribution, u: int, cfg: MpApproxConfig) -> float:
    """Truncated coefficient series at surplus u."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    elam = mix.mean
    if not 0.0 < elam < 1.0:
        raise ValueError(f"net profit condition requires E(Lambda) < 1, got {elam}")
    if u == 0:
        return elam
    k_lo, k_hi, pmf = _series_window(u, cfg)
    seq = mp_coefficients(mix, cfg, k_hi)
    return float(np.dot(seq.cbar_n[k_lo : k_hi + 1], pmf[k_lo : k_hi + 1]))


# -- method 2: Monte Carlo over the mixing index ------------------------------


def _negbin_draws(u: int, n: int, m: int, seed, rng_stream: int) -> np.ndarray:
    """m draws of NegBin(u, 1/(1+n)) as sums of u inverse-cdf geometric draws.

    The explicit inverse transform keeps output identical across generator
    library versions; the stream is keyed by (seed, stream index).
    """
    if seed is None:
        ss = np.random.SeedSequence()
    else:
        ss = np.random.SeedSequence((int(seed), rng_stream))
    rng = np.random.Generator(np.random.Philox(ss))
    lq = math.log1p(-1.0 / (1.0 + n))  # log of the geometric miss probability
    total = np.zeros(m, dtype=np.int64)
    # draw in column blocks so u in the hundreds stays memory-friendly
    step = max(1, (1 << 22) // max(m, 1))
    done = 0
    while done < u:
        cols = min(step, u - done)
        unif = rng.random((m, cols))
        total += np.floor(np.log1p(-unif) / lq).astype(np.int64).sum(axis=1)
        done += cols
    return total


def psi_mp_method2(
    mix: MixingDistribution, u: int, cfg: MpApproxConfig
) -> tuple[float, float]:
    """Monte Carlo estimate of the series and its sample standard error."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    elam = mix.mean
    if not 0.0 < elam < 1.0:
        raise ValueError(f"net profit condition requires E(Lambda) < 1, got {elam}")
    if u == 0:
        return elam, 0.0
    z = _negbin_draws(u, cfg.n, cfg.m, cfg.seed, rng_stream=u)
    seq = mp_coefficients(mix, cfg, int(z.max()))
    vals = seq.cbar_n[z]
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(cfg.m)) if cfg.m > 1 else math.inf
    return est, se


# -- exact reference -----------------------------------------------------------


def psi_mp_exact_reference(mix: MixingDistribution, u_max: int) -> np.ndarray:
    """Exact ruin probabilities psi(0..u_max) for the mixed Poisson claims.

    Builds the claim masses (closed form or certified quadrature) and runs
    the forward recursion; survival values within the window are exact
    because the declared tail mass is itself the exact remainder.
    """
    if u_max < 0:
        raise ValueError("u_max must be nonnegative")
    claims = mp_claims_pmf(mix, x_max=max(u_max, 1))
    return psi_recursion(RuinQuery(claims=claims, u_max=u_max))
