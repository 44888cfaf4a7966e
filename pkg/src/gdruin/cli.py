"""Command line front end.

Verbs select the method, flags select the claim model:

    gdruin exact --mix erlang:2,3 --u-max 10
    gdruin all --mix lognormal:-1,1 --format json --out run.json
    gdruin nbm --weights 0.5,0.5 --p 0.8
    gdruin simulate --pmf-file claims.csv --reps 200000 --seed 42
    gdruin tables --out results/

``all`` runs every method valid for the model and emits one combined table.
Flag values can come from a ``--config`` file of KEY=VALUE lines; explicit
flags win over the file, the file wins over built-in defaults.  Output files
are byte-identical for identical jobs and seeds; runtimes go to stderr.

Exit codes: 0 success, 2 validation problem, 3 numeric budget exhausted.
"""

from __future__ import annotations

import argparse
import csv as _csv
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distributions import (
    DiscretePmf,
    GridBudgetError,
    MixingDistribution,
    NbmSpec,
    QuadratureError,
    erlangm_to_nbm,
    mp_claims_pmf,
    nbm_claims_pmf,
)
from .mixed_poisson import (
    MpApproxConfig,
    mp_coefficients,
    psi_mp_exact_reference,
    psi_mp_method1,
    psi_mp_method2,
)
from .nbm import psi_nbm
from .pollaczek import psi_pk
from .recursion import CompoundBinomialSpec, RuinQuery, convert_cb_to_gd, psi_recursion
from .simulate import SimConfig, simulate_paths
from .tables import ResultTable, reproduce_tables
from . import __version__

__all__ = ["JobSpec", "run", "main"]

_METHOD_COLUMN = {
    "exact": "E",
    "pk": "PK",
    "nbm": "NBM",
    "mp1": "N1",
    "mp2": "N2",
    "simulate": "SIM",
}
_ERR_COLUMN = {"N1": "err1", "N2": "err2", "SIM": "err_sim"}
_COLUMN_ORDER = ["u", "E", "PK", "NBM", "N1", "err1", "N2", "err2", "SIM", "err_sim"]
_ALL_METHODS = {
    "gd": ["exact", "pk", "simulate"],
    "cb": ["exact", "pk", "simulate"],
    "nbm": ["exact", "pk", "nbm", "simulate"],
    "mp": ["exact", "mp1", "mp2", "simulate"],
}

_DEFAULTS = {
    "u_max": 10,
    "n": 500,
    "m": 1000,
    "seed": 0,
    "floor": 1e-5,
    "reps": 100_000,
    "horizon": 100_000,
    "tail_tol": 1e-12,
    "format": "csv",
}


@dataclass
class JobSpec:
    """One resolved unit of CLI work."""

    method: str
    model: str
    u_max: int
    pmf_file: str | None = None
    p: float | None = None
    weights: tuple[float, ...] | None = None
    mix: str | None = None
    n: int = 500
    m: int = 1000
    seed: int = 0
    floor: float = 1e-5
    reps: int = 100_000
    horizon: int = 100_000
    tail_tol: float = 1e-12

    def approx_config(self) -> MpApproxConfig:
        return MpApproxConfig(n=self.n, m=self.m, pmf_floor=self.floor, seed=self.seed)


# -- model construction --------------------------------------------------------


def _read_pmf_file(path: str) -> DiscretePmf:
    """Two-column CSV ``value,probability`` (header optional) on 0..max."""
    masses: dict[int, float] = {}
    with open(path, newline="") as fh:
        for row in _csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                x, fx = int(row[0]), float(row[1])
            except ValueError:
                continue
            if x < 0:
                raise ValueError(f"pmf file {path}: negative support value {x}")
            masses[x] = masses.get(x, 0.0) + fx
    if not masses:
        raise ValueError(f"pmf file {path}: no usable rows")
    pmf = np.zeros(max(masses) + 1)
    for x, fx in masses.items():
        pmf[x] = fx
    return DiscretePmf(pmf)


def _parse_mix(text: str) -> MixingDistribution:
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind in ("exp", "exponential"):
            return MixingDistribution.exponential(float(rest))
        if kind == "erlang":
            shape, beta = rest.split(",")
            return MixingDistribution.erlang(int(shape), float(beta))
        if kind == "erlang_mixture":
            weights, beta = rest.split(";")
            w = [float(v) for v in weights.split(",")]
            return MixingDistribution.erlang_mixture(w, float(beta))
        if kind == "pareto":
            alpha, theta = rest.split(",")
            return MixingDistribution.pareto(float(alpha), float(theta))
        if kind == "lognormal":
            m, s = rest.split(",")
            return MixingDistribution.lognormal(float(m), float(s))
        if kind == "degenerate":
            return MixingDistribution.degenerate(float(rest))
        if kind == "cdf_file":
            return MixingDistribution.load_cdf_table(rest)
    except ValueError as exc:
        raise ValueError(f"cannot parse mixing spec {text!r}: {exc}") from None
    raise ValueError(
        f"unknown mixing kind {kind!r}; expected exp, erlang, erlang_mixture, "
        "pareto, lognormal, degenerate, or cdf_file"
    )


def _infer_model(job: JobSpec) -> str:
    if job.model:
        return job.model
    if job.mix is not None:
        return "mp"
    if job.weights is not None:
        return "nbm"
    if job.pmf_file is not None:
        return "cb" if job.p is not None else "gd"
    raise ValueError(
        "no claim model given; pass --mix, --weights with --p, or --pmf-file"
    )


class _Model:
    """Resolved model: lazily materialized claims plus optional structure."""

    def __init__(self, job: JobSpec):
        self.kind = _infer_model(job)
        self.job = job
        self.mixing: MixingDistribution | None = None
        self.nbm_spec: NbmSpec | None = None
        self._claims: DiscretePmf | None = None

        if self.kind == "mp":
            if job.mix is None:
                raise ValueError("model mp needs --mix")
            self.mixing = _parse_mix(job.mix)
            if self.mixing.kind == "exponential":
                beta = self.mixing.params[0]
                self.nbm_spec = NbmSpec((1.0,), beta / (beta + 1.0))
            elif self.mixing.kind == "erlang":
                shape, beta = self.mixing.params
                w = [0.0] * int(shape)
                w[-1] = 1.0
                self.nbm_spec = erlangm_to_nbm(w, beta)
            elif self.mixing.kind == "erlang_mixture":
                self.nbm_spec = erlangm_to_nbm(self.mixing.weights, self.mixing.params[0])
        elif self.kind == "nbm":
            if job.weights is None or job.p is None:
                raise ValueError("model nbm needs --weights and --p")
            self.nbm_spec = NbmSpec(job.weights, job.p)
        elif self.kind == "cb":
            if job.pmf_file is None or job.p is None:
                raise ValueError("model cb needs --pmf-file and --p")
            spec = CompoundBinomialSpec(p=job.p, claim_pmf=_read_pmf_file(job.pmf_file))
            self._claims = convert_cb_to_gd(spec)
        elif self.kind == "gd":
            if job.pmf_file is None:
                raise ValueError("model gd needs --pmf-file")
            self._claims = _read_pmf_file(job.pmf_file)
        else:
            raise ValueError(f"unknown model {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "mp":
            return f"mp({self.job.mix})"
        if self.kind == "nbm":
            return f"nbm(weights={self.job.weights}, p={self.job.p})"
        if self.kind == "cb":
            return f"cb(p={self.job.p}, pmf={self.job.pmf_file})"
        return f"gd(pmf={self.job.pmf_file})"

    def claims(self, deep: bool = False, tail_tol: float | None = None) -> DiscretePmf:
        """Claim pmf for the recursion or PK window (or deep, for simulation)."""
        if self._claims is not None:
            return self._claims
        tol = self.job.tail_tol if tail_tol is None else tail_tol
        if self.kind == "nbm":
            return nbm_claims_pmf(self.nbm_spec, tail_tol=min(tol, 1e-12))
        assert self.mixing is not None
        if deep:
            return mp_claims_pmf(self.mixing, tail_tol=tol)
        return mp_claims_pmf(self.mixing, x_max=max(self.job.u_max, 1))


# -- job execution ---------------------------------------------------------------


def _run_simulation(job: JobSpec, model: _Model, us: list[int]) -> list[float]:
    """Simulate each surplus level, deepening the claim tail when the
    stopping rule cannot certify itself at the requested tolerance."""
    tols = [job.tail_tol]
    if model.kind in ("mp", "nbm"):
        tols += [t for t in (1e-18, 1e-24, 1e-30) if t < job.tail_tol]
    last_exc: ValueError | None = None
    for tol in tols:
        try:
            claims = model.claims(deep=True, tail_tol=tol)
            out = []
            for u in us:
                res = simulate_paths(SimConfig(
                    claims=claims, u=u, replications=job.reps,
                    horizon=job.horizon, seed=job.seed,
                ))
                out.append(res.psi_hat)
            return out
        except ValueError as exc:
            last_exc = exc
    raise last_exc  # type: ignore[misc]


def _methods_for(job: JobSpec, model: _Model) -> list[str]:
    if job.method != "all":
        methods = [job.method]
    else:
        methods = list(_ALL_METHODS[model.kind])
    for m in methods:
        if m in ("mp1", "mp2") and model.kind != "mp":
            raise ValueError(f"method {m} needs a mixed Poisson model (--mix)")
        if m == "nbm" and model.nbm_spec is None:
            raise ValueError(
                "method nbm needs an nbm model or Erlang-family mixing; "
                f"got {model.describe()}"
            )
    return methods


def run(job: JobSpec) -> ResultTable:
    """Execute one job and return its table; runtimes land on stderr."""
    model = _Model(job)
    methods = _methods_for(job, model)
    us = list(range(job.u_max + 1))
    values: dict[str, list[float]] = {}
    extra_se: list[float] | None = None

    for method in methods:
        t0 = time.perf_counter()
        col = _METHOD_COLUMN[method]
        if method == "exact":
            if model.kind == "mp":
                vec = psi_mp_exact_reference(model.mixing, job.u_max)
            else:
                vec = psi_recursion(RuinQuery(claims=model.claims(), u_max=job.u_max))
            values[col] = [float(v) for v in vec]
        elif method == "pk":
            claims = model.claims()
            values[col] = [psi_pk(claims, u, tail_tol=min(job.tail_tol, 1e-10)) for u in us]
        elif method == "nbm":
            values[col] = [psi_nbm(model.nbm_spec, u) for u in us]
        elif method == "mp1":
            cfg = job.approx_config()
            values[col] = [psi_mp_method1(model.mixing, u, cfg) for u in us]
        elif method == "mp2":
            cfg = job.approx_config()
            pairs = [psi_mp_method2(model.mixing, u, cfg) for u in us]
            values[col] = [p[0] for p in pairs]
            extra_se = [p[1] for p in pairs]
        elif method == "simulate":
            values[col] = _run_simulation(job, model, us)
        print(f"{col}: {time.perf_counter() - t0:.2f}s", file=sys.stderr)

    reference = "E" if "E" in values else ("PK" if "PK" in values else None)
    columns = ["u"]
    for col in _COLUMN_ORDER[1:]:
        if col in values:
            columns.append(col)
            err = _ERR_COLUMN.get(col)
            if err and reference is not None and col != reference:
                columns.append(err)

    rows = []
    for i, u in enumerate(us):
        row: dict = {"u": u}
        for col, vals in values.items():
            row[col] = vals[i]
            err = _ERR_COLUMN.get(col)
            if err in columns:
                ref = values[reference][i]
                row[err] = (vals[i] - ref) / ref if ref > 0 else None
        if extra_se is not None:
            row["N2_se"] = extra_se[i]
        rows.append(row)

    meta = {
        "version": __version__,
        "model": model.describe(),
        "methods": methods,
        "u_max": job.u_max,
        "reference": reference,
    }
    if any(m in ("mp1", "mp2") for m in methods):
        meta.update(n=job.n, m=job.m, pmf_floor=job.floor, seed=job.seed)
        seq = mp_coefficients(model.mixing, job.approx_config(), 0)
        meta["grid_points"] = seq.grid_points
    if "simulate" in methods:
        meta.update(replications=job.reps, horizon=job.horizon, sim_seed=job.seed)
    return ResultTable(columns=columns, rows=rows, meta=meta)


# -- argument handling -----------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdruin",
        description="Exact and approximate ruin probabilities for the "
        "discrete-time surplus process with unit premiums.",
    )
    parser.add_argument("--version", action="version", version=f"gdruin {__version__}")
    sub = parser.add_subparsers(dest="method", required=True, metavar="VERB")

    verbs = {
        "exact": "forward recursion (column E)",
        "pk": "ladder-height series evaluation (column PK)",
        "nbm": "coefficient series for mixture claims (column NBM)",
        "mp1": "grid series approximation (column N1)",
        "mp2": "grid Monte Carlo approximation (column N2)",
        "simulate": "path simulation estimate (column SIM)",
        "all": "every method valid for the model, one combined table",
        "tables": "recompute the three bundled benchmark tables",
    }
    for verb, help_text in verbs.items():
        p = sub.add_parser(verb, help=help_text)
        if verb == "tables":
            p.add_argument("--n", type=int, default=None)
            p.add_argument("--m", type=int, default=None)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--floor", type=float, default=None)
            p.add_argument("--out", default=None, help="output directory")
            p.add_argument("--config", default=None)
            continue
        p.add_argument("--model", choices=("gd", "cb", "nbm", "mp"), default=None)
        p.add_argument("--pmf-file", dest="pmf_file", default=None)
        p.add_argument("--p", type=float, default=None)
        p.add_argument("--weights", default=None, help="comma list, e.g. 0.5,0.5")
        p.add_argument("--mix", default=None, help="e.g. erlang:2,3 or lognormal:-1,1")
        p.add_argument("--u-max", dest="u_max", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--floor", type=float, default=None)
        p.add_argument("--reps", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--tail-tol", dest="tail_tol", type=float, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--config", default=None)
    return parser


def _read_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ValueError(f"config line without '=': {raw!r}")
        values[key.strip().lower().replace("-", "_")] = val.strip()
    return values


_CONFIG_COERCE = {
    "u_max": int, "n": int, "m": int, "seed": int, "reps": int, "horizon": int,
    "p": float, "floor": float, "tail_tol": float,
    "model": str, "pmf_file": str, "weights": str, "mix": str,
    "format": str, "out": str,
}


def _merge_config(args: argparse.Namespace) -> None:
    if getattr(args, "config", None):
        for key, raw in _read_config(args.config).items():
            coerce = _CONFIG_COERCE.get(key)
            if coerce is None:
                raise ValueError(f"unknown config key {key!r}")
            if getattr(args, key, None) is None and hasattr(args, key):
                setattr(args, key, coerce(raw))
    for key, default in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, default)


def _resolve_out(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get("GDRUIN_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _parse_weights(text: str | None) -> tuple[float, ...] | None:
    if text is None:
        return None
    return tuple(float(v) for v in text.split(","))


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        _merge_config(args)
        if args.method == "tables":
            cfg = MpApproxConfig(
                n=args.n, m=args.m, pmf_floor=args.floor, seed=args.seed
            )
            out_dir = _resolve_out(args.out) or Path.cwd()
            out_dir.mkdir(parents=True, exist_ok=True)
            t0 = time.perf_counter()
            produced = reproduce_tables(out_dir, cfg)
            for name, table in produced.items():
                worst_e = max(abs(r["E_delta"]) for r in table.rows)
                worst_n1 = max(abs(r["N1_delta"]) for r in table.rows)
                print(
                    f"{name}: wrote {out_dir / f'table_{name}.csv'} "
                    f"(max |E delta| {worst_e:.1e}, max |N1 delta| {worst_n1:.1e})",
                    file=sys.stderr,
                )
            print(f"tables: {time.perf_counter() - t0:.2f}s", file=sys.stderr)
            return 0

        job = JobSpec(
            method=args.method,
            model=args.model or "",
            u_max=args.u_max,
            pmf_file=args.pmf_file,
            p=args.p,
            weights=_parse_weights(args.weights),
            mix=args.mix,
            n=args.n,
            m=args.m,
            seed=args.seed,
            floor=args.floor,
            reps=args.reps,
            horizon=args.horizon,
            tail_tol=args.tail_tol,
        )
        if job.u_max < 0:
            raise ValueError("--u-max must be nonnegative")
        if not math.isfinite(job.floor) or job.floor <= 0:
            raise ValueError("--floor must be positive")
        table = run(job)
        out = _resolve_out(args.out)
        if out is None:
            text = table.to_csv() if args.format == "csv" else table.to_json()
            sys.stdout.write(text)
        else:
            out.parent.mkdir(parents=True, exist_ok=True)
            table.write(out, fmt=args.format)
            print(f"wrote {out}", file=sys.stderr)
        return 0
    except (QuadratureError, GridBudgetError, RuntimeError) as exc:
        print(f"gdruin: numeric budget: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"gdruin: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
