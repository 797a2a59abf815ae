"""Command-line surface: orchestration plus deterministic serialisation.

Subcommands: zeros | fixed-point | freeze | simulate | lln | clt | figure1
| oracle.  All numbers are written with 17 significant digits so that files
round-trip bit-exactly; path simulation may run on a thread pool capped by
BESSEL_FREEZE_THREADS, and outputs are written ordered by path index, so
results do not depend on the thread count.

Exit codes: 0 ok, 2 usage, 3 invalid configuration, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .bessel_sde import (
    ConfigInvalid,
    GridMismatch,
    PathResult,
    SimConfig,
    simulate_normalized,
    simulate_path,
)
from .chamber import (
    BoundaryPoint,
    MissingNu,
    Multiplicity,
    RootSystemSpec,
)
from .freeze_ode import (
    FreezingRegime,
    StepFailure,
    UnsupportedRegime,
    ode_solve,
)
from .polyroots import (
    AlphaOutOfRange,
    NoConvergence,
    SizeOutOfRange,
    fixed_point_from_zeros,
    frozen_fixed_point,
    hermite_zeros,
    laguerre_zeros,
)
from .validate import (
    ShapeError,
    chisq_vs_sde,
    clt_b2_experiment,
    figure1_experiment,
    lln_rate_experiment,
    wishart_vs_sde,
)

SCHEMA_VERSION = 1

_USAGE_ERRORS = (SizeOutOfRange, AlphaOutOfRange)
_CONFIG_ERRORS = (ConfigInvalid, BoundaryPoint, MissingNu, UnsupportedRegime,
                  ShapeError, GridMismatch, ValueError)
_NUMERICAL_ERRORS = (NoConvergence, StepFailure)


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(part) for part in text.split(",") if part.strip() != ""])
    except ValueError as exc:
        raise ValueError(f"cannot parse vector {text!r}: {exc}") from exc


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _emit(args, text: str, filename: str) -> None:
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_text(os.path.join(args.out, filename), text)
    else:
        sys.stdout.write(text)


def _json_report(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _csv_rows(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def _regime_from_args(args) -> FreezingRegime:
    variant = args.regime
    if variant == "B_beta":
        if args.nu is None:
            raise ValueError("regime B_beta needs --nu")
        return FreezingRegime.b_beta(args.nu)
    if variant == "B_k1":
        return FreezingRegime.b_k1(args.k2)
    if variant == "A_k":
        return FreezingRegime.a_k()
    return FreezingRegime.d_k()


# ---------------------------------------------------------------------------
# config files (flat "key = value" lines, vectors comma-separated)
# ---------------------------------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key = key.strip()
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def _canonical_config(resolved: dict) -> str:
    lines = []
    for key in sorted(resolved):
        value = resolved[key]
        if isinstance(value, float):
            value = _fmt(value)
        elif isinstance(value, (list, tuple, np.ndarray)):
            value = ",".join(_fmt(v) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _sim_config_from_mapping(raw: dict[str, str]):
    def need(key):
        if key not in raw:
            raise ValueError(f"config is missing key {key!r}")
        return raw[key]

    def get_float(key, default=None):
        if key not in raw:
            if default is None:
                raise ValueError(f"config is missing key {key!r}")
            return default
        return float(raw[key])

    system = need("system").upper()
    n = int(need("n"))
    spec = RootSystemSpec(system, n)
    if system == "B":
        mult = Multiplicity.pair(get_float("k1"), get_float("k2"))
    else:
        mult = Multiplicity.single(get_float("k"))
    start = _vector(need("start"))
    normalized = raw.get("normalized", "false").lower() in ("1", "true", "yes")
    regime = None
    kappa = None
    if normalized or "regime" in raw:
        variant = need("regime")
        if variant == "B_beta":
            regime = FreezingRegime.b_beta(get_float("nu"))
        elif variant == "B_k1":
            regime = FreezingRegime.b_k1(get_float("k2"))
        elif variant in ("A_k", "D_k"):
            regime = FreezingRegime(variant)
        else:
            raise ValueError(f"unknown regime {variant!r}")
        if normalized:
            kappa = get_float("kappa")
    guard = float(raw["guard_eps"]) if "guard_eps" in raw else None
    cfg = SimConfig(
        spec=spec,
        mult=mult,
        start=start,
        horizon=get_float("horizon"),
        dt=get_float("dt"),
        seed=int(need("seed")),
        n_paths=int(raw.get("paths", "1")),
        guard_eps=guard,
        regime=regime,
        zero_noise=raw.get("zero_noise", "false").lower() in ("1", "true", "yes"),
    )
    resolved = {
        "system": system,
        "n": n,
        "start": start,
        "horizon": cfg.horizon,
        "dt": cfg.dt,
        "seed": cfg.seed,
        "paths": cfg.n_paths,
        "normalized": str(normalized).lower(),
        "zero_noise": str(cfg.zero_noise).lower(),
    }
    if system == "B":
        resolved["k1"] = mult.k1
        resolved["k2"] = mult.k2
    else:
        resolved["k"] = mult.k
    if guard is not None:
        resolved["guard_eps"] = guard
    if regime is not None:
        resolved["regime"] = regime.variant
        if regime.nu is not None:
            resolved["nu"] = regime.nu
    if kappa is not None:
        resolved["kappa"] = kappa
    return cfg, normalized, kappa, resolved


def _thread_cap() -> int:
    raw = os.environ.get("BESSEL_FREEZE_THREADS", "")
    if raw:
        cap = int(raw)
        if cap < 1:
            raise ValueError(f"BESSEL_FREEZE_THREADS must be >= 1, got {raw!r}")
        return cap
    return min(8, os.cpu_count() or 1)


def _run_paths(cfg: SimConfig, normalized: bool, kappa) -> list[PathResult]:
    def run(index: int) -> PathResult:
        if normalized:
            return simulate_normalized(cfg, kappa, index)
        return simulate_path(cfg, index)

    workers = _thread_cap()
    if workers == 1 or cfg.n_paths == 1:
        return [run(i) for i in range(cfg.n_paths)]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run, i) for i in range(cfg.n_paths)]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_zeros(args) -> int:
    if args.kind == "hermite":
        zeros = hermite_zeros(args.n)
    else:
        alpha = args.alpha if args.alpha is not None else 0.0
        zeros = laguerre_zeros(args.n, alpha)
    if args.format == "json":
        _emit(args, _json_report({"kind": args.kind, "n": args.n,
                                  "zeros": [float(z) for z in zeros]}), "zeros.json")
    else:
        _emit(args, "\n".join(_fmt(z) for z in zeros) + "\n", "zeros.txt")
    return 0


def cmd_fixed_point(args) -> int:
    spec = RootSystemSpec(args.system, args.n)
    nu = args.nu if args.system == "B" else None
    result = frozen_fixed_point(spec, nu=nu) if args.system == "B" else frozen_fixed_point(spec)
    init = fixed_point_from_zeros(spec, nu) if args.system == "B" else fixed_point_from_zeros(spec)
    report = {
        "schema_version": SCHEMA_VERSION,
        "system": args.system,
        "n": args.n,
        "nu": nu,
        "y": [float(v) for v in result.y.coords],
        "residual": result.residual,
        "iterations": result.iterations,
        "zeros_crosscheck_error": float(np.abs(result.y.coords - init).max()),
    }
    _emit(args, _json_report(report), "fixed_point.json")
    return 0


def cmd_freeze(args) -> int:
    regime = _regime_from_args(args)
    spec = RootSystemSpec(regime.kind, args.n)
    x0 = _vector(args.x0)
    grid = np.linspace(0.0, args.t_max, args.grid) if args.t_max > 0 else np.zeros(1)
    traj = ode_solve(regime, spec, x0, grid)
    if args.format == "json":
        _emit(args, _json_report({"regime": regime.variant, "n": spec.n,
                                  "times": traj.times.tolist(),
                                  "points": traj.points.tolist()}), "freeze.json")
        return 0
    header = ["t"] + [f"x{i+1}" for i in range(spec.n)]
    rows = [[float(t)] + [float(v) for v in row]
            for t, row in zip(traj.times, traj.points)]
    _emit(args, _csv_rows(header, rows), "freeze.csv")
    return 0


def cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as handle:
        raw = parse_config_text(handle.read())
    cfg, normalized, kappa, resolved = _sim_config_from_mapping(raw)
    canonical = _canonical_config(resolved)
    results = _run_paths(cfg, normalized, kappa)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    header = ["path", "t"] + [f"x{i+1}" for i in range(cfg.spec.n)]
    if args.long:
        rows = []
        for index, res in enumerate(results):
            for t, row in zip(res.trajectory.times, res.trajectory.points):
                rows.append([index, float(t)] + [float(v) for v in row])
        _write_text(os.path.join(out_dir, "paths.csv"), _csv_rows(header, rows))
        files = ["paths.csv"]
    else:
        files = []
        for index, res in enumerate(results):
            rows = [[float(t)] + [float(v) for v in row]
                    for t, row in zip(res.trajectory.times, res.trajectory.points)]
            name = f"path_{index:04d}.csv"
            _write_text(os.path.join(out_dir, name), _csv_rows(header[1:], rows))
            files.append(name)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "config": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                   for k, v in resolved.items()},
        "config_sha256": hashlib.sha256(canonical.encode()).hexdigest(),
        "master_seed": cfg.seed,
        "files": files,
        "paths": [{
            "index": i,
            "seed": res.seed_used,
            "exited": res.exited,
            "exit_time": res.exit_time,
        } for i, res in enumerate(results)],
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_text(os.path.join(out_dir, "manifest.json"), _json_report(manifest))
    return 0


def cmd_lln(args) -> int:
    regime = _regime_from_args(args)
    spec = RootSystemSpec(regime.kind, args.n)
    x = _vector(args.x)
    y = _vector(args.y) if args.y else np.zeros(spec.n)
    kappas = [float(v) for v in args.kappas.split(",")]
    report = lln_rate_experiment(regime, spec, x, y, kappas, args.paths,
                                 args.t, args.dt, args.seed)
    report["schema_version"] = SCHEMA_VERSION
    _emit(args, _json_report(report), "lln.json")
    return 0


def cmd_clt(args) -> int:
    x = _vector(args.x)
    report = clt_b2_experiment(x, args.t, args.k1, args.k2, args.paths,
                               args.dt, args.seed)
    report.pop("draws")
    report["schema_version"] = SCHEMA_VERSION
    _emit(args, _json_report(report), "clt.json")
    return 0


def cmd_figure1(args) -> int:
    report = figure1_experiment(args.seed, n_paths=args.paths)
    out_dir = args.out or "."
    os.makedirs(out_dir, exist_ok=True)
    summary_rows = []
    for panel in report["panels"]:
        edges = np.asarray(panel["bin_edges"])
        centers = 0.5 * (edges[:-1] + edges[1:])
        hist_header = ["bin_center"]
        columns = [centers]
        for coord in panel["coordinates"]:
            i = coord["index"]
            hist_header += [f"count_x{i}", f"pdf_x{i}"]
            columns.append(np.asarray(coord["histogram"]["counts"], dtype=float))
            columns.append(np.asarray(coord["histogram"]["pdf_overlay"], dtype=float))
            summary_rows.append([panel["t"], panel["k1"], i, coord["bias"],
                                 coord["variance"], coord["predicted_variance"]])
        rows = [[float(col[j]) for col in columns] for j in range(centers.size)]
        name = f"figure1_hist_t{panel['t']:g}_k1_{panel['k1']:g}.csv"
        _write_text(os.path.join(out_dir, name), _csv_rows(hist_header, rows))
    _write_text(os.path.join(out_dir, "figure1_summary.csv"),
                _csv_rows(["t", "k1", "coordinate", "bias", "variance",
                           "predicted_variance"], summary_rows))
    _write_text(os.path.join(out_dir, "figure1_report.json"), _json_report(report))
    return 0


def cmd_oracle(args) -> int:
    if args.kind == "wishart":
        x0 = _vector(args.x0)
        if args.p < x0.size:
            raise ShapeError(f"shape parameter p={args.p} must be >= n={x0.size}")
        report = wishart_vs_sde(args.p, x0.size, args.d, x0, args.t,
                                args.samples, args.seed)
    else:
        report = chisq_vs_sde(args.d, args.x_tilde, args.t, args.samples, args.seed)
    report["schema_version"] = SCHEMA_VERSION
    _emit(args, _json_report(report), "oracle.json")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bessel-freeze",
        description="Interacting-particle diffusions of types A/B/D: simulation and validation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="master seed (u64)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--paths", type=int, default=100, help="number of paths")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="output format where applicable")

    p = sub.add_parser("zeros", help="classical orthogonal polynomial zeros")
    p.add_argument("kind", choices=("hermite", "laguerre"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("fixed-point", help="stationary frozen configuration")
    p.add_argument("system", choices=("A", "B", "D"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nu", type=float, default=None)
    common(p)
    p.set_defaults(func=cmd_fixed_point)

    p = sub.add_parser("freeze", help="integrate the deterministic limit dynamics")
    p.add_argument("--regime", choices=("A_k", "B_beta", "B_k1", "D_k"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x0", required=True, help="comma-separated start")
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--k2", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_freeze)

    p = sub.add_parser("simulate", help="simulate SDE paths from a config file")
    p.add_argument("config", help="flat key = value configuration file")
    p.add_argument("--long", action="store_true",
                   help="single long-format CSV instead of one file per path")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lln", help="limit-law rate experiment across coupling scales")
    p.add_argument("--regime", choices=("A_k", "B_beta", "B_k1", "D_k"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", default="")
    p.add_argument("--kappas", default="25,100,400")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--k2", type=float, default=1.0)
    common(p)
    p.set_defaults(func=cmd_lln)

    p = sub.add_parser("clt", help="centered terminal statistics vs the normal law")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--x", default="3,2,1")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--k1", type=float, default=500.0)
    p.add_argument("--k2", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=5e-4)
    common(p)
    p.set_defaults(func=cmd_clt)

    p = sub.add_parser("figure1", help="bias/convergence panels across k1 and t")
    common(p)
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("oracle", help="independent sampler vs the SDE simulation")
    p.add_argument("kind", choices=("wishart", "chisq1d"))
    p.add_argument("--p", type=int, default=11, help="Wishart shape parameter")
    p.add_argument("--d", type=int, default=1,
                   help="field dimension (wishart) or summand count (chisq1d)")
    p.add_argument("--x0", default="2,1", help="Wishart start")
    p.add_argument("--x-tilde", type=float, default=1.0, dest="x_tilde")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=2000)
    common(p)
    p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"ERROR USAGE {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"ERROR NUMERICAL {exc}", file=sys.stderr)
        return 4
    except _CONFIG_ERRORS as exc:
        print(f"ERROR CONFIG {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"ERROR IO {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
