"""Command line entry point: ``mmdreg run`` and ``mmdreg compare``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from . import config as cfgmod
from .entropy import CATALOG, entropy as make_entropy, golden_section_prox
from .flow import FlowConfig, FlowError, FlowRecord, run_flow
from .objective import ConfigError, RegularizedProblem
from .solvers import SolverError, solve
from .targets import TargetError, sample, save_csv

log = logging.getLogger("mmdreg")

EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _manifest(cfg: cfgmod.RunConfig, out: Path, extra: Optional[dict] = None) -> None:
    data = {
        "config": cfg.source,
        "settings": {k: v for k, v in cfg.values.items() if v is not None},
        "versions": {
            "mmdreg": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    data.update(extra or {})
    (out / "run_manifest.json").write_text(json.dumps(data, indent=2, default=list) + "\n")


def write_svg(path: Path, particles: np.ndarray, target: np.ndarray, title: str = "") -> None:
    """Scatter plot of particles over the target, viewport fixed by the target."""
    lo = target.min(axis=0)
    hi = target.max(axis=0)
    pad = 0.1 * np.maximum(hi - lo, 1e-9)
    lo, hi = lo - pad, hi + pad
    w, h = 600, max(150, int(600 * (hi[1] - lo[1]) / (hi[0] - lo[0])))

    def xy(p):
        return (p[0] - lo[0]) / (hi[0] - lo[0]) * w, h - (p[1] - lo[1]) / (hi[1] - lo[1]) * h

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>']
    for pts, color, r in ((target, "#f28e2b", 2.0), (particles, "#4e79a7", 1.6)):
        for p in pts[:, :2]:
            cx, cy = xy(p)
            if 0 <= cx <= w and 0 <= cy <= h:
                parts.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r}" fill="{color}"/>')
    if title:
        parts.append(f'<text x="8" y="18" font-family="sans-serif" font-size="14">{title}</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n")


def run_flow_mode(cfg: cfgmod.RunConfig, out: Path, svg: bool = False) -> list[FlowRecord]:
    tight = cfg.mode == "tight_flow"
    y = sample(cfg.sample_spec("target"))
    x0 = sample(cfg.sample_spec("init"))
    flow_cfg = FlowConfig(cfg["flow.tau"], cfg["flow.steps"], cfg["flow.snapshot_every"],
                          cfg["flow.anneal"], cfg["flow.stop_kinetic"], tight, cfg.solver(tight))
    snaps = out / "snapshots"
    snaps.mkdir(parents=True, exist_ok=True)
    save_csv(out / "target.csv", y)
    svg = svg or cfg["flow.svg"]
    records: list[FlowRecord] = []
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FlowRecord.CSV_FIELDS)

        def on_record(rec: FlowRecord, x: np.ndarray) -> None:
            records.append(rec)
            writer.writerow(rec.csv_row())
            if rec.snapshot:
                save_csv(snaps / f"positions_{rec.step}.csv", x)
                if svg:
                    write_svg(snaps / f"frame_{rec.step}.svg", x, y, f"t = {rec.time:g}")

        trace = run_flow(x0, y, cfg.entropy(), cfg.kernel(), cfg["lambda"], flow_cfg, on_record)
    _manifest(cfg, out, {"stop_reason": trace.stop_reason, "elapsed_seconds": trace.elapsed,
                         "steps_recorded": len(trace.records)})
    return records


def run_divergence_mode(cfg: cfgmod.RunConfig, out: Path) -> dict:
    y = sample(cfg.sample_spec("target"))
    x = sample(cfg.sample_spec("init"))
    p = RegularizedProblem.build(cfg.entropy(), cfg.kernel(), cfg["lambda"], x, y)
    if p.finite:
        p.check_threshold()
    sol = solve(p, cfg.solver())
    result = {
        "divergence": sol.primal,
        "witness_norm": p.rkhs_norm(p.coefficients(sol.q)),
        "gap": sol.gap,
        "rel_gap": sol.rel_gap,
        "iterations": sol.iterations,
        "converged": sol.converged,
    }
    print(f"D_lambda = {result['divergence']:.17g}")
    print(f"witness_norm = {result['witness_norm']:.17g}")
    print(f"gap = {result['gap']:.3e} (relative {result['rel_gap']:.3e}, {sol.iterations} iterations)")
    out.mkdir(parents=True, exist_ok=True)
    _manifest(cfg, out, {"result": result})
    return result


def run_prox_check_mode(cfg: cfgmod.RunConfig, out: Path) -> bool:
    xs = np.round(np.arange(-50, 51) / 10, 12)
    tol = cfg["prox_check.tol"]
    entries = CATALOG
    if "entropy.name" in cfg.raw:
        entries = ((cfg["entropy.name"], cfg["entropy.alpha"]),)
    ok = True
    rows = []
    for name, alpha in entries:
        try:
            e = make_entropy(name, alpha)
        except ValueError as exc:
            raise ConfigError(f"entropy.name: {exc}") from None
        err = 0.0
        for lam in cfg["prox_check.lambdas"]:
            err = max(err, float(np.max(np.abs(e.prox(lam, xs) - golden_section_prox(e, lam, xs)))))
        status = "PASS" if err <= tol else "FAIL"
        ok &= err <= tol
        rows.append({"entropy": e.label, "max_error": err, "status": status})
        print(f"{status} {e.label:<22} max |prox - oracle| = {err:.3e}")
    out.mkdir(parents=True, exist_ok=True)
    _manifest(cfg, out, {"prox_check": rows})
    return ok


def execute(cfg: cfgmod.RunConfig, out: Path, svg: bool = False):
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode in ("flow", "tight_flow"):
        return run_flow_mode(cfg, out, svg)
    if cfg.mode == "divergence":
        return run_divergence_mode(cfg, out)
    return run_prox_check_mode(cfg, out)


def _overrides(args) -> dict[str, str]:
    o = {}
    if args.seed is not None:
        o["seed"] = str(args.seed)
    return o


def cmd_run(args) -> int:
    cfg = cfgmod.load(args.config, _overrides(args))
    out = Path(args.output_dir or cfg["output_dir"])
    result = execute(cfg, out, args.svg)
    if cfg.mode == "prox_check" and not result:
        return 1
    return 0


def _sweep_keys(configs: list[cfgmod.RunConfig]) -> list[str]:
    keys = sorted(set().union(*(c.raw.keys() for c in configs)) - {"output_dir"})
    return [k for k in keys if len({str(c.values[k]) for c in configs}) > 1]


def cmd_compare(args) -> int:
    configs = [cfgmod.load(p, _overrides(args)) for p in args.configs]
    if len(configs) < 2:
        raise ConfigError("compare needs at least two configs")
    for c in configs:
        if c.mode not in ("flow", "tight_flow"):
            raise ConfigError(f"{c.source}: compare runs flow configs, got mode = {c.mode}")
    ref = configs[0]
    for c in configs[1:]:
        for key in cfgmod.SCHEMA:
            if key.startswith("target.") and c.values[key] != ref.values[key]:
                raise ConfigError(f"{c.source}: {key} differs from {ref.source}; compared runs need the same target")
        if c.values["seed"] != ref.values["seed"]:
            raise ConfigError(f"{c.source}: seed differs from {ref.source}; compared runs need the same target")
    sweep = _sweep_keys(configs)
    out = Path(args.output_dir or ref["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "compare.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("run", "sweep_key", "sweep_value") + FlowRecord.CSV_FIELDS)
        for i, c in enumerate(configs):
            label = f"run_{i}"
            key = ";".join(sweep) if sweep else "run"
            value = ";".join(str(c.values[k]) for k in sweep) if sweep else str(i)
            log.info("compare: %s (%s = %s)", c.source, key, value)
            records = execute(c, out / label, args.svg)
            for rec in records:
                writer.writerow([label, key, value] + rec.csv_row())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--svg", action="store_true", help="also write SVG frames at snapshots")
    common.add_argument("--output-dir", help="override output_dir from the config")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="mmdreg", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common],
                         help="run one config (flow, tight_flow, divergence or prox_check)")
    run.add_argument("config", help="path to a key = value config file")
    run.set_defaults(func=cmd_run)
    compare = sub.add_parser("compare", parents=[common], help="run several flow configs and merge their metrics")
    compare.add_argument("configs", nargs="+", help="flow configs sharing one target")
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, TargetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlowError as exc:
        print(f"solver failure at step {exc.step}: {exc.cause}", file=sys.stderr)
        return EXIT_SOLVER
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
