"""Run configuration files.

A config is plain text with one ``key = value`` pair per line. Keys use
dotted sections (``entropy.alpha``, ``flow.tau``); ``#`` starts a comment.
Lists are comma separated and points are written ``x:y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .entropy import EntropyError, entropy as make_entropy
from .kernels import FAMILIES, KernelError, RadialKernel
from .objective import ConfigError
from .solvers import STEP_RULES, SolverConfig
from .targets import DEFAULT_RING_CENTERS, SampleSpec, TARGETS, ring_start

MODES = ("flow", "tight_flow", "divergence", "prox_check")


def _float(v: str) -> float:
    return float(v)


def _int(v: str) -> int:
    return int(v)


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _choice(options) -> Callable[[str], str]:
    def parse(v: str) -> str:
        if v not in options:
            raise ValueError(f"{v!r} is not one of {', '.join(options)}")
        return v
    return parse


def _point(v: str) -> tuple[float, ...]:
    return tuple(float(c) for c in v.split(":"))


def _points(v: str) -> list[tuple[float, ...]]:
    return [_point(p) for p in v.split(",") if p.strip()]


def _floats(v: str) -> list[float]:
    return [float(p) for p in v.split(",") if p.strip()]


def _schedule(v: str) -> list[tuple[float, float]]:
    if not v.strip():
        return []
    out = []
    for item in v.split(","):
        t, d = item.split(":")
        out.append((float(t), float(d)))
    return out


def _str(v: str) -> str:
    return v


# key -> (parser, default); a default of None marks an optional key
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "mode": (_choice(MODES), "flow"),
    "seed": (_int, 0),
    "output_dir": (_str, "runs/out"),
    "lambda": (_float, 1e-2),
    "entropy.name": (_str, "tsallis"),
    "entropy.alpha": (_float, None),
    "kernel.family": (_choice(FAMILIES), "inverse_multiquadric"),
    "kernel.sigma2": (_float, 0.05),
    "flow.tau": (_float, 1e-3),
    "flow.steps": (_int, 1000),
    "flow.snapshot_every": (_int, 100),
    "flow.anneal": (_schedule, []),
    "flow.stop_kinetic": (_float, 0.0),
    "flow.svg": (_bool, False),
    "solver.max_iters": (_int, 20000),
    "solver.gap_tol": (_float, 1e-8),
    "solver.step_rule": (_choice(STEP_RULES), None),
    "solver.restart": (_bool, True),
    "prox_check.lambdas": (_floats, [0.1, 1.0, 10.0]),
    "prox_check.tol": (_float, 1e-7),
}
for _prefix in ("target", "init"):
    SCHEMA.update({
        f"{_prefix}.name": (_choice(TARGETS), "three_rings" if _prefix == "target" else "gaussian_init"),
        f"{_prefix}.count": (_int, 300),
        f"{_prefix}.path": (_str, None),
        f"{_prefix}.centers": (_points, None),
        f"{_prefix}.radius": (_float, None),
        f"{_prefix}.random_angles": (_bool, None),
        f"{_prefix}.center": (_point, None),
        f"{_prefix}.var": (_float, None),
        f"{_prefix}.mean": (_float, None),
        f"{_prefix}.scale": (_float, None),
        f"{_prefix}.separation": (_float, None),
        f"{_prefix}.offset": (_float, None),
        f"{_prefix}.spread": (_float, None),
        f"{_prefix}.noise": (_float, None),
        f"{_prefix}.gap": (_float, None),
        f"{_prefix}.length": (_float, None),
    })

_GEOMETRY = ("path", "centers", "radius", "random_angles", "center", "var", "mean", "scale",
             "separation", "offset", "spread", "noise", "gap", "length")


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Split config text into raw ``key -> value`` strings."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


@dataclass
class RunConfig:
    """Validated settings of one run."""

    values: dict
    raw: dict = field(default_factory=dict)
    source: str = "<config>"

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def mode(self) -> str:
        return self.values["mode"]

    def entropy(self):
        try:
            return make_entropy(self["entropy.name"], self["entropy.alpha"])
        except EntropyError as exc:
            key = "entropy.alpha" if "alpha" in str(exc) else "entropy.name"
            raise ConfigError(f"{key}: {exc}") from None

    def kernel(self) -> RadialKernel:
        try:
            return RadialKernel(self["kernel.family"], self["kernel.sigma2"])
        except KernelError as exc:
            raise ConfigError(f"kernel.sigma2: {exc}") from None

    def solver(self, tight: bool = False) -> SolverConfig:
        rule = self["solver.step_rule"] or ("armijo" if tight else "fixed_lipschitz")
        if tight and rule == "fixed_lipschitz":
            raise ConfigError("solver.step_rule: the tight flow needs armijo or polyak")
        if not tight and rule != "fixed_lipschitz":
            raise ConfigError("solver.step_rule: FISTA uses fixed_lipschitz")
        return SolverConfig(self["solver.max_iters"], self["solver.gap_tol"], rule, self["solver.restart"])

    def sample_spec(self, prefix: str) -> SampleSpec:
        name = self[f"{prefix}.name"]
        params = {k: self[f"{prefix}.{k}"] for k in _GEOMETRY if self[f"{prefix}.{k}"] is not None}
        if name == "gaussian_init" and "center" not in params:
            # start next to the rightmost ring of the target
            tgt = self.values
            centers = tgt["target.centers"] or DEFAULT_RING_CENTERS
            radius = tgt["target.radius"] if tgt["target.radius"] is not None else 1.0
            params["center"] = ring_start(centers, radius)
        if name == "csv" and "path" not in params:
            raise ConfigError(f"{prefix}.path is required for csv point clouds")
        allowed = {
            "three_rings": {"centers", "radius", "random_angles"},
            "neals_cross": {"mean", "var", "scale"},
            "bananas": {"separation", "offset", "spread", "noise"},
            "two_lines": {"gap", "length"},
            "gaussian_init": {"center", "var"},
            "csv": {"path"},
        }[name]
        for k in params:
            if k not in allowed:
                raise ConfigError(f"{prefix}.{k} does not apply to {prefix}.name = {name}")
        if name == "csv":
            base = Path(self.source).parent if self.source != "<config>" else Path(".")
            params["path"] = str(base / params["path"])
        stream = 0 if prefix == "target" else 1
        return SampleSpec(name, self[f"{prefix}.count"], (self["seed"], stream), params)


def validate(raw: dict[str, str], source: str = "<config>") -> RunConfig:
    values: dict[str, Any] = {}
    for key, (parse, default) in SCHEMA.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{key}: invalid value {raw[key]!r} ({exc})") from None
        else:
            values[key] = default
    cfg = RunConfig(values, dict(raw), source)
    _check(cfg)
    return cfg


def _check(cfg: RunConfig) -> None:
    v = cfg.values
    for key in ("lambda", "kernel.sigma2", "flow.tau", "solver.gap_tol", "prox_check.tol"):
        if not (v[key] > 0 and math.isfinite(v[key])):
            raise ConfigError(f"{key} must be positive and finite, got {v[key]}")
    for key in ("flow.steps", "target.count", "init.count"):
        if v[key] < 0:
            raise ConfigError(f"{key} must be nonnegative, got {v[key]}")
    for key in ("flow.snapshot_every", "solver.max_iters"):
        if v[key] < 1:
            raise ConfigError(f"{key} must be positive, got {v[key]}")
    if v["flow.stop_kinetic"] < 0:
        raise ConfigError(f"flow.stop_kinetic must be nonnegative, got {v['flow.stop_kinetic']}")
    for t, d in v["flow.anneal"]:
        if not d > 1 or t < 0:
            raise ConfigError(f"flow.anneal entries need time >= 0 and divisor > 1, got {t}:{d}")
    if any(lam <= 0 for lam in v["prox_check.lambdas"]):
        raise ConfigError("prox_check.lambdas must be positive")
    if cfg.mode != "prox_check":
        cfg.entropy()
        cfg.kernel()
        cfg.solver(tight=cfg.mode == "tight_flow")
        cfg.sample_spec("target")
        cfg.sample_spec("init")


def load(path, overrides: Optional[dict[str, str]] = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    raw = parse_text(text, str(path))
    raw.update(overrides or {})
    return validate(raw, str(path))
