"""Sample generators for target and initial point clouds.

Randomness comes from numpy's counter-based Philox generator. Each target
component draws from its own child stream spawned from the seed, so adding
a component never shifts the samples of another.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

TARGETS = ("three_rings", "neals_cross", "bananas", "two_lines", "gaussian_init", "csv")


class TargetError(ValueError):
    pass


@dataclass(frozen=True)
class SampleSpec:
    """Which cloud to draw, how many points, and its geometry overrides.

    Geometry keys per target (all optional):

    * three_rings: ``centers`` (list of (x, y)), ``radius``, ``random_angles``
    * neals_cross: ``mean`` (7.5), ``var`` (2.0), ``scale`` (1.0)
    * bananas: ``separation`` (8.0), ``offset`` (1.0), ``spread`` (1.5), ``noise`` (0.1)
    * two_lines: ``gap`` (2.0), ``length`` (4.0)
    * gaussian_init: ``center`` ((1.5, 0)), ``var`` (2e-3)
    * csv: ``path``
    """

    name: str
    count: int
    seed: int | tuple = 0
    params: dict = field(default_factory=dict)


def streams(seed: int, n: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def _split(count: int, parts: int) -> list[int]:
    base, extra = divmod(count, parts)
    return [base + (i < extra) for i in range(parts)]


DEFAULT_RING_CENTERS = ((-2.5, 0.0), (0.0, 0.0), (2.5, 0.0))


def three_rings(count: int, seed: int = 0, centers=DEFAULT_RING_CENTERS, radius: float = 1.0,
                random_angles: bool = True) -> np.ndarray:
    """Points on circles of equal radius, ``count / 3`` per circle."""
    centers = np.asarray(centers, dtype=np.float64)
    out = []
    for c, n, rng in zip(centers, _split(count, len(centers)), streams(seed, len(centers))):
        if random_angles:
            theta = rng.uniform(0, 2 * math.pi, n)
        else:
            theta = 2 * math.pi * np.arange(n) / max(n, 1)
        out.append(c + radius * np.column_stack([np.cos(theta), np.sin(theta)]))
    return np.vstack(out)


def ring_start(centers=DEFAULT_RING_CENTERS, radius: float = 1.0) -> tuple[float, float]:
    """Leftmost point of the rightmost circle, the default initial location."""
    c = max(centers, key=lambda p: p[0])
    return (c[0] - radius, c[1])


def neals_cross(count: int, seed: int = 0, mean: float = 7.5, var: float = 2.0,
                scale: float = 1.0) -> np.ndarray:
    """Four rotated copies of a funnel: ``x2 ~ N(mean, var)``, ``x1 | x2 ~ N(0, exp(x2 / 3))``.

    Copy ``k`` is rotated by ``k * 90`` degrees; copy 0 points along +x2.
    """
    out = []
    for k, (n, rng) in enumerate(zip(_split(count, 4), streams(seed, 4))):
        x2 = rng.normal(mean, math.sqrt(var), n)
        x1 = rng.normal(0.0, 1.0, n) * np.exp(x2 / 6)
        pts = np.column_stack([x1, x2])
        a = k * math.pi / 2
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        out.append(pts @ rot.T)
    return scale * np.vstack(out)


def bananas(count: int, seed: int = 0, separation: float = 8.0, offset: float = 1.0,
            spread: float = 1.5, noise: float = 0.1) -> np.ndarray:
    """Two parabolic arcs ``y = +-((x - c) / 2)^2 -+ offset`` centred ``separation`` apart."""
    out = []
    for sign, (n, rng) in zip((1.0, -1.0), zip(_split(count, 2), streams(seed, 2))):
        c = -sign * separation / 2
        u = rng.normal(0.0, spread, n)
        y = sign * ((u / 2) ** 2 - offset) + rng.normal(0.0, noise, n)
        out.append(np.column_stack([c + u, y]))
    return np.vstack(out)


def two_lines(count: int, seed: int = 0, gap: float = 2.0, length: float = 4.0) -> np.ndarray:
    """Uniform points on two parallel horizontal segments."""
    out = []
    for sign, (n, rng) in zip((1.0, -1.0), zip(_split(count, 2), streams(seed, 2))):
        x = rng.uniform(-length / 2, length / 2, n)
        out.append(np.column_stack([x, np.full(n, sign * gap / 2)]))
    return np.vstack(out)


def gaussian_init(count: int, seed: int = 0, center=None, var: float = 2e-3) -> np.ndarray:
    """Isotropic Gaussian blob, by default at the start point of the ring target."""
    if center is None:
        center = ring_start()
    center = np.asarray(center, dtype=np.float64)
    if var < 0:
        raise TargetError(f"variance must be nonnegative, got {var}")
    rng = streams(seed, 1)[0]
    return center + math.sqrt(var) * rng.normal(size=(count, center.shape[0]))


def load_csv(path) -> np.ndarray:
    """Read one point per row; lines starting with ``#`` and a header row are skipped."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if rows:
                    raise TargetError(f"{path}: non-numeric row {row}") from None
    if not rows:
        raise TargetError(f"{path}: no points")
    pts = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(pts)):
        raise TargetError(f"{path}: non-finite coordinates")
    return pts


def save_csv(path, points: np.ndarray, header: Optional[list[str]] = None) -> None:
    """Write points with 17 significant digits so a reload is bit-exact."""
    points = np.atleast_2d(points)
    with open(path, "w", newline="") as fh:
        if header is None:
            header = [f"x{i}" for i in range(points.shape[1])]
        fh.write(",".join(header) + "\n")
        for row in points:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def sample(spec: SampleSpec) -> np.ndarray:
    """Draw the point cloud described by ``spec``."""
    if spec.count < 1 and spec.name != "csv":
        raise TargetError(f"sample count must be positive, got {spec.count}")
    kw = dict(spec.params)
    if spec.name == "three_rings":
        return three_rings(spec.count, spec.seed, **kw)
    if spec.name == "neals_cross":
        return neals_cross(spec.count, spec.seed, **kw)
    if spec.name == "bananas":
        return bananas(spec.count, spec.seed, **kw)
    if spec.name == "two_lines":
        return two_lines(spec.count, spec.seed, **kw)
    if spec.name == "gaussian_init":
        return gaussian_init(spec.count, spec.seed, **kw)
    if spec.name == "csv":
        pts = load_csv(Path(kw["path"]))
        if spec.count and spec.count != pts.shape[0]:
            raise TargetError(f"{kw['path']} holds {pts.shape[0]} points, config asks for {spec.count}")
        return pts
    raise TargetError(f"unknown target {spec.name!r}; choose from {', '.join(TARGETS)}")
