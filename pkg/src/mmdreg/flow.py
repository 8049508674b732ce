"""Explicit Euler scheme for the Wasserstein gradient flow of the regularized divergence.

Each step solves the discrete dual problem at the current particles,
moves every particle against the gradient of the witness and records the
metrics of the state it started from.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .entropy import Entropy
from .kernels import RadialKernel
from .measures import wasserstein2_empirical
from .objective import ConfigError, DualSolution, RegularizedProblem
from .solvers import SolverConfig, SolverError, solve

log = logging.getLogger(__name__)


class FlowError(RuntimeError):
    """The solver failed inside the flow; ``step`` is the failing step index."""

    def __init__(self, step: int, cause: Exception):
        super().__init__(f"solver failed at step {step}: {cause}")
        self.step = step
        self.cause = cause


@dataclass
class FlowConfig:
    tau: float = 1e-3
    steps: int = 1000
    snapshot_every: int = 100
    # (time, divisor) pairs: once time t is reached lambda is divided
    anneal: list = field(default_factory=list)
    stop_kinetic: float = 0.0
    tight: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError(f"flow.tau must be positive, got {self.tau}")
        if self.steps < 0:
            raise ConfigError(f"flow.steps must be nonnegative, got {self.steps}")
        if self.snapshot_every < 1:
            raise ConfigError(f"flow.snapshot_every must be positive, got {self.snapshot_every}")
        for t, d in self.anneal:
            if not d > 1:
                raise ConfigError(f"flow.anneal divisor must exceed 1, got {d}")
        self.anneal = sorted((float(t), float(d)) for t, d in self.anneal)


@dataclass
class FlowRecord:
    step: int
    time: float
    mmd2: float
    w2: float
    kinetic: float
    rel_gap: float
    lam: float
    iterations: int = 0
    box_slack: float = 0.0
    snapshot: bool = False

    CSV_FIELDS = ("step", "time", "mmd2", "w2", "kinetic", "rel_gap", "lambda")

    def csv_row(self) -> list[str]:
        return [str(self.step)] + [f"{v:.17g}" for v in
                                   (self.time, self.mmd2, self.w2, self.kinetic, self.rel_gap, self.lam)]


@dataclass
class FlowTrace:
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    positions: Optional[np.ndarray] = None
    stop_reason: str = "steps"
    elapsed: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def euler_step(p: RegularizedProblem, sol: DualSolution, tau: float) -> np.ndarray:
    """Particles after one explicit step ``x - tau * grad p(x)``."""
    return p.x - tau * p.particle_grad(sol)


def kinetic_energy(p: RegularizedProblem, sol: DualSolution) -> float:
    """Mean squared norm of the witness gradient over the particles."""
    g = p.particle_grad(sol)
    return float(np.mean(np.sum(g * g, axis=1)))


def box_slack(p: RegularizedProblem, q: np.ndarray) -> float:
    """Smallest distance of ``q`` to the boundary of its box (negative if outside)."""
    slack = float(q[: p.M].min())
    if q.shape[0] > p.M:
        slack = min(slack, float((q[p.M:] + p.M / p.N).min()))
    return slack


def run_flow(x0, y, entropy: Entropy, kernel: RadialKernel, lam: float, cfg: FlowConfig,
             on_record: Optional[Callable[[FlowRecord, np.ndarray], None]] = None) -> FlowTrace:
    """Integrate the particle flow from ``x0`` towards the target atoms ``y``.

    ``on_record`` is called with every record and the particles it describes.
    Raises :class:`ConfigError` when lambda is inadmissible and
    :class:`FlowError` when the solver fails at some step.
    """
    start = time.perf_counter()
    x = np.array(x0, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p = RegularizedProblem.build(entropy, kernel, lam, x, y)
    if p.finite:
        p.check_threshold()
    trace = FlowTrace()
    anneal = list(cfg.anneal)
    q = None
    for n in range(cfg.steps + 1):
        t = n * cfg.tau
        while anneal and t >= anneal[0][0] - 1e-12 * max(1.0, anneal[0][0]):
            _, div = anneal.pop(0)
            new_lam = p.lam / div
            if p.finite and not new_lam > p.threshold():
                log.warning("step %d: skipping annealing to lambda=%g, below the bound %g",
                            n, new_lam, p.threshold())
                continue
            p = p.with_particles(p.x, new_lam)
        try:
            sol = solve(p, cfg.solver, q0=q, tight=cfg.tight)
            if not (math.isfinite(sol.primal) and np.all(np.isfinite(sol.q))):
                raise SolverError("non-finite solution")
        except SolverError as exc:
            raise FlowError(n, exc) from exc
        grad = p.particle_grad(sol)
        kin = float(np.mean(np.sum(grad * grad, axis=1)))
        snap = n % cfg.snapshot_every == 0 or n == cfg.steps
        stop = cfg.stop_kinetic > 0 and kin < cfg.stop_kinetic
        if stop:
            snap = True
        w2 = wasserstein2_empirical(p.x, y) if snap and p.N == p.M else math.nan
        rec = FlowRecord(n, t, p.mmd2, w2, kin, sol.rel_gap, p.lam, sol.iterations, box_slack(p, sol.q), snap)
        trace.records.append(rec)
        if snap:
            trace.snapshots[n] = p.x.copy()
        if on_record is not None:
            on_record(rec, p.x)
        if stop:
            trace.stop_reason = "kinetic"
            break
        if n == cfg.steps:
            break
        if not sol.converged:
            log.debug("step %d: gap %.3g after %d iterations", n, sol.rel_gap, sol.iterations)
        x_new = p.x - cfg.tau * grad
        if not np.all(np.isfinite(x_new)):
            raise FlowError(n, SolverError("particles left the finite range"))
        p = p.with_particles(x_new)
        if p.finite:
            p.check_threshold()
        q = sol.q
    trace.positions = p.x.copy()
    trace.elapsed = time.perf_counter() - start
    return trace
