"""Solvers for the finite-dimensional primal problem.

* :func:`fista_infinite` handles entropies with infinite recession constant
  (particle block pinned).
* :func:`fista_finite` handles finite recession constants (full box).
* :func:`mirror_descent_tight` solves the tight variant where the optimal
  measure is constrained to be a probability measure.

All three stop on the relative pseudo-duality gap or an iteration cap and
return a :class:`DualSolution`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .objective import ConfigError, DualSolution, RegularizedProblem

log = logging.getLogger(__name__)

STEP_RULES = ("fixed_lipschitz", "armijo", "polyak")


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    max_iters: int = 20000
    gap_tol: float = 1e-8
    step_rule: str = "fixed_lipschitz"
    restart: bool = True
    record_history: bool = False
    # absolute gap below which the relative test is skipped (values near 0)
    abs_tol: float = 1e-15

    def __post_init__(self):
        if self.step_rule not in STEP_RULES:
            raise ConfigError(f"solver.step_rule must be one of {', '.join(STEP_RULES)}, got {self.step_rule!r}")
        if self.max_iters < 1:
            raise ConfigError(f"solver.max_iters must be positive, got {self.max_iters}")
        if not self.gap_tol > 0:
            raise ConfigError(f"solver.gap_tol must be positive, got {self.gap_tol}")


def _start(p: RegularizedProblem, q0: Optional[np.ndarray], size: int) -> np.ndarray:
    if q0 is None or np.shape(q0) != (size,):
        return p.initial_q()
    q = np.array(q0, dtype=np.float64)
    if not math.isfinite(p.primal(q)):
        return p.initial_q()
    return q


def _fista(p: RegularizedProblem, cfg: SolverConfig, q0, L: float, prox, callback=None) -> DualSolution:
    """Accelerated proximal gradient with optional function-value restart."""
    size = p.M + p.N if p.finite else p.M
    q = _start(p, q0, size)
    Kq = p.Kq(q)
    J = p.primal(q, Kq)
    if not math.isfinite(J):
        raise SolverError("initial point is infeasible")
    history = [J] if cfg.record_history else []
    gap, rel, _, D = p.gap(q, Kq)
    it = 0
    converged = rel <= cfg.gap_tol or gap <= cfg.abs_tol
    q_prev = q
    t = 1.0
    while not converged and it < cfg.max_iters:
        it += 1
        t_next = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        beta = (t - 1) / t_next
        zq = q + beta * (q - q_prev)
        Kz = Kq + beta * (Kq - Kq_prev) if beta != 0 else Kq
        q_new = prox(zq - p.smooth_grad(zq, Kz) / L)
        Kq_new = p.Kq(q_new)
        J_new = p.primal(q_new, Kq_new)
        if cfg.restart and J_new > J and beta != 0:
            # momentum made things worse: take a plain step from q instead
            t_next = 1.0
            q_new = prox(q - p.smooth_grad(q, Kq) / L)
            Kq_new = p.Kq(q_new)
            J_new = p.primal(q_new, Kq_new)
        if not np.all(np.isfinite(q_new)) or math.isnan(J_new):
            raise SolverError(f"non-finite iterate at iteration {it}")
        q_prev, Kq_prev = q, Kq
        q, Kq, J, t = q_new, Kq_new, J_new, t_next
        if callback is not None:
            callback(it, q)
        if cfg.record_history:
            history.append(J)
        gap, rel, _, D = p.gap(q, Kq)
        converged = rel <= cfg.gap_tol or gap <= cfg.abs_tol
    return DualSolution(q, J, D, gap, rel, it, converged, p.revision, history=history)


def fista_infinite(p: RegularizedProblem, cfg: SolverConfig = SolverConfig(),
                   q0: Optional[np.ndarray] = None, callback=None) -> DualSolution:
    """FISTA on the first ``M`` coordinates for infinite recession constants.

    Step ``1/L`` with ``L = ||K_yy|| / (lam M^2)``; the prox parameter on
    each coordinate is then ``lam M / ||K_yy||``.
    """
    if p.finite:
        raise ConfigError(f"{p.entropy.label} has a finite recession constant; use fista_finite")
    L = p.Kyy_norm / (p.lam * p.M**2)
    gamma = p.lam * p.M / p.Kyy_norm
    e = p.entropy
    return _fista(p, cfg, q0, L, lambda w: e.prox(gamma, w), callback)


def fista_finite(p: RegularizedProblem, cfg: SolverConfig = SolverConfig(),
                 q0: Optional[np.ndarray] = None, check: bool = True, callback=None) -> DualSolution:
    """FISTA on all ``M + N`` coordinates for finite recession constants.

    The target block gets the entropy prox, the particle block a
    projection onto ``[-M/N, inf)``.
    """
    if not p.finite:
        raise ConfigError(f"{p.entropy.label} has an infinite recession constant; use fista_infinite")
    if check:
        if p.entropy.recession > 0:
            p.check_threshold()
        else:
            log.warning("recession constant 0: the finite representation is not guaranteed")
    M, N = p.M, p.N
    L = p.K_norm / (p.lam * M * M)
    gamma = p.lam * M / p.K_norm
    e = p.entropy

    def prox(w):
        out = np.empty_like(w)
        out[:M] = e.prox(gamma, w[:M])
        out[M:] = np.maximum(w[M:], -M / N)
        return out

    return _fista(p, cfg, q0, L, prox, callback)


def mirror_descent_tight(p: RegularizedProblem, cfg: SolverConfig = SolverConfig(step_rule="armijo"),
                         q0: Optional[np.ndarray] = None, check_every: int = 1) -> DualSolution:
    """Exponentiated-gradient descent over ``{q >= 0, sum q = M}``.

    Step sizes follow Armijo backtracking or a Polyak rule whose lower
    bound is the best tight dual value seen so far.
    """
    if p.finite:
        raise ConfigError("the tight formulation is implemented for infinite recession constants only")
    if cfg.step_rule == "fixed_lipschitz":
        raise ConfigError("mirror descent needs solver.step_rule = armijo or polyak")
    e = p.entropy
    M = p.M
    q = np.ones(M) if q0 is None or np.shape(q0) != (M,) else np.array(q0, dtype=np.float64)
    q *= M / q.sum()
    Kq = p.K_yy @ q
    J = p.primal(q, Kq)
    if not math.isfinite(J):
        q = np.ones(M)
        Kq = p.K_yy @ q
        J = p.primal(q, Kq)
    history = [J] if cfg.record_history else []
    residuals = [abs(q.sum() - M)] if cfg.record_history else []
    gap, rel, _, D = p.tight_gap(q, Kq)
    best_dual = D
    converged = rel <= cfg.gap_tol or gap <= cfg.abs_tol
    eta = None
    it = 0
    while not converged and it < cfg.max_iters:
        it += 1
        g = e.df(np.maximum(q, 1e-300)) / M + p.smooth_grad(q, Kq)
        g = g - g.max()
        logq = np.log(np.maximum(q, 1e-300))
        gnorm = float(np.max(np.abs(g - g.mean())))
        if gnorm == 0:
            converged = True
            break
        if cfg.step_rule == "polyak":
            eta = max(J - best_dual, 0.0) / gnorm**2 if math.isfinite(best_dual) else 1.0 / gnorm
            eta = max(eta, 1e-12)
        elif eta is None:
            eta = 1.0 / gnorm
        else:
            eta *= 2.0
        for _ in range(80):
            lq = logq - eta * g
            q_new = np.exp(lq - lq.max())
            q_new *= M / q_new.sum()
            Kq_new = p.K_yy @ q_new
            J_new = p.primal(q_new, Kq_new)
            if cfg.step_rule == "polyak":
                break
            if J_new <= J + 1e-4 * float(g @ (q_new - q)) or J_new <= J and eta < 1e-14:
                break
            eta *= 0.5
        if cfg.step_rule == "armijo" and J_new > J:
            # the step collapsed to rounding level; keep the current point
            break
        q, Kq, J = q_new, Kq_new, J_new
        if cfg.record_history:
            history.append(J)
            residuals.append(abs(q.sum() - M))
        if it % check_every == 0:
            gap, rel, _, D = p.tight_gap(q, Kq)
            best_dual = max(best_dual, D)
            converged = rel <= cfg.gap_tol or gap <= cfg.abs_tol
    gap, rel, _, D = p.tight_gap(q, Kq)
    return DualSolution(q, J, D, gap, rel, it, rel <= cfg.gap_tol or gap <= cfg.abs_tol,
                        p.revision, tight=True, history=history, residuals=residuals)


def solve(p: RegularizedProblem, cfg: SolverConfig = SolverConfig(), q0: Optional[np.ndarray] = None,
          tight: bool = False) -> DualSolution:
    """Pick the solver that matches the entropy and formulation."""
    if tight:
        if cfg.step_rule == "fixed_lipschitz":
            cfg = SolverConfig(cfg.max_iters, cfg.gap_tol, "armijo", cfg.restart, cfg.record_history, cfg.abs_tol)
        return mirror_descent_tight(p, cfg, q0)
    if p.finite:
        return fista_finite(p, cfg, q0)
    return fista_infinite(p, cfg, q0)
