"""Finite-dimensional primal and dual problems for the regularized divergence.

With particles ``x_1..x_N`` (the measure mu) and targets ``y_1..y_M``
(the measure nu) the atoms are stacked as ``z = (y_1..y_M, x_1..x_N)``.
The primal variable ``q`` holds density ratios of the optimal measure
against nu: ``q_k >= 0`` on the targets and ``q_{M+j} >= -M/N`` on the
particles. For entropies with infinite recession constant the particle
block is pinned at ``-M/N`` and only the first ``M`` entries are free.

Dual coefficients ``b`` expand the witness ``p = sum_k b_k K(., z_k)`` and
are tied to ``q`` by ``b = -q / (lam M)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .entropy import Entropy, golden_section
from .kernels import RadialKernel, spectral_norm

_revisions = itertools.count(1)


class ConfigError(ValueError):
    """Problem parameters that the solvers cannot accept."""


class StaleSolutionError(RuntimeError):
    """A dual solution was used with a problem it was not computed for."""


@dataclass
class DualSolution:
    q: np.ndarray
    primal: float
    dual: float
    gap: float
    rel_gap: float
    iterations: int
    converged: bool
    revision: int
    tight: bool = False
    history: list = field(default_factory=list, repr=False)
    residuals: list = field(default_factory=list, repr=False)

    @property
    def value(self) -> float:
        """Optimal value estimate, the primal objective at ``q``."""
        return self.primal


@dataclass(frozen=True, eq=False)
class RegularizedProblem:
    """Gram blocks and parameters of one discrete instance.

    Instances are immutable. Moving the particles goes through
    :meth:`with_particles`, which reuses the target block and issues a new
    revision number so that stale solutions are detected.
    """

    entropy: Entropy
    kernel: RadialKernel
    lam: float
    x: np.ndarray
    y: np.ndarray
    K_yy: np.ndarray
    K_xy: np.ndarray
    K_xx: np.ndarray
    revision: int
    Kyy_norm: float
    D_xy: Optional[np.ndarray] = None
    D_xx: Optional[np.ndarray] = None

    @classmethod
    def build(cls, entropy: Entropy, kernel: RadialKernel, lam: float, x, y,
              K_yy: Optional[np.ndarray] = None, Kyy_norm: Optional[float] = None) -> "RegularizedProblem":
        lam = float(lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise ConfigError(f"lambda must be positive and finite, got {lam}")
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = np.atleast_2d(np.asarray(y, dtype=np.float64))
        if x.shape[0] == 0 or y.shape[0] == 0:
            raise ConfigError("particles and targets must be nonempty")
        if K_yy is None:
            K_yy = kernel.gram(y)
        if Kyy_norm is None:
            Kyy_norm = spectral_norm(K_yy)
        D_xy = kernel.sqdist(x, y)
        D_xx = kernel.sqdist(x, x)
        return cls(entropy, kernel, lam, x, y, K_yy, kernel.phi(D_xy), kernel.phi(D_xx),
                   next(_revisions), float(Kyy_norm), D_xy, D_xx)

    def with_particles(self, x, lam: Optional[float] = None) -> "RegularizedProblem":
        return RegularizedProblem.build(self.entropy, self.kernel, self.lam if lam is None else lam,
                                        x, self.y, self.K_yy, self.Kyy_norm)

    @property
    def M(self) -> int:
        return self.y.shape[0]

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def finite(self) -> bool:
        return self.entropy.finite_recession

    @property
    def z(self) -> np.ndarray:
        return np.vstack([self.y, self.x])

    @cached_property
    def K(self) -> np.ndarray:
        return np.block([[self.K_yy, self.K_xy.T], [self.K_xy, self.K_xx]])

    @cached_property
    def K_norm(self) -> float:
        return spectral_norm(self.K)

    @cached_property
    def _c(self) -> np.ndarray:
        # K_xy^T 1_N
        return self.K_xy.sum(axis=0)

    @cached_property
    def _s(self) -> float:
        return float(self.K_xx.sum())

    @cached_property
    def mmd2(self) -> float:
        """Squared kernel distance between the particles and the targets."""
        v = self._s / self.N**2 + self.K_yy.sum() / self.M**2 - 2 * self._c.sum() / (self.M * self.N)
        return max(float(v), 0.0)

    def threshold(self) -> float:
        """Smallest lambda for which the finite representation is valid.

        Zero for infinite recession; infinite when the recession constant is 0.
        """
        rec = self.entropy.recession
        if not math.isfinite(rec):
            return 0.0
        if rec <= 0:
            return math.inf
        return 2 * math.sqrt(self.mmd2) * math.sqrt(float(self.kernel.phi(0.0))) / rec

    def check_threshold(self) -> None:
        t = self.threshold()
        if not self.lam > t:
            raise ConfigError(
                f"lambda={self.lam:g} must exceed {t:g} for entropy {self.entropy.label} "
                f"(finite recession constant {self.entropy.recession:g})")

    def initial_q(self) -> np.ndarray:
        """Density ratios of nu itself, a feasible starting point."""
        if self.finite:
            return np.concatenate([np.ones(self.M), np.full(self.N, -self.M / self.N)])
        return np.ones(self.M)

    def _full_q(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        if q.shape[0] == self.M:
            if self.finite:
                raise ValueError(f"finite recession needs {self.M + self.N} coordinates, got {self.M}")
            return np.concatenate([q, np.full(self.N, -self.M / self.N)])
        if q.shape[0] != self.M + self.N:
            raise ValueError(f"q has {q.shape[0]} entries, expected {self.M} or {self.M + self.N}")
        return q

    # ------------------------------------------------------------ primal

    def Kq(self, q) -> np.ndarray:
        """Product used by the objectives: ``K_yy q`` (pinned tail) or ``K q``."""
        return (self.K if self.finite else self.K_yy) @ q

    def primal(self, q, Kq: Optional[np.ndarray] = None) -> float:
        """Primal objective ``J(q)``; ``+inf`` outside the feasible box."""
        q = np.asarray(q, dtype=np.float64)
        M, N, lam = self.M, self.N, self.lam
        if not self.finite and q.shape[0] == M + N:
            if np.any(q[M:] != -M / N):
                return math.inf
            q = q[:M]
        if Kq is None:
            Kq = self.Kq(q)
        fsum = float(np.sum(self.entropy.f(q[:M])))
        quad = float(q @ Kq) / (2 * lam * M * M)
        if self.finite:
            tail = q[M:]
            if np.any(tail < -M / N):
                return math.inf
            rec = self.entropy.recession
            lin = rec / M * (M + float(tail.sum())) if rec > 0 else 0.0
            return fsum / M + lin + quad
        return fsum / M + quad - float(self._c @ q) / (lam * M * N) + self._s / (2 * lam * N * N)

    def smooth_grad(self, q, Kq: Optional[np.ndarray] = None) -> np.ndarray:
        """Gradient of the quadratic (and linear) part of ``J``."""
        q = np.asarray(q, dtype=np.float64)
        M, N, lam = self.M, self.N, self.lam
        if Kq is None:
            Kq = self.Kq(q)
        g = Kq / (lam * M * M)
        if self.finite:
            g[M:] += self.entropy.recession / M
            return g
        return g - self._c / (lam * M * N)

    # -------------------------------------------------------------- dual

    def coefficients(self, q) -> np.ndarray:
        """Witness coefficients ``b`` for all ``M + N`` atoms."""
        return -self._full_q(q) / (self.lam * self.M)

    def witness_values(self, b) -> np.ndarray:
        """Witness ``p = sum_k b_k K(., z_k)`` at all atoms ``z``."""
        return self.K @ b

    def rkhs_norm(self, b) -> float:
        b = np.asarray(b, dtype=np.float64)
        return math.sqrt(max(float(b @ (self.K @ b)), 0.0))

    def dual(self, b) -> float:
        """Dual objective ``E_mu[p] - E_nu[f* o p] - lam/2 ||p||^2``.

        Returns ``-inf`` when the witness leaves the closed domain of the
        conjugate on some atom.
        """
        b = np.asarray(b, dtype=np.float64)
        Kb = self.K @ b
        M = self.M
        return self._dual_parts(Kb[M:].mean(), Kb[:M], float(b @ Kb))

    def _dual_parts(self, mean_px: float, py: np.ndarray, bKb: float, px_max: float = -math.inf) -> float:
        if px_max > self.entropy.recession:
            return -math.inf
        conj = np.asarray(self.entropy.conj(py))
        if not np.all(np.isfinite(conj)):
            return -math.inf
        return float(mean_px - conj.mean() - 0.5 * self.lam * bKb)

    def _dual_from(self, q, Kq) -> float:
        """Dual objective at ``b(q)`` reusing the product from :meth:`Kq`."""
        M, N, lam = self.M, self.N, self.lam
        if self.finite:
            p = -Kq / (lam * M)
            bKb = float(q @ Kq) / (lam * M) ** 2
            return self._dual_parts(p[M:].mean(), p[:M], bKb, p[M:].max())
        py = -Kq / (lam * M) + self._c / (lam * N)
        cq = float(self._c @ q)
        mean_px = -cq / (lam * M * N) + self._s / (lam * N * N)
        bKb = float(q @ Kq) / (lam * M) ** 2 - 2 * cq / (lam * lam * M * N) + self._s / (lam * N) ** 2
        return self._dual_parts(mean_px, py, bKb)

    def gap(self, q, Kq: Optional[np.ndarray] = None) -> tuple[float, float, float, float]:
        """Pseudo-duality gap ``|D(b(q)) - J(q)|``.

        Returns ``(gap, relative gap, J, D)``; the relative gap divides by
        the smaller of ``|J|`` and ``|D|``.
        """
        q = np.asarray(q, dtype=np.float64)
        if not self.finite and q.shape[0] == self.M + self.N:
            q = q[: self.M]
        if Kq is None:
            Kq = self.Kq(q)
        J = self.primal(q, Kq)
        D = self._dual_from(q, Kq)
        return _gap(J, D)

    # ------------------------------------------------------------- tight

    def tight_dual_from(self, q, Kq) -> float:
        M, N, lam = self.M, self.N, self.lam
        py = -Kq / (lam * M) + self._c / (lam * N)
        cq = float(self._c @ q)
        mean_px = -cq / (lam * M * N) + self._s / (lam * N * N)
        bKb = float(q @ Kq) / (lam * M) ** 2 - 2 * cq / (lam * lam * M * N) + self._s / (lam * N) ** 2
        conj = tight_conjugate(self.entropy, np.full(M, 1.0 / M), py)
        return float(mean_px - conj - 0.5 * lam * bKb)

    def tight_gap(self, q, Kq: Optional[np.ndarray] = None):
        if Kq is None:
            Kq = self.K_yy @ q
        return _gap(self.primal(q, Kq), self.tight_dual_from(q, Kq))

    # ----------------------------------------------------------- witness

    def _check(self, sol: DualSolution) -> None:
        if sol.revision != self.revision:
            raise StaleSolutionError(
                f"solution belongs to problem revision {sol.revision}, not {self.revision}")

    def witness_eval(self, sol: DualSolution, x) -> np.ndarray:
        self._check(sol)
        x = np.asarray(x, dtype=np.float64)
        vals = self.kernel.gram(np.atleast_2d(x), self.z) @ self.coefficients(sol.q)
        return vals[0] if x.ndim == 1 else vals

    def witness_grad(self, sol: DualSolution, x) -> np.ndarray:
        """Gradient of the witness at ``x`` (one point or rows of points)."""
        self._check(sol)
        x = np.asarray(x, dtype=np.float64)
        g = self.kernel.weighted_grad(np.atleast_2d(x), self.z, self.coefficients(sol.q))
        return g[0] if x.ndim == 1 else g

    def particle_grad(self, sol: DualSolution) -> np.ndarray:
        """Witness gradient at every particle, reusing the stored distances."""
        self._check(sol)
        sq = np.hstack([self.D_xy, self.D_xx])
        return self.kernel.weighted_grad(self.x, self.z, self.coefficients(sol.q), sqdist=sq)


def _gap(J: float, D: float) -> tuple[float, float, float, float]:
    if not (math.isfinite(J) and math.isfinite(D)):
        return math.inf, math.inf, J, D
    g = abs(D - J)
    denom = min(abs(J), abs(D))
    if g == 0:
        rel = 0.0
    elif denom == 0:
        rel = math.inf
    else:
        rel = g / denom
    return g, rel, J, D


def tight_conjugate(e: Entropy, nu, g) -> float:
    """Conjugate of the tight divergence ``D_f(. | nu) + indicator(probability)``.

    Equals ``inf_s sum_j nu_j f*(g_j + s) - s`` over ``s + max g <= f'_inf``.
    """
    nu = np.asarray(nu, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if e.name == "kl":
        return float(logsumexp(g, b=nu)) + 1.0 - float(nu.sum())
    upper = e.recession - float(g.max()) if e.finite_recession else math.inf

    def obj(s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        vals = np.asarray(e.conj(g[None, :] + s[:, None])) @ nu - s
        return np.where(np.isnan(vals), math.inf, vals)

    c = min(0.0, upper - 1.0)
    fc = obj(c)[0]
    step = 1.0
    left, right = c - step, min(c + step, upper)
    fl, fr = obj(left)[0], obj(right)[0]
    for _ in range(200):
        if fl < fc:
            right, fr, c, fc = c, fc, left, fl
            step *= 2
            left = c - step
            fl = obj(left)[0]
        elif fr < fc and right < upper:
            left, fl, c, fc = c, fc, right, fr
            step *= 2
            right = min(c + step, upper)
            fr = obj(right)[0]
        else:
            break
    s = golden_section(obj, np.array([left]), np.array([right]),
                       tol=1e-13 * max(1.0, abs(left), abs(right)))
    cands = np.array([left, right, s[0], c])
    return float(np.min(obj(cands)))
