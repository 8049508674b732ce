"""Discrete measures, kernel mean embeddings and empirical distances."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .entropy import Entropy
from .kernels import RadialKernel


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite sum of weighted Dirac masses.

    ``points`` has shape ``(n, d)`` and ``weights`` shape ``(n,)``. Weights
    are nonnegative and finite; probability measures sum to one.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] != w.shape[0]:
            raise MeasureError(f"points {pts.shape} and weights {w.shape} disagree")
        if not np.all(np.isfinite(pts)):
            raise MeasureError("points must be finite")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MeasureError("weights must be nonnegative and finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        """Empirical measure of a particle ensemble, weight ``1/N`` each."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[0] == 0:
            raise MeasureError("empty particle ensemble")
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))


def kme_eval(kernel: RadialKernel, mu: DiscreteMeasure, x) -> np.ndarray:
    """Kernel mean embedding ``m_mu(x) = sum_i w_i K(x, x_i)``."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    vals = kernel.gram(np.atleast_2d(x), mu.points) @ mu.weights
    return vals[0] if single else vals


def mmd_squared(kernel: RadialKernel, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Squared kernel distance between two discrete measures."""
    v = (mu.weights @ kernel.gram(mu.points) @ mu.weights
         + nu.weights @ kernel.gram(nu.points) @ nu.weights
         - 2 * mu.weights @ kernel.gram(mu.points, nu.points) @ nu.weights)
    return max(float(v), 0.0)


def merge_atoms(m: DiscreteMeasure) -> DiscreteMeasure:
    """Combine atoms at bitwise-identical locations (``-0.0`` equals ``0.0``)."""
    pts = m.points + 0.0
    index: dict[bytes, int] = {}
    keep, weights = [], []
    for i, row in enumerate(pts):
        key = row.tobytes()
        j = index.get(key)
        if j is None:
            index[key] = len(keep)
            keep.append(i)
            weights.append(m.weights[i])
        else:
            weights[j] += m.weights[i]
    return DiscreteMeasure(pts[keep], np.array(weights))


def discrete_f_divergence(e: Entropy, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """``D_f(mu | nu)`` for discrete measures, including the singular part.

    Atoms are matched by exact location. Mass of ``mu`` off the support of
    ``nu`` is charged at the recession constant, with ``0 * inf = 0``.
    """
    mu, nu = merge_atoms(mu), merge_atoms(nu)
    nu_index = {row.tobytes(): i for i, row in enumerate(nu.points) if nu.weights[i] > 0}
    mu_on = np.zeros(nu.size)
    singular = 0.0
    for row, w in zip(mu.points, mu.weights):
        j = nu_index.get(row.tobytes())
        if j is None:
            singular += w
        else:
            mu_on[j] += w
    pos = nu.weights > 0
    ratio = mu_on[pos] / nu.weights[pos]
    vals = np.asarray(e.f(ratio)) * nu.weights[pos]
    total = float(np.sum(vals))
    if singular > 0:
        total += e.recession * singular
    return total


def wasserstein2_empirical(a, b) -> float:
    """Exact 2-Wasserstein distance between equal-size uniform ensembles."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise MeasureError(f"ensembles must have equal size and dimension, got {a.shape} and {b.shape}")
    cost = cdist(a, b, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].sum() / a.shape[0]))
