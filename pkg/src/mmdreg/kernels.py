"""Radial kernels ``K(x, y) = phi(||x - y||^2)`` and their derivatives."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

FAMILIES = ("gaussian", "inverse_multiquadric", "matern_3_2", "spline_compact")


class KernelError(ValueError):
    pass


@dataclass(frozen=True)
class RadialKernel:
    """Radial kernel given by its profile ``phi`` on squared distances.

    ``sigma2`` is the width parameter of the family:

    * gaussian: ``exp(-r / (2 sigma2))``
    * inverse_multiquadric: ``(sigma2 + r) ** -0.5``
    * matern_3_2: ``(1 + c sqrt(r)) exp(-c sqrt(r))`` with ``c = sqrt(3) / sigma2``
    * spline_compact: ``(1 - s)_+^3 (3 s + 1)`` with ``s = sqrt(r / sigma2)``

    ``dim`` is optional; when set, point arrays are checked against it.
    """

    family: str
    sigma2: float = 1.0
    dim: Optional[int] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise KernelError(f"unknown kernel family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if not (self.sigma2 > 0 and math.isfinite(self.sigma2)):
            raise KernelError(f"kernel width sigma2 must be positive, got {self.sigma2}")
        if self.dim is not None and self.dim < 1:
            raise KernelError(f"dimension must be a positive integer, got {self.dim}")

    # profile and derivatives in r = squared distance

    def phi(self, r):
        r = np.asarray(r, dtype=np.float64)
        s2 = self.sigma2
        if self.family == "gaussian":
            return np.exp(-r / (2 * s2))
        if self.family == "inverse_multiquadric":
            return (s2 + r) ** -0.5
        if self.family == "matern_3_2":
            u = math.sqrt(3) / s2 * np.sqrt(r)
            return (1 + u) * np.exp(-u)
        s = np.sqrt(r / s2)
        return np.maximum(1 - s, 0.0) ** 3 * (3 * s + 1)

    def dphi(self, r):
        r = np.asarray(r, dtype=np.float64)
        s2 = self.sigma2
        if self.family == "gaussian":
            return -np.exp(-r / (2 * s2)) / (2 * s2)
        if self.family == "inverse_multiquadric":
            return -0.5 * (s2 + r) ** -1.5
        if self.family == "matern_3_2":
            c = math.sqrt(3) / s2
            return -0.5 * c * c * np.exp(-c * np.sqrt(r))
        s = np.sqrt(r / s2)
        return -6.0 / s2 * np.maximum(1 - s, 0.0) ** 2

    def d2phi_at_zero(self) -> float:
        s2 = self.sigma2
        if self.family == "gaussian":
            return 1 / (4 * s2 * s2)
        if self.family == "inverse_multiquadric":
            return 0.75 * s2**-2.5
        raise KernelError(f"{self.family} kernel has no second derivative at zero")

    def _check(self, *arrays):
        dims = {a.shape[-1] for a in arrays}
        if len(dims) != 1:
            raise KernelError(f"dimension mismatch between point sets: {sorted(dims)}")
        if self.dim is not None and dims != {self.dim}:
            raise KernelError(f"points have dimension {dims.pop()}, kernel expects {self.dim}")

    def __call__(self, x, y):
        """Kernel value for single points or row-wise pairs of points."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self._check(x, y)
        return self.phi(np.sum((x - y) ** 2, axis=-1))

    def sqdist(self, a, b) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        self._check(a, b)
        return cdist(a, b, "sqeuclidean")

    def gram(self, a, b=None) -> np.ndarray:
        """Gram matrix ``K[i, j] = K(a_i, b_j)``."""
        if b is None:
            b = a
        return self.phi(self.sqdist(a, b))

    def grad(self, x, z):
        """Gradient in the first argument, ``2 phi'(||x - z||^2) (x - z)``."""
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        self._check(x, z)
        diff = x - z
        return 2 * self.dphi(np.sum(diff**2, axis=-1))[..., None] * diff

    def weighted_grad(self, x, z, w, sqdist=None) -> np.ndarray:
        """Rows ``sum_k w_k grad_x K(x_i, z_k)`` for all ``x_i``."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        if sqdist is None:
            sqdist = self.sqdist(x, z)
        wk = self.dphi(sqdist) * np.asarray(w, dtype=np.float64)[None, :]
        return 2 * (x * wk.sum(axis=1)[:, None] - wk @ z)

    def embedding_constant(self) -> float:
        """Bound on the Lipschitz constant of the feature map, ``sqrt(-2 phi'(0))``."""
        return math.sqrt(-2 * float(self.dphi(0.0)))

    def convexity_constant(self, lam: float, dim: Optional[int] = None) -> float:
        """Semiconvexity modulus ``(8 / lam) sqrt((d + 2) phi''(0) phi(0))``."""
        d = dim if dim is not None else self.dim
        if d is None:
            raise KernelError("convexity constant needs the dimension")
        if not lam > 0:
            raise KernelError(f"lambda must be positive, got {lam}")
        return 8 / lam * math.sqrt((d + 2) * self.d2phi_at_zero() * float(self.phi(0.0)))


def spectral_norm(m: np.ndarray, tol: float = 1e-10, max_iter: int = 2000,
                  start: Optional[np.ndarray] = None) -> float:
    """Largest absolute eigenvalue of a symmetric matrix by power iteration.

    Falls back to a dense eigensolver when the iteration stalls.
    """
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    if n == 0:
        return 0.0
    v = np.ones(n) + 0.1 * np.sin(np.arange(1, n + 1)) if start is None else np.array(start, dtype=np.float64)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = m @ v
        new = float(np.linalg.norm(w))
        if new == 0.0:
            break
        v = w / new
        if abs(new - est) <= tol * new:
            return new
        est = new
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))
