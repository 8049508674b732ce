"""Entropy functions that generate f-divergences.

An entropy ``f`` is a proper, convex, lower semicontinuous function on
``[0, inf)`` with ``f(1) = 0`` and ``f = inf`` on the negative half line.
Each catalog entry exposes ``f``, its convex conjugate, its recession
constant ``lim f(t)/t`` and the proximal map of ``lam * f``.

Every evaluation is vectorised and follows IEEE conventions: values
outside the effective domain are ``+inf``. The ``f`` evaluations keep the
floating dtype of their input, so passing ``np.longdouble`` arrays gives
extended precision (the golden-section oracle relies on this).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

INF = math.inf

# Entries of the catalog exercised by the prox oracle suite.
CATALOG: tuple[tuple[str, Optional[float]], ...] = (
    ("tsallis", 0.5),
    ("tsallis", 2.0),
    ("tsallis", 3.0),
    ("tsallis", 7.5),
    ("power", -1.0),
    ("power", 0.5),
    ("power", 2.0),
    ("kl", None),
    ("jeffreys", None),
    ("jensen_shannon", None),
    ("lindsay", 0.0),
    ("lindsay", 0.5),
    ("burg", None),
    ("matusita", 0.5),
    ("total_variation", None),
    ("marton", None),
    ("hockey_stick", None),
    ("equality_indicator", None),
    ("zero", None),
)


class EntropyError(ValueError):
    """Unknown entropy name or parameter outside the admissible range."""


def _arr(t):
    t = np.asarray(t)
    if t.dtype.kind != "f":
        t = t.astype(np.float64)
    return t


def _pos(t):
    return np.maximum(t, 0.0)


def lambertw_exp(log_z, tol: float = 1e-14, max_iter: int = 50):
    """Principal Lambert W evaluated at ``exp(log_z)``.

    Works in log space so that arguments far beyond the float range are
    fine. Newton's method runs on ``u = log W`` starting from the log of
    ``log(1 + z)``.
    """
    log_z = np.asarray(log_z, dtype=np.float64)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        u = np.where(log_z < -20.0, log_z, np.log(np.logaddexp(0.0, log_z)))
        for _ in range(max_iter):
            eu = np.exp(u)
            step = (eu + u - log_z) / (eu + 1.0)
            u = u - step
            if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(u))):
                break
    return np.exp(u)


@dataclass(frozen=True)
class Entropy:
    """A catalog entropy together with its conjugate and proximal data.

    Use :func:`entropy` to build instances.
    """

    name: str
    alpha: Optional[float]
    recession: float
    domain: tuple[float, float] = (0.0, INF)
    unique_minimizer: bool = True
    _f: Callable = field(default=None, repr=False, compare=False)
    _df: Optional[Callable] = field(default=None, repr=False, compare=False)
    _d2f: Optional[Callable] = field(default=None, repr=False, compare=False)
    _conj: Optional[Callable] = field(default=None, repr=False, compare=False)
    _prox: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def label(self) -> str:
        return self.name if self.alpha is None else f"{self.name}({self.alpha:g})"

    @property
    def has_closed_prox(self) -> bool:
        return self._prox is not None

    @property
    def finite_recession(self) -> bool:
        return math.isfinite(self.recession)

    def f(self, t):
        t = _arr(t)
        with np.errstate(all="ignore"):
            out = self._f(np.where(t < 0, 0.0, t).astype(t.dtype))
        return np.where(t < 0, INF, out)[()]

    def df(self, t):
        """Right derivative of ``f`` on ``[0, inf)`` (``-inf`` allowed at 0)."""
        if self._df is None:
            raise EntropyError(f"{self.label} has no derivative")
        t = _arr(t)
        with np.errstate(all="ignore"):
            return self._df(t)[()]

    def conj(self, y):
        """Convex conjugate ``sup_t t*y - f(t)``."""
        y = _arr(y)
        with np.errstate(all="ignore"):
            if self._conj is not None:
                return np.asarray(self._conj(y))[()]
            return _numeric_conj(self, y).reshape(y.shape)[()]

    def prox(self, lam, x):
        """Proximal map ``argmin_t f(t) + (t - x)**2 / (2 lam)``."""
        lam = float(lam)
        if not lam > 0 or not math.isfinite(lam):
            raise EntropyError(f"prox parameter must be positive, got {lam}")
        x = np.asarray(x, dtype=np.float64)
        with np.errstate(all="ignore"):
            if self._prox is not None:
                return np.asarray(self._prox(lam, x), dtype=np.float64)[()]
            return _prox_root(self, lam, x).reshape(x.shape)[()]


def _prox_root(e: Entropy, lam: float, x: np.ndarray) -> np.ndarray:
    """Solve ``lam*f'(t) + t - x = 0`` by safeguarded Newton on a bracket.

    The prox lies between ``x`` and the minimiser 1, so the bracket is
    ``[max(0, min(x, 1)), max(x, 1)]``. Newton steps that leave the bracket
    are replaced by bisection; without a second derivative we bisect only.
    """
    x = np.atleast_1d(x).astype(np.float64)
    lo = np.maximum(0.0, np.minimum(x, 1.0))
    hi = np.maximum(x, 1.0)
    at_zero = lam * e.df(np.zeros_like(x)) - x >= 0.0
    # start inside the bracket, away from a possible singularity of f' at 0
    t = np.where(x < 1.0, 0.5 * (lo + hi), x)
    done = at_zero | (lo == hi)
    tol = 4.0 * np.finfo(np.float64).eps
    newton = e._d2f is not None
    dx = dx_old = hi - lo
    for _ in range(200):
        phi = lam * e.df(t) + t - x
        lo = np.where(phi < 0, t, lo)
        hi = np.where(phi > 0, t, hi)
        mid = 0.5 * (lo + hi)
        scale = np.maximum(1.0, np.abs(t))
        if newton:
            den = lam * e._d2f(t) + 1.0
            step = phi / den
            tn = t - step
            # bisect when Newton leaves the bracket or stops halving the step
            use = (tn > lo) & (tn < hi) & (2 * np.abs(step) <= np.abs(dx_old))
            tn = np.where(use, tn, mid)
            dx_old, dx = dx, np.where(use, step, 0.5 * (hi - lo))
            done |= np.isfinite(den) & (np.abs(step) <= tol * np.abs(t))
        else:
            tn = mid
        done |= (phi == 0) | (hi - lo <= tol * scale)
        t = np.where(done, t, tn)
        if done.all():
            break
    return np.where(at_zero, 0.0, t)


def _numeric_conj(e: Entropy, y: np.ndarray) -> np.ndarray:
    """Conjugate by a log-spaced grid search refined with golden section."""
    y = np.atleast_1d(y).astype(np.float64)
    grid = np.concatenate(([0.0], np.logspace(-12, 12, 481)))
    fg = e.f(grid)
    vals = y[:, None] * grid[None, :] - fg[None, :]
    i = np.argmax(vals, axis=1)
    a = grid[np.maximum(i - 1, 0)]
    b = grid[np.minimum(i + 1, grid.size - 1)]

    def obj(t):
        return -(y * t - e.f(t))

    t = golden_section(obj, a, b, tol=1e-13)
    out = np.maximum(-obj(t), vals[np.arange(y.size), i])
    return np.where(y >= e.recession, INF, out)


def golden_section(fun, a, b, tol: float = 1e-12, max_iter: int = 400):
    """Vectorised golden-section minimisation of ``fun`` on ``[a, b]``."""
    a = np.array(a, copy=True)
    b = np.array(b, copy=True)
    invphi = (np.sqrt(np.array(5.0, dtype=a.dtype)) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if np.all(b - a <= tol):
            break
        left = fc <= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - invphi * (b - a)
        new_d = a + invphi * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        fc_next = np.where(left, fun(new_c), fd)
        fd_next = np.where(left, fc, fun(new_d))
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
    return (a + b) / 2


def golden_section_prox(e: Entropy, lam: float, x, tol: float = 1e-12):
    """Reference prox by golden section in extended precision.

    This is the oracle for checking :meth:`Entropy.prox`; it uses only
    ``f`` and shares no code with the closed forms or the root finder.
    """
    xl = np.atleast_1d(np.asarray(x, dtype=np.longdouble))
    lo_dom, hi_dom = e.domain
    if lo_dom == hi_dom:
        return np.full(xl.shape, lo_dom, dtype=np.float64)
    one = np.longdouble(1)
    a = np.maximum(np.longdouble(lo_dom), np.minimum(xl, one))
    b = np.minimum(np.longdouble(hi_dom), np.maximum(xl, one))
    lam_l = np.longdouble(lam)

    def obj(t):
        return e.f(t) + (t - xl) ** 2 / (2 * lam_l)

    t = golden_section(obj, a, b, tol=tol)
    # the minimiser may sit on a bracket end where golden section only gets close
    ends = np.stack([a, b, t])
    vals = np.stack([obj(a), obj(b), obj(t)])
    best = np.argmin(vals, axis=0)
    return ends[best, np.arange(xl.size)].astype(np.float64)


# ---------------------------------------------------------------- catalog


def _tsallis(alpha: float) -> Entropy:
    if not alpha > 0:
        raise EntropyError(f"tsallis needs alpha > 0, got {alpha}")
    if alpha == 1:
        return _kl()
    a = alpha
    rec = INF if a > 1 else a / (1 - a)

    def conj(y):
        base = _pos((a - 1) / a * y + 1)
        out = base ** (a / (a - 1)) - 1
        if a < 1:
            out = np.where(y >= rec, INF, out)
        return out

    prox = None
    if a == 2:
        def prox(lam, x):
            return _pos(2 * lam + x) / (2 * lam + 1)

    return Entropy(
        "tsallis", a, rec,
        _f=lambda t: (t**a - a * t + a - 1) / (a - 1),
        _df=lambda t: a / (a - 1) * (t ** (a - 1) - 1),
        _d2f=lambda t: a * t ** (a - 2),
        _conj=conj,
        _prox=prox,
    )


def _power(alpha: float) -> Entropy:
    if alpha in (0, 1) or not math.isfinite(alpha):
        raise EntropyError(f"power entropy needs alpha not in {{0, 1}}, got {alpha}")
    a = alpha
    rec = INF if a > 1 else 1 / (1 - a)

    def conj(y):
        out = _pos((a - 1) * y + 1) ** (a / (a - 1)) / a - 1 / a
        if 0 < a < 1:
            out = np.where(y >= rec, INF, out)
        elif a < 0:
            out = np.where(y > rec, INF, out)
        return out

    return Entropy(
        "power", a, rec,
        _f=lambda t: (t**a - a * t + a - 1) / (a * (a - 1)),
        _df=lambda t: (t ** (a - 1) - 1) / (a - 1),
        _d2f=lambda t: t ** (a - 2),
        _conj=conj,
    )


def _xlogx(t):
    return np.where(t > 0, t * np.log(np.where(t > 0, t, 1)), 0.0)


def _kl(alpha=None) -> Entropy:
    def prox(lam, x):
        return lam * lambertw_exp(x / lam - math.log(lam))

    return Entropy(
        "kl", None, INF,
        _f=lambda t: _xlogx(t) - t + 1,
        _df=np.log,
        _d2f=lambda t: 1 / t,
        _conj=np.expm1,
        _prox=prox,
    )


def _burg(alpha=None) -> Entropy:
    def prox(lam, x):
        s = x - lam
        return 0.5 * (s + np.sqrt(s * s + 4 * lam))

    return Entropy(
        "burg", None, 1.0,
        _f=lambda t: -np.log(t) + t - 1,
        _df=lambda t: 1 - 1 / t,
        _d2f=lambda t: 1 / (t * t),
        _conj=lambda y: np.where(y < 1, -np.log1p(-np.minimum(y, 1)), INF),
        _prox=prox,
    )


def _jeffreys(alpha=None) -> Entropy:
    def conj(y):
        w = lambertw_exp(1 - y)
        return y - 2 + w + 1 / w

    return Entropy(
        "jeffreys", None, INF,
        _f=lambda t: (t - 1) * np.log(t),
        _df=lambda t: np.log(t) + 1 - 1 / t,
        _d2f=lambda t: 1 / t + 1 / (t * t),
        _conj=conj,
    )


def _jensen_shannon(alpha=None) -> Entropy:
    ln2 = math.log(2)
    return Entropy(
        "jensen_shannon", None, ln2,
        _f=lambda t: _xlogx(t) - (t + 1) * np.log((t + 1) / 2),
        _df=lambda t: np.log(2 * t / (t + 1)),
        _d2f=lambda t: 1 / (t * (t + 1)),
        _conj=lambda y: np.where(y < ln2, -np.log(2 - np.exp(np.minimum(y, ln2))), INF),
    )


def _lindsay(alpha: float) -> Entropy:
    if not 0 <= alpha < 1:
        raise EntropyError(f"lindsay needs alpha in [0, 1), got {alpha}")
    a = alpha
    rec = 1 / (1 - a)

    def den(t):
        return a + (1 - a) * t

    def conj(y):
        root = np.sqrt(_pos((a - 1) * y + 1))
        out = (a * (a - 1) * y - 2 * root + 2) / (a - 1) ** 2
        return np.where(y > rec, INF, out)

    return Entropy(
        "lindsay", a, rec,
        _f=lambda t: (t - 1) ** 2 / den(t),
        _df=lambda t: (t - 1) * ((1 - a) * t + 1 + a) / den(t) ** 2,
        _d2f=lambda t: 2 / den(t) ** 3,
        _conj=conj,
    )


def _matusita(alpha: float) -> Entropy:
    if not 0 < alpha < 1:
        raise EntropyError(f"matusita needs alpha in (0, 1), got {alpha}")
    a = alpha

    def df(t):
        return np.sign(t - 1) * np.abs(1 - t**a) ** ((1 - a) / a) * t ** (a - 1)

    return Entropy(
        "matusita", a, 1.0,
        _f=lambda t: np.abs(1 - t**a) ** (1 / a),
        _df=df,
    )


def _total_variation(alpha=None) -> Entropy:
    def prox(lam, x):
        s = x - 1
        return _pos(1 + np.sign(s) * _pos(np.abs(s) - lam))

    return Entropy(
        "total_variation", None, 1.0,
        _f=lambda t: np.abs(t - 1),
        _df=lambda t: np.where(t < 1, -1.0, 1.0),
        _d2f=np.zeros_like,
        _conj=lambda y: np.where(y <= 1, np.maximum(-1.0, y), INF),
        _prox=prox,
    )


def _marton(alpha=None) -> Entropy:
    def conj(y):
        mid = y * y / 4 + y
        return np.where(y > 0, INF, np.where(y >= -2, mid, -1.0))

    def prox(lam, x):
        return np.where(x <= 1, _pos(x + 2 * lam) / (1 + 2 * lam), x)

    return Entropy(
        "marton", None, 0.0, unique_minimizer=False,
        _f=lambda t: _pos(1 - t) ** 2,
        _df=lambda t: -2 * _pos(1 - t),
        _d2f=lambda t: np.where(t < 1, 2.0, 0.0),
        _conj=conj,
        _prox=prox,
    )


def _hockey_stick(alpha=None) -> Entropy:
    return Entropy(
        "hockey_stick", None, 0.0, unique_minimizer=False,
        _f=lambda t: _pos(1 - t),
        _df=lambda t: np.where(t < 1, -1.0, 0.0),
        _d2f=np.zeros_like,
        _conj=lambda y: np.where(y <= 0, np.maximum(-1.0, y), INF),
    )


def _equality_indicator(alpha=None) -> Entropy:
    return Entropy(
        "equality_indicator", None, INF, domain=(1.0, 1.0),
        _f=lambda t: np.where(t == 1, 0.0, INF).astype(t.dtype),
        _conj=lambda y: y,
        _prox=lambda lam, x: np.ones_like(x),
    )


def _zero(alpha=None) -> Entropy:
    return Entropy(
        "zero", None, 0.0, unique_minimizer=False,
        _f=np.zeros_like,
        _df=np.zeros_like,
        _conj=lambda y: np.where(y <= 0, 0.0, INF),
        _prox=lambda lam, x: _pos(x),
    )


_BUILDERS: dict[str, tuple[Callable, bool]] = {
    "tsallis": (_tsallis, True),
    "power": (_power, True),
    "kl": (_kl, False),
    "burg": (_burg, False),
    "jeffreys": (_jeffreys, False),
    "jensen_shannon": (_jensen_shannon, False),
    "lindsay": (_lindsay, True),
    "matusita": (_matusita, True),
    "total_variation": (_total_variation, False),
    "marton": (_marton, False),
    "hockey_stick": (_hockey_stick, False),
    "equality_indicator": (_equality_indicator, False),
    "zero": (_zero, False),
}

NAMES = tuple(_BUILDERS)


def entropy(name: str, alpha: Optional[float] = None) -> Entropy:
    """Build a catalog entropy by name.

    Parametrised families (tsallis, power, lindsay, matusita) require
    ``alpha``; ``tsallis`` with ``alpha == 1`` is the KL entropy.
    """
    try:
        build, needs_alpha = _BUILDERS[name]
    except KeyError:
        raise EntropyError(f"unknown entropy {name!r}; choose from {', '.join(NAMES)}") from None
    if needs_alpha:
        if alpha is None:
            raise EntropyError(f"entropy {name!r} requires alpha")
        return build(float(alpha))
    return build()
