"""Convex functions on [0, inf) vanishing at 0.

Every closed-form family exposes its right derivative and its slope measure
(atoms plus a density), so that

    f(y) = f'_+(0) y + sum_atoms m * f_t(y) + int rho(t) f_t(y) dt

can be checked numerically.  Functions whose right derivative at 0 is -inf
(or which jump at 0) must go through ``regularize`` first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import (
    ConfigError,
    InternalCrossCheckFailed,
    NegativeThreshold,
    NotConvex,
    ToleranceNotMet,
    UnboundedRightDerivativeAtZero,
)
from .piecewise import adaptive_gl, gl_mean, level_measure, power_mean

_ZERO_ERR = 0.0


def ft_mean(y0, y1, t):
    """Mean of ``max(y - t, 0)`` along linear segments ``y0 -> y1``."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    lo = np.minimum(y0, y1)
    hi = np.maximum(y0, y1)
    out = np.where(lo >= t, (lo + hi) / 2 - t, 0.0)
    cross = (lo < t) & (hi > t)
    if np.any(cross):
        h, l_ = hi[cross], lo[cross]
        out = out.copy()
        out[cross] = (h - t) ** 2 / (2 * (h - l_))
    return out


class ConvexFn:
    """Base class; subclasses define ``__call__`` and ``linear_mean``."""

    right_derivative_at_0: float = 0.0

    def __call__(self, y):
        raise NotImplementedError

    def linear_mean(self, y0, y1, tol=1e-10):
        raise NotImplementedError

    def right_derivative(self, y):
        raise NotImplementedError

    def slope_parts(self):
        """``(atoms, density, density_lo, singular_exponent)`` of the slope measure."""
        raise NotImplementedError

    def spec(self) -> str:
        return repr(self)


@dataclass(frozen=True)
class Ft(ConvexFn):
    """The hinge ``y -> max(y - t, 0)``."""

    t: float

    def __post_init__(self):
        if self.t < 0:
            raise NegativeThreshold(f"threshold must be >= 0, got {self.t}")

    @property
    def right_derivative_at_0(self):
        return 1.0 if self.t == 0 else 0.0

    def __call__(self, y):
        return np.maximum(np.asarray(y, dtype=float) - self.t, 0.0)

    def linear_mean(self, y0, y1, tol=1e-10):
        return ft_mean(y0, y1, self.t), _ZERO_ERR

    def right_derivative(self, y):
        return np.where(np.asarray(y, dtype=float) >= self.t, 1.0, 0.0)

    def slope_parts(self):
        if self.t == 0:
            return [], None, 0.0, 0.0
        return [(self.t, 1.0)], None, 0.0, 0.0

    def spec(self):
        return f"ft:{self.t:g}"


def make_ft(t: float) -> Ft:
    return Ft(float(t))


@dataclass(frozen=True)
class Power(ConvexFn):
    """``sign * y**q``: ``q >= 1`` for sign +1, ``0 < q <= 1`` for sign -1."""

    q: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.sign == 1 and not self.q >= 1:
            raise NotConvex(f"y**{self.q} is not convex")
        if self.sign == -1 and not 0 < self.q <= 1:
            raise NotConvex(f"-y**{self.q} is not convex")

    @property
    def right_derivative_at_0(self):
        if self.q == 1:
            return float(self.sign)
        return 0.0 if self.sign == 1 else -math.inf

    def __call__(self, y):
        return self.sign * np.asarray(y, dtype=float) ** self.q

    def linear_mean(self, y0, y1, tol=1e-10):
        return self.sign * power_mean(y0, y1, self.q), _ZERO_ERR

    def right_derivative(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return self.sign * self.q * y ** (self.q - 1)

    def slope_parts(self):
        q = self.q
        if q == 1:
            return [], None, 0.0, 0.0
        c = self.sign * q * (q - 1)
        return [], (lambda t: c * np.asarray(t, dtype=float) ** (q - 2)), 0.0, q - 2

    def spec(self):
        return f"pow:{self.q:g}" if self.sign == 1 else f"negpow:{self.q:g}"


@dataclass(frozen=True)
class PiecewiseLinearConvex(ConvexFn):
    """Slopes ``slopes[0]`` on ``[0, knots[0]]``, ``slopes[i]`` after ``knots[i-1]``."""

    knots: tuple
    slopes: tuple

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float)
        s = np.asarray(self.slopes, dtype=float)
        if s.size != k.size + 1:
            raise ValueError("need one more slope than knots")
        if k.size and (k[0] <= 0 or np.any(np.diff(k) <= 0)):
            raise ValueError("knots must be positive and strictly increasing")
        if np.any(np.diff(s) < 0):
            raise NotConvex("slopes must be nondecreasing")
        object.__setattr__(self, "knots", tuple(float(v) for v in k))
        object.__setattr__(self, "slopes", tuple(float(v) for v in s))

    @property
    def jumps(self):
        return np.diff(self.slopes)

    @property
    def right_derivative_at_0(self):
        return self.slopes[0]

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = self.slopes[0] * y
        for k, j in zip(self.knots, self.jumps):
            out = out + j * np.maximum(y - k, 0.0)
        return out

    def linear_mean(self, y0, y1, tol=1e-10):
        y0 = np.asarray(y0, dtype=float)
        y1 = np.asarray(y1, dtype=float)
        out = self.slopes[0] * (y0 + y1) / 2
        for k, j in zip(self.knots, self.jumps):
            out = out + j * ft_mean(y0, y1, k)
        return out, _ZERO_ERR

    def right_derivative(self, y):
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(np.asarray(self.knots), y, side="right")
        return np.asarray(self.slopes)[idx]

    def slope_parts(self):
        atoms = [(k, j) for k, j in zip(self.knots, self.jumps) if j != 0]
        return atoms, None, 0.0, 0.0

    def spec(self):
        ks = ",".join(f"{k:g}" for k in self.knots)
        ss = ",".join(f"{s:g}" for s in self.slopes)
        return f"plin:{ks}:{ss}"


class NegIndicatorPositive(ConvexFn):
    """``f(0) = 0`` and ``f(y) = -1`` for ``y > 0``; integrals are minus support measures."""

    right_derivative_at_0 = -math.inf

    def __call__(self, y):
        return np.where(np.asarray(y, dtype=float) > 0, -1.0, 0.0)

    def integrate_piecewise(self, psi):
        return -level_measure(psi, 0.0)

    def linear_mean(self, y0, y1, tol=1e-10):
        y0 = np.asarray(y0, dtype=float)
        y1 = np.asarray(y1, dtype=float)
        return np.where((y0 > 0) | (y1 > 0), -1.0, 0.0), _ZERO_ERR

    def right_derivative(self, y):
        return np.zeros_like(np.asarray(y, dtype=float))

    def slope_parts(self):
        raise UnboundedRightDerivativeAtZero("step function is discontinuous at 0; regularize first")

    def spec(self):
        return "step"

    def __repr__(self):
        return "NegIndicatorPositive()"

    def __eq__(self, other):
        return isinstance(other, NegIndicatorPositive)

    def __hash__(self):
        return hash("NegIndicatorPositive")


@dataclass(frozen=True)
class Custom(ConvexFn):
    """Black-box convex function, validated on a grid over ``[0, y_max]``."""

    func: Callable
    y_max: float
    resolution: int = 200
    rd0: float | None = None
    label: str = "custom"

    def __post_init__(self):
        if abs(float(self.func(0.0))) > 1e-14:
            raise NotConvex("custom function must satisfy f(0) = 0")
        y = np.linspace(0.0, self.y_max, self.resolution + 1)
        fy = np.array([float(self.func(v)) for v in y])
        mid = np.array([[float(self.func((a + b) / 2)) for b in y[::4]] for a in y[::4]])
        sub = fy[::4]
        if np.any(mid > (sub[:, None] + sub[None, :]) / 2 + 1e-12):
            raise NotConvex(f"{self.label} fails midpoint convexity on the grid")

    @property
    def right_derivative_at_0(self):
        if self.rd0 is not None:
            return self.rd0
        h = self.y_max / self.resolution / 64
        f = self.func
        return (-3 * f(0.0) + 4 * f(h) - f(2 * h)) / (2 * h)

    def __call__(self, y):
        return np.vectorize(lambda v: float(self.func(v)), otypes=[float])(y)

    def linear_mean(self, y0, y1, tol=1e-10):
        y0 = np.atleast_1d(np.asarray(y0, dtype=float))
        y1 = np.atleast_1d(np.asarray(y1, dtype=float))
        means = np.empty(y0.shape)
        errs = np.zeros(y0.shape)
        for i, (a, b) in enumerate(zip(y0, y1)):
            if a == b:
                means[i] = float(self.func(a))
                continue
            lo, hi = min(a, b), max(a, b)
            val, err = adaptive_gl(self, lo, hi, tol * (hi - lo))
            means[i] = val / (hi - lo)
            errs[i] = err / (hi - lo)
        return means, errs

    def right_derivative(self, y):
        h = self.y_max / self.resolution / 64
        y = np.asarray(y, dtype=float)
        return (self(y + h) - self(y)) / h

    def grid_slopes(self):
        """Chord slopes of the interpolant on the validation grid."""
        y = np.linspace(0.0, self.y_max, self.resolution + 1)
        return y, np.diff(self(y)) / np.diff(y)

    def slope_parts(self):
        # the slope measure of the grid interpolant: one atom per interior node
        y, s = self.grid_slopes()
        masses = np.maximum(np.diff(s), 0.0)  # rounding can leave tiny negative jumps
        atoms = [(float(t), float(m)) for t, m in zip(y[1:-1], masses) if m > 0]
        return atoms, None, 0.0, 0.0

    def spec(self):
        return self.label


@dataclass(frozen=True)
class Regularized(ConvexFn):
    """``n f(1/n) y`` on ``[0, 1/n]`` and ``f`` beyond."""

    inner: ConvexFn
    n: int

    @property
    def corner(self) -> float:
        return 1.0 / self.n

    @property
    def slope0(self) -> float:
        return self.n * float(self.inner(self.corner))

    @property
    def right_derivative_at_0(self):
        return self.slope0

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y <= self.corner, self.slope0 * y, self.inner(np.maximum(y, self.corner)))

    def linear_mean(self, y0, y1, tol=1e-10):
        y0 = np.asarray(y0, dtype=float)
        y1 = np.asarray(y1, dtype=float)
        lo = np.minimum(y0, y1)
        hi = np.maximum(y0, y1)
        c = self.corner
        # split each segment at the corner; both parts have exact means
        a_hi = np.minimum(hi, c)
        b_lo = np.maximum(lo, c)
        w_lin = np.clip(a_hi - lo, 0.0, None)
        w_in = np.clip(hi - b_lo, 0.0, None)
        lin_mean = self.slope0 * (lo + a_hi) / 2
        in_mean, in_err = self.inner.linear_mean(b_lo, np.maximum(hi, c), tol)
        total = w_lin + w_in
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(total > 0, (w_lin * lin_mean + w_in * in_mean) / np.where(total > 0, total, 1.0),
                            self(lo))
        return mean, in_err

    def right_derivative(self, y):
        y = np.asarray(y, dtype=float)
        return np.where(y < self.corner, self.slope0, self.inner.right_derivative(np.maximum(y, self.corner)))

    def slope_parts(self):
        c = self.corner
        jump = float(self.inner.right_derivative(c)) - self.slope0
        try:
            atoms, density, lo, _ = self.inner.slope_parts()
        except UnboundedRightDerivativeAtZero:
            atoms, density = [], None
            if not isinstance(self.inner, NegIndicatorPositive):
                atoms, density = _tail_parts(self.inner)
        atoms = [(c, jump)] + [(t, m) for t, m in atoms if t > c]
        return atoms, density, c, 0.0

    def spec(self):
        return f"reg({self.inner.spec()},{self.n})"


def _tail_parts(f):
    """Slope parts of ``f`` away from 0 for families that are singular only at 0."""
    if isinstance(f, Power):
        q, s = f.q, f.sign
        c = s * q * (q - 1)
        return [], (lambda t: c * np.asarray(t, dtype=float) ** (q - 2))
    if isinstance(f, Regularized):
        atoms, density, _, _ = f.slope_parts()
        return atoms, density
    raise UnboundedRightDerivativeAtZero(f"no tail decomposition for {f.spec()}")


def regularize(f: ConvexFn, n: int) -> Regularized:
    if n < 1:
        raise ValueError("n must be a positive integer")
    return Regularized(f, int(n))


@dataclass(frozen=True)
class SlopeMeasure:
    atoms: tuple
    density: Callable | None
    base_slope: float
    density_lo: float = 0.0
    singular_exponent: float = 0.0
    error_bound: float = 0.0

    def mass(self, t1: float, t2: float, tol: float = 1e-10) -> float:
        """``nu((t1, t2])``."""
        m = sum(w for t, w in self.atoms if t1 < t <= t2)
        if self.density is not None:
            lo = max(t1, self.density_lo)
            if t2 > lo and lo == 0.0:
                # same substitution as in reconstruct: t = t2 s^k tames t^a at 0
                k = max(1, math.ceil(2 / (self.singular_exponent + 1)))
                rho = self.density
                m += adaptive_gl(lambda s: rho(t2 * s ** k) * t2 * k * s ** (k - 1), 0.0, 1.0, tol)[0]
            elif t2 > lo:
                m += adaptive_gl(self.density, lo, t2, tol)[0]
        return m


def decompose(f: ConvexFn) -> SlopeMeasure:
    if f.right_derivative_at_0 == -math.inf:
        raise UnboundedRightDerivativeAtZero(f"{f.spec()} has f'_+(0) = -inf; use regularize")
    atoms, density, lo, sing = f.slope_parts()
    base, err = float(f.right_derivative_at_0), 0.0
    if isinstance(f, Custom):
        # exact for the grid interpolant; its distance to f is the reported bound
        y, s = f.grid_slopes()
        h = f.y_max / f.resolution
        base = float(s[0])
        err = h * max((m for _, m in atoms), default=0.0) / 8 + 1e-12
    return SlopeMeasure(tuple(atoms), density, base, lo, sing, err)


def reconstruct(sm: SlopeMeasure, y: float, tol: float = 1e-11) -> float:
    """``f'_+(0) y + int f_t(y) dnu(t)`` evaluated from the slope measure."""
    if y < 0:
        raise ValueError("y must be >= 0")
    val = sm.base_slope * y + sum(m * max(y - t, 0.0) for t, m in sm.atoms)
    if sm.density is not None and y > sm.density_lo:
        rho = sm.density
        if sm.density_lo == 0.0:
            # t = y s^k removes an integrable t^a singularity at 0
            k = max(1, math.ceil(2 / (sm.singular_exponent + 1)))

            def integrand(s):
                t = y * s ** k
                return (y - t) * rho(t) * y * k * s ** (k - 1)

            part, err = adaptive_gl(integrand, 0.0, 1.0, tol)
        else:
            part, err = adaptive_gl(lambda t: (y - t) * rho(t), sm.density_lo, y, tol)
        if err > max(tol, 1e-12 * abs(part)) * 10:
            raise ToleranceNotMet(f"reconstruction error {err:.3g}", achieved=err)
        val += part
    return float(val)


def ft_integral_bound(T, alpha, weights):
    """Both sides of ``f_t(sum w alpha) <= sum w f_{T}(alpha)`` with ``t = sum w T``."""
    T = np.asarray(T, dtype=float)
    a = np.asarray(alpha, dtype=float)
    w = np.asarray(weights, dtype=float)
    if not (T.shape == a.shape == w.shape):
        raise ValueError("T, alpha and weights must have equal lengths")
    t = float(np.sum(w * T))
    lhs = max(float(np.sum(w * a)) - t, 0.0)
    rhs = float(np.sum(w * np.maximum(a - T, 0.0)))
    if np.all(T <= a):
        scale = float(np.sum(np.abs(w * a)) + np.sum(np.abs(w * T))) + 1.0
        if abs(lhs - rhs) > 1e-12 * scale:
            raise InternalCrossCheckFailed(f"equality case violated: {lhs} vs {rhs}")
    return lhs, rhs


@dataclass(frozen=True)
class SignCase:
    """Sign structure of a convex ``f`` on ``[0, y_max]``."""

    kind: str  # "nonnegative", "decreasing", "non-monotone"
    t: float | None = None
    t_prime: float | None = None


def classify_sign(f: ConvexFn, y_max: float, grid: int = 512, tol: float = 1e-12) -> SignCase:
    """Find ``t`` with ``f(t) < 0`` and, by bisection, the zero ``t' > t``."""
    y = np.linspace(0.0, y_max, grid + 1)[1:]
    fy = np.asarray(f(y), dtype=float)
    neg = np.flatnonzero(fy < 0)
    if neg.size == 0:
        return SignCase("nonnegative")
    i = int(neg[np.argmin(fy[neg])])
    t = float(y[i])
    if float(f(y_max)) <= 0:
        return SignCase("decreasing", t=t)
    lo, hi = t, y_max
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if float(f(mid)) < 0:
            lo = mid
        else:
            hi = mid
    return SignCase("non-monotone", t=t, t_prime=hi)


def zero_crossing_bound(f: ConvexFn, t: float, t_prime: float, y):
    """Right-hand side of ``y <= t max(-f(y),0)/(-f(t)) + t' f_t(y)/(t' - t)``."""
    y = np.asarray(y, dtype=float)
    ft = np.maximum(y - t, 0.0)
    return t * np.maximum(-np.asarray(f(y), dtype=float), 0.0) / (-float(f(t))) + t_prime * ft / (t_prime - t)


def _num(s: str) -> float:
    return float(Fraction(s.strip()))


def parse_convex(spec: str) -> ConvexFn:
    """Parse ``ft:t``, ``pow:q``, ``negpow:q``, ``plin:k1,k2:s0,s1,s2`` or ``step``."""
    parts = spec.strip().split(":")
    head = parts[0].lower()
    try:
        if head == "ft" and len(parts) == 2:
            return make_ft(_num(parts[1]))
        if head == "pow" and len(parts) == 2:
            return Power(_num(parts[1]), 1)
        if head == "negpow" and len(parts) == 2:
            return Power(_num(parts[1]), -1)
        if head == "plin" and len(parts) == 3:
            knots = [_num(v) for v in parts[1].split(",") if v.strip()]
            slopes = [_num(v) for v in parts[2].split(",")]
            return PiecewiseLinearConvex(tuple(knots), tuple(slopes))
        if head == "step" and len(parts) == 1:
            return NegIndicatorPositive()
    except (ValueError, ZeroDivisionError, NotConvex, NegativeThreshold) as exc:
        raise ConfigError(f"bad convex function spec {spec!r}: {exc}") from exc
    raise ConfigError(f"bad convex function spec {spec!r}")
