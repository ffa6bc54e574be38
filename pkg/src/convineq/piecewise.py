"""Exact step and piecewise-linear functions on R.

Convolving two step functions gives a continuous piecewise-linear function;
composing that with a convex ``f`` and integrating reduces to one mean value
of ``f`` per linear piece.  Those means are computed in closed form where the
function class allows it and by adaptive Gauss-Legendre otherwise.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ToleranceNotMet

MERGE_RTOL = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_S = (_GL_NODES + 1) / 2
_GL_W = _GL_WEIGHTS / 2


def _merge_tol(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return MERGE_RTOL * max(float(x[-1] - x[0]), 1.0)


@dataclass(frozen=True, eq=False)
class StepFunction:
    """``values[i]`` on the open interval ``(breakpoints[i], breakpoints[i+1])``, 0 outside."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.size == 0 and v.size == 0:
            x, v = np.empty(0), np.empty(0)
        elif x.ndim != 1 or x.size != v.size + 1:
            raise ValueError("need len(breakpoints) == len(values) + 1")
        if v.size and (np.any(v < 0) or not np.all(np.isfinite(v))):
            raise ValueError("step values must be finite and >= 0")
        if x.size and np.any(np.diff(x) < 0):
            raise ValueError("breakpoints must be increasing")
        x, v = _normalize_steps(x, v)
        x.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", x)
        object.__setattr__(self, "values", v)

    @classmethod
    def indicator(cls, a: float, b: float, height: float = 1.0) -> "StepFunction":
        return cls([a, b], [height])

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls([], [])

    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_zero:
            return np.zeros_like(x)
        i = np.searchsorted(self.breakpoints, x, side="right") - 1
        inside = (i >= 0) & (i < self.values.size)
        return np.where(inside, self.values[np.clip(i, 0, self.values.size - 1)], 0.0)

    def support_measure(self) -> float:
        return float(np.sum(self.widths[self.values > 0]))

    def integral(self) -> float:
        return float(np.sum(self.widths * self.values))

    def max(self) -> float:
        return float(self.values.max()) if self.values.size else 0.0

    def scaled(self, c: float) -> "StepFunction":
        return StepFunction(self.breakpoints, self.values * c)

    def shifted(self, a: float) -> "StepFunction":
        return StepFunction(self.breakpoints + a, self.values)

    def reflected(self) -> "StepFunction":
        return StepFunction(-self.breakpoints[::-1], self.values[::-1])

    def csv_rows(self):
        x = self.breakpoints
        return [(float(x[i]), float(x[i + 1]), float(v)) for i, v in enumerate(self.values)]

    @classmethod
    def from_rows(cls, rows) -> "StepFunction":
        """Rebuild from ``(x_left, x_right, value)`` rows; gaps become zero pieces."""
        xs, vs = [], []
        for left, right, value in sorted((float(a), float(b), float(c)) for a, b, c in rows):
            if xs and left > xs[-1]:
                vs.append(0.0)
                xs.append(left)
            elif not xs:
                xs.append(left)
            vs.append(value)
            xs.append(right)
        return cls(xs, vs)


def _normalize_steps(x, v):
    if v.size == 0:
        return np.empty(0), np.empty(0)
    tol = _merge_tol(x)
    keep = np.diff(x) > tol
    x = np.concatenate([x[:-1][keep], x[-1:]])
    v = v[keep]
    if v.size == 0:
        return np.empty(0), np.empty(0)
    # merge equal neighbours
    change = np.concatenate([[True], v[1:] != v[:-1]])
    x = np.concatenate([x[:-1][change], x[-1:]])
    v = v[change]
    nz = np.flatnonzero(v > 0)
    if nz.size == 0:
        return np.empty(0), np.empty(0)
    lo, hi = nz[0], nz[-1]
    return x[lo:hi + 2].copy(), v[lo:hi + 1].copy()


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Linear interpolation through ``(xs[i], ys[i])``, 0 outside ``[xs[0], xs[-1]]``."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.xs, dtype=float)
        y = np.asarray(self.ys, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("xs and ys must be 1-d of equal length")
        if x.size and np.any(np.diff(x) < 0):
            raise ValueError("nodes must be sorted")
        if y.size and np.any(y < 0):
            raise ValueError("node values must be >= 0")
        if x.size > 1:
            keep = np.concatenate([[True], np.diff(x) > _merge_tol(x)])
            x, y = x[keep], y[keep]
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "xs", x)
        object.__setattr__(self, "ys", y)

    @classmethod
    def zero(cls) -> "PiecewiseLinear":
        return cls(np.empty(0), np.empty(0))

    @property
    def is_zero(self) -> bool:
        return self.xs.size == 0 or not np.any(self.ys > 0)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.xs.size < 2:
            return np.zeros_like(x)
        out = np.interp(x, self.xs, self.ys)
        return np.where((x < self.xs[0]) | (x > self.xs[-1]), 0.0, out)

    def segments(self):
        """Arrays ``(dx, y0, y1)`` over the linear pieces."""
        return np.diff(self.xs), self.ys[:-1], self.ys[1:]

    def integral(self) -> float:
        dx, y0, y1 = self.segments()
        return float(np.sum(dx * (y0 + y1)) / 2)

    def max(self) -> float:
        return float(self.ys.max()) if self.ys.size else 0.0

    def support_measure(self) -> float:
        return level_measure(self, 0.0)

    def __add__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        xs = np.union1d(self.xs, other.xs)
        return PiecewiseLinear(xs, self(xs) + other(xs))

    def scaled(self, c: float) -> "PiecewiseLinear":
        return PiecewiseLinear(self.xs, self.ys * c)

    def csv_rows(self):
        return [(float(a), float(b)) for a, b in zip(self.xs, self.ys)]

    @classmethod
    def from_rows(cls, rows) -> "PiecewiseLinear":
        pts = sorted((float(a), float(b)) for a, b in rows)
        return cls([p[0] for p in pts], [p[1] for p in pts])


def conv_steps(phi1: StepFunction, phi2: StepFunction) -> PiecewiseLinear:
    """Exact convolution of two step functions.

    The second derivative of ``phi1 * phi2`` is the sum of point masses
    ``jump1_i * jump2_j`` at ``x_i + y_j``; slopes and node values follow by
    accumulation.
    """
    if phi1.is_zero or phi2.is_zero:
        return PiecewiseLinear.zero()
    j1 = np.diff(np.concatenate([[0.0], phi1.values, [0.0]]))
    j2 = np.diff(np.concatenate([[0.0], phi2.values, [0.0]]))
    s = (phi1.breakpoints[:, None] + phi2.breakpoints[None, :]).ravel()
    w = (j1[:, None] * j2[None, :]).ravel()
    order = np.argsort(s, kind="stable")
    s, w = s[order], w[order]
    tol = _merge_tol(s)
    start = np.concatenate([[True], np.diff(s) > tol])
    group = np.cumsum(start) - 1
    nodes = s[start]
    kinks = np.bincount(group, weights=w)
    slopes = np.cumsum(kinks)[:-1]
    ys = np.concatenate([[0.0], np.cumsum(slopes * np.diff(nodes))])
    scale = max(float(np.abs(ys).max()), 1e-300)
    ys[np.abs(ys) < 64 * np.finfo(float).eps * scale] = 0.0
    ys[-1] = 0.0
    return PiecewiseLinear(nodes, np.maximum(ys, 0.0))


# ---------------------------------------------------------------------------
# means of f over a linear piece: (1/(y1-y0)) * int_{y0}^{y1} f(y) dy

def gl_mean(func, y0, y1) -> np.ndarray:
    """16-point Gauss-Legendre mean of ``func`` along segments ``y0 -> y1``."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    pts = y0[..., None] * (1 - _GL_S) + y1[..., None] * _GL_S
    return np.sum(func(pts) * _GL_W, axis=-1)


def power_mean(y0, y1, q: float) -> np.ndarray:
    """Mean of ``y**q`` along linear segments with nonnegative endpoints."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    lo = np.minimum(y0, y1)
    hi = np.maximum(y0, y1)
    if float(q).is_integer() and 0 <= q <= 12:
        k = int(q)
        # sum_{i} lo^i hi^(k-i) / (k+1): no cancellation for nonnegative inputs
        return sum(lo ** i * hi ** (k - i) for i in range(k + 1)) / (k + 1)
    out = np.zeros(np.broadcast(lo, hi).shape)
    near = lo >= 0.5 * hi
    far = ~near
    with np.errstate(divide="ignore", invalid="ignore"):
        out[far] = (hi[far] ** (q + 1) - lo[far] ** (q + 1)) / ((q + 1) * (hi[far] - lo[far]))
    if np.any(near):
        out[near] = gl_mean(lambda y: y ** q, lo[near], hi[near])
    return out


def adaptive_gl(func, a: float, b: float, tol: float = 1e-10, max_depth: int = 40, max_intervals: int = 4000):
    """Adaptive Gauss-Legendre on ``[a, b]``; returns ``(value, error_estimate)``.

    An interval is accepted when the 16-point rule and the sum over its two
    halves agree within the share of ``tol`` allotted to it, or when they
    differ only by rounding noise.  Once ``max_intervals`` have been split the
    remaining ones are accepted as they stand and their discrepancies are
    added to the error estimate, so callers see the shortfall.
    """
    def rule(lo, hi):
        x = lo + (hi - lo) * _GL_S
        return (hi - lo) * float(np.sum(np.asarray(func(x), dtype=float) * _GL_W))

    total, err = 0.0, 0.0
    stack = [(a, b, rule(a, b), 0)]
    splits = 0
    while stack:
        lo, hi, whole, depth = stack.pop()
        mid = (lo + hi) / 2
        left, right = rule(lo, mid), rule(mid, hi)
        diff = abs(left + right - whole)
        share = tol * (hi - lo) / max(b - a, 1e-300)
        noise = 64 * np.finfo(float).eps * (abs(left) + abs(right))
        if diff <= max(share, noise) or depth >= max_depth or splits >= max_intervals:
            total += left + right
            err += diff
        else:
            splits += 1
            stack.append((lo, mid, left, depth + 1))
            stack.append((mid, hi, right, depth + 1))
    return total, err


class _Power:
    """Bare ``y**p`` integrand used for L^p norms (no convexity requirement)."""

    def __init__(self, p):
        self.p = float(p)

    def __call__(self, y):
        return np.asarray(y, dtype=float) ** self.p

    def linear_mean(self, y0, y1, tol=1e-10):
        m = power_mean(y0, y1, self.p)
        return m, 0.0


def integrate_compose(f, psi, tol: float = 1e-10, return_error: bool = False):
    """``int_R f(psi(x)) dx`` for ``f(0) = 0`` and finitely supported ``psi``.

    ``f`` supplies ``__call__`` and ``linear_mean(y0, y1, tol) -> (means,
    errors)``; a function may instead provide ``integrate_piecewise(psi)`` to
    bypass per-segment means entirely.
    """
    custom = getattr(f, "integrate_piecewise", None)
    if custom is not None:
        value = float(custom(psi))
        err = 0.0
    elif isinstance(psi, StepFunction):
        terms = psi.widths * np.asarray(f(psi.values), dtype=float)
        value = float(np.sum(terms))
        err = float(np.sum(np.abs(terms))) * 8 * np.finfo(float).eps
    else:
        dx, y0, y1 = psi.segments()
        means, errs = f.linear_mean(y0, y1, tol)
        terms = dx * means
        value = float(np.sum(terms))
        err = float(np.sum(dx * errs)) + float(np.sum(np.abs(terms))) * 16 * np.finfo(float).eps
    if err > max(tol, 1e-12 * abs(value)):
        raise ToleranceNotMet(f"quadrature error {err:.3g} exceeds tolerance {tol:.3g}", achieved=err)
    return (value, err) if return_error else value


def lp_norm(psi, p: float) -> float:
    if not p > 0:
        raise ValueError("p must be positive")
    return integrate_compose(_Power(p), psi) ** (1 / p)


def level_measure(psi, t: float) -> float:
    """Lebesgue measure of ``{psi > t}``."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if isinstance(psi, StepFunction):
        return float(np.sum(psi.widths[psi.values > t]))
    dx, y0, y1 = psi.segments()
    hi = np.maximum(y0, y1)
    lo = np.minimum(y0, y1)
    full = lo > t
    part = (hi > t) & ~full
    frac = np.zeros_like(dx)
    frac[full] = 1.0
    frac[part] = (hi[part] - t) / (hi[part] - lo[part])
    return float(np.sum(dx * frac))


# ---------------------------------------------------------------------------
# CSV

def write_step_csv(path, phi: StepFunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_left", "x_right", "value"])
        w.writerows(phi.csv_rows())


def read_step_csv(path) -> StepFunction:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return StepFunction.from_rows(r for r in rows[1:] if r)


def write_pl_csv(path, psi: PiecewiseLinear) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        w.writerows(psi.csv_rows())


def read_pl_csv(path) -> PiecewiseLinear:
    with open(Path(path), newline="") as fh:
        rows = list(csv.reader(fh))
    return PiecewiseLinear.from_rows(r for r in rows[1:] if r)


def sup_distance(a, b) -> float:
    """Sup-norm distance of two piecewise-linear functions (exact at the union of nodes)."""
    xs = np.union1d(a.xs, b.xs)
    if xs.size == 0:
        return 0.0
    return float(np.max(np.abs(a(xs) - b(xs))))


def is_close(a: float, b: float, tol: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
