"""Group carriers with Haar measure, and convolution on them.

A carrier is either a discretisation of a continuous unimodular group
(``RealLineGrid``, ``CircleGrid``) or a finite group used as itself
(``CyclicGroup``, ``FiniteGroup``, ``ProductGroup``).  Elements of finite
carriers are indexed ``0..n-1`` with ``0`` the identity.

``declared_m`` is the infimum of volumes of open subgroups of the group being
*modelled*: ``inf`` for the real line, the total measure for the circle and
the cell mass for discrete groups.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    CarrierMismatch,
    NonAbelianCarrier,
    NonGroupTable,
    NonPositiveMeasure,
    UnsupportedCarrier,
)

REAL_LINE = "RealLineGrid"
CIRCLE = "CircleGrid"
CYCLIC = "CyclicGroup"
FINITE = "FiniteGroup"
PRODUCT = "ProductGroup"

KINDS = (REAL_LINE, CIRCLE, CYCLIC, FINITE, PRODUCT)
CONTINUOUS_KINDS = (REAL_LINE, CIRCLE)

_ALIASES = {
    "reallinegrid": REAL_LINE,
    "realline": REAL_LINE,
    "real": REAL_LINE,
    "circlegrid": CIRCLE,
    "circle": CIRCLE,
    "cyclicgroup": CYCLIC,
    "cyclic": CYCLIC,
    "finitegroup": FINITE,
    "finite": FINITE,
    "productgroup": PRODUCT,
    "product": PRODUCT,
}


@dataclass(frozen=True, eq=False)
class GroupCarrier:
    kind: str
    cell_measure: float
    size: int
    declared_m: float
    name: str
    mult_table: np.ndarray | None = field(default=None, repr=False)
    halfwidth: float | None = None

    @property
    def total_measure(self) -> float:
        return self.size * self.cell_measure

    @property
    def is_continuous_model(self) -> bool:
        return self.kind in CONTINUOUS_KINDS

    @property
    def is_cyclic(self) -> bool:
        return self.kind in (CYCLIC, CIRCLE)

    @cached_property
    def table(self) -> np.ndarray:
        if self.mult_table is not None:
            return self.mult_table
        if self.is_cyclic:
            i = np.arange(self.size)
            return (i[:, None] + i[None, :]) % self.size
        raise UnsupportedCarrier(f"{self.name} has no multiplication table")

    @cached_property
    def inverse(self) -> np.ndarray:
        if self.is_cyclic:
            return (-np.arange(self.size)) % self.size
        return np.argmax(self.table == 0, axis=1)

    @cached_property
    def is_abelian(self) -> bool:
        if self.is_cyclic:
            return True
        t = self.table
        return bool(np.array_equal(t, t.T))

    def cell_edges(self) -> np.ndarray:
        """Cell boundaries of a real-line grid (``size + 1`` points)."""
        if self.kind != REAL_LINE:
            raise UnsupportedCarrier("cell edges exist only on RealLineGrid")
        return -self.halfwidth + self.cell_measure * np.arange(self.size + 1)

    def same_as(self, other: "GroupCarrier") -> bool:
        if self is other:
            return True
        if (self.kind, self.size) != (other.kind, other.size):
            return False
        if not math.isclose(self.cell_measure, other.cell_measure, rel_tol=1e-15):
            return False
        if self.kind == REAL_LINE and self.halfwidth != other.halfwidth:
            return False
        if self.mult_table is not None or other.mult_table is not None:
            return np.array_equal(self.table, other.table)
        return True

    def describe(self) -> str:
        return self.name


def _validate_table(table: np.ndarray) -> None:
    n = table.shape[0]
    if table.ndim != 2 or table.shape != (n, n) or n < 1:
        raise NonGroupTable(f"table must be square, got shape {table.shape}")
    if table.min() < 0 or table.max() >= n:
        raise NonGroupTable("table entries must be element indices 0..n-1")
    ar = np.arange(n)
    for a in range(n):
        if table[0, a] != a or table[a, 0] != a:
            raise NonGroupTable(f"element 0 is not a two-sided identity: failing triple (0, {a}, {table[0, a]})")
    for a in range(n):
        # every row and column a permutation <=> two-sided inverses (given identity)
        for line, side in ((table[a], "left"), (table[:, a], "right")):
            if not np.array_equal(np.sort(line), ar):
                seen = {}
                for b, v in enumerate(line):
                    if int(v) in seen:
                        raise NonGroupTable(
                            f"element {a} has no two-sided inverse ({side} products repeat): "
                            f"failing triple ({a}, {seen[int(v)]}, {b})")
                    seen[int(v)] = b
    left = table[table]                      # (a*b)*c
    right = table[ar[:, None, None], table[None, :, :]]  # a*(b*c)
    bad = np.argwhere(left != right)
    if bad.size:
        a, b, c = (int(v) for v in bad[0])
        raise NonGroupTable(f"associativity fails for triple ({a}, {b}, {c})")


def _finite(table, cell, name, kind=FINITE) -> GroupCarrier:
    table = np.asarray(table, dtype=np.int64)
    _validate_table(table)
    if not cell > 0:
        raise NonPositiveMeasure(f"cell measure must be positive, got {cell}")
    table.setflags(write=False)
    return GroupCarrier(kind, float(cell), table.shape[0], float(cell), name, table)


def cyclic(n: int, cell: float = 1.0) -> GroupCarrier:
    if n < 1:
        raise NonPositiveMeasure(f"cyclic group order must be >= 1, got {n}")
    if not cell > 0:
        raise NonPositiveMeasure(f"cell measure must be positive, got {cell}")
    return GroupCarrier(CYCLIC, float(cell), int(n), float(cell), f"Z/{n}")


def circle(n: int, total: float = 1.0) -> GroupCarrier:
    if n < 1:
        raise NonPositiveMeasure(f"circle grid needs n >= 1, got {n}")
    if not total > 0:
        raise NonPositiveMeasure(f"total measure must be positive, got {total}")
    return GroupCarrier(CIRCLE, total / n, int(n), float(total), f"CircleGrid(n={n},total={total:g})")


def real_line(halfwidth: float = 8.0, step: float = 1 / 64) -> GroupCarrier:
    if not (halfwidth > 0 and step > 0):
        raise NonPositiveMeasure("halfwidth and step must be positive")
    n = round(2 * halfwidth / step)
    if n < 1 or not math.isclose(n * step, 2 * halfwidth, rel_tol=1e-12):
        raise NonPositiveMeasure("2*halfwidth must be a multiple of step")
    return GroupCarrier(REAL_LINE, float(step), n, math.inf,
                        f"RealLineGrid(halfwidth={halfwidth:g},step={step:g})", halfwidth=float(halfwidth))


def dihedral(n: int, cell: float = 1.0) -> GroupCarrier:
    """Dihedral group of order 2n; element ``i + n*e`` is ``r^i s^e``."""
    size = 2 * n
    t = np.empty((size, size), dtype=np.int64)
    for x in range(size):
        i, a = x % n, x // n
        for y in range(size):
            j, b = y % n, y // n
            k = (i + (j if a == 0 else -j)) % n
            t[x, y] = k + n * ((a + b) % 2)
    return _finite(t, cell, f"D{n}")


def symmetric(k: int, cell: float = 1.0) -> GroupCarrier:
    if not 1 <= k <= 5:
        raise NonGroupTable("symmetric-group preset supports 1 <= k <= 5")
    perms = list(itertools.permutations(range(k)))
    index = {p: i for i, p in enumerate(perms)}
    t = np.array([[index[tuple(s[u] for u in r)] for r in perms] for s in perms])
    return _finite(t, cell, f"S{k}")


def quaternion8(cell: float = 1.0) -> GroupCarrier:
    # units 1, i, j, k and their products as (sign, unit)
    unit = {
        (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
        (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
        (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
        (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
    }
    elems = [(s, u) for u in range(4) for s in (1, -1)]  # 1, -1, i, -i, ...
    index = {e: i for i, e in enumerate(elems)}
    t = np.empty((8, 8), dtype=np.int64)
    for x, (s1, u1) in enumerate(elems):
        for y, (s2, u2) in enumerate(elems):
            s, u = unit[(u1, u2)]
            t[x, y] = index[(s1 * s2 * s, u)]
    return _finite(t, cell, "Q8")


def direct_product(*factors: GroupCarrier) -> GroupCarrier:
    if not factors:
        raise NonGroupTable("direct product needs at least one factor")
    for g in factors:
        if g.is_continuous_model:
            raise UnsupportedCarrier("direct products are built from discrete groups only")
    table = factors[0].table
    cell = factors[0].cell_measure
    for g in factors[1:]:
        m = g.size
        table = (table[:, None, :, None] * m + g.table[None, :, None, :]).reshape(
            table.shape[0] * m, table.shape[0] * m)
        cell *= g.cell_measure
    name = " x ".join(g.name for g in factors)
    return _finite(table, cell, name, kind=PRODUCT)


def parse_table(text: str) -> np.ndarray:
    """Parse the plain-text table format: ``n`` then ``n`` rows of ``n`` indices."""
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or len(lines[0]) != 1:
        raise NonGroupTable("first line must hold the group order n")
    n = int(lines[0][0])
    rows = lines[1:]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise NonGroupTable(f"expected {n} rows of {n} entries")
    return np.array([[int(v) for v in r] for r in rows], dtype=np.int64)


def load_table(path: str | Path, cell: float = 1.0) -> GroupCarrier:
    path = Path(path)
    return _finite(parse_table(path.read_text()), cell, path.stem)


def format_table(carrier: GroupCarrier) -> str:
    rows = [str(carrier.size)] + [" ".join(str(int(v)) for v in row) for row in carrier.table]
    return "\n".join(rows) + "\n"


_PRESETS = {"dihedral": dihedral, "symmetric": symmetric, "quaternion": quaternion8,
            "quaternion8": quaternion8, "cyclic": cyclic}


def make_carrier(kind: str, **params) -> GroupCarrier:
    """Build and validate a carrier.

    Parameters by kind: ``RealLineGrid(halfwidth, step)``, ``CircleGrid(n,
    total)``, ``CyclicGroup(n, cell)``, ``FiniteGroup(table=..., cell)`` or
    ``FiniteGroup(preset=name, n|k, cell)``, ``ProductGroup(factors=[...])``.
    """
    k = _ALIASES.get(kind.replace("_", "").replace("-", "").lower())
    if k is None:
        raise UnsupportedCarrier(f"unknown carrier kind {kind!r}")
    if k == REAL_LINE:
        return real_line(params.get("halfwidth", 8.0), params.get("step", 1 / 64))
    if k == CIRCLE:
        return circle(params["n"], params.get("total", 1.0))
    if k == CYCLIC:
        return cyclic(params["n"], params.get("cell", 1.0))
    if k == PRODUCT:
        return direct_product(*params["factors"])
    cell = params.get("cell", 1.0)
    if "table" in params:
        return _finite(params["table"], cell, params.get("name", "G"))
    preset = params.get("preset")
    if preset not in _PRESETS:
        raise UnsupportedCarrier(f"unknown finite-group preset {preset!r}")
    if preset in ("quaternion", "quaternion8"):
        return quaternion8(cell)
    order = params.get("n", params.get("k"))
    g = _PRESETS[preset](order, cell)
    if preset == "cyclic":  # cyclic preset as a table-backed FiniteGroup
        return _finite(g.table, cell, g.name)
    return g


@dataclass(frozen=True, eq=False)
class MeasuredFunction:
    """Nonnegative function on a carrier, one value per cell."""

    carrier: GroupCarrier
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.carrier.size,):
            raise CarrierMismatch(f"expected {self.carrier.size} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("values must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def cell_measure(self) -> float:
        return self.carrier.cell_measure

    def support_count(self) -> int:
        return int(np.count_nonzero(self.values))

    def l1(self) -> float:
        return float(np.sum(self.values) * self.cell_measure)

    def lp_norm(self, p: float) -> float:
        return float((np.sum(self.values ** p) * self.cell_measure) ** (1 / p))

    def scaled(self, c: float) -> "MeasuredFunction":
        return MeasuredFunction(self.carrier, self.values * c)

    def translate(self, h: int) -> "MeasuredFunction":
        """Left translate: ``g -> phi(h^{-1} g)``."""
        if self.carrier.kind == REAL_LINE:
            raise UnsupportedCarrier("use shifts of StepFunction on the real line")
        c = self.carrier
        return MeasuredFunction(c, self.values[c.table[c.inverse[h]]])

    def to_step(self):
        """The step function on R represented by a RealLineGrid function."""
        from .piecewise import StepFunction

        if self.carrier.kind != REAL_LINE:
            raise UnsupportedCarrier("only RealLineGrid functions live on R")
        return StepFunction(self.carrier.cell_edges(), self.values)


def _check_pair(phi1: MeasuredFunction, phi2: MeasuredFunction) -> GroupCarrier:
    if not phi1.carrier.same_as(phi2.carrier):
        raise CarrierMismatch(f"{phi1.carrier.name} vs {phi2.carrier.name}")
    return phi1.carrier


def convolve(phi1: MeasuredFunction, phi2: MeasuredFunction) -> MeasuredFunction:
    """Direct convolution ``sum_h phi1(h) phi2(h^{-1} g) * cell``.

    The inner sums run along a contiguous axis so numpy applies pairwise
    summation.  On ``CircleGrid`` the value at index ``m`` is the node value of
    the continuum convolution at position ``(m + 1) * cell``.
    """
    c = _check_pair(phi1, phi2)
    if c.kind == REAL_LINE:
        raise UnsupportedCarrier("RealLineGrid convolution goes through piecewise.conv_steps")
    n = c.size
    if c.is_cyclic:
        g = np.arange(n)
        idx = (g[:, None] - g[None, :]) % n
    else:
        idx = c.table[c.inverse[None, :], np.arange(n)[:, None]]  # idx[g, h] = h^{-1} g
    out = np.sum(phi2.values[idx] * phi1.values[None, :], axis=1) * c.cell_measure
    return MeasuredFunction(c, out)


def convolve_fft(phi1: MeasuredFunction, phi2: MeasuredFunction) -> MeasuredFunction:
    """Cyclic convolution through the real FFT.

    Round-off residue below ``1e-13 * max`` is set to zero so the result is a
    valid nonnegative function.
    """
    c = _check_pair(phi1, phi2)
    if not c.is_cyclic:
        if c.kind in (FINITE, PRODUCT) and not c.is_abelian:
            raise NonAbelianCarrier(f"{c.name} is not abelian")
        raise CarrierMismatch(f"FFT path needs a cyclic carrier, got {c.name}")
    n = c.size
    out = np.fft.irfft(np.fft.rfft(phi1.values) * np.fft.rfft(phi2.values), n) * c.cell_measure
    scale = float(out.max()) if out.size else 0.0
    out[out < 1e-13 * scale] = 0.0
    return MeasuredFunction(c, out)


def support_measure(phi) -> float:
    """Measure of ``{phi != 0}`` for a MeasuredFunction or a piecewise function."""
    if isinstance(phi, MeasuredFunction):
        return phi.support_count() * phi.cell_measure
    return phi.support_measure()


def hypothesis_holds(phi1, phi2, declared_m: float | None = None) -> bool:
    """Support condition ``mu(supp phi1) + mu(supp phi2) <= m(G)``."""
    if declared_m is None:
        if isinstance(phi1, MeasuredFunction):
            declared_m = _check_pair(phi1, phi2).declared_m
        else:
            declared_m = math.inf  # piecewise functions live on R
    return support_measure(phi1) + support_measure(phi2) <= declared_m
