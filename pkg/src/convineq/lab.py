"""Verification engine for the convolution-rearrangement inequality.

    int_G f(phi1 * phi2) dg  <=  int_R f(phi1* * phi2*) dx

Left-hand sides are carrier specific.  Grid carriers of continuous groups
(``RealLineGrid``, ``CircleGrid``) carry step functions on their cells, so
their convolutions are continuous piecewise-linear functions and both sides
are integrated exactly; the only error is floating-point rounding.
Discrete carriers use the finite sum ``sum_g f(phi1 * phi2 (g)) * cell``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import groups
from .constants import C_of, as_exponent, q_of
from .convexity import (
    ConvexFn,
    NegIndicatorPositive,
    PiecewiseLinearConvex,
    Power,
    make_ft,
)
from .errors import InadmissibleExponents, InternalCrossCheckFailed, ParameterOutOfRange
from .groups import CIRCLE, REAL_LINE, GroupCarrier, MeasuredFunction
from .piecewise import (
    PiecewiseLinear,
    StepFunction,
    _Power,
    conv_steps,
    integrate_compose,
    lp_norm,
    sup_distance,
)
from .rearrange import layer_sum, rearranged_convolution

EPS = np.finfo(float).eps


@dataclass
class VerificationReport:
    lhs: float
    rhs: float
    hypothesis_ok: bool
    margin: float
    error_bound: float
    seed: int | None
    carrier: str
    f: str
    modeled_m: str = ""

    @property
    def violated(self) -> bool:
        return self.margin < -self.error_bound

    def to_dict(self) -> dict:
        d = asdict(self)
        d["violated"] = self.violated
        return d


def _carrier_of(phi1, phi2) -> GroupCarrier | None:
    if isinstance(phi1, MeasuredFunction):
        return groups._check_pair(phi1, phi2)
    return None


def _as_step(phi):
    return phi.to_step() if isinstance(phi, MeasuredFunction) else phi


def convolution_integral(phi1, phi2, f, tol: float = 1e-10):
    """``(int_G f(phi1 * phi2), error)`` on the carrier of the inputs."""
    carrier = _carrier_of(phi1, phi2)
    if carrier is None or carrier.kind == REAL_LINE:
        psi = conv_steps(_as_step(phi1), _as_step(phi2))
        return integrate_compose(f, psi, tol, return_error=True)
    if carrier.kind == CIRCLE:
        nodes = circle_nodes(phi1, phi2)
        means, errs = f.linear_mean(nodes, np.roll(nodes, -1), tol)
        terms = carrier.cell_measure * np.asarray(means)
        err = float(np.sum(carrier.cell_measure * np.asarray(errs)))
        return float(np.sum(terms)), err + float(np.sum(np.abs(terms))) * 16 * EPS
    values = groups.convolve(phi1, phi2).values
    terms = np.asarray(f(values), dtype=float) * carrier.cell_measure
    return float(np.sum(terms)), float(np.sum(np.abs(terms))) * 16 * EPS


def circle_nodes(phi1: MeasuredFunction, phi2: MeasuredFunction) -> np.ndarray:
    """Node values of the exact circle convolution at positions ``(m + 1) * cell``."""
    c = phi1.carrier
    conv = groups.convolve_fft if c.size > 256 else groups.convolve
    return conv(phi1, phi2).values


def rearranged_integral(phi1, phi2, f, tol: float = 1e-10, cross_check: bool = True):
    psi = rearranged_convolution(phi1, phi2, cross_check=cross_check)
    return integrate_compose(f, psi, tol, return_error=True)


def _describe_m(carrier) -> str:
    if carrier is None:
        return "m(R)=inf"
    return f"modeled m(G)={carrier.declared_m:g}"


def check_main(carrier, phi1, phi2, f: ConvexFn, tol: float = 1e-10, seed=None,
               cross_check: bool = True) -> VerificationReport:
    """Evaluate both sides of the main inequality for one pair."""
    if carrier is None:
        carrier = _carrier_of(phi1, phi2)
    lhs, e1 = convolution_integral(phi1, phi2, f, tol)
    rhs, e2 = rearranged_integral(phi1, phi2, f, tol, cross_check)
    ok = groups.hypothesis_holds(phi1, phi2, None if carrier is None else carrier.declared_m)
    bound = e1 + e2 + 1e-12 * (1.0 + abs(lhs) + abs(rhs))
    return VerificationReport(
        lhs=lhs, rhs=rhs, hypothesis_ok=bool(ok), margin=rhs - lhs, error_bound=float(bound), seed=seed,
        carrier="R" if carrier is None else carrier.name, f=f.spec(), modeled_m=_describe_m(carrier))


def check_ft_indicator(a: float, b: float, t: float):
    """``((a-t)(b-t) or 0, exact int f_t(1_A* * 1_B*))`` for ``0 < a <= b``."""
    if not (0 < a <= b and t >= 0):
        raise ParameterOutOfRange("need 0 < a <= b and t >= 0")
    psi = conv_steps(StepFunction.indicator(-a / 2, a / 2), StepFunction.indicator(-b / 2, b / 2))
    exact = integrate_compose(make_ft(t), psi)
    closed = (a - t) * (b - t) if t <= a else 0.0
    if abs(exact - closed) > 1e-12 * max(1.0, a * b):
        raise InternalCrossCheckFailed(f"indicator identity: pipeline {exact!r} vs closed form {closed!r}")
    return closed, exact


# ---------------------------------------------------------------------------
# Young and reverse Young

@dataclass
class YoungReport:
    P: tuple
    q: float
    C: float
    conv_norm: float
    rearranged_norm: float
    norms: tuple
    hypothesis_ok: bool
    holds: bool

    @property
    def ratio(self) -> float:
        return self.conv_norm / (self.norms[0] * self.norms[1])

    @property
    def rearranged_ratio(self) -> float:
        return self.rearranged_norm / (self.norms[0] * self.norms[1])


def _norm(phi, p: float) -> float:
    if isinstance(phi, MeasuredFunction):
        return phi.lp_norm(p)
    return lp_norm(phi, p)


def conv_norm(phi1, phi2, p: float) -> float:
    """``||phi1 * phi2||_p`` on the carrier of the inputs."""
    val, _ = convolution_integral(phi1, phi2, _Power(p))
    return max(val, 0.0) ** (1 / p)


def rearranged_conv_norm(phi1, phi2, p: float, cross_check: bool = True) -> float:
    psi = rearranged_convolution(phi1, phi2, cross_check=cross_check)
    return lp_norm(psi, p)


def _exponents(P, regime):
    P = tuple(as_exponent(p) for p in P)
    if len(P) != 2:
        raise InadmissibleExponents("expected two exponents")
    if regime == "young" and not all(p > 1 for p in P):
        raise InadmissibleExponents(f"Young regime needs p1, p2 > 1, got {P}")
    if regime == "reverse" and not all(0 < p < 1 for p in P):
        raise InadmissibleExponents(f"reverse regime needs 0 < p1, p2 < 1, got {P}")
    return P, float(q_of(P)), C_of(P)


def check_young(phi1, phi2, P, tol: float = 1e-9) -> YoungReport:
    """``||phi1*phi2||_q <= ||phi1* * phi2*||_q <= C(P) ||phi1||_p1 ||phi2||_p2``."""
    P, q, C = _exponents(P, "young")
    n = (_norm(phi1, float(P[0])), _norm(phi2, float(P[1])))
    cn = conv_norm(phi1, phi2, q)
    rn = rearranged_conv_norm(phi1, phi2, q)
    ok = groups.hypothesis_holds(phi1, phi2)
    scale = max(1.0, rn)
    holds = cn <= rn + tol * scale and rn <= C * n[0] * n[1] + tol * scale
    return YoungReport(P, q, C, cn, rn, n, bool(ok), bool(holds))


def check_reverse_young(phi1, phi2, P, tol: float = 1e-9) -> YoungReport:
    """``||phi1*phi2||_q >= ||phi1* * phi2*||_q >= C(P) ||phi1||_p1 ||phi2||_p2``.

    ``holds`` also requires the normalised bound ``ratio >= 1``, which needs no
    support hypothesis.
    """
    P, q, C = _exponents(P, "reverse")
    n = (_norm(phi1, float(P[0])), _norm(phi2, float(P[1])))
    cn = conv_norm(phi1, phi2, q)
    rn = rearranged_conv_norm(phi1, phi2, q)
    ok = groups.hypothesis_holds(phi1, phi2)
    scale = max(1.0, rn)
    unit = cn / (n[0] * n[1]) >= 1 - tol
    sharp = cn >= rn - tol * scale and rn >= C * n[0] * n[1] - tol * scale
    return YoungReport(P, q, C, cn, rn, n, bool(ok), bool(unit and (sharp or not ok)))


def reverse_young_bruteforce(n: int = 6, levels=(0, 1, 2), P=(Fraction(1, 2), Fraction(1, 2))) -> float:
    """Minimum of ``||phi1 * phi2||_q / (||phi1||_p1 ||phi2||_p2)`` over all level-valued pairs on Z/n."""
    P, q, _ = _exponents(P, "reverse")
    p1, p2 = float(P[0]), float(P[1])
    grids = np.array(np.meshgrid(*[levels] * n, indexing="ij"), dtype=float).reshape(n, -1).T
    grids = grids[grids.sum(axis=1) > 0]
    F = np.fft.rfft(grids, axis=1)
    n1 = np.sum(grids ** p1, axis=1) ** (1 / p1)
    n2 = np.sum(grids ** p2, axis=1) ** (1 / p2)
    best = math.inf
    for i in range(grids.shape[0]):
        conv = np.fft.irfft(F[i][None, :] * F, n, axis=1)
        conv = np.where(conv < 1e-12, 0.0, conv)  # exact integer sums; drop FFT residue
        conv = np.rint(conv)
        norms = np.sum(conv ** q, axis=1) ** (1 / q)
        best = min(best, float(np.min(norms / (n1[i] * n2))))
    return best


# ---------------------------------------------------------------------------
# the convexity-necessity family

def section4_inputs(lam, y1, y2):
    """``(phi1, phi2)`` as ``(breakpoints, values)`` lists; exact for Fraction input."""
    one = type(lam)(1) if isinstance(lam, Fraction) else 1.0
    half = one / 2
    x2 = [-5 * one, -3 * one, -1 - 2 * lam, -one, one, 1 + 2 * lam, 3 * one, 5 * one]
    v2 = [y1, y2, y1, y2, y1, y2, y1]
    return ([-one, one], [half]), (x2, v2)


def section4_rearranged_input(lam, y1, y2):
    one = type(lam)(1) if isinstance(lam, Fraction) else 1.0
    return [-5 * one, 2 * lam - 3, 3 - 2 * lam, 5 * one], [y1, y2, y1]


def section4_closed(lam, y1, y2):
    """Node lists ``(conv, rearranged_conv)`` of the closed-form piecewise displays."""
    one = type(lam)(1) if isinstance(lam, Fraction) else 1.0
    mid = lam * y1 + (1 - lam) * y2
    conv = [(-6 * one, 0 * one), (-4 * one, y1), (-2 - 2 * lam, mid), (-2 * lam, mid), (0 * one, y2),
            (2 * lam, mid), (2 + 2 * lam, mid), (4 * one, y1), (6 * one, 0 * one)]
    rear = [(-6 * one, 0 * one), (-4 * one, y1), (2 * lam - 4, y1), (2 * lam - 2, y2),
            (2 - 2 * lam, y2), (4 - 2 * lam, y1), (4 * one, y1), (6 * one, 0 * one)]
    return _dedupe(conv), _dedupe(rear)


def _dedupe(nodes):
    out = []
    for x, y in nodes:
        if out and out[-1][0] == x:
            continue
        out.append((x, y))
    return out


@dataclass
class Section4Result:
    conv: PiecewiseLinear
    rearr_conv: PiecewiseLinear
    conv_closed: PiecewiseLinear
    rearr_closed: PiecewiseLinear
    gap: float
    gap_expected: float
    pipeline_error: float


def jensen_gap(f, lam, y1, y2) -> float:
    return float(lam * f(y1) + (1 - lam) * f(y2) - f(lam * y1 + (1 - lam) * y2))


def section4_family(lam, y1, y2, f, gap_tol: float = 1e-9, pipe_tol: float = 1e-12) -> Section4Result:
    """Closed forms and generic pipeline for the two-level counterexample family.

    ``f`` may be any callable with ``f(0) = 0`` exposing ``linear_mean``; it need
    not be convex (non-convex ``f`` makes the gap negative).
    """
    if not (0 <= lam <= 1 and 0 <= y1 <= y2):
        raise ParameterOutOfRange(f"need 0 <= lambda <= 1 and 0 <= y1 <= y2, got {lam}, {y1}, {y2}")
    lam, y1, y2 = float(lam), float(y1), float(y2)
    (x1, v1), (x2, v2) = section4_inputs(lam, y1, y2)
    phi1, phi2 = StepFunction(x1, v1), StepFunction(x2, v2)
    conv = conv_steps(phi1, phi2)
    rear = rearranged_convolution(phi1, phi2)
    cc, rc = section4_closed(lam, y1, y2)
    conv_closed = PiecewiseLinear([p[0] for p in cc], [p[1] for p in cc])
    rear_closed = PiecewiseLinear([p[0] for p in rc], [p[1] for p in rc])
    err = max(sup_distance(conv, conv_closed), sup_distance(rear, rear_closed))
    if err > pipe_tol * max(1.0, y2):
        raise InternalCrossCheckFailed(f"closed form and pipeline differ by {err:.3g}")
    gap = integrate_compose(f, rear) - integrate_compose(f, conv)
    expected = 4 * jensen_gap(f, lam, y1, y2)
    if abs(gap - expected) > gap_tol * max(1.0, abs(expected)):
        raise InternalCrossCheckFailed(f"gap {gap!r} vs 4 * Jensen gap {expected!r}")
    return Section4Result(conv, rear, conv_closed, rear_closed, gap, expected, err)


# ---------------------------------------------------------------------------
# random inputs and campaigns

@dataclass(frozen=True)
class StepPairParams:
    carrier: GroupCarrier
    pieces: tuple = (1, 6)
    values: tuple = (0.1, 5.0)
    support_budget: float | None = None  # defaults to the carrier's declared m
    violate: bool = False
    max_fraction: float = 0.25  # cap on each support, as a fraction of the carrier


def _random_runs(rng, n_cells: int, support: int, pieces: int, values, contiguous: bool):
    out = np.zeros(n_cells)
    if support == 0:
        return out
    pieces = max(1, min(pieces, support))
    cuts = np.sort(rng.choice(np.arange(1, support), size=pieces - 1, replace=False)) if pieces > 1 else []
    lengths = np.diff(np.concatenate([[0], cuts, [support]])).astype(int)
    vals = rng.uniform(*values, size=pieces)
    if rng.random() < 0.3 and pieces > 1:  # repeated levels exercise tie merging
        vals[rng.integers(pieces)] = vals[0]
    slack = n_cells - support
    gaps = rng.multinomial(slack, np.ones(pieces + 1) / (pieces + 1)) if contiguous else None
    if contiguous:
        pos = int(gaps[0])
        for k, L in enumerate(lengths):
            out[pos:pos + L] = vals[k]
            pos += L + int(gaps[k + 1])
    else:
        cells = rng.permutation(n_cells)[:support]
        start = 0
        for k, L in enumerate(lengths):
            out[cells[start:start + L]] = vals[k]
            start += L
    return out


def random_step_pair(seed: int, params: StepPairParams):
    """Reproducible random pair of nonnegative functions on ``params.carrier``.

    Supports satisfy ``mu(supp1) + mu(supp2) <= budget`` unless ``violate``,
    in which case the sum strictly exceeds it.
    """
    rng = np.random.default_rng(seed)
    c = params.carrier
    n, h = c.size, c.cell_measure
    budget = c.declared_m if params.support_budget is None else params.support_budget
    cap = max(1, int(params.max_fraction * n))
    if math.isinf(budget):
        s1, s2 = int(rng.integers(1, cap + 1)), int(rng.integers(1, cap + 1))
    elif params.violate:
        lo = int(math.floor(budget / h + 1e-9)) + 1  # smallest total cell count exceeding the budget
        total = int(rng.integers(min(lo, 2 * n), min(2 * n, max(lo, 2 * cap)) + 1))
        s1 = int(rng.integers(max(1, total - n), min(n, total - 1) + 1))
        s2 = total - s1
    else:
        k = int(math.floor(budget / h + 1e-9))
        k = min(k, 2 * n)
        total = int(rng.integers(min(2, k), k + 1)) if k >= 2 else k
        s1 = int(rng.integers(0, total + 1)) if total else 0
        s1 = min(s1, n)
        s2 = min(total - s1, n)
    contiguous = c.kind in (REAL_LINE, CIRCLE)
    p1 = int(rng.integers(params.pieces[0], params.pieces[1] + 1))
    p2 = int(rng.integers(params.pieces[0], params.pieces[1] + 1))
    a = _random_runs(rng, n, s1, p1, params.values, contiguous)
    b = _random_runs(rng, n, s2, p2, params.values, contiguous)
    return MeasuredFunction(c, a), MeasuredFunction(c, b)


def convex_suite(rng, scale: float = 1.0):
    """The six test families, with random parameters where they have any."""
    t = float(rng.uniform(0, scale))
    k1 = float(rng.uniform(0.05, 0.5)) * scale
    k2 = k1 + float(rng.uniform(0.05, 0.5)) * scale
    s0 = -float(rng.uniform(0.1, 2.0))
    s1 = s0 + float(rng.uniform(0.0, 2.0))
    s2 = s1 + float(rng.uniform(0.1, 3.0))
    return [make_ft(t), Power(2.0), Power(3.0), Power(0.5, -1), NegIndicatorPositive(),
            PiecewiseLinearConvex((k1, k2), (s0, s1, s2))]


def campaign(carrier: GroupCarrier, trials: int, seed: int, f: ConvexFn | None = None,
             violate: bool = False, params: StepPairParams | None = None, cross_check: bool = True):
    """``trials`` seeded checks; trial ``i`` uses seed ``seed + i``.

    Without ``f`` the six-family suite is cycled through.
    """
    params = params or StepPairParams(carrier, violate=violate)
    reports = []
    for i in range(trials):
        s = seed + i
        phi1, phi2 = random_step_pair(s, params)
        rng = np.random.default_rng([s, 1])
        if f is None:
            scale = max(phi1.values.max(initial=0) * phi2.values.max(initial=0)
                        * carrier.cell_measure * max(phi1.support_count(), phi2.support_count(), 1), 1e-3)
            fn = convex_suite(rng, scale)[s % 6]
        else:
            fn = f
        reports.append(check_main(carrier, phi1, phi2, fn, seed=s, cross_check=cross_check))
    return reports


def violation_search(carrier: GroupCarrier, f: ConvexFn, trials: int, seed: int):
    """Pairs breaking the support hypothesis whose margin comes out negative."""
    if math.isinf(carrier.declared_m):
        raise ParameterOutOfRange("violation search needs a carrier with finite m(G)")
    reports = campaign(carrier, trials, seed, f=f, violate=True)
    return [r for r in reports if r.margin < 0]


def constant_pair(carrier: GroupCarrier, value: float = 1.0):
    one = MeasuredFunction(carrier, np.full(carrier.size, value))
    return one, one


# ---------------------------------------------------------------------------
# continuity and monotone approximation

@dataclass
class ContinuityReport:
    max_defect: float
    continuous: bool
    value_at_zero: float


def check_continuity(phi1, phi2, tol: float = 1e-9) -> ContinuityReport:
    """Probe ``phi1* * phi2*`` (layer-sum evaluation) on both sides of every node."""
    psi = rearranged_convolution(phi1, phi2)
    if psi.is_zero:
        return ContinuityReport(0.0, True, 0.0)
    xs = psi.xs
    width = float(xs[-1] - xs[0])
    delta = 1e-7 * max(width, 1.0)
    dx, y0, y1 = psi.segments()
    lip = float(np.max(np.abs((y1 - y0) / dx)))
    centre = layer_sum(phi1, phi2, xs)
    left = layer_sum(phi1, phi2, xs - delta)
    right = layer_sum(phi1, phi2, xs + delta)
    defect = float(np.max(np.maximum(np.abs(left - centre), np.abs(right - centre)))) - lip * delta
    at0 = float(layer_sum(phi1, phi2, [0.0])[0])
    ok = defect <= tol * max(1.0, psi.max())
    return ContinuityReport(max(defect, 0.0), bool(ok), at0)


def truncation_sequence(phi1, phi2, f: ConvexFn, levels):
    """``(lhs, rhs)`` for the value truncations ``min(phi, level)``."""
    out = []
    for L in levels:
        a = _truncate(phi1, L)
        b = _truncate(phi2, L)
        r = check_main(None if not isinstance(a, MeasuredFunction) else a.carrier, a, b, f)
        out.append((r.lhs, r.rhs))
    return out


def _truncate(phi, level):
    if isinstance(phi, MeasuredFunction):
        return MeasuredFunction(phi.carrier, np.minimum(phi.values, level))
    return StepFunction(phi.breakpoints, np.minimum(phi.values, level))
