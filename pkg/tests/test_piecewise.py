from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from convineq.convexity import NegIndicatorPositive, Power, make_ft
from convineq.errors import ToleranceNotMet
from convineq.piecewise import (
    PiecewiseLinear,
    StepFunction,
    adaptive_gl,
    conv_steps,
    integrate_compose,
    level_measure,
    lp_norm,
    read_pl_csv,
    read_step_csv,
    write_pl_csv,
    write_step_csv,
)


def overlap_oracle(phi, chi, x):
    """(phi * chi)(x) summed over pairs of pieces from interval overlaps."""
    total = 0.0
    for i, v in enumerate(phi.values):
        a, b = phi.breakpoints[i], phi.breakpoints[i + 1]
        for j, w in enumerate(chi.values):
            c, d = chi.breakpoints[j], chi.breakpoints[j + 1]
            # y in (a, b) with x - y in (c, d)
            lo, hi = max(a, x - d), min(b, x - c)
            total += v * w * max(hi - lo, 0.0)
    return total


@st.composite
def step_functions(draw, max_pieces=5):
    k = draw(st.integers(1, max_pieces))
    widths = draw(st.lists(st.integers(1, 8), min_size=k, max_size=k))
    start = draw(st.integers(-10, 10))
    vals = draw(st.lists(st.integers(0, 6), min_size=k, max_size=k))
    xs = start + np.concatenate([[0], np.cumsum(widths)]) / 4
    return StepFunction(xs, vals)


def tent():
    return conv_steps(StepFunction.indicator(-1, 1), StepFunction.indicator(-1, 1))


def test_tent():
    psi = tent()
    assert np.array_equal(psi.xs, [-2, 0, 2]) and np.array_equal(psi.ys, [0, 2, 0])
    assert psi(np.array([-3, -1, 0.5, 2.5])).tolist() == [0, 1, 1.5, 0]


def test_narrow_box_is_approximate_identity():
    phi = StepFunction([-2, -1, 0, 1.5], [1, 3, 2])
    w = 1e-3
    smooth = conv_steps(StepFunction.indicator(-w / 2, w / 2, 1 / w), phi)
    probe = np.linspace(-3, 2.5, 1001)
    far = np.min(np.abs(probe[:, None] - phi.breakpoints[None, :]), axis=1) > w
    assert np.max(np.abs(smooth(probe[far]) - phi(probe[far]))) < 1e-9


def test_section4_conv_values():
    lam = 2 / 3
    phi1 = StepFunction([-1, 1], [0.5])
    phi2 = StepFunction([-5, -3, -1 - 2 * lam, -1, 1, 1 + 2 * lam, 3, 5], [1, 3, 1, 3, 1, 3, 1])
    psi = conv_steps(phi1, phi2)
    assert psi(0.0) == pytest.approx(3, abs=1e-14)
    plateau = np.linspace(2 * lam, 2 * lam + 2, 11)
    assert np.allclose(psi(plateau), 5 / 3, atol=1e-14)
    assert np.allclose(psi(-plateau), 5 / 3, atol=1e-14)


def test_integrate_compose_examples():
    assert integrate_compose(make_ft(0), tent()) == pytest.approx(4, abs=1e-14)
    psi = conv_steps(StepFunction.indicator(-0.5, 0.5), StepFunction.indicator(-1, 1))
    assert integrate_compose(make_ft(0.5), psi) == pytest.approx(0.75, abs=1e-14)
    x = sp.symbols("x")
    oracle = float(2 * sp.integrate((1 - x) ** 2, (x, 0, 1)))
    tri = PiecewiseLinear([-1, 0, 1], [0, 1, 0])
    assert integrate_compose(Power(2.0), tri) == pytest.approx(oracle, abs=1e-14)


def test_step_integrand_uses_support():
    psi = PiecewiseLinear([-1, 0, 1, 2, 3], [0, 2, 0, 0, 1])
    assert integrate_compose(NegIndicatorPositive(), psi) == pytest.approx(-3.0)


def test_lp_norm_examples():
    assert lp_norm(StepFunction.indicator(0, 1), 2.7) == pytest.approx(1.0)
    assert lp_norm(tent(), 1) == pytest.approx(4.0)
    assert lp_norm(StepFunction.indicator(0, 2, 3.0), 2) == pytest.approx(3 * np.sqrt(2), rel=1e-15)


@pytest.mark.parametrize("q", [0.3, 0.5, 4 / 3, 2.0, 3.7])
def test_lp_norm_tent_matches_symbolic(q):
    x = sp.symbols("x", positive=True)
    exact = float((2 * sp.integrate((2 - x) ** sp.nsimplify(q), (x, 0, 2))) ** (1 / sp.nsimplify(q)))
    assert lp_norm(tent(), q) == pytest.approx(exact, rel=1e-13)


def test_level_measure_examples():
    assert level_measure(tent(), 1) == pytest.approx(2)
    box = StepFunction.indicator(0, 3)
    assert level_measure(box, 1) == 0
    assert level_measure(box, 0.5) == 3


def test_adaptive_gl_reports_failure():
    val, err = adaptive_gl(np.cos, 0, 1)
    assert val == pytest.approx(np.sin(1), abs=1e-14) and err < 1e-12
    with pytest.raises(ToleranceNotMet):
        integrate_compose(_Jumpy(), PiecewiseLinear([0, 1, 2], [0, 1, 0]), tol=1e-16)


class _Jumpy:
    """Integrand whose quadrature error estimate cannot reach 1e-16."""

    def __call__(self, y):
        return np.sqrt(np.abs(np.asarray(y) - 1 / 3))

    def linear_mean(self, y0, y1, tol=1e-10):
        y0, y1 = np.atleast_1d(y0), np.atleast_1d(y1)
        out, err = [], []
        for a, b in zip(y0, y1):
            lo, hi = min(a, b), max(a, b)
            v, e = adaptive_gl(self, lo, hi, tol * (hi - lo), max_depth=3)
            out.append(v / (hi - lo))
            err.append(e / (hi - lo))
        return np.array(out), np.array(err)


def test_normalization_fuses_and_trims():
    s = StepFunction([0, 1, 1 + 1e-15, 2, 3, 4], [0, 2, 2, 2, 0])
    assert np.allclose(s.breakpoints, [1, 3], rtol=0, atol=1e-14) and s.values.tolist() == [2]
    assert StepFunction([0, 1], [0]).is_zero


def test_csv_round_trip(tmp_path):
    s = StepFunction([-1.5, 0, 2], [1.25, 3])
    write_step_csv(tmp_path / "s.csv", s)
    back = read_step_csv(tmp_path / "s.csv")
    assert np.array_equal(back.breakpoints, s.breakpoints) and np.array_equal(back.values, s.values)
    p = tent()
    write_pl_csv(tmp_path / "p.csv", p)
    q = read_pl_csv(tmp_path / "p.csv")
    assert np.array_equal(q.xs, p.xs) and np.array_equal(q.ys, p.ys)


@given(step_functions(), step_functions())
def test_conv_matches_overlap_oracle(phi, chi):
    psi = conv_steps(phi, chi)
    lo = (phi.breakpoints[0] if not phi.is_zero else 0) + (chi.breakpoints[0] if not chi.is_zero else 0)
    xs = np.linspace(lo - 1, lo + 20, 97)
    want = np.array([overlap_oracle(phi, chi, x) for x in xs])
    assert np.allclose(psi(xs), want, atol=1e-12)


@given(step_functions(), step_functions())
def test_conv_mass_identity_and_commutativity(phi, chi):
    psi = conv_steps(phi, chi)
    assert psi.integral() == pytest.approx(phi.integral() * chi.integral(), rel=1e-13, abs=1e-13)
    other = conv_steps(chi, phi)
    assert np.array_equal(psi.xs, other.xs) and np.allclose(psi.ys, other.ys, rtol=0, atol=1e-13)


@given(step_functions(), st.floats(0, 12))
def test_ft_integral_two_paths(phi, t):
    psi = conv_steps(phi, phi.reflected())
    fast = integrate_compose(make_ft(t), psi)
    # independent path: refine every segment, clip, trapezoid rule is exact on each piece above and below t
    xs = np.unique(np.concatenate([psi.xs, np.linspace(psi.xs[0], psi.xs[-1], 4001)])) if not psi.is_zero else np.zeros(1)
    dx, y0, y1 = np.diff(xs), psi(xs[:-1]), psi(xs[1:])
    slow = 0.0
    for w, a, b in zip(dx, y0, y1):
        lo, hi = min(a, b), max(a, b)
        if hi <= t:
            continue
        if lo >= t:
            slow += w * ((a + b) / 2 - t)
        else:
            frac = (hi - t) / (hi - lo)
            slow += w * frac * (hi - t) / 2
    assert fast == pytest.approx(slow, abs=1e-12 * max(1.0, abs(slow)) * 100)


@given(step_functions(), step_functions())
def test_even_inputs_give_even_decreasing_output(phi, chi):
    s1 = _symmetrize(phi)
    s2 = _symmetrize(chi)
    psi = conv_steps(s1, s2)
    xs = np.linspace(0, 30, 301)
    assert np.allclose(psi(xs), psi(-xs), atol=1e-12)
    assert np.all(np.diff(psi(xs)) <= 1e-12)


def _symmetrize(phi):
    """Symmetric decreasing step function with the same value list."""
    v = np.sort(np.unique(np.asarray(phi.values)))[::-1]
    v = v[v > 0]
    if v.size == 0:
        return StepFunction.zero()
    half = np.arange(1, v.size + 1, dtype=float)
    xs = np.concatenate([-half[::-1], half])
    return StepFunction(xs, np.concatenate([v[::-1], v[1:]]))


@given(step_functions(), step_functions())
def test_conv_nodes_continuous(phi, chi):
    psi = conv_steps(phi, chi)
    if psi.is_zero:
        return
    eps = 1e-9
    inner = psi.xs[1:-1]
    assert np.allclose(psi(inner - eps), psi(inner + eps), atol=1e-6)
    assert psi.ys[0] == 0 and psi.ys[-1] == 0


def test_exact_rational_step_conv_agrees():
    # rational oracle at the nodes of 1/2 * 1_(-1,1) with a two level function
    phi = StepFunction([-1, 1], [0.5])
    chi = StepFunction([0, 1, 3], [2, 1])
    psi = conv_steps(phi, chi)
    for x in psi.xs:
        xf = Fraction(x).limit_denominator(64)
        exact = Fraction(1, 2) * (2 * _overlap(xf - 1, xf + 1, 0, 1) + _overlap(xf - 1, xf + 1, 1, 3))
        assert psi(x) == pytest.approx(float(exact), abs=1e-15)


def _overlap(a, b, c, d):
    return max(min(b, d) - max(a, c), 0)
