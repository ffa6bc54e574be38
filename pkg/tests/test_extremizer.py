from fractions import Fraction as F

import numpy as np
import pytest

from convineq import groups, lab
from convineq.constants import C_of, ExponentData
from convineq.errors import InadmissibleExponents, UnsupportedCarrier
from convineq.extremizer import (
    GridObjective,
    gaussian_pair,
    gradient_check,
    maximize_ratio,
    minimize_ratio,
    random_init,
)
from convineq.groups import MeasuredFunction

YOUNG = (F(4, 3), F(4, 3))
REVERSE = (F(1, 2), F(1, 2))


@pytest.fixture(scope="module")
def line():
    return groups.real_line(4, 1 / 32)


def test_objective_matches_lab_pipeline(line):
    a, b = random_init(line, 3, "bumps")
    obj = GridObjective(line, ExponentData.of(YOUNG))
    rep = lab.check_young(MeasuredFunction(line, a), MeasuredFunction(line, b), YOUNG)
    assert obj.ratio(a, b) == pytest.approx(rep.ratio, rel=1e-12)
    c = groups.circle(48, 2.0)
    a, b = random_init(c, 4, "flat")
    obj = GridObjective(c, ExponentData.of(REVERSE))
    rep = lab.check_reverse_young(MeasuredFunction(c, a), MeasuredFunction(c, b), REVERSE)
    assert obj.ratio(a, b) == pytest.approx(rep.ratio, rel=1e-12)


@pytest.mark.parametrize("P", [YOUNG, REVERSE, (F(3, 2), F(6, 5))])
@pytest.mark.parametrize("carrier", [groups.real_line(4, 1 / 32), groups.circle(64, 1.0), groups.cyclic(32)],
                         ids=lambda c: c.kind)
def test_gradient_against_central_differences(P, carrier):
    obj = GridObjective(carrier, ExponentData.of(P))
    rng = np.random.default_rng(11)
    for kind in ("bumps", "flat"):
        assert gradient_check(obj, *random_init(carrier, 5, kind), rng) <= 1e-4


def test_ratio_scale_invariant(line):
    obj = GridObjective(line, ExponentData.of(YOUNG))
    a, b = random_init(line, 1, "bumps")
    base = obj.log_ratio(a, b)
    for c in (1e-3, 0.5, 7.0, 1e4):
        assert obj.log_ratio(c * a, b) == pytest.approx(base, abs=1e-10)
        assert obj.log_ratio(a, c * b) == pytest.approx(base, abs=1e-10)


def test_gaussian_init_close_to_constant():
    r = groups.real_line()
    obj = GridObjective(r, ExponentData.of(YOUNG))
    a, b = gaussian_pair(r, YOUNG)
    assert abs(obj.ratio(a, b) / C_of(YOUNG) - 1) < 0.01


def test_ascent_is_monotone_and_bounded(line):
    s = maximize_ratio(line, YOUNG, init=random_init(line, 2, "bumps"), max_iters=150)
    h = np.array(s.history)
    assert np.all(np.diff(h) >= 0)
    assert h[-1] <= C_of(YOUNG) * (1 + 1e-12)
    assert s.phi1.min() >= 1e-12 and s.phi2.min() >= 1e-12
    s = minimize_ratio(line, REVERSE, init=random_init(line, 2, "bumps"), max_iters=150)
    h = np.array(s.history)
    assert np.all(np.diff(h) <= 0)
    assert h[-1] >= C_of(REVERSE) * (1 - 1e-12)


def test_scale_checks_run():
    z = groups.cyclic(16)
    s = maximize_ratio(z, YOUNG, init=random_init(z, 0, "bumps"), max_iters=250, tol=0)
    assert s.iteration < 100 or s.scale_checks >= 1


@pytest.mark.parametrize("fn,P", [(maximize_ratio, YOUNG), (minimize_ratio, REVERSE)])
def test_cyclic_group_reaches_one(fn, P):
    z = groups.cyclic(32)
    s = fn(z, P, max_iters=5000)
    assert abs(s.ratio - 1) <= 1e-6


def test_symmetrization_never_lowers_objective(line):
    obj = GridObjective(line, ExponentData.of(YOUNG))
    for seed in range(10):
        a, b = random_init(line, seed, "bumps")
        rep = lab.check_young(MeasuredFunction(line, a), MeasuredFunction(line, b), YOUNG)
        assert rep.rearranged_ratio >= obj.ratio(a, b) - 1e-9


def test_regime_and_carrier_checks(line):
    with pytest.raises(InadmissibleExponents):
        maximize_ratio(line, REVERSE)
    with pytest.raises(InadmissibleExponents):
        minimize_ratio(line, YOUNG)
    with pytest.raises(UnsupportedCarrier):
        GridObjective(groups.dihedral(3), ExponentData.of(YOUNG))
