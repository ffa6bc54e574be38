import math
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given, strategies as st

from convineq.constants import B, C_of, ExponentData, conjugate, constants_rows, hausdorff_young_bound, q_of
from convineq.errors import ConjugateNotEvenInteger, InadmissibleExponents, PEqualsOne

GRID = [F(1, 4), F(1, 2), F(2, 3), F(6, 5), F(4, 3), F(3, 2), F(2), F(3), F(4), 7.5]


def mp_B(p):
    """High-precision oracle for p^(1/2p) / |p'|^(1/2p')."""
    mpmath.mp.dps = 40
    p = mpmath.mpf(p.numerator) / p.denominator if isinstance(p, F) else mpmath.mpf(p)
    pc = p / (p - 1)
    return p ** (1 / (2 * p)) / abs(pc) ** (1 / (2 * pc))


def test_B_at_two_is_one():
    assert B(2) == 1.0


@pytest.mark.parametrize("p", GRID)
def test_B_against_high_precision(p):
    assert B(p) == pytest.approx(float(mp_B(p)), rel=1e-14)


@pytest.mark.parametrize("p", [1.1, F(4, 3), 1.5, 3, 10])
def test_B_duality(p):
    assert B(p) * B(conjugate(p)) == pytest.approx(1.0, abs=1e-12)


def test_known_values():
    assert B(F(4, 3)) == pytest.approx(0.9366870743752481, rel=1e-15)
    assert B(4) == pytest.approx(1.0675923980983515, rel=1e-15)
    assert C_of((F(4, 3), F(4, 3))) == pytest.approx(0.8773826753016616, rel=1e-15)
    assert q_of((F(4, 3), F(4, 3))) == 2
    assert q_of((F(1, 2), F(1, 2))) == F(1, 3)
    assert C_of((F(1, 2), F(1, 2))) == pytest.approx(float(mp_B(F(1, 2)) ** 2 / mp_B(F(1, 3))), rel=1e-14)


def test_conjugates():
    assert conjugate(F(4, 3)) == 4
    assert conjugate(F(1, 2)) == -1
    with pytest.raises(PEqualsOne):
        conjugate(1)


def test_singleton_and_inadmissible():
    assert q_of((F(7, 3),)) == F(7, 3)
    with pytest.raises(InadmissibleExponents):
        q_of((F(3, 2), F(3, 2), F(3, 2)))  # 1/p sum equals N - 1
    with pytest.raises(InadmissibleExponents):
        q_of((2, 2))


@pytest.mark.parametrize("P", [(F(5, 4), F(5, 4), F(5, 4)), (F(6, 5), F(3, 2), F(4, 3)), (F(7, 4), F(9, 8), F(11, 10))])
def test_multiplicativity(P):
    p1, p2, p3 = P
    q12 = q_of((p1, p2))
    assert isinstance(q12, F) and q_of((q12, p3)) == q_of(P)
    assert C_of(P) == pytest.approx(C_of((p1, p2)) * C_of((q12, p3)), abs=1e-12)


@given(st.fractions(F(1, 1), F(6)).filter(lambda p: p > 1), st.fractions(F(1, 1), F(6)).filter(lambda p: p > 1),
       st.fractions(F(1, 1), F(6)).filter(lambda p: p > 1))
def test_q_associative_exactly(p1, p2, p3):
    if 1 / p1 + 1 / p2 + 1 / p3 <= 2:
        return
    assert q_of((q_of((p1, p2)), p3)) == q_of((p1, p2, p3))


def test_hausdorff_young_chain():
    assert abs(hausdorff_young_bound(F(4, 3)) - B(F(4, 3))) <= 1e-12
    assert hausdorff_young_bound(F(6, 5)) == pytest.approx(B(F(6, 5)), abs=1e-12)
    assert hausdorff_young_bound(2) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConjugateNotEvenInteger):
        hausdorff_young_bound(F(3, 2))


def test_exponent_data_regimes():
    assert ExponentData.of(("4/3", "4/3")).regime == "young"
    assert ExponentData.of(("1/2", "1/2")).regime == "reverse"
    assert ExponentData.of((F(1, 2), 3)).regime == "mixed"


def test_rows():
    rows = constants_rows(["4/3"], [("4/3", "4/3")])
    assert rows[0]["p_conj"] == "4" and rows[1]["q"] == "2"


@given(st.fractions(F(11, 10), F(5)), st.fractions(F(11, 10), F(5)))
def test_young_regime_signs(p1, p2):
    if 1 / p1 + 1 / p2 <= 1:
        return
    d = ExponentData.of((p1, p2))
    assert d.C < 1 < d.q


@given(st.fractions(F(1, 10), F(9, 10)), st.fractions(F(1, 10), F(9, 10)))
def test_reverse_regime_signs(p1, p2):
    d = ExponentData.of((p1, p2))
    assert d.C > 1 > d.q
