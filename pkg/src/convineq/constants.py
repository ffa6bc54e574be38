"""Sharp-constant arithmetic for Young-type inequalities.

Exponent bookkeeping (conjugates, ``q(P)``) is exact when the inputs are
``Fraction`` or ``int``; floating point only enters through ``B``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import ConjugateNotEvenInteger, InadmissibleExponents, PEqualsOne


def as_exponent(p):
    """Keep rationals exact; parse strings like ``"4/3"``."""
    if isinstance(p, str):
        return Fraction(p.strip())
    if isinstance(p, Rational):
        return Fraction(p)
    return float(p)


def _recip_sum(P):
    P = [as_exponent(p) for p in P]
    if any(p <= 0 for p in P):
        raise InadmissibleExponents(f"exponents must be positive: {P}")
    exact = all(isinstance(p, Fraction) for p in P)
    one = Fraction(1) if exact else 1.0
    return P, sum(one / p for p in P), exact


def conjugate(p):
    """``p / (p - 1)``; negative for ``p < 1``."""
    p = as_exponent(p)
    if p == 1:
        raise PEqualsOne("p = 1 has no finite conjugate")
    if p <= 0:
        raise ValueError("p must be positive")
    return p / (p - 1)


def B(p) -> float:
    """Babenko-Beckner constant ``p^(1/2p) / |p'|^(1/2p')``, with ``B(1) = 1``."""
    p = as_exponent(p)
    if p == 1:
        return 1.0
    pc = float(conjugate(p))
    pf = float(p)
    return pf ** (1 / (2 * pf)) / abs(pc) ** (1 / (2 * pc))


def q_of(P):
    """``1/q = 1 - N + sum 1/p_k``; exact for rational input."""
    P, s, exact = _recip_sum(P)
    inv = 1 - len(P) + s
    if not inv > 0:
        raise InadmissibleExponents(f"sum of 1/p_k = {s} must exceed N - 1 = {len(P) - 1}")
    return 1 / inv


def C_of(P) -> float:
    """``prod B(p_k) / B(q(P))``."""
    q = q_of(P)
    return math.prod(B(p) for p in P) / B(q)


@dataclass(frozen=True)
class ExponentData:
    P: tuple
    conjugates: tuple
    q: object
    B_values: tuple
    C: float

    @classmethod
    def of(cls, P) -> "ExponentData":
        P = tuple(as_exponent(p) for p in P)
        q = q_of(P)
        conj = tuple(conjugate(p) if p != 1 else math.inf for p in P)
        return cls(P, conj, q, tuple(B(p) for p in P), C_of(P))

    @property
    def regime(self) -> str:
        if all(p > 1 for p in self.P):
            return "young"
        if all(p < 1 for p in self.P):
            return "reverse"
        return "mixed"


def hausdorff_young_bound(p) -> float:
    """``B(p)`` obtained through ``C(p, ..., p)^(2/p')`` with ``N = p'/2`` copies."""
    p = as_exponent(p)
    if not 1 < p <= 2:
        raise ConjugateNotEvenInteger(f"need 1 < p <= 2, got {p}")
    pc = conjugate(p)
    n2 = Fraction(pc) if isinstance(pc, Fraction) else Fraction(pc).limit_denominator(10**6)
    if n2.denominator != 1 or n2.numerator % 2 or not math.isclose(float(n2), float(pc), rel_tol=0, abs_tol=1e-12):
        raise ConjugateNotEvenInteger(f"p' = {pc} is not an even integer")
    N = n2.numerator // 2
    P = (p,) * N
    q = q_of(P)
    if q != 2 and not math.isclose(float(q), 2.0, rel_tol=1e-15):
        raise AssertionError(f"q(P) = {q}, expected 2")
    chain = C_of(P) ** (2 / float(pc))
    direct = B(p)
    if abs(chain - direct) > 1e-12:
        raise AssertionError(f"constant chain {chain!r} disagrees with B(p) = {direct!r}")
    return chain


def constants_rows(ps=(), pairs=()):
    """Rows for the ``constants`` subcommand."""
    rows = []
    for p in ps:
        p = as_exponent(p)
        rows.append({"p": str(p), "p_conj": str(conjugate(p)) if p != 1 else "inf", "B": B(p)})
    for pair in pairs:
        P = tuple(as_exponent(v) for v in pair)
        q = q_of(P)
        rows.append({"P": ",".join(str(v) for v in P), "q": str(q), "C": C_of(P)})
    return rows
