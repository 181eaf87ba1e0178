"""Exact interval-set profiles: the graph of q -> membership for a game.

Profiles record, per state, for which thresholds q the game reaches the
target with probability greater than q.  Cells carry a certified lower
interval set and a possible upper one; they coincide exactly when no star
truncation (or undecided subformula) is involved.  Combining rules for
choice and iteration quantify over nonnegative rational tuples with a
budget; both have closed forms over rational-endpoint interval sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .space import ONE, StateSpace, ZERO


@dataclass(frozen=True)
class Interval:
    lo: Fraction
    lo_closed: bool
    hi: Fraction
    hi_closed: bool

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def member(self, q: Fraction) -> bool:
        if q < self.lo or q > self.hi:
            return False
        if q == self.lo and not self.lo_closed:
            return False
        if q == self.hi and not self.hi_closed:
            return False
        return True


def _touches(a: Interval, b: Interval) -> bool:
    """Can a and b be merged into one interval (overlap or kiss)?  a.lo <= b.lo."""
    if b.lo < a.hi:
        return True
    if b.lo == a.hi:
        return a.hi_closed or b.lo_closed
    return False


@dataclass(frozen=True)
class IntervalSet:
    """Canonical finite union of disjoint, non-adjacent intervals within [0,1]."""

    intervals: tuple[Interval, ...]

    @classmethod
    def of(cls, items: Iterable[Interval]) -> "IntervalSet":
        pending = [iv for iv in items if not iv.is_empty()]
        for iv in pending:
            if iv.lo < 0 or iv.hi > 1:
                raise ValueError("interval endpoints must lie in [0, 1]")
        pending.sort(key=lambda iv: (iv.lo, not iv.lo_closed))
        merged: list[Interval] = []
        for iv in pending:
            if merged and _touches(merged[-1], iv):
                last = merged[-1]
                if iv.hi > last.hi or (iv.hi == last.hi and iv.hi_closed):
                    merged[-1] = Interval(last.lo, last.lo_closed, iv.hi, iv.hi_closed)
            else:
                merged.append(iv)
        return cls(tuple(merged))

    @classmethod
    def interval(
        cls, lo: Fraction, lo_closed: bool, hi: Fraction, hi_closed: bool
    ) -> "IntervalSet":
        return cls.of([Interval(Fraction(lo), lo_closed, Fraction(hi), hi_closed)])

    def is_empty(self) -> bool:
        return not self.intervals

    def member(self, q: Fraction) -> bool:
        return any(iv.member(q) for iv in self.intervals)

    def lebesgue(self) -> Fraction:
        """Total length; endpoint flags are null sets and ignored."""
        return sum((iv.hi - iv.lo for iv in self.intervals), ZERO)

    def complement(self) -> "IntervalSet":
        out = []
        cursor, cursor_closed = ZERO, True
        for iv in self.intervals:
            out.append(Interval(cursor, cursor_closed, iv.lo, not iv.lo_closed))
            cursor, cursor_closed = iv.hi, not iv.hi_closed
        out.append(Interval(cursor, cursor_closed, ONE, True))
        return IntervalSet.of(out)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.of(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        return self.complement().union(other.complement()).complement()

    def inf_attained(self) -> Optional[tuple[Fraction, bool]]:
        """Infimum and whether it is a member; None when empty."""
        if not self.intervals:
            return None
        first = self.intervals[0]
        return first.lo, first.lo_closed


EMPTY = IntervalSet(())
FULL = IntervalSet((Interval(ZERO, True, ONE, True),))


def down_interval(t: Fraction, inclusive: bool) -> IntervalSet:
    """[0, t) or [0, t]; rule A produces the exclusive form."""
    if not 0 <= t <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    return IntervalSet.of([Interval(ZERO, True, Fraction(t), inclusive)])


def choice_combine(r1: IntervalSet, r2: IntervalSet) -> IntervalSet:
    """Angelic choice: q passes iff every rational budget split a1+a2 <= q
    has a1 in r1 or a2 in r2.

    The failure set is upward closed with threshold inf(C1) + inf(C2) over
    the complements, attained iff both infima are; the closed form agrees
    with the defining quantification because rationals are dense and the
    endpoints are rational.
    """
    c1, c2 = r1.complement(), r2.complement()
    i1, i2 = c1.inf_attained(), c2.inf_attained()
    if i1 is None or i2 is None:
        return FULL
    m = i1[0] + i2[0]
    attained = i1[1] and i2[1]
    if m > 1:
        return FULL
    failure = IntervalSet.of([Interval(m, attained, ONE, True)])
    return failure.complement()


def star_combine(
    prefix: Sequence[IntervalSet], tail_empty_certified: bool = False
) -> tuple[IntervalSet, bool]:
    """Indefinite iteration: q passes iff every rational budget sequence
    summing to at most q lands in some stage's set.

    Returns (interval set, exact flag).  The failure threshold is the sum
    of the complements' infima over all stages.  The stream is exact when
    some stage covers [0,1], when the partial threshold exceeds 1, or when
    the caller certifies that all stages beyond the prefix are empty
    (complement [0,1], contributing attained zeros).  Otherwise the result
    is the certified under-approximation of the true set.
    """
    m = ZERO
    attained = True
    for r in prefix:
        c = r.complement()
        inf = c.inf_attained()
        if inf is None:
            return FULL, True
        m += inf[0]
        attained = attained and inf[1]
        if m > 1:
            return FULL, True
    if tail_empty_certified:
        failure = IntervalSet.of([Interval(m, attained, ONE, True)])
        return failure.complement(), True
    # Truncated: membership below the partial threshold is certified; at the
    # threshold itself a completion could still refute it when all observed
    # infima are attained, so that endpoint stays open.
    return down_interval(m, inclusive=not attained), False


@dataclass(frozen=True)
class ProfileCell:
    """Sandwich lower <= true <= upper; exact iff the two sides coincide."""

    lower: IntervalSet
    upper: IntervalSet
    depth: Optional[int] = None

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    def member(self, q: Fraction) -> Optional[bool]:
        """True/False when decided, None inside the undecided band."""
        if self.lower.member(q):
            return True
        if not self.upper.member(q):
            return False
        return None

    @classmethod
    def of_exact(cls, r: IntervalSet) -> "ProfileCell":
        return cls(r, r, None)


@dataclass(frozen=True)
class Profile:
    """Per-state interval sets for q -> membership, with truncation status."""

    space: StateSpace
    cells: tuple[ProfileCell, ...]

    def __post_init__(self) -> None:
        if len(self.cells) != len(self.space):
            raise ValueError("cell count does not match space")

    def cell(self, name: str) -> ProfileCell:
        return self.cells[self.space.index(name)]

    def member(self, name: str, q: Fraction) -> Optional[bool]:
        return self.cell(name).member(q)

    def is_exact(self) -> bool:
        return all(c.exact for c in self.cells)


def exact_profile(space: StateSpace, sets: Sequence[IntervalSet]) -> Profile:
    return Profile(space, tuple(ProfileCell.of_exact(r) for r in sets))


def compose_prefix(p, target: Profile) -> Profile:
    """Prefix a one-step effectivity function to a continuation profile.

    The expected value of entering the continuation under mu is
    sum_s mu(s) * lebesgue(target cell at s); the resulting cell is the
    exclusive down-interval at the max-min expectation (strict >).
    """
    space = target.space
    w_lo = tuple(c.lower.lebesgue() for c in target.cells)
    w_hi = tuple(c.upper.lebesgue() for c in target.cells)
    depth = _inherited_depth(target.cells)
    cells = []
    for name in space:
        lo = down_interval(p.sup_expectation(name, w_lo), inclusive=False)
        if w_lo == w_hi:
            cells.append(ProfileCell(lo, lo, None))
        else:
            hi = down_interval(p.sup_expectation(name, w_hi), inclusive=False)
            cells.append(ProfileCell(lo, hi, None if lo == hi else depth))
    return Profile(space, tuple(cells))


def _inherited_depth(cells: Iterable[ProfileCell]) -> Optional[int]:
    depths = [c.depth for c in cells if c.depth is not None]
    return min(depths) if depths else None
