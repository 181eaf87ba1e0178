"""Finite measurable spaces, subsets, and exact subprobability distributions.

Every quantity in the core is an exact ``fractions.Fraction``; no floats
anywhere.  On a finite carrier the sigma-algebra is the full powerset, so
subsets are plain bitmasks keyed by the fixed state order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

ZERO = Fraction(0)
ONE = Fraction(1)


class SpaceMismatchError(ValueError):
    """Operands were built over different state spaces."""


def format_rational(x: Fraction) -> str:
    """Serialize a rational as ``p/q`` in lowest terms, or a bare integer."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc


@dataclass(frozen=True)
class StateSpace:
    """Ordered finite list of distinct state names.

    The order is fixed for the lifetime of the space and is the canonical
    order for serialization and matrix indexing.
    """

    states: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.states:
            raise ValueError("state space must be nonempty")
        if len(set(self.states)) != len(self.states):
            raise ValueError("state names must be pairwise distinct")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.states)})

    @classmethod
    def of(cls, *names: str) -> "StateSpace":
        return cls(tuple(names))

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[str]:
        return iter(self.states)

    def index(self, name: str) -> int:
        try:
            return self._index[name]  # type: ignore[attr-defined]
        except KeyError:
            raise KeyError(f"unknown state {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index  # type: ignore[attr-defined]

    def empty_set(self) -> "StateSet":
        return StateSet(self, 0)

    def full_set(self) -> "StateSet":
        return StateSet(self, (1 << len(self.states)) - 1)

    def singleton(self, name: str) -> "StateSet":
        return StateSet(self, 1 << self.index(name))

    def subset(self, names: Iterable[str]) -> "StateSet":
        mask = 0
        for n in names:
            mask |= 1 << self.index(n)
        return StateSet(self, mask)

    def subsets(self) -> Iterator["StateSet"]:
        """All 2^n subsets in mask order."""
        for mask in range(1 << len(self.states)):
            yield StateSet(self, mask)


def check_same_space(a, b) -> None:
    if a.space != b.space:
        raise SpaceMismatchError(f"space mismatch: {a.space.states} vs {b.space.states}")


@dataclass(frozen=True)
class StateSet:
    """Subset of a state space, bitmask keyed by the state order."""

    space: StateSpace
    mask: int

    def __post_init__(self) -> None:
        if not 0 <= self.mask < (1 << len(self.space)):
            raise ValueError("mask out of range for space")

    def __contains__(self, name: str) -> bool:
        return bool(self.mask >> self.space.index(name) & 1)

    def __iter__(self) -> Iterator[str]:
        for i, name in enumerate(self.space.states):
            if self.mask >> i & 1:
                yield name

    def __len__(self) -> int:
        return self.mask.bit_count()

    def names(self) -> tuple[str, ...]:
        return tuple(self)

    def is_empty(self) -> bool:
        return self.mask == 0

    def complement(self) -> "StateSet":
        return StateSet(self.space, self.space.full_set().mask ^ self.mask)

    def union(self, other: "StateSet") -> "StateSet":
        check_same_space(self, other)
        return StateSet(self.space, self.mask | other.mask)

    def intersection(self, other: "StateSet") -> "StateSet":
        check_same_space(self, other)
        return StateSet(self.space, self.mask & other.mask)

    def difference(self, other: "StateSet") -> "StateSet":
        check_same_space(self, other)
        return StateSet(self.space, self.mask & ~other.mask)

    def issubset(self, other: "StateSet") -> bool:
        check_same_space(self, other)
        return self.mask & ~other.mask == 0

    __or__ = union
    __and__ = intersection
    __sub__ = difference


@dataclass(frozen=True)
class Dist:
    """Subprobability distribution: nonnegative rational weights, total <= 1."""

    space: StateSpace
    weights: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.space):
            raise ValueError("weight vector length does not match space")
        total = ZERO
        for w in self.weights:
            if w < 0:
                raise ValueError(f"negative weight {w}")
            total += w
        if total > 1:
            raise ValueError(f"total mass {total} exceeds 1")

    @classmethod
    def from_map(cls, space: StateSpace, weights: Mapping[str, Fraction]) -> "Dist":
        vec = [ZERO] * len(space)
        for name, w in weights.items():
            vec[space.index(name)] = Fraction(w)
        return cls(space, tuple(vec))

    def weight(self, name: str) -> Fraction:
        return self.weights[self.space.index(name)]

    def mass(self, subset: StateSet) -> Fraction:
        """Evaluation mu(A): total weight of the subset."""
        check_same_space(self, subset)
        total = ZERO
        for i, w in enumerate(self.weights):
            if subset.mask >> i & 1:
                total += w
        return total

    def total(self) -> Fraction:
        return sum(self.weights, ZERO)

    def pushforward(self, f: Mapping[str, str], target: StateSpace) -> "Dist":
        """Image measure under a total state map: (Sf mu)(B) = mu(f^{-1} B)."""
        vec = [ZERO] * len(target)
        for name, w in zip(self.space.states, self.weights):
            vec[target.index(f[name])] += w
        return Dist(target, tuple(vec))

    def support(self) -> StateSet:
        mask = 0
        for i, w in enumerate(self.weights):
            if w > 0:
                mask |= 1 << i
        return StateSet(self.space, mask)


def dirac(space: StateSpace, name: str) -> Dist:
    vec = [ZERO] * len(space)
    vec[space.index(name)] = ONE
    return Dist(space, tuple(vec))


def zero_dist(space: StateSpace) -> Dist:
    return Dist(space, (ZERO,) * len(space))


def dist_eval(mu: Dist, subset: StateSet) -> Fraction:
    """Free-function alias for ``Dist.mass``."""
    return mu.mass(subset)


def indicator(subset: StateSet) -> tuple[Fraction, ...]:
    """Indicator weight vector of a subset, aligned with the state order."""
    return tuple(ONE if subset.mask >> i & 1 else ZERO for i in range(len(subset.space)))
