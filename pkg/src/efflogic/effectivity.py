"""Finitely generated stochastic effectivity functions.

An effectivity function assigns each state an upward-closed family of
portfolios (sets of subprobability distributions).  We represent such a
family by a finite antichain of finite generator sets: a portfolio W is in
the family iff it contains some generator.  Every membership query the
game semantics performs reduces to a max-min expectation over generators,
which is exact on this representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .space import (
    Dist,
    StateSet,
    StateSpace,
    ZERO,
    check_same_space,
    indicator,
)


@dataclass(frozen=True)
class PortfolioTest:
    """Basis portfolio beta(A, > q) or beta(A, >= q): {mu | mu(A) rel q}."""

    subset: StateSet
    strict: bool
    bound: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.bound <= 1:
            raise ValueError("bound must lie in [0, 1]")


def _normalize_generators(
    generators: Sequence[frozenset[Dist]],
) -> tuple[frozenset[Dist], ...]:
    """Drop duplicate and superset generators; a superset is redundant."""
    unique = []
    for g in generators:
        if not g:
            raise ValueError("generator must be a nonempty set of distributions")
        if g not in unique:
            unique.append(g)
    kept = [
        g
        for g in unique
        if not any(other < g for other in unique)
    ]
    kept.sort(key=lambda g: sorted(tuple(d.weights) for d in g))
    return tuple(kept)


@dataclass(frozen=True)
class EffectivityFn:
    """Per state, a finite antichain of finite generator sets of distributions."""

    space: StateSpace
    generators: tuple[tuple[frozenset[Dist], ...], ...]

    def __post_init__(self) -> None:
        if len(self.generators) != len(self.space):
            raise ValueError("generator table length does not match space")
        normalized = []
        for gens in self.generators:
            if not gens:
                raise ValueError("each state needs at least one generator")
            for g in gens:
                for mu in g:
                    if mu.space != self.space:
                        raise ValueError("generator distribution over a different space")
            normalized.append(_normalize_generators(gens))
        object.__setattr__(self, "generators", tuple(normalized))

    @classmethod
    def from_table(
        cls, space: StateSpace, table: Mapping[str, Sequence[Sequence[Dist]]]
    ) -> "EffectivityFn":
        gens = tuple(
            tuple(frozenset(g) for g in table[s]) for s in space
        )
        return cls(space, gens)

    def at(self, name: str) -> tuple[frozenset[Dist], ...]:
        return self.generators[self.space.index(name)]

    def sup_expectation(self, name: str, w: Sequence[Fraction]) -> Fraction:
        """max over generators of min over member measures of sum w(s') mu(s')."""
        best = None
        for gen in self.at(name):
            worst = None
            for mu in gen:
                val = sum(
                    (wi * mi for wi, mi in zip(w, mu.weights) if wi != 0), ZERO
                )
                if worst is None or val < worst:
                    worst = val
            if best is None or worst > best:
                best = worst
        assert best is not None
        return best

    def holds(self, name: str, test: PortfolioTest) -> bool:
        """Is beta(A, rel q) in the portfolio family at this state?

        Valid because finite max/min preserve strictness: the sup is attained.
        """
        value = self.sup_expectation(name, indicator(test.subset))
        return value > test.bound if test.strict else value >= test.bound


def from_kernel(kernel) -> EffectivityFn:
    """Lift a kernel: the portfolios at s are exactly the sets containing K(s)."""
    return EffectivityFn(
        kernel.space, tuple((frozenset([row]),) for row in kernel.rows)
    )


def dirac_effectivity(space: StateSpace) -> EffectivityFn:
    from .kernels import Kernel

    return from_kernel(Kernel.dirac_kernel(space))


def sup_expectation(p: EffectivityFn, name: str, w: Sequence[Fraction]) -> Fraction:
    return p.sup_expectation(name, w)


def holds(p: EffectivityFn, name: str, test: PortfolioTest) -> bool:
    return p.holds(name, test)


def _up_family_equal(
    gens_a: Sequence[frozenset[Dist]], gens_b: Sequence[frozenset[Dist]]
) -> bool:
    """Equality of the upward closures generated by two antichains."""
    return all(any(b <= a for b in gens_b) for a in gens_a) and all(
        any(a <= b for a in gens_a) for b in gens_b
    )


def eff_morphism_check(
    f: Mapping[str, str], p: EffectivityFn, q: EffectivityFn
) -> bool:
    """Morphism condition W in Q(f(s)) iff (Sf)^{-1}(W) in P(s), decided on
    finite antichains via the pushforward of every generator."""
    for name in p.space:
        if f.get(name) not in q.space.states:
            raise ValueError(f"map is not total: no image for {name!r}")
    for name in p.space:
        pushed = [
            frozenset(mu.pushforward(f, q.space) for mu in gen) for gen in p.at(name)
        ]
        if not _up_family_equal(pushed, q.at(f[name])):
            return False
    return True


def kernel_morphism_check(f: Mapping[str, str], k, l) -> bool:
    """Kernel morphism: L(f(s))(B) = K(s)(f^{-1}(B)); singletons suffice."""
    for name in k.space:
        if f.get(name) not in l.space.states:
            raise ValueError(f"map is not total: no image for {name!r}")
    for name in k.space:
        if k.row(name).pushforward(f, l.space) != l.row(f[name]):
            return False
    return True
