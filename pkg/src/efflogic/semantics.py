"""Game models and the recursive evaluator for games and formulas.

Evaluation follows the head-normal form of a game: atomic heads query the
effectivity function directly, duals complement against the complemented
target, angelic choice combines profiles with the budget rule, sequences
prefix an expectation step, and iteration streams the unrolled stages into
the star rule.  Star truncation is never silent: profiles carry a
certified lower and a possible upper interval set per state, and formula
evaluation surfaces any gap as an explicit undecided outcome.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from . import syntax
from .config import DEFAULT_CONFIG, RunConfig
from .effectivity import EffectivityFn, dirac_effectivity, eff_morphism_check, from_kernel
from .kernels import Kernel, UnsupportedFragmentError, ext_gt, pdl_kernel, test_kernel
from .profiles import (
    FULL,
    IntervalSet,
    Profile,
    ProfileCell,
    down_interval,
    choice_combine,
    star_combine,
)
from .space import StateSet, StateSpace, check_same_space, indicator

Interpretation = Union[Kernel, EffectivityFn]


class UndecidedError(Exception):
    """A star truncation left the queried threshold in the undecided band."""

    def __init__(self, formula, states: tuple[str, ...]) -> None:
        names = ", ".join(states)
        super().__init__(
            f"undecided at states {{{names}}} for {syntax.print_formula(formula)}; "
            "raise the star depth cap to tighten the bound"
        )
        self.formula = formula
        self.states = states


@dataclass(frozen=True)
class GameModel:
    """Finite game model: interpretations for primitive games plus valuations."""

    space: StateSpace
    interpretation: Mapping[str, Interpretation]
    valuations: Mapping[str, StateSet]

    def __post_init__(self) -> None:
        object.__setattr__(self, "interpretation", dict(self.interpretation))
        object.__setattr__(self, "valuations", dict(self.valuations))
        if "eps" in self.interpretation:
            raise ValueError("'eps' is reserved for the empty game")
        for name, interp in self.interpretation.items():
            if interp.space != self.space:
                raise ValueError(f"interpretation of {name!r} over a different space")
        for name, val in self.valuations.items():
            if val.space != self.space:
                raise ValueError(f"valuation of {name!r} over a different space")
        object.__setattr__(self, "_lifted", {})

    def effectivity(self, name: str) -> EffectivityFn:
        cache = self._lifted  # type: ignore[attr-defined]
        if name not in cache:
            interp = self._interp(name)
            cache[name] = from_kernel(interp) if isinstance(interp, Kernel) else interp
        return cache[name]

    def kernel(self, name: str) -> Optional[Kernel]:
        interp = self._interp(name)
        return interp if isinstance(interp, Kernel) else None

    def _interp(self, name: str) -> Interpretation:
        try:
            return self.interpretation[name]
        except KeyError:
            raise KeyError(f"unknown primitive game {name!r}") from None

    def atom(self, name: str) -> StateSet:
        try:
            return self.valuations[name]
        except KeyError:
            raise KeyError(f"atomic proposition {name!r} has no valuation") from None

    def is_kripke(self) -> bool:
        return all(isinstance(v, Kernel) for v in self.interpretation.values())

    def primitives(self) -> tuple[str, ...]:
        return tuple(sorted(self.interpretation))

    def atoms(self) -> tuple[str, ...]:
        return tuple(sorted(self.valuations))


@dataclass
class _Ctx:
    model: GameModel
    config: RunConfig
    game_memo: dict = field(default_factory=dict)
    formula_memo: dict = field(default_factory=dict)


def eval_game(
    model: GameModel, game, target: StateSet, config: RunConfig = DEFAULT_CONFIG
) -> Profile:
    """Profile of q -> membership in the game transformation of the target."""
    check_same_space(model, target)
    ctx = _Ctx(model, config)
    return _eval3(ctx, game, target, target)


def eval_formula(
    model: GameModel, phi, config: RunConfig = DEFAULT_CONFIG
) -> StateSet:
    """Validity set; raises ``UndecidedError`` when truncation leaves a gap."""
    lo, hi = eval_formula3(model, phi, config)
    if lo != hi:
        raise UndecidedError(phi, tuple(hi.difference(lo)))
    return lo


def eval_formula3(
    model: GameModel, phi, config: RunConfig = DEFAULT_CONFIG
) -> tuple[StateSet, StateSet]:
    """Three-valued validity: (certainly holds, possibly holds)."""
    ctx = _Ctx(model, config)
    return _formula3(ctx, phi)


def _formula3(ctx: _Ctx, phi) -> tuple[StateSet, StateSet]:
    key = syntax.print_formula(phi)
    hit = ctx.formula_memo.get(key)
    if hit is not None:
        return hit
    space = ctx.model.space
    if isinstance(phi, syntax.Top):
        result = (space.full_set(), space.full_set())
    elif isinstance(phi, syntax.Atom):
        v = ctx.model.atom(phi.name)
        result = (v, v)
    elif isinstance(phi, syntax.And):
        l_lo, l_hi = _formula3(ctx, phi.left)
        r_lo, r_hi = _formula3(ctx, phi.right)
        result = (l_lo.intersection(r_lo), l_hi.intersection(r_hi))
    elif isinstance(phi, syntax.Diamond):
        b_lo, b_hi = _formula3(ctx, phi.body)
        prof = _eval3(ctx, phi.game, b_lo, b_hi)
        lo_mask = hi_mask = 0
        for i, name in enumerate(space.states):
            cell = prof.cells[i]
            if cell.lower.member(phi.bound):
                lo_mask |= 1 << i
            if cell.upper.member(phi.bound):
                hi_mask |= 1 << i
        result = (StateSet(space, lo_mask), StateSet(space, hi_mask))
    else:
        raise TypeError(f"not a formula: {phi!r}")
    ctx.formula_memo[key] = result
    return result


def _atomic_effectivity3(
    ctx: _Ctx, head
) -> tuple[EffectivityFn, EffectivityFn]:
    """Lower/upper effectivity functions of an atomic game head."""
    if isinstance(head, syntax.Prim):
        p = ctx.model.effectivity(head.name)
        return p, p
    if isinstance(head, syntax.Eps):
        d = dirac_effectivity(ctx.model.space)
        return d, d
    if isinstance(head, syntax.TestPos):
        f_lo, f_hi = _formula3(ctx, head.formula)
        return (
            from_kernel(test_kernel(f_lo, True)),
            from_kernel(test_kernel(f_hi, True)),
        )
    if isinstance(head, syntax.TestNeg):
        f_lo, f_hi = _formula3(ctx, head.formula)
        # the negative test uses the complement, so the sides swap
        return (
            from_kernel(test_kernel(f_hi, False)),
            from_kernel(test_kernel(f_lo, False)),
        )
    raise TypeError(f"not an atomic game: {head!r}")


def _eval3(ctx: _Ctx, game, a_lo: StateSet, a_hi: StateSet) -> Profile:
    key = (syntax.print_game(game), a_lo.mask, a_hi.mask)
    hit = ctx.game_memo.get(key)
    if hit is not None:
        return hit
    result = _eval3_uncached(ctx, game, a_lo, a_hi)
    ctx.game_memo[key] = result
    return result


def _eval3_uncached(ctx: _Ctx, game, a_lo: StateSet, a_hi: StateSet) -> Profile:
    space = ctx.model.space
    g = syntax.normalize_head(game)

    if isinstance(g, syntax.ATOMIC_GAMES):
        p_lo, p_hi = _atomic_effectivity3(ctx, g)
        w_lo, w_hi = indicator(a_lo), indicator(a_hi)
        cells = []
        for name in space:
            lo = down_interval(p_lo.sup_expectation(name, w_lo), inclusive=False)
            hi = (
                lo
                if (p_lo is p_hi and a_lo == a_hi)
                else down_interval(p_hi.sup_expectation(name, w_hi), inclusive=False)
            )
            cells.append(ProfileCell(lo, hi, None if lo == hi else 0))
        return Profile(space, tuple(cells))

    if isinstance(g, syntax.Dual):
        # rule B: the game is determined
        inner = _eval3(ctx, g.inner, a_hi.complement(), a_lo.complement())
        cells = tuple(
            ProfileCell(c.upper.complement(), c.lower.complement(), c.depth)
            for c in inner.cells
        )
        return Profile(space, cells)

    if isinstance(g, syntax.ChoiceA):
        left = _eval3(ctx, g.left, a_lo, a_hi)
        right = _eval3(ctx, g.right, a_lo, a_hi)
        cells = []
        for cl, cr in zip(left.cells, right.cells):
            lo = choice_combine(cl.lower, cr.lower)
            hi = (
                lo
                if (cl.exact and cr.exact)
                else choice_combine(cl.upper, cr.upper)
            )
            depth = _min_depth(cl.depth, cr.depth)
            cells.append(ProfileCell(lo, hi, None if lo == hi else depth))
        return Profile(space, tuple(cells))

    if isinstance(g, syntax.Seq):
        head, tail = g.left, g.right
        if isinstance(head, syntax.StarA):
            return _eval_star(ctx, head.inner, tail, a_lo, a_hi)
        target = _eval3(ctx, tail, a_lo, a_hi)
        p_lo, p_hi = _atomic_effectivity3(ctx, head)
        w_lo = tuple(c.lower.lebesgue() for c in target.cells)
        w_hi = tuple(c.upper.lebesgue() for c in target.cells)
        depth = _cells_depth(target.cells)
        cells = []
        for name in space:
            lo = down_interval(p_lo.sup_expectation(name, w_lo), inclusive=False)
            hi = (
                lo
                if (p_lo is p_hi and w_lo == w_hi)
                else down_interval(p_hi.sup_expectation(name, w_hi), inclusive=False)
            )
            cells.append(ProfileCell(lo, hi, None if lo == hi else depth))
        return Profile(space, tuple(cells))

    raise TypeError(f"normalize_head returned unexpected shape: {g!r}")


def _min_depth(a: Optional[int], b: Optional[int]) -> Optional[int]:
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _cells_depth(cells) -> Optional[int]:
    depth = None
    for c in cells:
        if c.depth is not None:
            depth = c.depth if depth is None else min(depth, c.depth)
    return depth


def _eval_star(
    ctx: _Ctx, g, tail, a_lo: StateSet, a_hi: StateSet
) -> Profile:
    """Rule F: stream the profiles of g^n;tail into the iteration rule.

    Emptiness of a stage profile is absorbing only for dual- and test-free
    iterated games (the composition step cannot resurrect mass); that
    certificate turns an all-empty stage into an exact tail.
    """
    space = ctx.model.space
    cap = ctx.config.star_depth
    absorbable = syntax.is_dual_free(g) and syntax.is_test_free(g)
    lowers: list[list[IntervalSet]] = [[] for _ in space.states]
    uppers: list[list[IntervalSet]] = [[] for _ in space.states]
    lo_tail = hi_tail = False
    term = tail
    for n in range(cap):
        prof = _eval3(ctx, term, a_lo, a_hi)
        if not lo_tail:
            for i, c in enumerate(prof.cells):
                lowers[i].append(c.lower)
            if absorbable and all(c.lower.is_empty() for c in prof.cells):
                lo_tail = True
        if not hi_tail:
            for i, c in enumerate(prof.cells):
                uppers[i].append(c.upper)
            if absorbable and all(c.upper.is_empty() for c in prof.cells):
                hi_tail = True
        if lo_tail and hi_tail:
            break
        term = syntax.Seq(g, term)
    cells = []
    for i in range(len(space)):
        lo, lo_exact = star_combine(lowers[i], tail_empty_certified=lo_tail)
        hi, hi_exact = star_combine(uppers[i], tail_empty_certified=hi_tail)
        upper = hi if hi_exact else FULL
        if lo_exact and hi_exact and lo == hi:
            cells.append(ProfileCell(lo, lo, None))
        else:
            cells.append(ProfileCell(lo, upper, cap))
    return Profile(space, tuple(cells))


def kripke_fast_eval(
    model: GameModel, game, target: StateSet, q: Fraction
) -> StateSet:
    """Exact membership for programs over kernel interpretations.

    Complements the undecidable-by-unrolling star cells: the program kernel
    makes {s | K_tau(s)(A) > q} computable exactly, with infinity > q true.
    """
    check_same_space(model, target)
    if not syntax.is_program(game):
        raise UnsupportedFragmentError(
            f"{syntax.print_game(game)} is outside the program fragment"
        )
    k = pdl_kernel(model, game)
    mask = 0
    for i, name in enumerate(model.space.states):
        if ext_gt(k.mass(name, target), q):
            mask |= 1 << i
    return StateSet(model.space, mask)


def model_morphism_check(
    f: Mapping[str, str], m1: GameModel, m2: GameModel
) -> bool:
    """Model morphism: atom valuations pull back exactly and every primitive
    interpretation satisfies the effectivity morphism condition."""
    for name in m1.space:
        if f.get(name) not in m2.space.states:
            raise ValueError(f"map is not total: no image for {name!r}")
    if m1.atoms() != m2.atoms() or m1.primitives() != m2.primitives():
        return False
    for p in m1.atoms():
        target = m2.atom(p)
        preimage = m1.space.subset(s for s in m1.space if f[s] in target)
        if preimage != m1.atom(p):
            return False
    for name in m1.primitives():
        if not eff_morphism_check(f, m1.effectivity(name), m2.effectivity(name)):
            return False
    return True
