"""Substochastic kernels, extended kernels, Kleisli convolution, exact star closure.

A ``Kernel`` is a state-indexed family of subprobability distributions.
``ExtKernel`` extends entries to the nonnegative rationals plus infinity;
these arise from the countable sums of iterated programs.  All closure
computations are exact: divergence is decided combinatorially on the
support digraph, finite values by Gaussian elimination over rationals.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .space import (
    Dist,
    ONE,
    SpaceMismatchError,
    StateSet,
    StateSpace,
    ZERO,
    check_same_space,
    dirac,
    zero_dist,
)


class UnsupportedFragmentError(ValueError):
    """The game falls outside the kernel-representable program fragment."""


class _Infinity:
    """Singleton +infinity for extended kernel entries."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "inf"


INF = _Infinity()
ExtValue = Union[Fraction, _Infinity]


def is_inf(v: ExtValue) -> bool:
    return v is INF


def ext_add(a: ExtValue, b: ExtValue) -> ExtValue:
    if a is INF or b is INF:
        return INF
    return a + b


def ext_mul(a: ExtValue, b: ExtValue) -> ExtValue:
    # Measure-theoretic convention: 0 * inf = 0.
    if a is INF:
        return INF if b != 0 else ZERO
    if b is INF:
        return INF if a != 0 else ZERO
    return a * b


def ext_gt(v: ExtValue, q: Fraction) -> bool:
    return True if v is INF else v > q


@dataclass(frozen=True)
class Kernel:
    """Substochastic kernel: one subprobability row per state."""

    space: StateSpace
    rows: tuple[Dist, ...]

    def __post_init__(self) -> None:
        if len(self.rows) != len(self.space):
            raise ValueError("row count does not match space")
        for row in self.rows:
            if row.space != self.space:
                raise SpaceMismatchError("row over a different space")

    @classmethod
    def from_rows(cls, space: StateSpace, rows: Sequence[Dist]) -> "Kernel":
        return cls(space, tuple(rows))

    @classmethod
    def dirac_kernel(cls, space: StateSpace) -> "Kernel":
        return cls(space, tuple(dirac(space, s) for s in space))

    @classmethod
    def zero(cls, space: StateSpace) -> "Kernel":
        return cls(space, (zero_dist(space),) * len(space))

    def row(self, name: str) -> Dist:
        return self.rows[self.space.index(name)]

    def mass(self, name: str, subset: StateSet) -> Fraction:
        return self.row(name).mass(subset)

    def entry(self, src: str, dst: str) -> Fraction:
        return self.rows[self.space.index(src)].weights[self.space.index(dst)]


@dataclass(frozen=True)
class ExtKernel:
    """Kernel with entries in the nonnegative rationals extended by infinity."""

    space: StateSpace
    entries: tuple[tuple[ExtValue, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.space)
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise ValueError("entry matrix shape does not match space")
        for row in self.entries:
            for v in row:
                if not is_inf(v) and v < 0:
                    raise ValueError(f"negative entry {v}")

    @classmethod
    def from_kernel(cls, k: Kernel) -> "ExtKernel":
        return cls(k.space, tuple(tuple(row.weights) for row in k.rows))

    @classmethod
    def identity(cls, space: StateSpace) -> "ExtKernel":
        return cls.from_kernel(Kernel.dirac_kernel(space))

    @classmethod
    def zero(cls, space: StateSpace) -> "ExtKernel":
        n = len(space)
        return cls(space, ((ZERO,) * n,) * n)

    def entry(self, src: str, dst: str) -> ExtValue:
        return self.entries[self.space.index(src)][self.space.index(dst)]

    def mass(self, name: str, subset: StateSet) -> ExtValue:
        row = self.entries[self.space.index(name)]
        total: ExtValue = ZERO
        for i, v in enumerate(row):
            if subset.mask >> i & 1:
                total = ext_add(total, v)
        return total

    def is_finite(self) -> bool:
        return not any(is_inf(v) for row in self.entries for v in row)

    def to_kernel(self) -> Kernel:
        """Downcast to a substochastic kernel; fails if rows are not subprobabilities."""
        rows = []
        for row in self.entries:
            if any(is_inf(v) for v in row):
                raise ValueError("infinite entry cannot be downcast")
            rows.append(Dist(self.space, tuple(row)))  # raises if row sum > 1
        return Kernel(self.space, tuple(rows))


AnyKernel = Union[Kernel, ExtKernel]


def _as_matrix(k: AnyKernel) -> tuple[tuple[ExtValue, ...], ...]:
    if isinstance(k, Kernel):
        return tuple(tuple(row.weights) for row in k.rows)
    return k.entries


def convolve(k1: AnyKernel, k2: AnyKernel) -> AnyKernel:
    """Kleisli product: (K1 * K2)(s)(A) = sum_t K1(s)(t) K2(t)(A)."""
    check_same_space(k1, k2)
    a, b = _as_matrix(k1), _as_matrix(k2)
    n = len(k1.space)
    out = []
    for i in range(n):
        row: list[ExtValue] = []
        for j in range(n):
            acc: ExtValue = ZERO
            for t in range(n):
                acc = ext_add(acc, ext_mul(a[i][t], b[t][j]))
            row.append(acc)
        out.append(tuple(row))
    result = ExtKernel(k1.space, tuple(out))
    if isinstance(k1, Kernel) and isinstance(k2, Kernel):
        return result.to_kernel()
    return result


def kernel_sum(k1: AnyKernel, k2: AnyKernel) -> ExtKernel:
    check_same_space(k1, k2)
    a, b = _as_matrix(k1), _as_matrix(k2)
    n = len(k1.space)
    return ExtKernel(
        k1.space,
        tuple(tuple(ext_add(a[i][j], b[i][j]) for j in range(n)) for i in range(n)),
    )


def _sccs(adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Strongly connected components, iterative Kosaraju."""
    n = len(adj)
    order: list[int] = []
    seen = [False] * n
    for start in range(n):
        if seen[start]:
            continue
        stack = [(start, iter(adj[start]))]
        seen[start] = True
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if not seen[nxt]:
                    seen[nxt] = True
                    stack.append((nxt, iter(adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()
    radj: list[list[int]] = [[] for _ in range(n)]
    for u in range(n):
        for v in adj[u]:
            radj[v].append(u)
    comp = [-1] * n
    comps: list[list[int]] = []
    for start in reversed(order):
        if comp[start] >= 0:
            continue
        cid = len(comps)
        comps.append([])
        stack2 = [start]
        comp[start] = cid
        while stack2:
            u = stack2.pop()
            comps[cid].append(u)
            for v in radj[u]:
                if comp[v] < 0:
                    comp[v] = cid
                    stack2.append(v)
    return comps


def _reach_closure(adj: Sequence[Sequence[int]]) -> list[int]:
    """Reflexive-transitive reachability as bitmasks per source node."""
    n = len(adj)
    reach = []
    for start in range(n):
        mask = 1 << start
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if not mask >> v & 1:
                    mask |= 1 << v
                    stack.append(v)
        reach.append(mask)
    return reach


def _solve_unit(matrix: list[list[Fraction]]) -> list[list[Fraction]]:
    """Solve (I - Q) X = I exactly; pivot rule: first nonzero in column order."""
    n = len(matrix)
    a = [[(ONE if i == j else ZERO) - matrix[i][j] for j in range(n)] for i in range(n)]
    x = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ArithmeticError("singular system in star closure")
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            x[col], x[piv] = x[piv], x[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        x[col] = [v * inv for v in x[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [a[r][j] - f * a[col][j] for j in range(n)]
                x[r] = [x[r][j] - f * x[col][j] for j in range(n)]
    return x


def _spectral_radius_ge_one(sub: list[list[Fraction]]) -> bool:
    """Exact test rho(M) >= 1 for a nonnegative rational matrix M.

    I - M is a Z-matrix; it is a nonsingular M-matrix (equivalently
    rho(M) < 1) iff all leading principal minors are positive.
    """
    n = len(sub)
    a = [[(ONE if i == j else ZERO) - sub[i][j] for j in range(n)] for i in range(n)]
    for k in range(n):
        if a[k][k] <= 0:
            return True
        for r in range(k + 1, n):
            if a[r][k] != 0:
                f = a[r][k] / a[k][k]
                for c in range(k, n):
                    a[r][c] -= f * a[k][c]
    return False


def star_closure(kernel: Kernel) -> ExtKernel:
    """Exact sum of all powers of a substochastic kernel.

    Entries diverge exactly on recurrent classes: SCCs that are closed and
    internally stochastic.  Finite entries solve X = I + QX on the
    transient part.
    """
    space = kernel.space
    n = len(space)
    mat = [[kernel.rows[i].weights[j] for j in range(n)] for i in range(n)]
    adj = [[j for j in range(n) if mat[i][j] > 0] for i in range(n)]
    comps = _sccs(adj)
    comp_id = [0] * n
    for cid, members in enumerate(comps):
        for m in members:
            comp_id[m] = cid
    recurrent = []
    for members in comps:
        cmask = 0
        for m in members:
            cmask |= 1 << m
        cset = StateSet(space, cmask)
        recurrent.append(all(kernel.rows[m].mass(cset) == 1 for m in members))
    reach = _reach_closure(adj)
    transient = [i for i in range(n) if not recurrent[comp_id[i]]]
    t_index = {s: k for k, s in enumerate(transient)}
    solved = _solve_unit([[mat[u][v] for v in transient] for u in transient])
    out: list[tuple[ExtValue, ...]] = []
    for i in range(n):
        row: list[ExtValue] = []
        for j in range(n):
            if recurrent[comp_id[j]] and reach[i] >> j & 1:
                row.append(INF)
            elif i in t_index and j in t_index:
                row.append(solved[t_index[i]][t_index[j]])
            elif i == j:
                row.append(ONE)
            else:
                row.append(ZERO)
        out.append(tuple(row))
    return ExtKernel(space, tuple(out))


def ext_star(kernel: AnyKernel) -> ExtKernel:
    """Sum of all powers of an extended kernel.

    Same SCC/solve scheme as ``star_closure`` with the general divergence
    test: an SCC diverges if it carries an infinite entry or its restricted
    spectral radius reaches 1; any entry downstream of a divergent SCC or
    an infinite edge diverges.
    """
    space = kernel.space
    mat = [list(row) for row in _as_matrix(kernel)]
    n = len(space)
    adj = [[j for j in range(n) if is_inf(mat[i][j]) or mat[i][j] > 0] for i in range(n)]
    comps = _sccs(adj)
    comp_id = [0] * n
    for cid, members in enumerate(comps):
        for m in members:
            comp_id[m] = cid
    divergent = []
    for members in comps:
        inside = set(members)
        if any(is_inf(mat[u][v]) for u in members for v in inside):
            divergent.append(True)
            continue
        sub = [[mat[u][v] for v in members] for u in members]
        divergent.append(_spectral_radius_ge_one(sub))
    reach = _reach_closure(adj)

    # pair (i, j) diverges iff i reaches a divergent SCC or crosses an
    # infinite edge on some walk to j
    def diverges(i: int, j: int) -> bool:
        for u in range(n):
            if reach[i] >> u & 1:
                if divergent[comp_id[u]] and reach[u] >> j & 1:
                    return True
                if any(is_inf(mat[u][v]) and reach[v] >> j & 1 for v in adj[u]):
                    return True
        return False

    good = [i for i in range(n) if not divergent[comp_id[i]]]
    g_index = {s: k for k, s in enumerate(good)}
    finite = [
        [mat[u][v] if not is_inf(mat[u][v]) else ZERO for v in good] for u in good
    ]
    solved = _solve_unit(finite)
    out: list[tuple[ExtValue, ...]] = []
    for i in range(n):
        row: list[ExtValue] = []
        for j in range(n):
            if diverges(i, j):
                row.append(INF)
            elif i in g_index and j in g_index:
                # walks feeding a finite pair never cross an infinite edge
                row.append(solved[g_index[i]][g_index[j]])
            elif i == j:
                row.append(ONE)
            else:
                row.append(ZERO)
        out.append(tuple(row))
    return ExtKernel(space, tuple(out))


def localize(subset: StateSet, mu: Dist) -> Dist:
    """Localization F_A(mu)(B) = mu(A & B): weights outside A are zeroed."""
    check_same_space(subset, mu)
    return Dist(
        mu.space,
        tuple(w if subset.mask >> i & 1 else ZERO for i, w in enumerate(mu.weights)),
    )


def test_kernel(phi_set: StateSet, positive: bool) -> Kernel:
    """Kernel of the test game: row(s) is delta_s localized to the test set."""
    space = phi_set.space
    target = phi_set if positive else phi_set.complement()
    return Kernel(space, tuple(localize(target, dirac(space, s)) for s in space))


def truncated_power_sums(kernel: Kernel, depth: int) -> ExtKernel:
    """Partial sums sum_{n<=depth} K^n; monotone lower bounds for the star."""
    acc = ExtKernel.identity(kernel.space)
    power: AnyKernel = Kernel.dirac_kernel(kernel.space)
    for _ in range(depth):
        power = convolve(power, kernel)
        acc = kernel_sum(acc, power)
    return acc


def pdl_kernel(model, game) -> ExtKernel:
    """Kernel of a program: primitives/tests combined by sum, convolution, star.

    Only the program fragment is supported; dual or demonic operators and
    primitives not interpreted by kernels raise ``UnsupportedFragmentError``.
    """
    from . import syntax

    space = model.space
    if isinstance(game, syntax.Prim):
        k = model.kernel(game.name)
        if k is None:
            raise UnsupportedFragmentError(
                f"primitive {game.name!r} is not interpreted by a kernel"
            )
        return ExtKernel.from_kernel(k)
    if isinstance(game, syntax.Eps):
        return ExtKernel.identity(space)
    if isinstance(game, (syntax.TestPos, syntax.TestNeg)):
        from .semantics import eval_formula

        phi_set = eval_formula(model, game.formula)
        return ExtKernel.from_kernel(
            test_kernel(phi_set, isinstance(game, syntax.TestPos))
        )
    if isinstance(game, syntax.ChoiceA):
        return kernel_sum(pdl_kernel(model, game.left), pdl_kernel(model, game.right))
    if isinstance(game, syntax.Seq):
        k = convolve(pdl_kernel(model, game.left), pdl_kernel(model, game.right))
        return k if isinstance(k, ExtKernel) else ExtKernel.from_kernel(k)
    if isinstance(game, syntax.StarA):
        return ext_star(pdl_kernel(model, game.inner))
    raise UnsupportedFragmentError(
        f"{type(game).__name__} is outside the program fragment"
    )
