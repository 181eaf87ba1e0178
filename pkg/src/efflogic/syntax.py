"""Abstract syntax, concrete-syntax parser/printer, and the game normalizer.

Concrete game syntax: ``|`` angelic choice, ``&`` demonic choice, ``;``
composition, postfix ``*`` angelic iteration, postfix ``#`` demonic
iteration, postfix ``^d`` dual, ``eps`` the empty game, ``[phi]?`` and
``[phi]!`` positive/negative tests.  Formulas: ``true``, identifiers,
``/\\`` conjunction, ``<game>{p/q} phi`` diamonds.  Precedence: postfix >
``;`` > ``&`` > ``|`` (the relative order of the two choices is a
convention of this tool); ``;`` and the choices associate left; a diamond
grabs the smallest formula to its right.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

from .space import format_rational


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


# ---------------------------------------------------------------- games


class Game:
    __slots__ = ()


@dataclass(frozen=True)
class Prim(Game):
    name: str


@dataclass(frozen=True)
class Eps(Game):
    pass


@dataclass(frozen=True)
class Dual(Game):
    inner: "GameExpr"


@dataclass(frozen=True)
class ChoiceA(Game):
    left: "GameExpr"
    right: "GameExpr"


@dataclass(frozen=True)
class ChoiceD(Game):
    left: "GameExpr"
    right: "GameExpr"


@dataclass(frozen=True)
class Seq(Game):
    left: "GameExpr"
    right: "GameExpr"


@dataclass(frozen=True)
class StarA(Game):
    inner: "GameExpr"


@dataclass(frozen=True)
class StarD(Game):
    inner: "GameExpr"


@dataclass(frozen=True)
class TestPos(Game):
    formula: "FormulaExpr"


@dataclass(frozen=True)
class TestNeg(Game):
    formula: "FormulaExpr"


GameExpr = Union[
    Prim, Eps, Dual, ChoiceA, ChoiceD, Seq, StarA, StarD, TestPos, TestNeg
]


# ------------------------------------------------------------- formulas


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class And(Formula):
    left: "FormulaExpr"
    right: "FormulaExpr"


@dataclass(frozen=True)
class Diamond(Formula):
    game: GameExpr
    bound: Fraction
    body: "FormulaExpr"

    def __post_init__(self) -> None:
        if not 0 <= self.bound < 1:
            # membership at q = 1 is vacuous under the strict ">" semantics
            raise ValueError(f"diamond bound must lie in [0, 1), got {self.bound}")


FormulaExpr = Union[Top, Atom, And, Diamond]


# ---------------------------------------------------------------- lexer

_SYMBOLS = ("|", "&", ";", "*", "#", "(", ")", "[", "]", "?", "!", "<", ">", "{", "}", "/")
_KEYWORDS = {"eps", "true"}


@dataclass(frozen=True)
class _Token:
    kind: str  # symbol text, "ident", "int", or "eof"
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch == "/" and i + 1 < len(text) and text[i + 1] == "\\":
            tokens.append(_Token("/\\", "/\\", line, col))
            i += 2
            col += 2
            continue
        if ch == "^":
            if i + 1 < len(text) and text[i + 1] == "d":
                tokens.append(_Token("^d", "^d", line, col))
                i += 2
                col += 2
                continue
            raise ParseError("expected 'd' after '^'", line, col)
        if ch in _SYMBOLS:
            tokens.append(_Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(_Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            kind = word if word in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.line, tok.col)
        return self.next()

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    # games; precedence: '|' < '&' < ';' < postfix

    def game(self) -> GameExpr:
        node = self.game_demonic()
        while self.peek().kind == "|":
            self.next()
            node = ChoiceA(node, self.game_demonic())
        return node

    def game_demonic(self) -> GameExpr:
        node = self.game_seq()
        while self.peek().kind == "&":
            self.next()
            node = ChoiceD(node, self.game_seq())
        return node

    def game_seq(self) -> GameExpr:
        node = self.game_postfix()
        while self.peek().kind == ";":
            self.next()
            node = Seq(node, self.game_postfix())
        return node

    def game_postfix(self) -> GameExpr:
        node = self.game_unit()
        while True:
            kind = self.peek().kind
            if kind == "*":
                self.next()
                node = StarA(node)
            elif kind == "#":
                self.next()
                node = StarD(node)
            elif kind == "^d":
                self.next()
                node = Dual(node)
            else:
                return node

    def game_unit(self) -> GameExpr:
        tok = self.peek()
        if tok.kind == "ident":
            self.next()
            return Prim(tok.text)
        if tok.kind == "eps":
            self.next()
            return Eps()
        if tok.kind == "(":
            self.next()
            node = self.game()
            self.expect(")")
            return node
        if tok.kind == "[":
            self.next()
            phi = self.formula()
            self.expect("]")
            marker = self.peek()
            if marker.kind == "?":
                self.next()
                return TestPos(phi)
            if marker.kind == "!":
                self.next()
                return TestNeg(phi)
            raise ParseError("expected '?' or '!' after test", marker.line, marker.col)
        raise self.fail(f"expected a game, found {tok.text!r}")

    # formulas

    def formula(self) -> FormulaExpr:
        node = self.formula_unit()
        while self.peek().kind == "/\\":
            self.next()
            node = And(node, self.formula_unit())
        return node

    def formula_unit(self) -> FormulaExpr:
        tok = self.peek()
        if tok.kind == "true":
            self.next()
            return Top()
        if tok.kind == "ident":
            self.next()
            return Atom(tok.text)
        if tok.kind == "(":
            self.next()
            node = self.formula()
            self.expect(")")
            return node
        if tok.kind == "<":
            self.next()
            game = self.game()
            self.expect(">")
            self.expect("{")
            bound = self.rational()
            self.expect("}")
            body = self.formula_unit()
            try:
                return Diamond(game, bound, body)
            except ValueError as exc:
                raise ParseError(str(exc), tok.line, tok.col) from None
        raise self.fail(f"expected a formula, found {tok.text!r}")

    def rational(self) -> Fraction:
        num = self.expect("int")
        if self.peek().kind == "/":
            self.next()
            den = self.expect("int")
            if int(den.text) == 0:
                raise ParseError("zero denominator", den.line, den.col)
            return Fraction(int(num.text), int(den.text))
        return Fraction(int(num.text))


def parse_game(text: str) -> GameExpr:
    p = _Parser(text)
    node = p.game()
    p.expect("eof")
    return node


def parse_formula(text: str) -> FormulaExpr:
    p = _Parser(text)
    node = p.formula()
    p.expect("eof")
    return node


# -------------------------------------------------------------- printer

_PREC_CHOICE_A = 1
_PREC_CHOICE_D = 2
_PREC_SEQ = 3
_PREC_POSTFIX = 4
_PREC_ATOM = 5


def _game_prec(g: GameExpr) -> int:
    if isinstance(g, ChoiceA):
        return _PREC_CHOICE_A
    if isinstance(g, ChoiceD):
        return _PREC_CHOICE_D
    if isinstance(g, Seq):
        return _PREC_SEQ
    if isinstance(g, (Dual, StarA, StarD)):
        return _PREC_POSTFIX
    return _PREC_ATOM


def _print_child(child: GameExpr, parent_prec: int, right_of_binop: bool) -> str:
    text = print_game(child)
    prec = _game_prec(child)
    if prec < parent_prec or (right_of_binop and prec == parent_prec):
        return f"({text})"
    return text


def print_game(g: GameExpr) -> str:
    if isinstance(g, Prim):
        return g.name
    if isinstance(g, Eps):
        return "eps"
    if isinstance(g, Dual):
        return _print_child(g.inner, _PREC_POSTFIX, False) + "^d"
    if isinstance(g, StarA):
        return _print_child(g.inner, _PREC_POSTFIX, False) + "*"
    if isinstance(g, StarD):
        return _print_child(g.inner, _PREC_POSTFIX, False) + "#"
    if isinstance(g, ChoiceA):
        return (
            _print_child(g.left, _PREC_CHOICE_A, False)
            + " | "
            + _print_child(g.right, _PREC_CHOICE_A, True)
        )
    if isinstance(g, ChoiceD):
        return (
            _print_child(g.left, _PREC_CHOICE_D, False)
            + " & "
            + _print_child(g.right, _PREC_CHOICE_D, True)
        )
    if isinstance(g, Seq):
        return (
            _print_child(g.left, _PREC_SEQ, False)
            + " ; "
            + _print_child(g.right, _PREC_SEQ, True)
        )
    if isinstance(g, TestPos):
        return f"[{print_formula(g.formula)}]?"
    if isinstance(g, TestNeg):
        return f"[{print_formula(g.formula)}]!"
    raise TypeError(f"not a game: {g!r}")


def print_formula(phi: FormulaExpr) -> str:
    if isinstance(phi, Top):
        return "true"
    if isinstance(phi, Atom):
        return phi.name
    if isinstance(phi, And):
        left = print_formula(phi.left)
        right = print_formula(phi.right)
        if isinstance(phi.left, And):
            left = f"({left})"
        if isinstance(phi.right, And):
            right = f"({right})"
        return f"{left} /\\ {right}"
    if isinstance(phi, Diamond):
        body = print_formula(phi.body)
        if isinstance(phi.body, And):
            body = f"({body})"
        return f"<{print_game(phi.game)}>{{{format_rational(phi.bound)}}} {body}"
    raise TypeError(f"not a formula: {phi!r}")


# ----------------------------------------------------------- normalizer

ATOMIC_GAMES = (Prim, Eps, TestPos, TestNeg)
_ATOMIC = ATOMIC_GAMES


def normalize_head(g: GameExpr) -> GameExpr:
    """Rewrite the head until it is directly covered by a semantic rule.

    Allowed heads: atomic (primitive, empty game, test), Dual, ChoiceA,
    Seq with atomic head, or Seq with a StarA head.  The rewrites are the
    standard game identities: dual involution, demonic operators expressed
    through their angelic counterparts, sequence reassociation, right
    distributivity over angelic choice, and dual pushed through sequences.
    Termination: each step either lowers the dual-depth of the head or
    shrinks the duplication-aware weight w(Seq) = w(left) * (w(right)+1).
    """
    while True:
        if isinstance(g, _ATOMIC):
            return g
        if isinstance(g, Dual):
            if isinstance(g.inner, Dual):
                g = g.inner.inner
                continue
            return g
        if isinstance(g, ChoiceA):
            return g
        if isinstance(g, ChoiceD):
            g = Dual(ChoiceA(Dual(g.left), Dual(g.right)))
            continue
        if isinstance(g, StarD):
            g = Dual(StarA(Dual(g.inner)))
            continue
        if isinstance(g, StarA):
            # rule F only covers compositions; pad with the empty game
            return Seq(g, Eps())
        if isinstance(g, Seq):
            left = g.left
            if isinstance(left, _ATOMIC) or isinstance(left, StarA):
                return g
            if isinstance(left, Seq):
                g = Seq(left.left, Seq(left.right, g.right))
            elif isinstance(left, ChoiceA):
                g = ChoiceA(Seq(left.left, g.right), Seq(left.right, g.right))
            elif isinstance(left, ChoiceD):
                g = Seq(Dual(ChoiceA(Dual(left.left), Dual(left.right))), g.right)
            elif isinstance(left, StarD):
                g = Seq(Dual(StarA(Dual(left.inner))), g.right)
            elif isinstance(left, Dual):
                if isinstance(left.inner, Dual):
                    g = Seq(left.inner.inner, g.right)
                else:
                    g = Dual(Seq(left.inner, Dual(g.right)))
            else:
                raise TypeError(f"not a game: {left!r}")
            continue
        raise TypeError(f"not a game: {g!r}")


def game_size(g: GameExpr) -> int:
    if isinstance(g, (Prim, Eps)):
        return 1
    if isinstance(g, (Dual, StarA, StarD)):
        return 1 + game_size(g.inner)
    if isinstance(g, (ChoiceA, ChoiceD, Seq)):
        return 1 + game_size(g.left) + game_size(g.right)
    if isinstance(g, (TestPos, TestNeg)):
        return 1
    raise TypeError(f"not a game: {g!r}")


def is_dual_free(g: GameExpr) -> bool:
    if isinstance(g, (Dual, StarD, ChoiceD)):
        return False
    if isinstance(g, (StarA,)):
        return is_dual_free(g.inner)
    if isinstance(g, (ChoiceA, Seq)):
        return is_dual_free(g.left) and is_dual_free(g.right)
    return True


def is_test_free(g: GameExpr) -> bool:
    if isinstance(g, (TestPos, TestNeg)):
        return False
    if isinstance(g, (Dual, StarA, StarD)):
        return is_test_free(g.inner)
    if isinstance(g, (ChoiceA, ChoiceD, Seq)):
        return is_test_free(g.left) and is_test_free(g.right)
    return True


def is_program(g: GameExpr) -> bool:
    """Member of the PDL fragment: primitives/tests with union, seq, star."""
    if isinstance(g, (Prim, Eps, TestPos, TestNeg)):
        return True
    if isinstance(g, StarA):
        return is_program(g.inner)
    if isinstance(g, (ChoiceA, Seq)):
        return is_program(g.left) and is_program(g.right)
    return False


def game_primitives(g: GameExpr) -> set[str]:
    if isinstance(g, Prim):
        return {g.name}
    if isinstance(g, (Dual, StarA, StarD)):
        return game_primitives(g.inner)
    if isinstance(g, (ChoiceA, ChoiceD, Seq)):
        return game_primitives(g.left) | game_primitives(g.right)
    return set()
