"""
Nós da AST das expressões de taxas vitais em (s, Q).

Os nós são imutáveis. Os construtores `add`, `sub`, `mul`, `div`, `neg` e
`power` fazem dobra de constantes e as identidades com 0 e 1, o que mantém as
árvores das derivadas pequenas (sem pretender ser um CAS).
"""

from dataclasses import dataclass
from typing import FrozenSet

VARIABLES = ("s", "Q")
FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")
COMPARISONS = ("<", "<=", ">", ">=")


class Expr:
    precedence = 5

    @property
    def free(self) -> FrozenSet[str]:
        raise NotImplementedError

    def depends_on(self, var: str) -> bool:
        return var in self.free

    def __str__(self):
        from exprlang.calculus import to_source

        return to_source(self)

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)


def _coerce(value) -> Expr:
    return value if isinstance(value, Expr) else Num(float(value))


@dataclass(frozen=True, repr=False)
class Num(Expr):
    value: float

    @property
    def free(self):
        return frozenset()

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    name: str

    @property
    def free(self):
        return frozenset({self.name})

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class BinOp(Expr):
    left: Expr
    right: Expr
    op_symbol = "?"

    @property
    def free(self):
        return self.left.free | self.right.free

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(BinOp):
    precedence = 1
    op_symbol = "+"


class Sub(BinOp):
    precedence = 1
    op_symbol = "-"


class Mul(BinOp):
    precedence = 2
    op_symbol = "*"


class Div(BinOp):
    precedence = 2
    op_symbol = "/"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr
    precedence = 3

    @property
    def free(self):
        return self.arg.free

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    """Potência com expoente inteiro constante."""

    base: Expr
    exponent: int
    precedence = 4

    @property
    def free(self):
        return self.base.free

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    arg: Expr

    @property
    def free(self):
        return self.arg.free

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Compare(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def free(self):
        return self.left.free | self.right.free

    def __repr__(self):
        return f"Compare({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Piecewise(Expr):
    """piecewise(cond, then, else); em empates a condição conta como satisfeita."""

    cond: Compare
    then: Expr
    other: Expr

    @property
    def free(self):
        return self.cond.free | self.then.free | self.other.free

    def __repr__(self):
        return f"Piecewise({self.cond!r}, {self.then!r}, {self.other!r})"


ZERO = Num(0.0)
ONE = Num(1.0)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


def is_one(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 1.0


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0.0:
        return Num(a.value / b.value)
    if is_zero(a) and not is_zero(b):
        return ZERO
    if is_one(b):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Num) and (base.value != 0.0 or exponent > 0):
        return Num(base.value**exponent)
    return Pow(base, exponent)


def piecewise(cond: Compare, then: Expr, other: Expr) -> Expr:
    if then == other:
        return then
    return Piecewise(cond, then, other)
