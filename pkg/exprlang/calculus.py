"""
Derivação simbólica, avaliação vetorizada e impressão de expressões.

Despacho por tipo de nó com `functools.singledispatch`. A avaliação aceita
escalares ou arrays numpy para s e Q (com broadcasting) e reporta divisão por
zero, log de argumento não positivo, raiz de negativo e overflow como
`ExprEvaluationError` com o trecho ofensor.
"""

from functools import singledispatch
from typing import Union

import numpy as np

from exprlang.nodes import (
    ONE,
    ZERO,
    Add,
    Compare,
    Div,
    Expr,
    Func,
    Mul,
    Neg,
    Num,
    Piecewise,
    Pow,
    Sub,
    Var,
    add,
    div,
    mul,
    neg,
    piecewise,
    power,
    sub,
)
from schemas.errors import ExprEvaluationError

ArrayLike = Union[float, np.ndarray]


# ---------------------------------------------------------------------------
# derivada


@singledispatch
def diff(e: Expr, var: str) -> Expr:
    raise NotImplementedError(f"não sei derivar {type(e).__name__}")


@diff.register
def _(e: Num, var: str) -> Expr:
    return ZERO


@diff.register
def _(e: Var, var: str) -> Expr:
    return ONE if e.name == var else ZERO


@diff.register
def _(e: Add, var: str) -> Expr:
    return add(diff(e.left, var), diff(e.right, var))


@diff.register
def _(e: Sub, var: str) -> Expr:
    return sub(diff(e.left, var), diff(e.right, var))


@diff.register
def _(e: Mul, var: str) -> Expr:
    return add(mul(diff(e.left, var), e.right), mul(e.left, diff(e.right, var)))


@diff.register
def _(e: Div, var: str) -> Expr:
    # (f/g)' = f'/g - f g'/g^2
    num, den = e.left, e.right
    return sub(div(diff(num, var), den), div(mul(num, diff(den, var)), power(den, 2)))


@diff.register
def _(e: Neg, var: str) -> Expr:
    return neg(diff(e.arg, var))


@diff.register
def _(e: Pow, var: str) -> Expr:
    return mul(mul(Num(float(e.exponent)), power(e.base, e.exponent - 1)), diff(e.base, var))


@diff.register
def _(e: Func, var: str) -> Expr:
    du = diff(e.arg, var)
    if e.name == "exp":
        outer = e
    elif e.name == "log":
        return div(du, e.arg)
    elif e.name == "sin":
        outer = Func("cos", e.arg)
    elif e.name == "cos":
        outer = neg(Func("sin", e.arg))
    elif e.name == "sqrt":
        return div(du, mul(Num(2.0), e))
    else:
        raise NotImplementedError(e.name)
    return mul(outer, du)


@diff.register
def _(e: Piecewise, var: str) -> Expr:
    return piecewise(e.cond, diff(e.then, var), diff(e.other, var))


# ---------------------------------------------------------------------------
# avaliação


def evaluate(e: Expr, s: ArrayLike, Q: ArrayLike) -> ArrayLike:
    """Avalia `e` em (s, Q). Escalares devolvem float; arrays devolvem array."""
    s_arr, q_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(Q, dtype=float))
    shape = s_arr.shape
    s_flat = np.ascontiguousarray(s_arr).reshape(-1)
    q_flat = np.ascontiguousarray(q_arr).reshape(-1)
    with np.errstate(all="ignore"):
        out = np.broadcast_to(_ev(e, s_flat, q_flat), s_flat.shape).reshape(shape)
    if not np.all(np.isfinite(out)):
        raise ExprEvaluationError("resultado não finito", to_source(e))
    if out.ndim == 0:
        return float(out)
    return np.array(out, dtype=float)


@singledispatch
def _ev(e: Expr, s: np.ndarray, q: np.ndarray):
    raise NotImplementedError(type(e).__name__)


@_ev.register
def _(e: Num, s, q):
    return e.value


@_ev.register
def _(e: Var, s, q):
    return s if e.name == "s" else q


@_ev.register
def _(e: Add, s, q):
    return _ev(e.left, s, q) + _ev(e.right, s, q)


@_ev.register
def _(e: Sub, s, q):
    return _ev(e.left, s, q) - _ev(e.right, s, q)


@_ev.register
def _(e: Mul, s, q):
    return _ev(e.left, s, q) * _ev(e.right, s, q)


@_ev.register
def _(e: Div, s, q):
    den = _ev(e.right, s, q)
    if np.any(np.asarray(den) == 0.0):
        raise ExprEvaluationError("divisão por zero", to_source(e))
    return _ev(e.left, s, q) / den


@_ev.register
def _(e: Neg, s, q):
    return -_ev(e.arg, s, q)


@_ev.register
def _(e: Pow, s, q):
    base = _ev(e.base, s, q)
    if e.exponent < 0:
        if np.any(np.asarray(base) == 0.0):
            raise ExprEvaluationError("potência negativa de zero", to_source(e))
        return 1.0 / np.power(base, -e.exponent)
    return np.power(base, e.exponent)


@_ev.register
def _(e: Func, s, q):
    x = _ev(e.arg, s, q)
    if e.name == "log":
        if np.any(np.asarray(x) <= 0.0):
            raise ExprEvaluationError("log de argumento não positivo", to_source(e))
        return np.log(x)
    if e.name == "sqrt":
        if np.any(np.asarray(x) < 0.0):
            raise ExprEvaluationError("raiz de argumento negativo", to_source(e))
        return np.sqrt(x)
    if e.name == "exp":
        out = np.exp(x)
        if not np.all(np.isfinite(out)):
            raise ExprEvaluationError("overflow em exp", to_source(e))
        return out
    return np.sin(x) if e.name == "sin" else np.cos(x)


def _condition(c: Compare, s, q) -> np.ndarray:
    gap = np.broadcast_to(_ev(c.left, s, q) - _ev(c.right, s, q), s.shape)
    # empates caem no ramo "then"
    if c.op in ("<", "<="):
        return gap <= 0.0
    return gap >= 0.0


@_ev.register
def _(e: Piecewise, s, q):
    mask = _condition(e.cond, s, q)
    out = np.empty(s.shape)
    if np.any(mask):
        out[mask] = _ev(e.then, s[mask], q[mask])
    rest = ~mask
    if np.any(rest):
        out[rest] = _ev(e.other, s[rest], q[rest])
    return out


# ---------------------------------------------------------------------------
# impressão


@singledispatch
def to_source(e: Expr) -> str:
    raise NotImplementedError(type(e).__name__)


def _wrap(e: Expr, need: bool) -> str:
    text = to_source(e)
    return f"({text})" if need else text


@to_source.register
def _(e: Num) -> str:
    text = repr(float(e.value))
    return f"({text})" if e.value < 0 else text


@to_source.register
def _(e: Var) -> str:
    return e.name


def _binary(e, right_strict: bool) -> str:
    left = _wrap(e.left, e.left.precedence < e.precedence)
    right_need = e.right.precedence <= e.precedence if right_strict else e.right.precedence < e.precedence
    right = _wrap(e.right, right_need)
    return f"{left} {e.op_symbol} {right}"


@to_source.register
def _(e: Add) -> str:
    return _binary(e, right_strict=False)


@to_source.register
def _(e: Sub) -> str:
    return _binary(e, right_strict=True)


@to_source.register
def _(e: Mul) -> str:
    return _binary(e, right_strict=False)


@to_source.register
def _(e: Div) -> str:
    return _binary(e, right_strict=True)


@to_source.register
def _(e: Neg) -> str:
    return "-" + _wrap(e.arg, e.arg.precedence < Pow.precedence)


@to_source.register
def _(e: Pow) -> str:
    base = _wrap(e.base, e.base.precedence <= Pow.precedence)
    exponent = str(e.exponent) if e.exponent >= 0 else f"({e.exponent})"
    return f"{base}^{exponent}"


@to_source.register
def _(e: Func) -> str:
    return f"{e.name}({to_source(e.arg)})"


@to_source.register
def _(e: Compare) -> str:
    return f"{to_source(e.left)} {e.op} {to_source(e.right)}"


@to_source.register
def _(e: Piecewise) -> str:
    return f"piecewise({to_source(e.cond)}, {to_source(e.then)}, {to_source(e.other)})"
