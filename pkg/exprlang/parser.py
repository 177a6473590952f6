"""
Parser descendente recursivo da linguagem de expressões.

Gramática (EBNF), precedência ^ > menos unário > *,/ > +,-:

    expr      = term { ("+" | "-") term } ;
    term      = unary { ("*" | "/") unary } ;
    unary     = ("-" | "+") unary | power ;
    power     = atom [ "^" exponent ] ;
    exponent  = "-" exponent | power ;          (* inteiro constante *)
    atom      = number | "s" | "Q" | "(" expr ")"
              | func "(" expr ")"
              | "piecewise" "(" cond "," expr "," expr ")" ;
    func      = "exp" | "log" | "sin" | "cos" | "sqrt" ;
    cond      = expr ("<" | "<=" | ">" | ">=") expr ;   (* não pode depender de s e Q ao mesmo tempo *)
    number    = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;

Os offsets dos erros são em bytes da entrada UTF-8.
"""

import re
from dataclasses import dataclass
from typing import List, Union

from exprlang.nodes import (
    COMPARISONS,
    FUNCTIONS,
    VARIABLES,
    Compare,
    Expr,
    Func,
    Num,
    Var,
    add,
    div,
    mul,
    neg,
    piecewise,
    power,
    sub,
)
from schemas.errors import ExprSyntaxError, UnknownIdentifierError

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|[-+*/^(),<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


def tokenize(src: str) -> List[Token]:
    tokens: List[Token] = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None:
            raise ExprSyntaxError(f"caractere inesperado {src[pos]!r}", _byte_offset(src, pos))
        kind = match.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, match.group(), _byte_offset(src, pos)))
        pos = match.end()
    tokens.append(Token("end", "", _byte_offset(src, len(src))))
    return tokens


def _byte_offset(src: str, index: int) -> int:
    return len(src[:index].encode("utf-8"))


class _Parser:
    def __init__(self, src: str):
        self.tokens = tokenize(src)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        token = self.current
        self.pos += 1
        return token

    def _accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.pos += 1
            return True
        return False

    def _expect(self, text: str) -> Token:
        token = self.current
        if token.kind == "end":
            raise ExprSyntaxError(f"fim inesperado da entrada, esperado '{text}'", token.offset)
        if not (token.kind == "op" and token.text == text):
            raise ExprSyntaxError(f"esperado '{text}', encontrado '{token.text}'", token.offset)
        self.pos += 1
        return token

    def parse(self) -> Expr:
        expr = self.expr()
        if self.current.kind != "end":
            raise ExprSyntaxError(f"token inesperado '{self.current.text}'", self.current.offset)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while True:
            if self._accept("+"):
                node = add(node, self.term())
            elif self._accept("-"):
                node = sub(node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            if self._accept("*"):
                node = mul(node, self.unary())
            elif self._accept("/"):
                node = div(node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        if self._accept("-"):
            return neg(self.unary())
        if self._accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._accept("^"):
            offset = self.current.offset
            exponent = self.exponent()
            if not isinstance(exponent, Num) or float(exponent.value) != int(exponent.value):
                raise ExprSyntaxError("o expoente deve ser um inteiro constante", offset)
            return power(base, int(exponent.value))
        return base

    def exponent(self) -> Expr:
        if self._accept("-"):
            return neg(self.exponent())
        return self.power()

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "end":
            raise ExprSyntaxError("fim inesperado da entrada", token.offset)
        if token.kind == "number":
            self._advance()
            return Num(float(token.text))
        if token.kind == "ident":
            self._advance()
            if token.text in VARIABLES:
                return Var(token.text)
            if token.text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Func(token.text, arg)
            if token.text == "piecewise":
                return self._piecewise(token)
            raise UnknownIdentifierError(token.text, token.offset)
        if self._accept("("):
            node = self.expr()
            self._expect(")")
            return node
        raise ExprSyntaxError(f"token inesperado '{token.text}'", token.offset)

    def _piecewise(self, token: Token) -> Expr:
        self._expect("(")
        cond_offset = self.current.offset
        left = self.expr()
        op = self.current
        if not (op.kind == "op" and op.text in COMPARISONS):
            raise ExprSyntaxError("piecewise espera uma comparação", op.offset)
        self._advance()
        right = self.expr()
        cond = Compare(op.text, left, right)
        if {"s", "Q"} <= cond.free:
            raise ExprSyntaxError(
                "a condição do piecewise não pode depender de s e Q ao mesmo tempo",
                cond_offset,
            )
        self._expect(",")
        then = self.expr()
        self._expect(",")
        other = self.expr()
        self._expect(")")
        return piecewise(cond, then, other)


def parse(src: Union[str, bytes]) -> Expr:
    """Converte o texto em AST. Levanta `ExprSyntaxError` com offset em bytes."""
    if isinstance(src, bytes):
        try:
            src = src.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ExprSyntaxError("sequência UTF-8 inválida", e.start) from e
    return _Parser(src).parse()
