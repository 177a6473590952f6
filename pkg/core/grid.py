"""
Malhas uniformes sobre [0, m], funções amostradas e quadratura.

Tudo é regra do trapézio composta (inclusive as integrais cumulativas), de modo
que ∫_0^s + ∫_s^m = ∫_0^m vale exatamente nos nós. As funções `*_values`
operam em arrays crus (com eixos de lote à esquerda) e são usadas pelos laços
numéricos internos; as operações públicas recebem e devolvem `GridFunction`.
"""

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from schemas.errors import DomainError

Number = Union[int, float]


@dataclass(frozen=True)
class Grid:
    m: float
    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"m deve ser positivo, recebido {self.m}", {"m": self.m})
        if self.n < 8 or self.n % 2:
            raise DomainError(f"n deve ser par e >= 8, recebido {self.n}", {"n": self.n})
        nodes = np.linspace(0.0, float(self.m), self.n + 1)
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def h(self) -> float:
        return float(self.m) / self.n

    def refined(self) -> "Grid":
        return Grid(self.m, 2 * self.n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n + 1,):
            raise DomainError(
                f"esperados {self.grid.n + 1} valores, recebidos {values.shape}",
                {"shape": list(values.shape)},
            )
        if not np.all(np.isfinite(values)):
            raise DomainError("GridFunction com valores não finitos")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return cls(grid, np.broadcast_to(f(grid.nodes), grid.nodes.shape))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "GridFunction":
        return cls(grid, np.full(grid.n + 1, float(c)))

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        if np.any(s_arr < 0.0) or np.any(s_arr > self.grid.m):
            raise DomainError(f"avaliação fora de [0, {self.grid.m}]", {"s": s_arr.tolist()})
        out = np.interp(s_arr, self.grid.nodes, self.values)
        return float(out) if out.ndim == 0 else out

    def _check(self, other: "GridFunction"):
        if other.grid != self.grid:
            raise DomainError("malhas incompatíveis")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values + other.values)
        return GridFunction(self.grid, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.grid, self.values * other.values)
        return GridFunction(self.grid, self.values * float(other))

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


# ---------------------------------------------------------------------------
# núcleo em arrays crus


def trapz_values(values: np.ndarray, h: float) -> np.ndarray:
    return trapezoid(values, dx=h, axis=-1)


def cumulative_values(values: np.ndarray, h: float, from_zero: bool = True) -> np.ndarray:
    acc = cumulative_trapezoid(values, dx=h, axis=-1, initial=0.0)
    if from_zero:
        return acc
    # total - acc: o último nó fica exatamente 0
    return acc[..., -1:] - acc


def environment_values(u: np.ndarray, alpha: float, w: np.ndarray, h: float) -> np.ndarray:
    """Q = α∫_0^s wu + ∫_s^m wu, escrito como total + (α-1)∫_0^s wu (monótono exato)."""
    acc = cumulative_trapezoid(w * u, dx=h, axis=-1, initial=0.0)
    return acc[..., -1:] + (alpha - 1.0) * acc


# ---------------------------------------------------------------------------
# operações públicas


def integrate(f: GridFunction, a: Number, b: Number) -> float:
    """Trapézio composto de ∫_a^b f, exato para f linear por partes nos nós."""
    m = f.grid.m
    if a > b:
        raise DomainError(f"limites invertidos: a={a} > b={b}", {"a": a, "b": b})
    if a < 0 or b > m:
        raise DomainError(f"limites fora de [0, {m}]", {"a": a, "b": b})
    if a == 0 and b == m:
        return float(trapz_values(f.values, f.grid.h))
    nodes = f.grid.nodes
    inner = (nodes > a) & (nodes < b)
    xs = np.concatenate(([a], nodes[inner], [b]))
    ys = np.concatenate(([f(a)], f.values[inner], [f(b)]))
    return float(trapezoid(ys, xs))


def cumulative_integral(f: GridFunction, from_zero: bool = True) -> GridFunction:
    return GridFunction(f.grid, cumulative_values(f.values, f.grid.h, from_zero))


def environment(u: GridFunction, alpha: float, w: GridFunction) -> GridFunction:
    if u.grid != w.grid:
        raise DomainError("u e w em malhas diferentes")
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha fora de [0,1]: {alpha}", {"alpha": alpha})
    if np.any(w.values <= 0.0):
        raise DomainError("o peso w deve ser positivo em todos os nós")
    return GridFunction(u.grid, environment_values(u.values, alpha, w.values, u.grid.h))
