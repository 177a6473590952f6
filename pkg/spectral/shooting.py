"""
Integração RK4 clássica de passo 2h sobre a malha, vetorizada em lotes de λ.

Os coeficientes são amostrados nos nós; o passo vai do nó 2k ao nó 2k+2 e
usa o nó ímpar 2k+1 como ponto médio (por isso n é par). Componentes de
quadratura são integradas junto com o estado, com a mesma ordem.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from core.grid import Grid
from linearization.coefficients import LinearizedCoefficients
from schemas.errors import ShootingOverflowError

logger = logging.getLogger(__name__)

# rhs(j, y) -> dy/ds no nó j; y tem shape (componentes, *lote)
RightHandSide = Callable[[int, np.ndarray], np.ndarray]


def rk4_sweep(grid: Grid, y0: np.ndarray, rhs: RightHandSide, lambdas: np.ndarray, keep_path: bool = False):
    """
    Integra de s=0 a s=m. Devolve o estado final ou, com `keep_path`, o
    caminho nos nós pares com shape (n/2+1, *y0.shape).
    """
    h = grid.h
    y = np.array(y0, dtype=complex)
    path = [y.copy()] if keep_path else None
    for k in range(grid.n // 2):
        j = 2 * k
        k1 = rhs(j, y)
        k2 = rhs(j + 1, y + h * k1)
        k3 = rhs(j + 1, y + h * k2)
        k4 = rhs(j + 2, y + 2.0 * h * k3)
        y = y + (h / 3.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            bad = ~np.all(np.isfinite(y.reshape(y.shape[0], -1, y.shape[-1])), axis=(0, 1))
            lam = complex(np.atleast_1d(lambdas)[int(np.argmax(bad))])
            raise ShootingOverflowError(lam, float(grid.nodes[j + 2]))
        if keep_path:
            path.append(y.copy())
    return np.stack(path) if keep_path else y


@dataclass(frozen=True)
class FundamentalSolutions:
    """V1, V2 (dados iniciais (1,0) e (0,1)) nos nós pares, para um lote de λ."""

    s: np.ndarray  # nós pares
    V: np.ndarray  # shape (2, L, n/2+1)
    dV: np.ndarray  # shape (2, L, n/2+1)
    I1: np.ndarray  # ∫(w(0)/w)β* V_i', shape (2, L)
    I2: np.ndarray  # ∫β_Q* u* V_i, shape (2, L)

    def wronskian(self) -> np.ndarray:
        return self.V[0] * self.dV[1] - self.dV[0] * self.V[1]


def _second_order_rhs(c: LinearizedCoefficients, lam: np.ndarray) -> RightHandSide:
    g = 1.0 / c.gamma_star.values
    w = c.w.values
    a = c.rho_star.values * g - c.w_prime.values / w
    q = (c.alpha - 1.0) * w * c.sigma_star.values * g
    weight = w[0] / w * c.beta_star.values
    bq = c.betaQ_star.values

    def rhs(j: int, y: np.ndarray) -> np.ndarray:
        V, dV = y[0], y[1]
        out = np.empty_like(y)
        out[0] = dV
        out[1] = -(a[j] + lam * g[j]) * dV - q[j] * V
        out[2] = weight[j] * dV
        out[3] = bq[j] * V
        return out

    return rhs


def shoot(c: LinearizedCoefficients, lambdas, keep_path: bool = False):
    """
    Resolve V'' + V'((ρ*+λ)/γ* - w'/w) + V(α-1)wσ*/γ* = 0 para as duas bases
    canônicas e cada λ do lote. Estado: (V, V', I1, I2) com shape (4, 2, L).
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    y0 = np.zeros((4, 2, lam.size), dtype=complex)
    y0[0, 0] = 1.0
    y0[1, 1] = 1.0
    return rk4_sweep(c.grid, y0, _second_order_rhs(c, lam), lam, keep_path=keep_path)


def fundamental_solutions(c: LinearizedCoefficients, lam) -> FundamentalSolutions:
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    path = shoot(c, lam_arr, keep_path=True)  # (k, 4, 2, L)
    return FundamentalSolutions(
        s=c.grid.nodes[::2],
        V=np.moveaxis(path[:, 0], 0, -1),
        dV=np.moveaxis(path[:, 1], 0, -1),
        I1=path[-1, 2],
        I2=path[-1, 3],
    )


def _first_order_rhs(c: LinearizedCoefficients, lam: np.ndarray) -> RightHandSide:
    """a' = -(λ+ρ*)/γ* a ; b' = -(λ+ρ*)/γ* b - σ*/γ* ; mais ∫wa, ∫wb, ∫β*a, ∫β*b."""
    g = 1.0 / c.gamma_star.values
    rho = c.rho_star.values
    forcing = c.sigma_star.values * g
    w = c.w.values
    beta = c.beta_star.values

    def rhs(j: int, y: np.ndarray) -> np.ndarray:
        A, B = y[0], y[1]
        decay = -(lam + rho[j]) * g[j]
        out = np.empty_like(y)
        out[0] = decay * A
        out[1] = decay * B - forcing[j]
        out[2] = w[j] * A
        out[3] = w[j] * B
        out[4] = beta[j] * A
        out[5] = beta[j] * B
        return out

    return rhs


def shoot_first_order(c: LinearizedCoefficients, lambdas) -> np.ndarray:
    """Estado final (a, b, ∫wa, ∫wb, ∫β*a, ∫β*b) com shape (6, L); a(0)=1, b(0)=0."""
    lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    y0 = np.zeros((6, lam.size), dtype=complex)
    y0[0] = 1.0
    return rk4_sweep(c.grid, y0, _first_order_rhs(c, lam), lam)
