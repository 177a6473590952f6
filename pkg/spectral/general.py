"""
Determinante característico do caso geral.

Para α ∈ [0,1): D(λ) = H1 J2 - H2 J1 com
H_i = V_i'(0) - ∫(w(0)/w)β*V_i' - (α-1)w(0)∫β_Q*u*V_i e J_i = αV_i(0) - V_i(m).

Para α = 1, V é constante e a autofunção satisfaz um problema de primeira
ordem com V como parâmetro escalar; o determinante 2x2 correspondente é
uma extensão (marcada nos relatórios) que coincide com 1 - K(λ) quando
σ* ≡ 0.
"""

from typing import Callable

import numpy as np

from core.grid import trapz_values
from linearization.coefficients import LinearizedCoefficients
from schemas.errors import WrongRegimeError
from spectral.shooting import shoot, shoot_first_order

Determinant = Callable[[np.ndarray], np.ndarray]


def determinant_values(c: LinearizedCoefficients, lambdas) -> np.ndarray:
    if c.alpha >= 1.0:
        raise WrongRegimeError("o determinante geral exige α < 1", {"alpha": c.alpha})
    y = shoot(c, lambdas)  # (4, 2, L)
    V_end, I1, I2 = y[0], y[2], y[3]
    w0 = c.w.values[0]
    V0 = np.array([1.0, 0.0])[:, None]
    dV0 = np.array([0.0, 1.0])[:, None]
    H = dV0 - I1 - (c.alpha - 1.0) * w0 * I2
    J = c.alpha * V0 - V_end
    return H[0] * J[1] - H[1] * J[0]


def alpha1_determinant_values(c: LinearizedCoefficients, lambdas) -> np.ndarray:
    if c.alpha != 1.0:
        raise WrongRegimeError("o determinante de α = 1 exige α = 1", {"alpha": c.alpha})
    _, _, wa, wb, ba, bb = shoot_first_order(c, lambdas)
    coupling = trapz_values(c.betaQ_star.values, c.grid.h)
    return (1.0 - wb) * (1.0 - ba) - wa * (bb + coupling)


def char_determinant(c: LinearizedCoefficients, lam: complex) -> complex:
    return complex(determinant_values(c, [lam])[0])


def char_determinant_alpha1(c: LinearizedCoefficients, lam: complex) -> complex:
    return complex(alpha1_determinant_values(c, [lam])[0])


def characteristic_function(c: LinearizedCoefficients) -> Determinant:
    """Versão em lote do determinante adequado ao α dos coeficientes."""
    if c.alpha == 1.0:
        return lambda lambdas: alpha1_determinant_values(c, lambdas)
    return lambda lambdas: determinant_values(c, lambdas)
