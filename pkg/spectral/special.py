"""
Caso σ* ≡ 0: função característica explícita K(λ) e classificação.

Π(λ,s) = (γ*(0)/γ*(s))·exp(-∫_0^s (λ + μ*(r))/γ*(r) dr) = Π(0,s)·e^{-λΓ(s)},
e os autovalores reais são as soluções de K(λ) = Λ(Π(λ,·)) = 1.
"""

import logging
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from conditions.criteria import positivity_slack_values
from core.grid import GridFunction, trapz_values
from linearization.coefficients import LinearizedCoefficients, lambda_values
from schemas.errors import DomainError, WrongRegimeError
from schemas.schema import StabilityVerdict

logger = logging.getLogger(__name__)

SIGMA_ZERO_TOL = 1e-12
SCAN_STEPS = 256


def _require_special(c: LinearizedCoefficients):
    peak = c.sigma_star.max_abs()
    if peak > SIGMA_ZERO_TOL:
        raise WrongRegimeError(
            f"σ* não é identicamente nulo (max|σ*| = {peak:.3e}); use o determinante geral",
            {"sigma_max": peak},
        )


def capital_pi_values(c: LinearizedCoefficients, lambdas) -> np.ndarray:
    """Π(λ,·) nos nós para um lote de λ reais: shape (len(lambdas), n+1)."""
    _require_special(c)
    lam = np.atleast_1d(np.asarray(lambdas, dtype=float))
    return c.survival_profile() * np.exp(-np.outer(lam, c.Gamma.values))


def capital_pi(c: LinearizedCoefficients, lam: float, s: float) -> float:
    if not 0.0 <= s <= c.grid.m:
        raise DomainError(f"s fora de [0, {c.grid.m}]", {"s": s})
    return GridFunction(c.grid, capital_pi_values(c, [lam])[0])(s)


def K_many(c: LinearizedCoefficients, lambdas) -> np.ndarray:
    """K(λ) para um lote de λ (vetorizado sobre o lote)."""
    with np.errstate(over="ignore"):
        return lambda_values(c, capital_pi_values(c, lambdas))


def K(c: LinearizedCoefficients, lam: float) -> float:
    return float(K_many(c, [lam])[0])


def K_prime(c: LinearizedCoefficients, lam: float) -> float:
    """K'(λ) = -∫ Π(λ,s) Γ(s) [β* + w∫_0^s β_Q*u* + αw∫_s^m β_Q*u*] ds."""
    pi = capital_pi_values(c, [lam])[0]
    return -float(trapz_values(pi * c.Gamma.values * positivity_slack_values(c), c.grid.h))


def K0_parts(c: LinearizedCoefficients) -> Dict[str, float]:
    """K(0) separado em R(Q*) = ∫β*π e o termo de acoplamento via β_Q."""
    pi0 = capital_pi_values(c, [0.0])
    total = float(lambda_values(c, pi0)[0])
    direct = float(trapz_values(c.beta_star.values * pi0[0], c.grid.h))
    return {"K0": total, "R_star": direct, "coupling": total - direct}


def default_search(c: LinearizedCoefficients) -> Tuple[float, float]:
    return (-3.0 * c.decay_scale() - 10.0, 10.0)


def dominant_root(c: LinearizedCoefficients, search: Optional[Sequence[float]] = None) -> Optional[float]:
    """Maior λ real em `search` com K(λ) = 1 (varredura de sinais + brentq), ou None."""
    _require_special(c)
    lo, hi = search if search is not None else default_search(c)
    grid = np.linspace(lo, hi, SCAN_STEPS + 1)
    F = K_many(c, grid) - 1.0

    def f(lam: float) -> float:
        return K(c, lam) - 1.0

    for i in range(SCAN_STEPS, -1, -1):
        if not np.isfinite(F[i]):
            continue
        if F[i] == 0.0:
            return float(grid[i])
        if i > 0 and np.isfinite(F[i - 1]) and F[i - 1] * F[i] < 0.0:
            root = brentq(f, grid[i - 1], grid[i], xtol=1e-10)
            logger.info("raiz dominante de K(λ)=1 em λ=%.10g", root)
            return float(root)
    logger.info("K(λ)=1 sem mudança de sinal em [%g, %g]", lo, hi)
    return None


def classify_special(
    c: LinearizedCoefficients, search: Optional[Sequence[float]] = None
) -> StabilityVerdict:
    """
    Classificação pelo teorema do caso σ* ≡ 0:

    * Stable se β_Q(·,Q*) ≤ 0 em todos os nós, não identicamente nulo, e a
      segunda condição de positividade vale em todos os nós;
    * Unstable se β_Q(·,Q*) ≥ 0 em todos os nós, não identicamente nulo;
    * Inconclusive caso contrário.

    A raiz dominante entra apenas como evidência. No equilíbrio trivial o
    veredito vem do sinal de K(0) - 1 = R(0) - 1, já que K é decrescente.
    """
    _require_special(c)
    parts = K0_parts(c)
    root = dominant_root(c, search)
    betaQ = c.betaQ_raw.values
    margin = float(np.min(positivity_slack_values(c)))
    evidence = {
        "K0": parts["K0"],
        "coupling": parts["coupling"],
        "dominant_root": root,
        "positivity_margin": margin,
        "betaQ_min": float(np.min(betaQ)),
        "betaQ_max": float(np.max(betaQ)),
    }

    if c.b == 0.0:
        gap = parts["K0"] - 1.0
        verdict = "Stable" if gap < 0.0 else "Unstable" if gap > 0.0 else "Inconclusive"
        return StabilityVerdict(verdict=verdict, criterion="trivial-K0", evidence=evidence)

    nonzero = bool(np.any(betaQ != 0.0))
    if nonzero and np.all(betaQ <= 0.0) and margin >= 0.0:
        verdict = "Stable"
    elif nonzero and np.all(betaQ >= 0.0):
        verdict = "Unstable"
    else:
        verdict = "Inconclusive"
    logger.info("classificação σ*≡0: %s (K0=%.6g, raiz=%s)", verdict, parts["K0"], root)
    return StabilityVerdict(verdict=verdict, criterion="special-case-theorem", evidence=evidence)
