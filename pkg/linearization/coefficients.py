"""
Coeficientes congelados do sistema linearizado em torno de um equilíbrio.

Todas as derivadas parciais vêm de `exprlang.diff` (nunca de diferenças
finitas). A derivada u*' é obtida derivando a relação estacionária
u* = b·π(s, Q*(s)) com a regra da cadeia através de Q*' = (α-1) w u*.
"""

import logging
from dataclasses import dataclass, fields, replace

import numpy as np

from core.grid import Grid, GridFunction, cumulative_values, environment_values, trapz_values
from equilibrium.solver import Equilibrium, gamma_on_nodes, rate_on_nodes
from schemas.errors import DomainError
from schemas.schema import ModelSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearizedCoefficients:
    gamma_star: GridFunction
    mu_star: GridFunction
    rho_star: GridFunction
    sigma_star: GridFunction
    e_star: GridFunction
    Gamma: GridFunction
    beta_star: GridFunction
    betaQ_star: GridFunction  # β_Q(s,Q*)·u*(s)
    betaQ_raw: GridFunction
    gammaQ_star: GridFunction
    w: GridFunction
    w_prime: GridFunction
    alpha: float
    u_star: GridFunction
    u_star_prime: GridFunction
    Q_star: GridFunction
    sigma_star_l1: float
    gamma0: float
    b: float
    smoothing_time: float

    @property
    def grid(self) -> Grid:
        return self.gamma_star.grid

    @property
    def sigma_vanishes(self) -> bool:
        return self.sigma_star.max_abs() <= 1e-12

    def survival_profile(self) -> np.ndarray:
        """π(s,Q*) refeito a partir de γ* e μ* (igual a Π(0,s))."""
        g = self.gamma_star.values
        return g[0] / g * np.exp(-cumulative_values(self.mu_star.values / g, self.grid.h))

    def decay_scale(self) -> float:
        """‖μ*/γ*‖_∞, escala de decaimento usada nas janelas padrão de busca."""
        return float(np.max(np.abs(self.mu_star.values / self.gamma_star.values)))


def linearize(model: ModelSpec, eq: Equilibrium) -> LinearizedCoefficients:
    grid = model.grid
    if eq.u_star.grid != grid:
        raise DomainError("equilíbrio calculado em outra malha")
    p = model.partials
    alpha = model.alpha
    h = grid.h
    Q = eq.Q_star.values
    u = eq.u_star.values
    w = model.w_values()

    gamma = gamma_on_nodes(model, Q)
    mu = rate_on_nodes(model, model.mu, Q)
    beta = rate_on_nodes(model, model.beta, Q)
    beta_Q = rate_on_nodes(model, p.beta_Q, Q)
    gamma_s = rate_on_nodes(model, p.gamma_s, Q)
    gamma_Q = rate_on_nodes(model, p.gamma_Q, Q)
    w_prime = np.broadcast_to(rate_on_nodes(model, p.w_s, Q), Q.shape)

    u_prime = -u * (mu + gamma_s + (alpha - 1.0) * w * gamma_Q * u) / gamma
    rho = mu + gamma_s + 2.0 * (alpha - 1.0) * w * gamma_Q * u
    if p.sigma_vanishes:
        sigma = np.zeros_like(u)
    else:
        mu_Q = rate_on_nodes(model, p.mu_Q, Q)
        gamma_sQ = rate_on_nodes(model, p.gamma_sQ, Q)
        gamma_QQ = rate_on_nodes(model, p.gamma_QQ, Q)
        sigma = mu_Q * u + gamma_sQ * u + gamma_Q * u_prime + (alpha - 1.0) * w * gamma_QQ * u**2

    if model.estar_w_of_s:
        # leitura literal: w(s) fora da integral em η
        exponent = (1.0 - alpha) * w * cumulative_values(gamma_Q * u / gamma, h)
    else:
        exponent = (1.0 - alpha) * cumulative_values(w * gamma_Q * u / gamma, h)
    Gamma = cumulative_values(1.0 / gamma, h)

    gf = lambda values: GridFunction(grid, values)  # noqa: E731
    coeffs = LinearizedCoefficients(
        gamma_star=gf(gamma),
        mu_star=gf(mu),
        rho_star=gf(rho),
        sigma_star=gf(sigma),
        e_star=gf(np.exp(exponent)),
        Gamma=gf(Gamma),
        beta_star=gf(beta),
        betaQ_star=gf(beta_Q * u),
        betaQ_raw=gf(beta_Q),
        gammaQ_star=gf(gamma_Q),
        w=gf(w),
        w_prime=gf(w_prime),
        alpha=alpha,
        u_star=eq.u_star,
        u_star_prime=gf(u_prime),
        Q_star=eq.Q_star,
        sigma_star_l1=float(trapz_values(np.abs(sigma), h)),
        gamma0=float(gamma[0]),
        b=eq.b,
        smoothing_time=2.0 * float(Gamma[-1]),
    )
    logger.debug(
        "linearização: b=%.6g max|σ*|=%.3e ‖σ*‖₁=%.3e Γ(m)=%.6g",
        eq.b, coeffs.sigma_star.max_abs(), coeffs.sigma_star_l1, Gamma[-1],
    )
    return coeffs


def _check_grid(c: LinearizedCoefficients, v: GridFunction):
    if v.grid != c.grid:
        raise DomainError("v e os coeficientes estão em malhas diferentes")


def lambda_values(c: LinearizedCoefficients, v: np.ndarray) -> np.ndarray:
    """Λ aplicado a arrays com eixos de lote à esquerda (usado pelo K vetorizado)."""
    h = c.grid.h
    direct = trapz_values(c.beta_star.values * v, h)
    coupling = trapz_values(c.betaQ_star.values * environment_values(v, c.alpha, c.w.values, h), h)
    return direct + coupling


def apply_Lambda(c: LinearizedCoefficients, v: GridFunction) -> float:
    """Λ(v) = ∫β* v + ∫β_Q* u* (α∫_0^s w v + ∫_s^m w v) ds."""
    _check_grid(c, v)
    return float(lambda_values(c, v.values))


def apply_Lambda_swapped(c: LinearizedCoefficients, v: GridFunction) -> float:
    """Mesmo Λ com a ordem de integração trocada no termo de acoplamento."""
    _check_grid(c, v)
    h = c.grid.h
    bq = c.betaQ_star.values
    kernel = c.alpha * cumulative_values(bq, h, from_zero=False) + cumulative_values(bq, h)
    vals = v.values
    return float(trapz_values(c.beta_star.values * vals, h) + trapz_values(c.w.values * vals * kernel, h))


def scale_fertility(c: LinearizedCoefficients, factor: float) -> LinearizedCoefficients:
    """β* e β_Q* multiplicados por `factor`, sem reequilibrar."""
    return replace(
        c,
        beta_star=c.beta_star * factor,
        betaQ_star=c.betaQ_star * factor,
        betaQ_raw=c.betaQ_raw * factor,
    )


def coarsened(c: LinearizedCoefficients, factor: int) -> LinearizedCoefficients:
    """Mesmos coeficientes amostrados a cada `factor` nós (os escalares não mudam)."""
    grid = c.grid
    if factor < 1 or grid.n % factor:
        raise DomainError(f"fator {factor} não divide n={grid.n}", {"factor": factor, "n": grid.n})
    coarse = Grid(grid.m, grid.n // factor)
    changes = {
        f.name: GridFunction(coarse, getattr(c, f.name).values[::factor])
        for f in fields(c)
        if isinstance(getattr(c, f.name), GridFunction)
    }
    return replace(c, **changes)
