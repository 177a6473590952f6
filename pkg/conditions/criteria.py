"""
Verificação nó a nó das condições suficientes de estabilidade.

Positividade (duas desigualdades não estritas), dissipatividade (estrita,
com κ_max = folga mínima), critério do equilíbrio trivial, redução para
competição scramble (α = 1) e o alarme de consistência para equilíbrios
positivos que passam na dissipatividade com β_Q ≥ 0.
"""

import logging
from typing import Dict, Tuple

import numpy as np

from core.grid import GridFunction, cumulative_values, trapz_values
from equilibrium.solver import gamma_on_nodes, net_reproduction_values, rate_on_nodes
from linearization.coefficients import LinearizedCoefficients
from schemas.errors import WrongRegimeError
from schemas.schema import ConditionReport, ModelSpec

logger = logging.getLogger(__name__)


def positivity_slack_values(c: LinearizedCoefficients) -> np.ndarray:
    """β* + w(∫_0^s β_Q*u* + α∫_s^m β_Q*u*)."""
    h = c.grid.h
    bq = c.betaQ_star.values
    return c.beta_star.values + c.w.values * (
        cumulative_values(bq, h) + c.alpha * cumulative_values(bq, h, from_zero=False)
    )


def check_positivity(c: LinearizedCoefficients) -> Tuple[ConditionReport, ConditionReport]:
    notes = []
    if not np.any(c.betaQ_raw.values != 0.0):
        notes.append("β_Q ≡ 0: a segunda condição é trivialmente satisfeita")
    if not np.any(c.gammaQ_star.values != 0.0):
        notes.append("γ_Q ≡ 0: a primeira condição reduz-se a μ_Q(s,Q*) ≤ 0")

    sigma = ConditionReport.from_slack(
        "positivity_sigma", -c.sigma_star, strict=False, notes=list(notes)
    )
    fertility = ConditionReport.from_slack(
        "positivity_fertility",
        GridFunction(c.grid, positivity_slack_values(c)),
        strict=False,
        notes=list(notes),
    )
    return sigma, fertility


def dissipativity_bracket(c: LinearizedCoefficients) -> np.ndarray:
    """β* + αw∫_s^m β_Q*u* + w∫_0^s β_Q*u* (forma do enunciado)."""
    return positivity_slack_values(c)


def dissipativity_bracket_proof_form(c: LinearizedCoefficients) -> GridFunction:
    """β* + w[α∫_0^m β_Q*u* + (1-α)∫_0^s β_Q*u*] (forma da demonstração)."""
    h = c.grid.h
    bq = c.betaQ_star.values
    total = float(trapz_values(bq, h))
    values = c.beta_star.values + c.w.values * (c.alpha * total + (1.0 - c.alpha) * cumulative_values(bq, h))
    return GridFunction(c.grid, values)


def check_dissipativity(c: LinearizedCoefficients) -> ConditionReport:
    """
    Folga por nó:

        μ* - w[(1-α)γ_Q* u* + ‖σ*‖₁] - γ(0,Q*(0))·|β* + αw∫_s^m β_Q*u* + w∫_0^s β_Q*u*|

    Vale sse a folga mínima é > 0; nesse caso ‖T(t)‖ ≤ exp(-κt) para todo
    κ ∈ (0, κ_max], com κ_max = folga mínima.
    """
    w = c.w.values
    slack = (
        c.mu_star.values
        - w * ((1.0 - c.alpha) * c.gammaQ_star.values * c.u_star.values + c.sigma_star_l1)
        - c.gamma0 * np.abs(dissipativity_bracket(c))
    )
    report = ConditionReport.from_slack("dissipativity", GridFunction(c.grid, slack), strict=True)
    report.kappa_max = report.margin
    if report.holds:
        report.extra["decay_certificate"] = report.margin
        report.notes.append(f"‖T(t)‖ ≤ exp(-{report.margin:.6g}·t)")
    logger.debug("dissipatividade: margem=%.6g em s=%.6g", report.margin, report.worst_node)
    return report


def check_trivial(model: ModelSpec) -> ConditionReport:
    """μ(s,0) - γ(0,0)β(s,0) > 0 em todos os nós; R(0) acompanha o relatório."""
    zero = np.zeros(model.grid.n + 1)
    gamma = gamma_on_nodes(model, zero)
    slack = rate_on_nodes(model, model.mu, zero) - gamma[0] * rate_on_nodes(model, model.beta, zero)
    report = ConditionReport.from_slack("trivial", GridFunction(model.grid, slack), strict=True)
    report.kappa_max = report.margin
    report.extra["R0"] = net_reproduction_values(model, zero)
    return report


def check_scramble(c: LinearizedCoefficients) -> ConditionReport:
    """
    Redução para α = 1 com β̃(s,P) = γ(0,P*)β(s,P) e P* = ∫ w u*:

        μ(s,P*) - w‖σ*‖₁ - |β̃(s,P*) + w∫_0^m β̃_P(r,P*) u*(r) dr|

    O fator γ(0,·) fica congelado em P*, logo β̃_P = γ(0,P*)β_P e a folga
    coincide com a da dissipatividade em α = 1.
    """
    if c.alpha != 1.0:
        raise WrongRegimeError(f"critério scramble exige α = 1 (α = {c.alpha})", {"alpha": c.alpha})
    h = c.grid.h
    w = c.w.values
    beta_tilde = c.gamma0 * c.beta_star.values
    coupling = c.gamma0 * trapz_values(c.betaQ_star.values, h)
    slack = c.mu_star.values - w * c.sigma_star_l1 - np.abs(beta_tilde + w * coupling)
    report = ConditionReport.from_slack("scramble", GridFunction(c.grid, slack), strict=True)
    report.kappa_max = report.margin
    report.extra["P_star"] = float(trapz_values(w * c.u_star.values, h))
    return report


def remark_alarm(c: LinearizedCoefficients, dissipativity: ConditionReport) -> Tuple[bool, str, Dict[str, float]]:
    """
    Um equilíbrio positivo que passa na dissipatividade com β_Q ≥ 0 em todos
    os nós é impossível: nessas hipóteses R(Q*) ≤ 1 - exp(-∫μ*/γ*) < 1.
    """
    pi = c.survival_profile()
    h = c.grid.h
    R_star = float(trapz_values(c.beta_star.values * pi, h))
    bound = 1.0 - float(np.exp(-trapz_values(c.mu_star.values / c.gamma_star.values, h)))
    evidence = {"R_star": R_star, "R_bound": bound, "dissipativity_margin": dissipativity.margin}
    if c.b > 0.0 and dissipativity.holds and np.all(c.betaQ_raw.values >= 0.0):
        reason = (
            f"equilíbrio positivo (b={c.b:.6g}) passa na dissipatividade com β_Q ≥ 0; "
            f"isso força R(Q*) ≤ {bound:.6g} < 1, mas R(Q*) = {R_star:.6g}"
        )
        logger.warning("alarme de consistência: %s", reason)
        return True, reason, evidence
    return False, "", evidence
