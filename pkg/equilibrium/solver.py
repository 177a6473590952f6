"""
Operador de sobrevivência π, taxa líquida de reprodução R e equilíbrios.

O equilíbrio é parametrizado pelo escalar b = u*(0): para b fixo, um ponto
fixo amortecido em Q fornece Q(b), e as raízes de F(b) = R(Q(b)) - 1 são
localizadas por varredura de sinais seguida de `scipy.optimize.brentq`.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from config.config import settings
from core.grid import GridFunction, cumulative_values, environment_values, trapz_values
from core.parallel import parallel_map
from exprlang.calculus import evaluate
from exprlang.nodes import Expr
from schemas.errors import ModelError, NonConvergenceError
from schemas.schema import EquilibriumReport, ModelSpec, sample_nodes, validate_rates

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Equilibrium:
    b: float
    u_star: GridFunction
    Q_star: GridFunction
    net_reproduction_residual: float
    fixed_point_iterations: int
    synthetic: bool = False

    @property
    def trivial(self) -> bool:
        return self.b == 0.0


# ---------------------------------------------------------------------------
# núcleo em arrays


def rate_on_nodes(model: ModelSpec, expr: Expr, Q: np.ndarray) -> np.ndarray:
    s = model.grid.nodes
    return np.broadcast_to(evaluate(expr, s, Q), s.shape)


def gamma_on_nodes(model: ModelSpec, Q: np.ndarray) -> np.ndarray:
    gamma = rate_on_nodes(model, model.gamma, Q)
    if np.any(gamma <= 0.0):
        idx = int(np.argmin(gamma))
        raise ModelError(
            "γ deve ser positivo",
            {"s": float(model.grid.nodes[idx]), "Q": float(Q[idx]), "gamma": float(gamma[idx])},
        )
    return gamma


def survival_values(model: ModelSpec, Q: np.ndarray) -> np.ndarray:
    gamma = gamma_on_nodes(model, Q)
    mu = rate_on_nodes(model, model.mu, Q)
    hazard = cumulative_values(mu / gamma, model.grid.h)
    return gamma[0] / gamma * np.exp(-hazard)


def net_reproduction_values(model: ModelSpec, Q: np.ndarray) -> float:
    beta = rate_on_nodes(model, model.beta, Q)
    return float(trapz_values(beta * survival_values(model, Q), model.grid.h))


def _inner_fixed_point(model: ModelSpec, b: float, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    """Q^{k+1} = (1-θ)Q^k + θ·environment(b·π(Q^k)). Devolve (Q, u, iterações)."""
    cfg = model.solver
    h = model.grid.h
    Q = np.zeros(model.grid.n + 1)
    if b == 0.0:
        return Q, np.zeros_like(Q), 0
    for k in range(1, cfg.max_iter + 1):
        target = environment_values(b * survival_values(model, Q), model.alpha, w, h)
        Q_new = (1.0 - cfg.damping) * Q + cfg.damping * target
        change = float(np.max(np.abs(Q_new - Q)))
        Q = Q_new
        if change <= cfg.tol * max(1.0, float(np.max(np.abs(Q)))):
            return Q, b * survival_values(model, Q), k
    raise NonConvergenceError(
        f"ponto fixo interno não convergiu em {cfg.max_iter} iterações (b={b:.6g})", b, cfg.max_iter
    )


# ---------------------------------------------------------------------------
# operações públicas


def survival(model: ModelSpec, Q: GridFunction) -> GridFunction:
    """π(s,Q) = γ(0,Q(0))/γ(s,Q(s)) · exp(-∫_0^s μ/γ)."""
    _same_grid(model, Q)
    return GridFunction(model.grid, survival_values(model, Q.values))


def net_reproduction(model: ModelSpec, Q: GridFunction) -> float:
    """R(Q) = ∫_0^m β(s,Q(s)) π(s,Q) ds."""
    _same_grid(model, Q)
    return net_reproduction_values(model, Q.values)


def _same_grid(model: ModelSpec, f: GridFunction):
    if f.grid != model.grid:
        raise ModelError("Q não está na malha do modelo", {"n": f.grid.n, "model_n": model.grid.n})


def trivial_equilibrium(model: ModelSpec) -> Equilibrium:
    zero = GridFunction.constant(model.grid, 0.0)
    R0 = net_reproduction_values(model, zero.values)
    return Equilibrium(0.0, zero, zero, R0 - 1.0, 0)


def _build(model: ModelSpec, b: float, w: np.ndarray) -> Equilibrium:
    Q, u, iterations = _inner_fixed_point(model, b, w)
    residual = net_reproduction_values(model, Q) - 1.0
    return Equilibrium(b, GridFunction(model.grid, u), GridFunction(model.grid, Q), residual, iterations)


def solve_equilibrium(model: ModelSpec, b_range: Optional[Sequence[float]] = None) -> List[Equilibrium]:
    """
    Equilíbrio trivial (b=0) seguido de todos os equilíbrios positivos cujas
    raízes de F(b) = R(Q(b)) - 1 mudam de sinal na varredura de `b_range`.
    A lista nunca é garantida completa.
    """
    cfg = model.solver
    b_lo, b_hi = b_range if b_range is not None else cfg.b_range
    if b_lo < 0.0 or not b_hi > b_lo:
        raise ModelError("b_range deve satisfazer 0 <= b_lo < b_hi", {"b_range": [b_lo, b_hi]})
    w = model.w_values()

    def F(b: float) -> float:
        Q, _, _ = _inner_fixed_point(model, b, w)
        return net_reproduction_values(model, Q) - 1.0

    bs = np.linspace(b_lo, b_hi, cfg.scan_points)
    values = parallel_map(F, list(bs))
    logger.debug("varredura de b: %s", list(zip(bs.tolist(), values)))

    roots: List[float] = []
    for i, (b, f) in enumerate(zip(bs, values)):
        if f == 0.0:
            if b > 0.0:
                roots.append(float(b))
            continue
        if i + 1 < len(bs) and f * values[i + 1] < 0.0:
            root = brentq(F, b, bs[i + 1], xtol=cfg.root_tol * 1e-2, rtol=4 * np.finfo(float).eps, maxiter=200)
            logger.info("equilíbrio positivo em b=%.12g (bracket [%.6g, %.6g])", root, b, bs[i + 1])
            roots.append(float(root))

    found = [trivial_equilibrium(model)] + [_build(model, b, w) for b in roots]
    for eq in found[1:]:
        residual = abs(eq.net_reproduction_residual)
        if residual > cfg.root_tol:
            logger.warning("resíduo |R(Q*) - 1| = %.3e acima de %.1e em b=%.12g", residual, cfg.root_tol, eq.b)
    if not roots:
        logger.info("nenhuma mudança de sinal de F em [%g, %g]: apenas o equilíbrio trivial", b_lo, b_hi)
    _revalidate(model, found)
    return found


def equilibrium_from_profile(model: ModelSpec, b: float, profile: Expr) -> Equilibrium:
    """Equilíbrio declarado pelo usuário: u*(s) = b·profile(s). Resíduos não precisam se anular."""
    if profile.depends_on("Q"):
        raise ModelError("o perfil estacionário deve depender apenas de s")
    s = model.grid.nodes
    u = b * np.broadcast_to(evaluate(profile, s, 0.0), s.shape)
    if np.any(u < 0.0):
        raise ModelError("o perfil estacionário deve ser não negativo")
    Q = environment_values(u, model.alpha, model.w_values(), model.grid.h)
    residual = net_reproduction_values(model, Q) - 1.0
    return Equilibrium(float(u[0]), GridFunction(model.grid, u), GridFunction(model.grid, Q), residual, 0, synthetic=True)


def model_equilibria(model: ModelSpec) -> List[Equilibrium]:
    """Equilíbrios do modelo, respeitando `equilibrium_override` quando declarado."""
    override = model.equilibrium_override
    if override is not None:
        logger.warning("usando equilíbrio sintético declarado no modelo (b=%g)", override.b)
        eqs = [trivial_equilibrium(model), equilibrium_from_profile(model, override.b, override.profile)]
        _revalidate(model, eqs)
        return eqs
    return solve_equilibrium(model)


def positive_equilibria(model: ModelSpec) -> List[Equilibrium]:
    return [eq for eq in model_equilibria(model) if not eq.trivial]


def _revalidate(model: ModelSpec, eqs: List[Equilibrium]):
    q_top = max(float(np.max(eq.Q_star.values)) for eq in eqs)
    if q_top > 0.0:
        validate_rates(model, settings.Q_VALIDATION_FACTOR * q_top)


def equilibrium_report(model: ModelSpec, eq: Equilibrium) -> EquilibriumReport:
    h = model.grid.h
    zero = np.zeros(model.grid.n + 1)
    return EquilibriumReport(
        b=eq.b,
        net_reproduction=eq.net_reproduction_residual + 1.0,
        net_reproduction_residual=eq.net_reproduction_residual,
        fixed_point_iterations=eq.fixed_point_iterations,
        P_star=float(trapz_values(model.w_values() * eq.u_star.values, h)),
        Q_star_max=float(np.max(eq.Q_star.values)),
        R_trivial=net_reproduction_values(model, zero),
        trivial=eq.trivial,
        s=sample_nodes(model.grid.nodes),
        u_star=sample_nodes(eq.u_star.values),
        Q_star=sample_nodes(eq.Q_star.values),
    )
