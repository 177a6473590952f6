"""
Simulação direta do modelo não linear por volumes finitos upwind de 1ª ordem.

Atualização nos nós, com γ > 0 (transporte para a direita):

    u_i ← u_i - dt/h (γ_i u_i - γ_{i-1} u_{i-1}) - dt μ_i u_i,   i ≥ 1
    u_0 ← ∫ β(s,Q) u ds   (densidade do início do passo)

com dt = cfl / (max γ/h + max μ), o que preserva o sinal de u. As rotinas
internas aceitam lotes (shape (B, n+1)) avançados com o mesmo dt, o que
permite medir a taxa de uma perturbação contra uma trajetória de referência
que parte de u* e sofre o mesmo desvio estacionário do esquema.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from core.grid import GridFunction, environment_values, trapz_values
from equilibrium.solver import Equilibrium
from exprlang.calculus import evaluate
from schemas.errors import BlowUpError, DomainError
from schemas.schema import ModelSpec

logger = logging.getLogger(__name__)

NORM_FLOOR = 1e-12
MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class SimState:
    t: float
    u: GridFunction
    Q: GridFunction
    dt_last: float = 0.0


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    snapshots: np.ndarray  # (k, n+1)
    final: SimState
    steps: int


@dataclass(frozen=True)
class RateFit:
    rate: Optional[float]
    window: Tuple[float, float]
    samples: int


class _Stepper:
    """Avanço explícito de um lote de densidades com os mesmos passos de tempo."""

    def __init__(self, model: ModelSpec, cfl: Optional[float] = None):
        self.model = model
        self.s = model.grid.nodes
        self.h = model.grid.h
        self.w = model.w_values()
        self.cfl = cfl if cfl is not None else model.simulation.cfl

    def rates(self, u: np.ndarray):
        Q = environment_values(u, self.model.alpha, self.w, self.h)
        shape = u.shape
        gamma = np.broadcast_to(evaluate(self.model.gamma, self.s, Q), shape)
        mu = np.broadcast_to(evaluate(self.model.mu, self.s, Q), shape)
        beta = np.broadcast_to(evaluate(self.model.beta, self.s, Q), shape)
        return Q, gamma, mu, beta

    def stable_dt(self, gamma: np.ndarray, mu: np.ndarray) -> float:
        return self.cfl / (float(np.max(gamma)) / self.h + float(np.max(mu)))

    def advance(self, t: float, u: np.ndarray, dt_cap: float = np.inf):
        _, gamma, mu, beta = self.rates(u)
        dt = min(self.stable_dt(gamma, mu), dt_cap)
        flux = gamma * u
        new = np.empty_like(u)
        new[..., 1:] = u[..., 1:] - dt / self.h * (flux[..., 1:] - flux[..., :-1]) - dt * mu[..., 1:] * u[..., 1:]
        new[..., 0] = trapz_values(beta * u, self.h)
        if not np.all(np.isfinite(new)):
            raise BlowUpError(t + dt, {"t": t, "max_abs_u": float(np.nanmax(np.abs(u)))})
        return new, dt


def _state(model: ModelSpec, t: float, u: np.ndarray, dt: float) -> SimState:
    Q = environment_values(u, model.alpha, model.w_values(), model.grid.h)
    return SimState(t, GridFunction(model.grid, u), GridFunction(model.grid, Q), dt)


def initial_state(model: ModelSpec, u0: GridFunction) -> SimState:
    if u0.grid != model.grid:
        raise DomainError("dado inicial em outra malha")
    return _state(model, 0.0, u0.values, 0.0)


def step(model: ModelSpec, state: SimState, cfl: Optional[float] = None) -> SimState:
    new, dt = _Stepper(model, cfl).advance(state.t, state.u.values)
    return _state(model, state.t + dt, new, dt)


def boundary_inflow(model: ModelSpec, state: SimState) -> float:
    """∫_0^m β(s,Q(s,t)) u(s,t) ds."""
    s = model.grid.nodes
    beta = np.broadcast_to(evaluate(model.beta, s, state.Q.values), s.shape)
    return float(trapz_values(beta * state.u.values, model.grid.h))


def simulate(
    model: ModelSpec,
    u0: GridFunction,
    T: float,
    record_every: Optional[float] = None,
    cfl: Optional[float] = None,
) -> Trajectory:
    """Integra até t = T (o último passo é encurtado para cair exatamente em T)."""
    stepper = _Stepper(model, cfl)
    record_every = record_every if record_every is not None else model.simulation.output_every
    u = initial_state(model, u0).u.values.copy()
    t, steps, dt = 0.0, 0, 0.0
    times, snaps = [0.0], [u.copy()]
    next_record = record_every
    while t < T:
        u, dt = stepper.advance(t, u, dt_cap=T - t)
        t += dt
        steps += 1
        if t >= next_record - 1e-12 or t >= T:
            times.append(t)
            snaps.append(u.copy())
            next_record += record_every
    logger.info("simulação até T=%g em %d passos", T, steps)
    return Trajectory(np.array(times), np.array(snaps), _state(model, t, u, dt), steps)


def perturbation_history(
    model: ModelSpec,
    eq: Equilibrium,
    v0: GridFunction,
    eps: float,
    T: float,
    cfl: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Avança u* + eps·v0 e u* no mesmo lote e devolve (t, ‖u_ε - u_ref‖₁, passos),
    amostrado a cada passo.
    """
    stepper = _Stepper(model, cfl)
    u = np.stack([eq.u_star.values + eps * v0.values, eq.u_star.values])
    h = model.grid.h
    t = 0.0
    times: List[float] = [0.0]
    norms: List[float] = [float(trapz_values(np.abs(u[0] - u[1]), h))]
    steps = 0
    while t < T:
        try:
            u, dt = stepper.advance(t, u, dt_cap=T - t)
        except BlowUpError as e:
            e.partial.update({"times": times[-1000:], "norms": norms[-1000:]})
            logger.warning("simulação explodiu em t=%.6g", e.t)
            raise
        t += dt
        steps += 1
        times.append(t)
        norms.append(float(trapz_values(np.abs(u[0] - u[1]), h)))
    return np.array(times), np.array(norms), steps


def fit_rate(times: np.ndarray, norms: np.ndarray, T: float) -> RateFit:
    """Inclinação de mínimos quadrados de log‖·‖ em [T/2, T], sem normas < 1e-12."""
    alive = norms >= NORM_FLOOR
    mask = alive & (times >= T / 2.0)
    if np.count_nonzero(mask) < MIN_FIT_POINTS:
        t_alive = times[alive]
        if t_alive.size < MIN_FIT_POINTS:
            logger.warning("perturbação abaixo de %.0e em quase todo o intervalo", NORM_FLOOR)
            return RateFit(None, (float(T / 2.0), float(T)), int(t_alive.size))
        # metade final do trecho acima do piso
        half = t_alive[0] + (t_alive[-1] - t_alive[0]) / 2.0
        mask = alive & (times >= half) & (times <= t_alive[-1])
    slope, _ = np.polyfit(times[mask], np.log(norms[mask]), 1)
    window = (float(times[mask][0]), float(times[mask][-1]))
    return RateFit(float(slope), window, int(np.count_nonzero(mask)))


def default_perturbation(model: ModelSpec) -> GridFunction:
    m = model.grid.m
    return GridFunction.from_callable(model.grid, lambda s: np.sin(np.pi * s / m))


def measure_rate(
    model: ModelSpec,
    eq: Equilibrium,
    v0: Optional[GridFunction] = None,
    eps: Optional[float] = None,
    T: Optional[float] = None,
) -> float:
    """Taxa empírica de crescimento (negativa = decaimento) de uma perturbação de u*."""
    v0 = v0 if v0 is not None else default_perturbation(model)
    if not np.any(v0.values != 0.0):
        raise DomainError("a perturbação v0 não pode ser identicamente nula")
    if eps is None:
        eps = model.simulation.eps * max(1.0, eq.u_star.max_abs())
    T = T if T is not None else model.simulation.T
    times, norms, _ = perturbation_history(model, eq, v0, eps, T)
    fit = fit_rate(times, norms, T)
    logger.info("taxa medida %.6g na janela %s", fit.rate if fit.rate is not None else float("nan"), fit.window)
    return fit.rate if fit.rate is not None else float("-inf")
