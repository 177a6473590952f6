import math
from dataclasses import dataclass
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_serializer, field_validator, model_validator

from config.config import settings
from core.grid import Grid, GridFunction
from exprlang.calculus import diff, evaluate
from exprlang.nodes import Expr, is_zero
from schemas.errors import ModelError

SCHEMA_VERSION = "1.0"


# ---------------------------------------------------------------------------
# modelo


class SolverSettings(BaseModel):
    damping: float = Field(0.5, gt=0.0, le=1.0)
    tol: float = Field(1e-12, gt=0.0)
    max_iter: int = Field(500, ge=1)
    root_tol: float = Field(1e-10, gt=0.0)
    b_range: Tuple[float, float] = (0.0, 10.0)
    scan_points: int = Field(64, ge=2)

    @field_validator("b_range")
    @classmethod
    def _check_range(cls, value):
        lo, hi = value
        if lo < 0 or not hi > lo:
            raise ValueError("b_range deve satisfazer 0 <= b_lo < b_hi")
        return value


class SimulationSettings(BaseModel):
    cfl: float = Field(default_factory=lambda: settings.CFL, gt=0.0, le=1.0)
    T: float = Field(default_factory=lambda: settings.SIM_T, gt=0.0)
    eps: float = Field(default_factory=lambda: settings.SIM_EPS, gt=0.0)
    output_every: float = Field(0.5, gt=0.0)


class SpectralSettings(BaseModel):
    search: Optional[Tuple[float, float]] = None
    rect: Optional[Tuple[float, float, float, float]] = None
    max_roots: int = Field(16, ge=1)


@dataclass(frozen=True)
class Partials:
    """Derivadas simbólicas usadas na linearização."""

    beta_Q: Expr
    gamma_s: Expr
    gamma_Q: Expr
    gamma_sQ: Expr
    gamma_QQ: Expr
    mu_Q: Expr
    w_s: Expr

    @property
    def sigma_vanishes(self) -> bool:
        """γ_Q ≡ 0 e μ_Q ≡ 0 simbolicamente (logo σ* ≡ 0)."""
        return is_zero(self.gamma_Q) and is_zero(self.mu_Q)


class ProfileOverride(BaseModel):
    """Perfil estacionário sintético u*(s) = b * profile(s)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    b: float = Field(..., gt=0.0)
    profile: Expr


class ModelSpec(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    m: float = Field(..., gt=0.0)
    alpha: float = Field(..., ge=0.0, le=1.0)
    w: Expr
    beta: Expr
    gamma: Expr
    mu: Expr
    grid_n: int = Field(2048, ge=8)
    q_validation_max: float = Field(2.0, ge=0.0)
    solver: SolverSettings = Field(default_factory=SolverSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    spectral: SpectralSettings = Field(default_factory=SpectralSettings)
    estar_w_of_s: bool = False
    equilibrium_override: Optional[ProfileOverride] = None
    name: str = "model"

    _partials: Partials = PrivateAttr()
    _grid: Grid = PrivateAttr()

    @field_validator("grid_n")
    @classmethod
    def _even(cls, value):
        if value % 2:
            raise ValueError("grid_n deve ser par")
        return value

    @model_validator(mode="after")
    def _check_rates(self):
        if self.w.depends_on("Q"):
            raise ModelError("w deve depender apenas de s")
        self._grid = Grid(self.m, self.grid_n)
        self._partials = Partials(
            beta_Q=diff(self.beta, "Q"),
            gamma_s=diff(self.gamma, "s"),
            gamma_Q=diff(self.gamma, "Q"),
            gamma_sQ=diff(diff(self.gamma, "s"), "Q"),
            gamma_QQ=diff(diff(self.gamma, "Q"), "Q"),
            mu_Q=diff(self.mu, "Q"),
            w_s=diff(self.w, "s"),
        )
        validate_rates(self, self.q_validation_max)
        return self

    @property
    def grid(self) -> Grid:
        return self._grid

    @property
    def partials(self) -> Partials:
        return self._partials

    def replace(self, **changes) -> "ModelSpec":
        """Cópia revalidada com campos trocados (ex.: grid_n=4096, beta=...)."""
        return ModelSpec.model_validate({**dict(self), **changes})

    def w_values(self) -> np.ndarray:
        return np.broadcast_to(evaluate(self.w, self.grid.nodes, 0.0), self.grid.nodes.shape).copy()


def validate_rates(model: ModelSpec, q_max: float, samples: int = 9) -> None:
    """w > 0, γ > 0, μ ≥ 0, β ≥ 0 nos nós, para Q em [0, q_max]."""
    s = model.grid.nodes
    w = evaluate(model.w, s, 0.0)
    if np.any(np.asarray(w) <= 0.0):
        raise ModelError("w deve ser positivo em todos os nós", {"min_w": float(np.min(w))})
    for q in np.linspace(0.0, q_max, samples):
        checks = (
            ("gamma", model.gamma, lambda v: v > 0.0, "γ deve ser positivo"),
            ("mu", model.mu, lambda v: v >= 0.0, "μ deve ser não negativo"),
            ("beta", model.beta, lambda v: v >= 0.0, "β deve ser não negativo"),
        )
        for key, expr, ok, message in checks:
            values = np.broadcast_to(evaluate(expr, s, q), s.shape)
            bad = ~ok(values)
            if np.any(bad):
                idx = int(np.argmax(bad))
                raise ModelError(
                    f"{message} (s={s[idx]:.6g}, Q={q:.6g})",
                    {"rate": key, "s": float(s[idx]), "Q": float(q), "value": float(values[idx])},
                )


# ---------------------------------------------------------------------------
# relatórios


def _finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


class ConditionReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    holds: bool
    margin: float
    worst_node: float
    strict: bool = True
    per_node_slack: GridFunction
    kappa_max: Optional[float] = None
    notes: List[str] = Field(default_factory=list)
    extra: Dict[str, float] = Field(default_factory=dict)

    @field_serializer("per_node_slack")
    def _dump_slack(self, slack: GridFunction):
        return _sample(slack.values)

    @classmethod
    def from_slack(cls, name: str, slack: GridFunction, strict: bool = True, **kwargs) -> "ConditionReport":
        idx = int(np.argmin(slack.values))
        margin = float(slack.values[idx])
        holds = margin > 0.0 if strict else margin >= 0.0
        return cls(
            name=name,
            holds=holds,
            margin=margin,
            worst_node=float(slack.grid.nodes[idx]),
            strict=strict,
            per_node_slack=slack,
            **kwargs,
        )


class StabilityVerdict(BaseModel):
    verdict: Literal["Stable", "Unstable", "Inconclusive"]
    criterion: str
    evidence: Dict[str, Optional[float]] = Field(default_factory=dict)

    @field_serializer("evidence")
    def _dump_evidence(self, evidence):
        return {k: _finite_or_none(v) for k, v in evidence.items()}


class SpectrumRoot(BaseModel):
    re: float
    im: float
    residual: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


class SpectrumReport(BaseModel):
    roots: List[SpectrumRoot]
    spectral_bound_estimate: float
    search_region: Tuple[float, float, float, float]
    method: Dict[str, Any] = Field(default_factory=dict)
    complete: bool = True
    dominant_is_real: Optional[bool] = None
    extension_alpha1: bool = False

    @field_serializer("spectral_bound_estimate")
    def _dump_bound(self, value):
        return _finite_or_none(value)


class EquilibriumReport(BaseModel):
    b: float
    net_reproduction: float
    net_reproduction_residual: float
    fixed_point_iterations: int
    P_star: float
    Q_star_max: float
    R_trivial: float
    trivial: bool
    s: List[float]
    u_star: List[float]
    Q_star: List[float]


class SimulationReport(BaseModel):
    rate: Optional[float]
    T: float
    eps: float
    grid_n: int
    steps: int
    fit_window: Tuple[float, float]
    samples: int


class RouteVerdict(BaseModel):
    route: str
    growth_sign: Optional[int] = None
    value: Optional[float] = None
    detail: str = ""

    @field_serializer("value")
    def _dump_value(self, value):
        return _finite_or_none(value)


class ValidationReport(BaseModel):
    overall_status: Literal["pass", "fail"]
    summary: str
    routes: List[RouteVerdict]
    alarm: bool = False
    alarm_reason: Optional[str] = None


def _sample(values: np.ndarray, points: int = 65) -> List[float]:
    """Amostra até `points` nós igualmente espaçados (sempre inclui as pontas)."""
    n = len(values) - 1
    stride = max(1, n // (points - 1))
    idx = list(range(0, n + 1, stride))
    if idx[-1] != n:
        idx.append(n)
    return [float(values[i]) for i in idx]


def sample_nodes(values: np.ndarray, points: int = 65) -> List[float]:
    return _sample(values, points)
