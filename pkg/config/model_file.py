import json
import os
from typing import Dict, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from config.config import settings
from exprlang.parser import parse
from schemas.errors import ExprSyntaxError, ModelError
from schemas.schema import (
    ModelSpec,
    ProfileOverride,
    SimulationSettings,
    SolverSettings,
    SpectralSettings,
)

BUNDLED_DIR = os.path.dirname(os.path.abspath(__file__))


class ExpressionSet(BaseModel):
    w: str
    beta: str
    gamma: str
    mu: str


class OverrideSource(BaseModel):
    b: float = Field(..., gt=0.0)
    profile: str


class ModelFile(BaseModel):
    """Documento JSON de modelo, antes de compilar as expressões."""

    m: float
    alpha: float
    grid_n: int = Field(default_factory=lambda: settings.GRID_N)
    expressions: ExpressionSet
    q_validation_max: float = 2.0
    solver: SolverSettings = Field(default_factory=SolverSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    spectral: SpectralSettings = Field(default_factory=SpectralSettings)
    estar_w_of_s: bool = False
    equilibrium_override: Optional[OverrideSource] = None
    name: Optional[str] = None

    def compile(self, grid_n: Optional[int] = None) -> ModelSpec:
        sources = self.expressions.model_dump()
        compiled: Dict[str, object] = {}
        for key, src in sources.items():
            try:
                compiled[key] = parse(src)
            except ExprSyntaxError as e:
                raise ModelError(f"expressão '{key}' inválida: {e}", {"key": key, **e.context}) from e
        override = None
        if self.equilibrium_override is not None:
            override = ProfileOverride(
                b=self.equilibrium_override.b, profile=parse(self.equilibrium_override.profile)
            )
        payload = self.model_dump(exclude={"expressions", "equilibrium_override", "name"})
        payload.update(compiled)
        payload["equilibrium_override"] = override
        payload["name"] = self.name or "model"
        if grid_n is not None:
            payload["grid_n"] = grid_n
        try:
            return ModelSpec.model_validate(payload)
        except ValidationError as e:
            raise ModelError(f"modelo inválido: {e}") from e


def load_model_file(file_path: str, grid_n: Optional[int] = None) -> ModelSpec:
    """Carrega e valida um arquivo de modelo (JSON)."""
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"Arquivo de modelo não encontrado: {file_path}")

    with open(file_path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelError(f"JSON inválido em {file_path}: {e}") from e

    try:
        document = ModelFile(**raw)
    except ValidationError as e:
        raise ModelError(f"arquivo de modelo inválido: {e}", {"path": file_path}) from e
    if document.name is None:
        document.name = os.path.splitext(os.path.basename(file_path))[0]
    return document.compile(grid_n=grid_n)


def bundled_model(name: str, grid_n: Optional[int] = None) -> ModelSpec:
    """Modelos que acompanham o pacote: sec5, sec6, scramble, contest_unstable."""
    return load_model_file(os.path.join(BUNDLED_DIR, f"{name}.model"), grid_n=grid_n)


def parse_pair(text: str) -> Tuple[float, float]:
    lo, hi = (float(x) for x in text.split(","))
    return lo, hi


def parse_rect(text: str) -> Tuple[float, float, float, float]:
    values = tuple(float(x) for x in text.split(","))
    if len(values) != 4:
        raise ValueError(f"retângulo precisa de 4 números: {text}")
    return values
