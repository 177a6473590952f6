from typing import Any, Dict, Optional


class HierstabError(Exception):
    """Erro base do pacote. `context` vai para o payload JSON de erro da CLI."""

    exit_code = 2

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.context: Dict[str, Any] = dict(context or {})


class DomainError(HierstabError):
    """Limites fora de [0,m], a > b, malhas incompatíveis."""


class ExprSyntaxError(HierstabError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})", {"offset": offset})
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"identificador desconhecido '{name}'", offset)
        self.name = name


class ExprEvaluationError(HierstabError):
    def __init__(self, message: str, node_source: str):
        super().__init__(f"{message} em '{node_source}'", {"node": node_source})
        self.node_source = node_source


class ModelError(HierstabError):
    """Ingredientes do modelo inválidos (γ ≤ 0, w ≤ 0, β < 0, ...)."""


class WrongRegimeError(HierstabError):
    """Rotina chamada fora do regime em que vale (σ* ≢ 0, α ≠ 1)."""


class NonConvergenceError(HierstabError):
    exit_code = 3

    def __init__(self, message: str, b: float, iterations: int):
        super().__init__(message, {"b": b, "iterations": iterations})
        self.b = b
        self.iterations = iterations


class ShootingOverflowError(HierstabError):
    exit_code = 3

    def __init__(self, lam: complex, s: float):
        super().__init__(
            f"estado não finito no shooting em s={s:.6g} para λ={lam}",
            {"lambda": [lam.real, lam.imag], "s": s},
        )
        self.lam = lam


class BoundaryZeroError(HierstabError):
    exit_code = 3

    def __init__(self, min_abs: float, scale: float, where: complex):
        super().__init__(
            f"|D| = {min_abs:.3e} na fronteira do retângulo (escala {scale:.3e}); perturbe o retângulo",
            {"min_abs": min_abs, "scale": scale, "where": [where.real, where.imag]},
        )
        self.where = where


class BlowUpError(HierstabError):
    exit_code = 3

    def __init__(self, t: float, partial: Optional[Dict[str, Any]] = None):
        super().__init__(f"simulação explodiu em t={t:.6g}", {"t": t})
        self.t = t
        self.partial = partial or {}


class ConsistencyAlarm(HierstabError):
    exit_code = 4
