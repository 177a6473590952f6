"""
Contagem de raízes por número de voltas e localização por subdivisão.

O número de voltas de D ao longo da fronteira do retângulo é acumulado com
refinamento adaptativo até que todo salto de fase seja menor que π/2. Os
retângulos com mais de uma raiz são divididos (fora do centro, para não
cair sobre o eixo real em retângulos simétricos); as folhas com uma raiz são
polidas por Newton com D' por diferença central.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from conditions.criteria import check_positivity
from core.parallel import parallel_map
from linearization.coefficients import LinearizedCoefficients
from schemas.errors import BoundaryZeroError
from schemas.schema import SpectrumReport, SpectrumRoot
from spectral.general import Determinant, characteristic_function

logger = logging.getLogger(__name__)

Rect = Tuple[float, float, float, float]  # (re0, re1, im0, im1)

BOUNDARY_TOL = 1e-10
RESIDUAL_TOL = 1e-8
EDGE_POINTS = 32
MAX_REFINEMENTS = 14
SPLIT_FRACTION = 0.5123
NEWTON_MAX_ITER = 50
POLISH_STEPS = 3
STEP_TOL = 1e-12
CONJUGATE_TOL = 1e-6
MAX_DEPTH = 48


def _perimeter(rect: Rect, t: np.ndarray) -> np.ndarray:
    """t ∈ [0,4) percorre a fronteira no sentido anti-horário a partir de (re0, im0)."""
    re0, re1, im0, im1 = rect
    corners = np.array([re0 + 1j * im0, re1 + 1j * im0, re1 + 1j * im1, re0 + 1j * im1])
    edge = np.clip(np.floor(t).astype(int), 0, 3)
    frac = t - edge
    return corners[edge] + frac * (corners[(edge + 1) % 4] - corners[edge])


@dataclass
class Winding:
    count: int
    scale: float
    points: int


def _winding(D: Determinant, rect: Rect, scale: Optional[float] = None) -> Winding:
    t = np.linspace(0.0, 4.0, 4 * EDGE_POINTS, endpoint=False)
    vals = D(_perimeter(rect, t))
    for _ in range(MAX_REFINEMENTS):
        local_scale = float(np.max(np.abs(vals)))
        ref = scale if scale is not None else local_scale
        idx = int(np.argmin(np.abs(vals)))
        if np.abs(vals[idx]) < BOUNDARY_TOL * ref:
            raise BoundaryZeroError(float(np.abs(vals[idx])), ref, complex(_perimeter(rect, t[idx : idx + 1])[0]))
        steps = np.angle(np.roll(vals, -1) / vals)
        bad = np.abs(steps) >= np.pi / 2
        if not np.any(bad):
            break
        t_next = np.roll(t, -1)
        t_next[-1] += 4.0
        mids = ((t[bad] + t_next[bad]) / 2.0) % 4.0
        t = np.concatenate([t, mids])
        vals = np.concatenate([vals, D(_perimeter(rect, mids))])
        order = np.argsort(t)
        t, vals = t[order], vals[order]
    else:
        logger.warning("refinamento da fronteira esgotado em %s; contagem pode ser imprecisa", rect)
        steps = np.angle(np.roll(vals, -1) / vals)
    count = int(round(float(np.sum(steps)) / (2.0 * np.pi)))
    return Winding(count, scale if scale is not None else float(np.max(np.abs(vals))), len(t))


def count_roots(c: LinearizedCoefficients, rect: Sequence[float]) -> int:
    """Número de zeros de D dentro do retângulo (com multiplicidade)."""
    return _winding(characteristic_function(c), _as_rect(rect)).count


def _as_rect(rect: Sequence[float]) -> Rect:
    re0, re1, im0, im1 = (float(x) for x in rect)
    if not (re1 > re0 and im1 > im0):
        raise ValueError(f"retângulo degenerado: {rect}")
    return re0, re1, im0, im1


def _split(rect: Rect, fraction: float) -> Tuple[Rect, Rect]:
    re0, re1, im0, im1 = rect
    if (re1 - re0) >= (im1 - im0):
        cut = re0 + fraction * (re1 - re0)
        return (re0, cut, im0, im1), (cut, re1, im0, im1)
    cut = im0 + fraction * (im1 - im0)
    return (re0, re1, im0, cut), (re0, re1, cut, im1)


def _children(D: Determinant, rect: Rect, scale: float) -> List[Tuple[Rect, int]]:
    """Divide o retângulo; se a linha de corte tocar um zero, desloca o corte."""
    for attempt in range(6):
        fraction = SPLIT_FRACTION + 0.0377 * attempt * (-1) ** attempt
        halves = _split(rect, fraction)
        try:
            return [(half, _winding(D, half, scale).count) for half in halves]
        except BoundaryZeroError:
            logger.debug("zero na linha de corte de %s; deslocando", rect)
    raise BoundaryZeroError(0.0, scale, complex((rect[0] + rect[1]) / 2, (rect[2] + rect[3]) / 2))


@dataclass
class _Polish:
    root: Optional[complex]
    residual: float
    iterations: int
    notes: List[str] = field(default_factory=list)


def _inside(z: complex, rect: Rect, pad: float = 0.0) -> bool:
    re0, re1, im0, im1 = rect
    return re0 - pad <= z.real <= re1 + pad and im0 - pad <= z.imag <= im1 + pad


def _newton(D: Determinant, rect: Rect, scale: float, z0: complex) -> _Polish:
    """Newton com D' por diferença central.

    Depois de |D| ≤ RESIDUAL_TOL·escala ainda faz até POLISH_STEPS passos,
    parando quando |Δz| ≤ STEP_TOL·(1+|z|) ou quando |D| deixa de diminuir.
    """
    z = z0
    size = max(rect[1] - rect[0], rect[3] - rect[2])
    accepted: Optional[Tuple[complex, float]] = None
    polish = 0
    for it in range(1, NEWTON_MAX_ITER + 1):
        delta = 1e-6 * (1.0 + abs(z))
        f0, fp, fm = D(np.array([z, z + delta, z - delta]))
        residual = float(abs(f0))
        if accepted is not None and residual > accepted[1]:
            return _Polish(accepted[0], accepted[1], it - 1)
        if residual <= RESIDUAL_TOL * scale:
            accepted = (z, residual)
            if polish >= POLISH_STEPS or residual == 0.0:
                return _Polish(z, residual, it - 1)
            polish += 1
        deriv = (fp - fm) / (2.0 * delta)
        if deriv == 0:
            break
        step = f0 / deriv
        z = z - step
        if accepted is not None and abs(step) <= STEP_TOL * (1.0 + abs(z)):
            final = float(abs(D(np.array([z]))[0]))
            if final <= accepted[1]:
                return _Polish(z, final, it)
            return _Polish(accepted[0], accepted[1], it)
        if not _inside(z, rect, pad=0.05 * size):
            break
    if accepted is not None:
        return _Polish(accepted[0], accepted[1], NEWTON_MAX_ITER)
    return _Polish(None, float("inf"), NEWTON_MAX_ITER)


def _locate(D: Determinant, rect: Rect, scale: float) -> _Polish:
    """Newton a partir do centro; se falhar, segue a metade que contém a raiz."""
    iterations = 0
    for _ in range(MAX_DEPTH):
        center = complex((rect[0] + rect[1]) / 2.0, (rect[2] + rect[3]) / 2.0)
        result = _newton(D, rect, scale, center)
        iterations += result.iterations
        if result.root is not None:
            result.iterations = iterations
            return result
        halves = _children(D, rect, scale)
        rect = next((half for half, count in halves if count >= 1), halves[0][0])
    center = complex((rect[0] + rect[1]) / 2.0, (rect[2] + rect[3]) / 2.0)
    value = abs(D(np.array([center]))[0])
    return _Polish(center, float(value), iterations, ["raiz aproximada pelo centro do retângulo"])


def _close_conjugates(D: Determinant, roots: List[SpectrumRoot], scale: float) -> List[SpectrumRoot]:
    """Substitui pares λ, λ̄ encontrados em folhas distintas pela média simétrica."""
    upper = [r for r in roots if r.im > 0.0]
    lower = [r for r in roots if r.im < 0.0]
    closed = [r for r in roots if r.im == 0.0]
    for r in upper:
        z = complex(r.re, r.im)
        mate = min(lower, key=lambda q: abs(complex(q.re, q.im) - z.conjugate()), default=None)
        if mate is None or abs(complex(mate.re, mate.im) - z.conjugate()) > CONJUGATE_TOL * (1.0 + abs(z)):
            closed.append(r)
            continue
        lower.remove(mate)
        pair = complex((r.re + mate.re) / 2.0, (r.im - mate.im) / 2.0)
        residual = float(np.max(np.abs(D(np.array([pair, pair.conjugate()])))))
        if residual > max(r.residual, mate.residual, RESIDUAL_TOL * scale):
            closed.extend([r, mate])
            continue
        closed.append(SpectrumRoot(re=pair.real, im=pair.imag, residual=residual))
        closed.append(SpectrumRoot(re=pair.real, im=-pair.imag, residual=residual))
    return closed + lower


def find_roots(
    c: LinearizedCoefficients, rect: Sequence[float], max_roots: int = 16
) -> SpectrumReport:
    """Subdivisão até uma raiz por folha, polimento por Newton e relatório ordenado."""
    D = characteristic_function(c)
    region = _as_rect(rect)
    top = _winding(D, region)
    scale = top.scale
    logger.info("retângulo %s: %d raízes (escala %.3e, %d pontos)", region, top.count, scale, top.points)

    counts: Dict[str, int] = {"total": top.count}
    leaves: List[Rect] = []
    frontier: List[Tuple[Rect, int]] = [(region, top.count)] if top.count > 0 else []
    complete = top.count <= max_roots
    depth = 0
    while frontier:
        depth += 1
        leaves.extend(r for r, n in frontier if n == 1)
        pending = [r for r, n in frontier if n > 1]
        if depth > MAX_DEPTH:
            logger.warning("profundidade máxima atingida com %d retângulos múltiplos", len(pending))
            leaves.extend(pending)
            complete = False
            break
        split = parallel_map(lambda r: _children(D, r, scale), pending)
        frontier = [(r, n) for pair in split for r, n in pair if n > 0]
        if len(leaves) >= max_roots:
            complete = False
            break
    leaves = leaves[:max_roots]

    polished = parallel_map(lambda r: _locate(D, r, scale), leaves)
    roots: List[SpectrumRoot] = []
    newton_iterations = 0
    for p in polished:
        newton_iterations += p.iterations
        z = p.root
        if abs(z.imag) <= 1e-9 * (1.0 + abs(z.real)):
            real_value = abs(D(np.array([complex(z.real, 0.0)]))[0])
            if real_value <= max(p.residual, RESIDUAL_TOL * scale):
                z, p.residual = complex(z.real, 0.0), float(real_value)
        roots.append(SpectrumRoot(re=z.real, im=z.imag, residual=p.residual))
    roots = _close_conjugates(D, roots, scale)
    roots.sort(key=lambda r: (r.re, r.im))

    if not complete:
        logger.warning("espectro incompleto: %d raízes no retângulo, limite %d", top.count, max_roots)
    bound = max((r.re for r in roots), default=float("-inf"))
    dominant_is_real = None
    if roots and all(report.holds for report in check_positivity(c)):
        top_root = max(roots, key=lambda r: (r.re, -abs(r.im)))
        dominant_is_real = top_root.im == 0.0
    counts["leaves"] = len(leaves)
    return SpectrumReport(
        roots=roots,
        spectral_bound_estimate=bound,
        search_region=region,
        method={
            "shooting_steps": c.grid.n // 2,
            "newton_iterations": newton_iterations,
            "winding_counts": counts,
            "boundary_points": top.points,
            "scale": scale,
            "determinant": "alpha1" if c.alpha == 1.0 else "general",
        },
        complete=complete,
        dominant_is_real=dominant_is_real,
        extension_alpha1=c.alpha == 1.0,
    )
