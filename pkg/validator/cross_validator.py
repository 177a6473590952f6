import logging
from typing import List, Optional, Sequence, Tuple

from conditions.criteria import check_dissipativity, check_trivial, remark_alarm
from config.config import settings
from config.model_file import parse_rect
from equilibrium.solver import Equilibrium, model_equilibria
from linearization.coefficients import LinearizedCoefficients, linearize
from reports.report_writer import console
from schemas.errors import BoundaryZeroError, HierstabError
from schemas.schema import ModelSpec, RouteVerdict, ValidationReport
from simulator.upwind import measure_rate
from spectral.contour import find_roots
from spectral.special import classify_special

logger = logging.getLogger(__name__)

# |taxa| abaixo disso não decide o sinal (resolução do esquema de 1ª ordem)
SIMULATION_RATE_BAND = 0.02

_SIGN = {"Stable": -1, "Unstable": 1}


class StabilityCrossValidator:
    def __init__(
        self,
        model: ModelSpec,
        rect: Optional[Sequence[float]] = None,
        search: Optional[Sequence[float]] = None,
        T: Optional[float] = None,
        eps: Optional[float] = None,
    ):
        """
        Recebe o modelo já validado. Retângulo, janela de busca e parâmetros
        da simulação caem nos valores do próprio modelo quando omitidos.
        """
        self.model = model
        self.rect = rect or model.spectral.rect or parse_rect(settings.RECT)
        self.search = search or model.spectral.search
        self.T = T if T is not None else model.simulation.T
        self.eps = eps

    def target(self) -> Equilibrium:
        eqs = model_equilibria(self.model)
        positive = [eq for eq in eqs if not eq.trivial]
        return positive[0] if positive else eqs[0]

    def _special_route(self, c: LinearizedCoefficients) -> Optional[RouteVerdict]:
        if not c.sigma_vanishes:
            return None
        verdict = classify_special(c, self.search)
        return RouteVerdict(
            route="special",
            growth_sign=_SIGN.get(verdict.verdict),
            value=verdict.evidence.get("dominant_root"),
            detail=f"{verdict.verdict} ({verdict.criterion})",
        )

    def _determinant_route(self, c: LinearizedCoefficients) -> RouteVerdict:
        try:
            spectrum = find_roots(c, self.rect, self.model.spectral.max_roots)
        except BoundaryZeroError as e:
            return RouteVerdict(route="determinant", detail=f"abstém: {e}")
        if not spectrum.roots:
            return RouteVerdict(route="determinant", detail="nenhuma raiz no retângulo: abstém")
        bound = spectrum.spectral_bound_estimate
        sign = -1 if bound < 0 else 1 if bound > 0 else None
        return RouteVerdict(
            route="determinant",
            growth_sign=sign,
            value=bound,
            detail=f"{len(spectrum.roots)} raízes, cota espectral {bound:.6g}",
        )

    def _dissipativity_route(self, c: LinearizedCoefficients):
        report = check_dissipativity(c)
        verdict = RouteVerdict(
            route="dissipativity",
            growth_sign=-1 if report.holds else None,
            value=report.kappa_max,
            detail="vale" if report.holds else "não vale: abstém (condição apenas suficiente)",
        )
        return verdict, report

    def _trivial_route(self) -> RouteVerdict:
        report = check_trivial(self.model)
        return RouteVerdict(
            route="trivial",
            growth_sign=-1 if report.holds else None,
            value=report.margin,
            detail=f"R(0) = {report.extra['R0']:.6g}",
        )

    def _simulation_route(self, eq: Equilibrium) -> RouteVerdict:
        try:
            rate = measure_rate(self.model, eq, eps=self.eps, T=self.T)
        except HierstabError as e:
            return RouteVerdict(route="simulation", detail=f"abstém: {e}")
        if rate == float("-inf"):
            return RouteVerdict(route="simulation", growth_sign=-1, value=None, detail="perturbação extinta")
        sign = None if abs(rate) <= SIMULATION_RATE_BAND else (1 if rate > 0 else -1)
        return RouteVerdict(route="simulation", growth_sign=sign, value=rate, detail=f"taxa {rate:.6g}")

    def validate(self) -> Tuple[ValidationReport, LinearizedCoefficients]:
        eq = self.target()
        c = linearize(self.model, eq)
        console.print(f"🔍 Validando equilíbrio b={eq.b:.6g} ({'trivial' if eq.trivial else 'positivo'})")

        routes: List[RouteVerdict] = []
        special = self._special_route(c)
        if special is not None:
            routes.append(special)
        routes.append(self._determinant_route(c))
        dissipative, dis_report = self._dissipativity_route(c)
        routes.append(dissipative)
        if eq.trivial:
            routes.append(self._trivial_route())
        routes.append(self._simulation_route(eq))

        alarm, reason, _ = remark_alarm(c, dis_report)
        signs = {r.growth_sign for r in routes if r.growth_sign is not None}
        disagree = len(signs) > 1
        for r in routes:
            logger.info("rota %s: sinal=%s valor=%s (%s)", r.route, r.growth_sign, r.value, r.detail)

        if alarm:
            status, summary = "fail", "alarme de consistência"
        elif disagree:
            status, summary = "fail", "rotas discordam do sinal da taxa de crescimento"
        elif not signs:
            status, summary = "pass", "nenhuma rota decisiva"
        else:
            word = "estável" if signs == {-1} else "instável"
            status, summary = "pass", f"rotas decisivas concordam: {word}"
        report = ValidationReport(
            overall_status=status,
            summary=summary,
            routes=routes,
            alarm=alarm,
            alarm_reason=reason or None,
        )
        return report, c
