import argparse
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional

from rich.logging import RichHandler

from conditions.criteria import check_dissipativity, check_positivity, check_scramble, check_trivial
from config.config import settings
from config.model_file import load_model_file, parse_pair, parse_rect
from equilibrium.solver import equilibrium_report, model_equilibria
from linearization.coefficients import linearize
from reports.report_writer import (
    build_report,
    console,
    dumps,
    error_payload,
    metadata,
    print_report_console,
    save_report_json,
    write_rates_csv,
    write_trajectory_csv,
)
from schemas.errors import ConsistencyAlarm, HierstabError
from schemas.schema import ModelSpec, SimulationReport
from simulator.upwind import default_perturbation, fit_rate, perturbation_history, simulate
from spectral.contour import find_roots
from spectral.special import K0_parts, classify_special
from validator.cross_validator import StabilityCrossValidator

COMMANDS = ("equilibrium", "classify", "spectrum", "conditions", "simulate", "validate")
EXIT_USAGE = 64
BOUND_FLAGS = ("--search", "--rect")

logger = logging.getLogger("hierstab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: erro: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _glue_bound_values(argv: List[str]) -> List[str]:
    """`--search -5,5` vira `--search=-5,5`: o argparse trata `-5,5` como opção."""
    glued: List[str] = []
    i = 0
    while i < len(argv):
        if argv[i] in BOUND_FLAGS and i + 1 < len(argv):
            glued.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            glued.append(argv[i])
            i += 1
    return glued


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="hierstab",
        description="Equilíbrios e estabilidade linear de modelos estruturados por tamanho com competição hierárquica.",
    )
    parser.add_argument("command", choices=COMMANDS, help="Etapa a executar.")
    parser.add_argument("model", help="Arquivo de modelo (JSON).")
    parser.add_argument("--out", help="Diretório para report.json e CSVs.")
    parser.add_argument("--grid-n", type=int, help="Sobrescreve grid_n do modelo.")
    parser.add_argument("--search", type=parse_pair, help="Janela real LO,HI para K(λ)=1.")
    parser.add_argument("--rect", type=parse_rect, help="Retângulo RE0,RE1,IM0,IM1 no plano complexo.")
    parser.add_argument("--T", dest="T", type=float, help="Horizonte da simulação.")
    parser.add_argument("--eps", type=float, help="Amplitude da perturbação.")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Nível de log (stderr).")
    return parser


def _setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _target(model: ModelSpec):
    eqs = model_equilibria(model)
    positive = [eq for eq in eqs if not eq.trivial]
    return (positive[0] if positive else eqs[0]), eqs


def cmd_equilibrium(model: ModelSpec, args) -> Dict[str, Any]:
    eqs = model_equilibria(model)
    return {"equilibria": [equilibrium_report(model, eq) for eq in eqs]}


def cmd_classify(model: ModelSpec, args) -> Dict[str, Any]:
    eq, _ = _target(model)
    c = linearize(model, eq)
    verdict = classify_special(c, args.search or model.spectral.search)
    return {"b": eq.b, "verdict": verdict, **K0_parts(c)}


def cmd_spectrum(model: ModelSpec, args) -> Dict[str, Any]:
    eq, _ = _target(model)
    c = linearize(model, eq)
    rect = args.rect or model.spectral.rect or parse_rect(settings.RECT)
    return {"b": eq.b, "spectrum": find_roots(c, rect, model.spectral.max_roots)}


def cmd_conditions(model: ModelSpec, args) -> Dict[str, Any]:
    eq, _ = _target(model)
    c = linearize(model, eq)
    sigma, fertility = check_positivity(c)
    payload: Dict[str, Any] = {
        "b": eq.b,
        "positivity": [sigma, fertility],
        "dissipativity": check_dissipativity(c),
        "trivial": check_trivial(model),
    }
    if model.alpha == 1.0:
        payload["scramble"] = check_scramble(c)
    return payload


def cmd_simulate(model: ModelSpec, args) -> Dict[str, Any]:
    eq, _ = _target(model)
    T = args.T if args.T is not None else model.simulation.T
    eps = args.eps if args.eps is not None else model.simulation.eps * max(1.0, eq.u_star.max_abs())
    v0 = default_perturbation(model)
    times, norms, steps = perturbation_history(model, eq, v0, eps, T)
    fit = fit_rate(times, norms, T)
    if args.out:
        write_rates_csv(os.path.join(args.out, "rates.csv"), times, norms)
        traj = simulate(model, eq.u_star + eps * v0, T)
        write_trajectory_csv(os.path.join(args.out, "trajectory.csv"), traj.times, model.grid.nodes, traj.snapshots)
    report = SimulationReport(
        rate=fit.rate, T=T, eps=eps, grid_n=model.grid_n, steps=steps, fit_window=fit.window, samples=fit.samples
    )
    return {"b": eq.b, "simulation": report}


def cmd_validate(model: ModelSpec, args) -> Dict[str, Any]:
    validator = StabilityCrossValidator(
        model, rect=args.rect, search=args.search, T=args.T, eps=args.eps
    )
    report, c = validator.validate()
    return {"b": c.b, "validation": report}


HANDLERS = {
    "equilibrium": cmd_equilibrium,
    "classify": cmd_classify,
    "spectrum": cmd_spectrum,
    "conditions": cmd_conditions,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(_glue_bound_values(sys.argv[1:] if argv is None else list(argv)))
    except SystemExit as e:
        return int(e.code or 0)

    _setup_logging(args.log_level)
    started = time.time()
    console.print(f"🚀 hierstab {args.command}: {args.model}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)

    try:
        model = load_model_file(args.model, grid_n=args.grid_n)
        payload = HANDLERS[args.command](model, args)
        report = build_report(args.command, payload, metadata(started, grid_n=model.grid_n, model=model.name))
    except FileNotFoundError as e:
        print(dumps(error_payload(e, {"path": args.model})))
        console.print(f"❌ {e}")
        return 2
    except HierstabError as e:
        print(dumps(error_payload(e)))
        console.print(f"❌ {type(e).__name__}: {e}")
        return e.exit_code

    print(dumps(report))
    print_report_console(report)
    if args.out:
        path = save_report_json(report, os.path.join(args.out, "report.json"))
        console.print(f"💾 Relatório salvo em: {path}")

    validation = payload.get("validation")
    if validation is not None and validation.overall_status == "fail":
        alarm = ConsistencyAlarm(validation.alarm_reason or validation.summary)
        console.print(f"⚠️  {alarm}")
        return alarm.exit_code
    console.print("✅ Concluído")
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
