"""
Serialização dos relatórios: JSON versionado, CSV de trajetórias e resumo
no console (rich, em stderr).
"""

import json
import os
import time
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from config.config import settings
from schemas.schema import SCHEMA_VERSION

console = Console(stderr=True)


def _dump(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, dict):
        return {k: _dump(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_dump(v) for v in value]
    return value


def metadata(started: float, grid_n: Optional[int] = None, **extra) -> Dict[str, Any]:
    meta = {
        "timestamp": time.strftime("%Y-%m-%d %H:%M:%S"),
        "runtime": round(time.time() - started, 3),
        "grid_n": grid_n,
        "settings": settings.model_dump(),
    }
    meta.update(extra)
    return meta


def build_report(command: str, payload: Dict[str, Any], meta: Dict[str, Any]) -> Dict[str, Any]:
    """Payload comparável (sem timestamps) + bloco `_metadata` separado."""
    report = {"schema_version": SCHEMA_VERSION, "command": command}
    report.update(_dump(payload))
    report["_metadata"] = meta
    return report


def error_payload(error: Exception, details: Any = None) -> Dict[str, Any]:
    return {
        "error": str(error),
        "details": details if details is not None else getattr(error, "context", {}),
        "_metadata": {"timestamp": time.strftime("%Y-%m-%d %H:%M:%S")},
    }


def dumps(report: Dict[str, Any]) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False, allow_nan=False)


def save_report_json(report: Dict[str, Any], path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, ensure_ascii=False, allow_nan=False)
    return path


def write_trajectory_csv(path: str, times: np.ndarray, s: np.ndarray, snapshots: np.ndarray) -> str:
    """Formato longo `t,s,u`, uma linha por (instante, nó)."""
    tt = np.repeat(np.asarray(times, dtype=float), len(s))
    ss = np.tile(np.asarray(s, dtype=float), len(times))
    table = np.column_stack([tt, ss, np.asarray(snapshots, dtype=float).reshape(-1)])
    np.savetxt(path, table, delimiter=",", header="t,s,u", comments="", fmt="%.10g")
    return path


def write_rates_csv(path: str, times: np.ndarray, norms: np.ndarray) -> str:
    table = np.column_stack([np.asarray(times, dtype=float), np.asarray(norms, dtype=float)])
    np.savetxt(path, table, delimiter=",", header="t,norm_L1_diff", comments="", fmt="%.10g")
    return path


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, dict)):
        text = json.dumps(value, ensure_ascii=False)
        return text if len(text) <= 60 else text[:57] + "..."
    return str(value)


def print_report_console(report: Dict[str, Any]) -> None:
    """Resumo em tabela: chaves de primeiro nível, exceto amostras longas e metadados."""
    table = Table(title=f"hierstab · {report.get('command', '')}", show_lines=False)
    table.add_column("campo", style="cyan")
    table.add_column("valor")
    for key, value in report.items():
        if key.startswith("_") or key == "schema_version":
            continue
        table.add_row(key, _fmt(value))
    console.print(table)
