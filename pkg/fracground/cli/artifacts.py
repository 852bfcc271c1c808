"""
Run Artifacts

Writers for the documents, tables and profiles produced by the command line.
Every artifact carries the resolved configuration and the seed.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..operators.fracops import GridFunction
from ..variational.solver import GroundState


def config_header(config: Dict[str, Any], seed: int) -> List[str]:
    """Comment lines embedding the resolved configuration"""
    return [
        f"seed: {seed}",
        "config: " + json.dumps(config, sort_keys=True, separators=(",", ":")),
    ]


def prepare_output_dir(path: Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: Path, payload: Dict[str, Any]) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_to_plain)
        handle.write("\n")


def write_jsonl(path: Path, records: Iterable[Dict[str, Any]], header: Optional[Dict[str, Any]] = None) -> None:
    with open(path, "w") as handle:
        if header is not None:
            handle.write(json.dumps(header, sort_keys=True) + "\n")
        for record in records:
            handle.write(json.dumps(record, sort_keys=True, default=_to_plain) + "\n")


def write_frame(path: Path, frame: pd.DataFrame, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as handle:
        for line in header_lines:
            handle.write(f"# {line}\n")
        frame.to_csv(handle, index=False, float_format="%.10e", lineterminator="\n")


def write_profile(path: Path, u: GridFunction, header_lines: Sequence[str] = ()) -> None:
    """Columns t, u_1, ..., u_n"""
    columns = ["t"] + [f"u_{k + 1}" for k in range(u.n_components)]
    header = "\n".join(list(header_lines) + [" ".join(columns)])
    np.savetxt(path, np.column_stack([u.grid.nodes, u.values]), fmt="%.12e", header=header)


def write_error(output_dir: Path, exc: BaseException, exit_code: int, extra: Optional[Dict[str, Any]] = None) -> None:
    payload = {
        'exit_code': exit_code,
        'error_type': type(exc).__name__,
        'message': str(exc),
    }
    for attribute in ("line", "field"):
        value = getattr(exc, attribute, None)
        if value is not None:
            payload[attribute] = value
    report = getattr(exc, "report", None)
    if report is not None and hasattr(report, "model_dump"):
        payload['report'] = report.model_dump(mode="json")
    if extra:
        payload.update(extra)
    write_json(prepare_output_dir(output_dir) / "error.json", payload)


def ground_state_document(gs: GroundState, config: Dict[str, Any], seed: int) -> Dict[str, Any]:
    """Self-describing record: configuration echo, scalars and nodal arrays"""
    return {
        'seed': seed,
        'config': config,
        'problem': gs.problem,
        'lambda': gs.lam,
        'scalars': {
            'energy': gs.energy,
            'gradient_norm': gs.gradient_norm,
            'nehari_residual': gs.nehari_residual,
            'x_norm': gs.x_norm,
            'boundary_magnitude': gs.boundary_magnitude,
            'multistart_spread': gs.multistart_spread,
            'strong_residual': gs.strong_residual,
            'rho_observed': gs.rho_observed,
            'nehari_identity_gap': gs.nehari_identity_gap,
            'lambda_threshold': gs.lambda_threshold,
            'below_threshold': gs.below_threshold,
            'converged_starts': gs.converged_starts,
        },
        'interval_checks': gs.interval_checks,
        'grid': gs.u.grid.model_dump(),
        't': gs.u.grid.nodes.tolist(),
        'u': gs.u.values.tolist(),
    }


def starts_frame(gs: GroundState) -> pd.DataFrame:
    return pd.DataFrame([start.model_dump() for start in gs.starts])


def iteration_records(gs: GroundState) -> List[Dict[str, Any]]:
    return [dict(record.model_dump(), seed=gs.best.seed) for record in gs.best.log]


def _to_plain(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "model_dump"):
        return value.model_dump(mode="json")
    raise TypeError(f"cannot serialise {type(value).__name__}")
