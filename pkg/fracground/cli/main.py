"""
Command Line Interface

Subcommands:
- validate: hypothesis checks for the configured potential and weight
- operators: power-rule convergence table for the fractional derivatives
- solve: line ground state at the configured λ
- bvp: Dirichlet ground state on T
- sweep: the large-λ concentration experiment
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from ..analysis.concentration import HARD_FLAGS, run_sweep, write_sweep_csv
from ..config.run_config import RunConfig, load_run_config
from ..config.settings import defaults, settings
from ..exceptions import ConfigError, ConvergenceError, FracGroundError, HypothesisError
from ..hypotheses.validation import validate_hypotheses
from ..operators.fracops import FracOrder, convergence_study
from ..variational.solver import embedding_estimate, solve_bvp, solve_line
from . import artifacts

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4

SUBCOMMANDS = ("validate", "operators", "solve", "bvp", "sweep")


class CommandConfig(BaseModel):
    subcommand: str = Field(..., description="One of validate, operators, solve, bvp, sweep")
    config_path: Optional[Path] = Field(None, description="YAML run file; the reference file when omitted")
    output_dir: Path = Field(default_factory=lambda: Path(settings.OUTPUT_DIR))
    seed: Optional[int] = Field(None, description="Overrides multistart.seed")
    overrides: List[str] = Field(default_factory=list)
    verbose: int = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracground",
        description="Ground states of fractional Hamiltonian systems on the Nehari manifold.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", dest="config_path", type=Path, default=None,
                        help="YAML run configuration (default: configs/reference.yaml)")
    parser.add_argument("--output-dir", type=Path, default=None,
                        help="Artifact directory (default: $FRACGROUND_OUTPUT_DIR or ./runs)")
    parser.add_argument("--seed", type=int, default=None, help="Seed of the first random start")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="Override a configuration entry; repeatable")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    return parser


def parse_command(argv: Optional[Sequence[str]] = None) -> CommandConfig:
    args = build_parser().parse_args(argv)
    values = {key: value for key, value in vars(args).items() if value is not None}
    return CommandConfig(**values)


def _configure_logging(verbose: int) -> None:
    level = {0: defaults.LOG_LEVEL, 1: "INFO"}.get(verbose, "DEBUG")
    logging.getLogger("fracground").setLevel(level)


def _load(command: CommandConfig) -> RunConfig:
    overrides = list(command.overrides)
    if command.seed is not None:
        overrides.append(f"multistart.seed={command.seed}")
    return load_run_config(command.config_path, overrides)


def _validate(run_config: RunConfig, out: Path, header: List[str]) -> int:
    problem = run_config.build_problem()
    estimate = embedding_estimate(problem)
    report = validate_hypotheses(problem.potential, problem.weight, c_inf=estimate.c_inf_lower)
    artifacts.write_frame(out / "validation.csv", report.to_frame(), header)
    artifacts.write_json(out / "validation.json", {
        'config': run_config.resolved(),
        'seed': run_config.multistart.seed,
        'embedding': estimate.model_dump(),
        'passed': report.passed,
        'checks': [check.model_dump(mode="json") for check in report.checks],
    })
    for check in report.checks:
        print(f"{check.name:<14}{check.status.value:<9}{check.message}")
    return EXIT_OK if report.passed else EXIT_HYPOTHESIS


def _operators(run_config: RunConfig, out: Path, header: List[str]) -> int:
    studies = [
        convergence_study(FracOrder(alpha=0.7), exponent=2.0).assign(alpha=0.7, exponent=2.0),
        convergence_study(FracOrder(alpha=0.5), exponent=1.0).assign(alpha=0.5, exponent=1.0),
        convergence_study(FracOrder(alpha=run_config.problem.alpha), exponent=2.0)
        .assign(alpha=run_config.problem.alpha, exponent=2.0),
    ]
    table = pd.concat(studies, ignore_index=True)
    artifacts.write_frame(out / "operators.csv", table, header)
    print(table.to_string(index=False))
    return EXIT_OK


def _solve(run_config: RunConfig, out: Path, header: List[str], problem_kind: str) -> int:
    problem = run_config.build_problem()
    gs = solve_bvp(problem) if problem_kind == "bvp" else solve_line(problem)
    config = run_config.resolved()
    seed = run_config.multistart.seed
    artifacts.write_json(out / f"{problem_kind}_ground_state.json", artifacts.ground_state_document(gs, config, seed))
    artifacts.write_profile(out / f"{problem_kind}_profile.txt", gs.u, header)
    artifacts.write_frame(out / f"{problem_kind}_multistart.csv", artifacts.starts_frame(gs), header)
    artifacts.write_jsonl(out / f"{problem_kind}_iterations.jsonl", artifacts.iteration_records(gs),
                          header={'config': config, 'seed': seed})
    print(f"energy {gs.energy:.12e}  |grad| {gs.gradient_norm:.3e}  spread {gs.multistart_spread:.3e}")
    return EXIT_OK


def _sweep(run_config: RunConfig, out: Path, header: List[str]) -> int:
    problem = run_config.build_problem()
    report = run_sweep(run_config.problem.lambda_list, problem, warm_start=run_config.sweep.warm_start,
                       tail_mass_limit=run_config.sweep.tail_mass_limit,
                       h_alpha_distance_limit=run_config.sweep.h_alpha_distance_limit)
    write_sweep_csv(report, out / "sweep.csv", header)
    summary = "\n".join(f"# {line}" for line in header) + "\n" + report.summary() + "\n"
    (out / "sweep_summary.txt").write_text(summary)
    artifacts.write_json(out / "sweep.json", {
        'config': run_config.resolved(),
        'seed': run_config.multistart.seed,
        'c_tilde': report.c_tilde,
        'frak_c0': report.frak_c0,
        'u_tilde_h_alpha': report.u_tilde_h_alpha,
        'complete': report.complete,
        'error': report.error,
        'flags': report.flags,
        'records': [record.model_dump() for record in report.records],
    })
    profiles = artifacts.prepare_output_dir(out / "profiles")
    if report.u_tilde is not None:
        artifacts.write_profile(profiles / "u_tilde.txt", report.u_tilde, header)
    for lam, u in report.profiles.items():
        artifacts.write_profile(profiles / f"u_lambda_{lam:g}.txt", u, header)
    print(report.summary())
    if not report.accepted:
        failed = ", ".join(name for name in HARD_FLAGS if not report.flags.get(name, False))
        message = report.error or f"sweep checks violated: {failed}"
        artifacts.write_error(out, ConvergenceError(message), EXIT_NUMERICAL, extra={
            'config': run_config.resolved(),
            'seed': run_config.multistart.seed,
            'flags': report.flags,
            'records': [record.model_dump() for record in report.records],
        })
        return EXIT_NUMERICAL
    return EXIT_OK


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, HypothesisError):
        return EXIT_HYPOTHESIS
    if isinstance(exc, ConvergenceError):
        return EXIT_NUMERICAL
    if isinstance(exc, (FracGroundError, ValueError)):
        return EXIT_CONFIG
    return EXIT_UNEXPECTED


def run(command: CommandConfig) -> int:
    """
    Execute one subcommand

    Args:
        command: Parsed command

    Returns:
        Process exit status
    """
    _configure_logging(command.verbose)
    out = command.output_dir
    run_config: Optional[RunConfig] = None
    try:
        run_config = _load(command)
        out = artifacts.prepare_output_dir(out)
        header = artifacts.config_header(run_config.resolved(), run_config.multistart.seed)
        if command.subcommand == "validate":
            return _validate(run_config, out, header)
        if command.subcommand == "operators":
            return _operators(run_config, out, header)
        if command.subcommand in ("solve", "bvp"):
            return _solve(run_config, out, header, "line" if command.subcommand == "solve" else "bvp")
        return _sweep(run_config, out, header)
    except Exception as exc:  # noqa: BLE001
        code = exit_code_for(exc)
        if code == EXIT_UNEXPECTED:
            logger.exception("unexpected failure")
        logger.error("%s: %s", type(exc).__name__, exc)
        extra = None if run_config is None else {
            'config': run_config.resolved(),
            'seed': run_config.multistart.seed,
        }
        artifacts.write_error(out, exc, code, extra)
        print(f"error: {exc}", file=sys.stderr)
        return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(parse_command(argv))


if __name__ == "__main__":
    sys.exit(main())
