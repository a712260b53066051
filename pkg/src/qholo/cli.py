"""``qholo`` command line: evolve, constraint and sweep driven by JSON configs.

Exit codes: 0 success, 2 config error, 3 numerical error. Results go to
``--output`` (or the config's ``output`` key, or stdout) and are written
once, after the computation has finished.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from qholo.config import (
    ConstraintJob,
    EvolveJob,
    SweepJob,
    constraint_job,
    evolve_job,
    read_config,
    schema_path,
    sweep_job,
)
from qholo.dynamics import concurrence, entangling_phases, evolve_many
from qholo.echo import format_float, sweep, write_sweep_csv
from qholo.errors import ConfigError, QholoError
from qholo.geometry import constraint_gradient, constraint_residual

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
THREADS_ENV = "QHOLO_THREADS"


def render_evolve(job: EvolveJob) -> str:
    phis = entangling_phases(job.trajectory, job.potential, job.times, job.spec)
    states = evolve_many(job.trajectory, job.potential, job.times, job.initial, job.spec)
    out = io.StringIO()
    out.write("t,phi,concurrence\n")
    for t, phi, state in zip(job.times, phis, states):
        out.write(f"{format_float(t)},{format_float(phi)},{format_float(concurrence(state))}\n")
    return out.getvalue()


def _json(value, indent: int = 0) -> str:
    """JSON text with every float at 17 significant digits."""
    pad = "  " * (indent + 1)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if not math.isfinite(x):
            raise ValueError(f"cannot encode {x!r} as JSON")
        return format_float(x)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = [f"{pad}{_json(str(k))}: {_json(v, indent + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        if all(isinstance(v, (float, int, np.floating, np.integer)) for v in value):
            return "[" + ", ".join(_json(v) for v in value) + "]"
        items = [pad + _json(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    raise TypeError(f"cannot encode {type(value).__name__} as JSON")


def constraint_report(job: ConstraintJob, index: int) -> dict:
    cfg = job.configurations[index]
    h = constraint_residual(cfg, job.potential)
    grad = constraint_gradient(cfg, job.potential, job.step)
    return {
        "h": h,
        "gradient_norm": float(np.linalg.norm(grad)),
        "in_constraint_set": abs(h) <= job.tolerance,
        "tolerance": job.tolerance,
        "distances": list(cfg.distances()),
        "gradient": [float(g) for g in grad],
    }


def render_constraint(job: ConstraintJob) -> str:
    reports = [constraint_report(job, i) for i in range(len(job.configurations))]
    body = reports[0] if job.single else {"reports": reports}
    return _json(body) + "\n"


def render_sweep(job: SweepJob, workers: int) -> str:
    records = sweep(
        job.template,
        job.v_grid,
        job.omega_grid,
        workers=workers,
        root=job.root,  # type: ignore[arg-type]
        spec=job.spec,
    )
    out = io.StringIO()
    write_sweep_csv(records, out, log10_column=True)
    return out.getvalue()


def _write_output(text: str, target: str | None) -> None:
    if target is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(target)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_threads(cli_value: int | None) -> int:
    if cli_value is not None:
        if cli_value < 1:
            raise ConfigError("--threads must be >= 1")
        return cli_value
    env = os.environ.get(THREADS_ENV)
    if env is None or not env.strip():
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qholo",
        description="Entanglement from state-dependent potentials: evolution, "
        "no-entanglement constraint checks and multipole echo sweeps.",
        epilog=f"JSON schema for --config files: {schema_path()}\n"
        "Exit codes: 0 success, 2 config error, 3 numerical error.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="{evolve,constraint,sweep}", required=True)
    helps = {
        "evolve": "CSV of t, phi and concurrence along a trajectory",
        "constraint": "JSON report on h(x) and its gradient for configuration(s)",
        "sweep": "CSV of null time and probe phase over an (omega, v) grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--output", help="output file (overrides the config; default stdout)")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"worker processes for sweep (fallback ${THREADS_ENV}, default 1)",
        )
    return parser


def run(command: str, config_path: str, output: str | None, threads: int | None) -> int:
    try:
        workers = resolve_threads(threads)
        raw = read_config(config_path, command)
        base_dir = Path(config_path).resolve().parent
        if command == "evolve":
            job = evolve_job(raw, base_dir)
        elif command == "constraint":
            job = constraint_job(raw)
        else:
            job = sweep_job(raw)
    except ConfigError as exc:
        print(f"qholo {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if isinstance(job, EvolveJob):
            text = render_evolve(job)
        elif isinstance(job, ConstraintJob):
            text = render_constraint(job)
        else:
            text = render_sweep(job, workers)
    except (QholoError, ArithmeticError, ValueError) as exc:
        print(f"qholo {command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    try:
        _write_output(text, output if output is not None else job.output)
    except OSError as exc:
        print(f"qholo {command}: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.command, args.config, args.output, args.threads)


if __name__ == "__main__":
    sys.exit(main())
