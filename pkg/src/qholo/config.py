"""JSON experiment configs: schema validation and construction of library objects."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from qholo.dynamics import TwoQubitState, symmetric_product_state
from qholo.echo import EchoProtocolParams
from qholo.errors import ConfigError, OutOfHorizon
from qholo.geometry import (
    CollinearStatic,
    RotatingApproach,
    Static,
    StateConfiguration,
    Trajectory,
    check_time,
    load_sampled_csv,
)
from qholo.numerics import DEFAULT_SPEC, QuadratureSpec
from qholo.potentials import Constant, Laurent, PowerLaw, Potential

COMMANDS = ("evolve", "constraint", "sweep")
DEFAULT_CONSTRAINT_TOL = 1e-10


def schema_path() -> Path:
    return Path(str(resources.files("qholo").joinpath("schema", "config.schema.json")))


def load_schema() -> dict:
    return json.loads(schema_path().read_text())


def validate(raw: Any, command: str) -> None:
    """Check ``raw`` against the schema for ``command``.

    Raises:
        ConfigError: with the first (most relevant) validation message.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    schema = load_schema()
    schema.pop("oneOf")
    schema["$ref"] = f"#/$defs/{command}"
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(raw))
    if error is not None:
        where = "/".join(str(p) for p in error.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {error.message}")


def read_config(path: str | Path, command: str) -> dict:
    """Parse and validate a config file; any problem becomes :class:`ConfigError`."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON: {exc}") from None
    validate(raw, command)
    return raw


def build_potential(raw: dict) -> Potential:
    kind = raw["kind"]
    try:
        if kind == "constant":
            return Constant(raw["value"])
        if kind == "power_law":
            return PowerLaw(raw["coupling"], raw["exponent"])
        return Laurent({int(k): v for k, v in raw["coefficients"].items()})
    except ValueError as exc:
        raise ConfigError(f"potential: {exc}") from None


def build_configuration(raw: dict) -> StateConfiguration:
    try:
        if "x" in raw:
            return StateConfiguration.from_vector(raw["x"])
        return StateConfiguration(raw["r_A1"], raw["r_A2"], raw["r_B1"], raw["r_B2"])
    except ValueError as exc:
        raise ConfigError(f"configuration: {exc}") from None


def build_trajectory(raw: dict, base_dir: Path) -> Trajectory:
    kind = raw["kind"]
    try:
        if kind == "static":
            return Static(build_configuration(raw["configuration"]))
        if kind == "collinear_static":
            return CollinearStatic(raw["x"], raw["dx"])
        if kind == "rotating_approach":
            return RotatingApproach(raw["L"], raw["v"], raw["omega"], raw["x0"])
        csv_path = Path(raw["csv"])
        if not csv_path.is_absolute():
            csv_path = base_dir / csv_path
        return load_sampled_csv(csv_path)
    except OSError as exc:
        raise ConfigError(f"trajectory: cannot read {exc.filename}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"trajectory: {exc}") from None


def build_times(raw: Any) -> list[float]:
    if isinstance(raw, list):
        return [float(t) for t in raw]
    start, stop, num = float(raw["start"]), float(raw["stop"]), int(raw["num"])
    if stop < start:
        raise ConfigError("times: stop must not be below start")
    return [float(t) for t in np.linspace(start, stop, num)]


def build_spec(raw: dict | None) -> QuadratureSpec:
    if not raw:
        return DEFAULT_SPEC
    return QuadratureSpec(
        atol=raw.get("atol", DEFAULT_SPEC.atol),
        rtol=raw.get("rtol", DEFAULT_SPEC.rtol),
        max_subdivisions=raw.get("max_subdivisions", DEFAULT_SPEC.max_subdivisions),
    )


def build_initial_state(raw: list | None) -> TwoQubitState:
    if raw is None:
        return symmetric_product_state()
    state = TwoQubitState([complex(re, im) for re, im in raw])
    if abs(state.norm() - 1.0) > 1e-9:
        raise ConfigError(f"initial_state: norm is {state.norm()!r}, expected 1")
    return state


@dataclass
class EvolveJob:
    potential: Potential
    trajectory: Trajectory
    times: list[float]
    initial: TwoQubitState
    spec: QuadratureSpec
    output: str | None = None


@dataclass
class ConstraintJob:
    potential: Potential
    configurations: list[StateConfiguration]
    single: bool
    tolerance: float = DEFAULT_CONSTRAINT_TOL
    step: float | None = None
    output: str | None = None


@dataclass
class SweepJob:
    template: EchoProtocolParams
    v_grid: list[float]
    omega_grid: list[float]
    root: str = "first"
    spec: QuadratureSpec = field(default=DEFAULT_SPEC)
    output: str | None = None


def evolve_job(raw: dict, base_dir: Path) -> EvolveJob:
    traj = build_trajectory(raw["trajectory"], base_dir)
    times = build_times(raw["times"])
    try:
        for t in times:
            check_time(traj, t)
    except OutOfHorizon as exc:
        raise ConfigError(f"times: {exc}") from None
    try:
        spec = build_spec(raw.get("tolerances"))
    except ValueError as exc:
        raise ConfigError(f"tolerances: {exc}") from None
    return EvolveJob(
        potential=build_potential(raw["potential"]),
        trajectory=traj,
        times=times,
        initial=build_initial_state(raw.get("initial_state")),
        spec=spec,
        output=raw.get("output"),
    )


def constraint_job(raw: dict) -> ConstraintJob:
    single = "configuration" in raw
    cfgs = [raw["configuration"]] if single else raw["configurations"]
    return ConstraintJob(
        potential=build_potential(raw["potential"]),
        configurations=[build_configuration(c) for c in cfgs],
        single=single,
        tolerance=float(raw.get("tolerance", DEFAULT_CONSTRAINT_TOL)),
        step=raw.get("step"),
        output=raw.get("output"),
    )


def sweep_job(raw: dict) -> SweepJob:
    try:
        template = EchoProtocolParams(**raw.get("echo", {}))
        spec = build_spec(raw.get("tolerances"))
    except ValueError as exc:
        raise ConfigError(f"echo: {exc}") from None
    return SweepJob(
        template=template,
        v_grid=[float(v) for v in raw["v_grid"]],
        omega_grid=[float(w) for w in raw["omega_grid"]],
        root=raw.get("root", "first"),
        spec=spec,
        output=raw.get("output"),
    )
