"""Positions of the four internal states, trajectories, and the constraint h(x).

A configuration holds the positions of states 1 and 2 of body A and of
body B, twelve coordinates in total. Entanglement is driven only by the
combination

    h(x) = f(d11) + f(d22) - f(d12) - f(d21)

of the four cross distances ``d_ab = |r_Aa - r_Bb|``. ``h`` vanishes for
every configuration only when ``f`` is constant.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from qholo.errors import NonPositiveDistance, OutOfHorizon
from qholo.potentials import Potential

Distances = tuple[float, float, float, float]


def _vec3(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coordinates must be finite")
    return arr


def _cross_distances(x: np.ndarray) -> Distances:
    a1, a2, b1, b2 = x[0:3], x[3:6], x[6:9], x[9:12]
    return (
        float(np.linalg.norm(a1 - b1)),
        float(np.linalg.norm(a1 - b2)),
        float(np.linalg.norm(a2 - b1)),
        float(np.linalg.norm(a2 - b2)),
    )


def _check_distances(d: Sequence[float]) -> Distances:
    if len(d) != 4:
        raise ValueError(f"expected four distances, got {len(d)}")
    out = tuple(float(x) for x in d)
    if not all(x > 0.0 for x in out):
        raise NonPositiveDistance(f"all cross distances must be > 0, got {out}")
    return out  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class StateConfiguration:
    """Positions of states A1, A2, B1, B2 (each a 3-vector)."""

    r_A1: np.ndarray
    r_A2: np.ndarray
    r_B1: np.ndarray
    r_B2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("r_A1", "r_A2", "r_B1", "r_B2"):
            object.__setattr__(self, name, _vec3(getattr(self, name)))
        _check_distances(self.distances())

    @classmethod
    def from_vector(cls, x: Sequence[float]) -> "StateConfiguration":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (12,):
            raise ValueError(f"expected 12 coordinates, got {x.shape[0]}")
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.r_A1, self.r_A2, self.r_B1, self.r_B2])

    def distances(self) -> Distances:
        """(d11, d12, d21, d22)."""
        return _cross_distances(self.as_vector())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateConfiguration):
            return NotImplemented
        return bool(np.array_equal(self.as_vector(), other.as_vector()))

    def __hash__(self) -> int:
        return hash(self.as_vector().tobytes())


@dataclass(frozen=True, eq=False)
class Static:
    configuration: StateConfiguration
    t_max: float = field(default=math.inf, init=False)

    def distances_at(self, t: float) -> Distances:
        check_time(self, t)
        return self.configuration.distances()

    def breakpoints(self, a: float, b: float) -> list[float]:
        return []


@dataclass(frozen=True)
class CollinearStatic:
    """All four states on one line at rest: d11 = x, d12 = d21 = x + dx, d22 = x + 2 dx."""

    x: float
    dx: float
    t_max: float = field(default=math.inf, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "dx", float(self.dx))
        _check_distances(self._distances())

    def _distances(self) -> Distances:
        return (self.x, self.x + self.dx, self.x + self.dx, self.x + 2.0 * self.dx)

    def distances_at(self, t: float) -> Distances:
        check_time(self, t)
        return self._distances()

    def breakpoints(self, a: float, b: float) -> list[float]:
        return []


@dataclass(frozen=True)
class RotatingApproach:
    """Two parallel planes closing at speed ``v`` while body B spins at ``omega``.

    Body A is at rest; B rotates about the midpoint of its two states, which
    sit ``x0`` apart. The planes start ``L`` apart and meet at ``L / v``,
    which is taken as the end of the validity horizon (infinite for v = 0).
    """

    L: float
    v: float
    omega: float
    x0: float

    def __post_init__(self) -> None:
        for name in ("L", "v", "omega", "x0"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if self.v < 0:
            raise ValueError("approach speed v must be >= 0")
        if self.x0 < 0:
            raise ValueError("x0 must be >= 0")

    @property
    def t_bar(self) -> float:
        """Time at which the planes meet."""
        return self.L / self.v if self.v > 0 else math.inf

    @property
    def t_max(self) -> float:
        return self.t_bar

    def distances_at(self, t: float) -> Distances:
        check_time(self, t)
        gap = self.L - self.v * t
        half = 0.5 * self.omega * t
        s = self.x0 * math.sin(half)
        c = self.x0 * math.cos(half)
        d_same = math.sqrt(gap * gap + s * s)
        d_cross = math.sqrt(gap * gap + c * c)
        if not (d_same > 0 and d_cross > 0):
            raise NonPositiveDistance(f"states coincide at t={t}")
        return (d_same, d_cross, d_cross, d_same)

    def breakpoints(self, a: float, b: float) -> list[float]:
        """Quarter-period marks of the rotation inside (a, b)."""
        if self.omega == 0:
            return []
        step = 0.5 * math.pi / abs(self.omega)
        k0 = math.floor(a / step) + 1
        k1 = math.ceil(b / step)
        return [k * step for k in range(k0, k1) if a < k * step < b]


@dataclass(frozen=True, eq=False)
class Sampled:
    """Piecewise-linear trajectory through sampled configurations.

    Positions, not distances, are interpolated. Times must start at 0 and
    increase strictly; the horizon is the last sample time (inclusive).
    """

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float).reshape(-1)
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 12 or pos.shape[0] != times.shape[0]:
            raise ValueError("positions must have shape (len(times), 12)")
        if times.size < 2:
            raise ValueError("a sampled trajectory needs at least two samples")
        if times[0] != 0.0:
            raise ValueError("sampled trajectories must start at t = 0")
        if not np.all(np.diff(times) > 0):
            raise ValueError("sample times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(pos))):
            raise ValueError("samples must be finite")
        for row in pos:
            _check_distances(_cross_distances(row))
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "_tlist", [float(t) for t in times])

    @classmethod
    def from_configurations(
        cls, samples: Sequence[tuple[float, StateConfiguration]]
    ) -> "Sampled":
        times = [t for t, _ in samples]
        pos = [cfg.as_vector() for _, cfg in samples]
        return cls(np.array(times), np.array(pos))

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    def position_at(self, t: float) -> np.ndarray:
        check_time(self, t)
        tl = self._tlist  # type: ignore[attr-defined]
        i = min(bisect.bisect_right(tl, t) - 1, len(tl) - 2)
        w = (t - tl[i]) / (tl[i + 1] - tl[i])
        return (1.0 - w) * self.positions[i] + w * self.positions[i + 1]

    def distances_at(self, t: float) -> Distances:
        return _check_distances(_cross_distances(self.position_at(t)))

    def breakpoints(self, a: float, b: float) -> list[float]:
        return [t for t in self._tlist if a < t < b]  # type: ignore[attr-defined]


Trajectory = Union[Static, CollinearStatic, RotatingApproach, Sampled]


def check_time(traj: Trajectory, t: float) -> None:
    inclusive = isinstance(traj, Sampled)
    if not t >= 0.0:
        raise OutOfHorizon(f"t must be >= 0, got {t}")
    if t > traj.t_max or (not inclusive and t == traj.t_max):
        raise OutOfHorizon(f"t={t} is beyond the trajectory horizon {traj.t_max}")


def distances_at(traj: Trajectory, t: float) -> Distances:
    """(d11, d12, d21, d22) at time ``t``."""
    return traj.distances_at(float(t))


def load_sampled_csv(path: str | Path) -> Sampled:
    """Read a ``time, 12 coordinates`` CSV (an optional header row is skipped)."""
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh)):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                if lineno == 0:
                    continue
                raise ValueError(f"{path}:{lineno + 1}: non-numeric value") from None
            if len(values) != 13:
                raise ValueError(f"{path}:{lineno + 1}: expected 13 columns, got {len(values)}")
            rows.append(values)
    data = np.array(rows, dtype=float)
    if data.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    return Sampled(data[:, 0], data[:, 1:])


def _as_distances(cfg: StateConfiguration | Sequence[float]) -> Distances:
    if isinstance(cfg, StateConfiguration):
        return cfg.distances()
    return _check_distances(cfg)


def constraint_residual(cfg: StateConfiguration | Sequence[float], p: Potential) -> float:
    """h = f(d11) + f(d22) - f(d12) - f(d21) for a configuration or four distances."""
    d11, d12, d21, d22 = _as_distances(cfg)
    f11, f12, f21, f22 = p(d11), p(d12), p(d21), p(d22)
    return (f11 + f22) - (f12 + f21)


def constraint_gradient(
    cfg: StateConfiguration, p: Potential, step: float | None = None
) -> np.ndarray:
    """Central-difference gradient of h with respect to the 12 coordinates.

    The default step is ``1e-6`` times the smallest cross distance.
    """
    x = cfg.as_vector()
    if step is None:
        step = 1e-6 * min(cfg.distances())
    if not step > 0:
        raise ValueError("step must be > 0")
    grad = np.empty(12)
    for i in range(12):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        hp = constraint_residual(_check_distances(_cross_distances(xp)), p)
        hm = constraint_residual(_check_distances(_cross_distances(xm)), p)
        grad[i] = (hp - hm) / (2.0 * step)
    return grad
