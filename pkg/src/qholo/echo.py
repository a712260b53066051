"""Multipole echo protocol on the rotating-approach geometry.

Body A sits still while body B, whose two states are ``x0`` apart, spins at
``omega`` about its midpoint; the planes holding them close at speed ``v``
from an initial gap ``L``. For a single inverse-power term ``c_n d**-n``
the accumulated phase is

    phi_n(t) = 2 c_n integral_0^t [d_same(tau)**-n - d_cross(tau)**-n] dtau

(d11 = d22 = d_same, d12 = d21 = d_cross). The protocol picks the time t*
where the leading term's phase returns to zero, so whatever entanglement
is left at t* comes from the subleading (probe) term.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Literal, Sequence, TextIO

import numpy as np

from qholo.errors import MissingTerm, NoRootFound, QuadratureFailure
from qholo.geometry import RotatingApproach, check_time
from qholo.numerics import (
    DEFAULT_SPEC,
    CumulativeIntegral,
    QuadratureSpec,
    integrate,
    refine_root,
    scan_grid,
    scan_sign_changes,
)
from qholo.potentials import Laurent

RootChoice = Literal["largest", "first"]

SCAN_POINTS_PER_HALF_PERIOD = 64
MAX_SCAN_POINTS = 1_000_000
MIN_SCAN_POINTS = 512
END_GUARD = 1e-6
POLISH_TARGET = 1e-12
MAX_POLISH_STEPS = 8
SWEEP_CSV_HEADER = ("omega", "v", "t_star", "t_bar", "phi2", "converged")


@dataclass(frozen=True)
class EchoProtocolParams:
    L: float = 1.0
    v: float = 0.0
    omega: float = 0.0
    x0: float = 0.1
    leading_term: int = 1
    probe_term: int = 2
    c_leading: float = 1.0
    c_probe: float = 1.0

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if not self.x0 > 0:
            raise ValueError("x0 must be > 0")
        if self.v < 0:
            raise ValueError("v must be >= 0")
        if int(self.leading_term) < 1 or int(self.probe_term) <= int(self.leading_term):
            raise ValueError("need 1 <= leading_term < probe_term")

    @property
    def t_bar(self) -> float:
        """Collision time L / v (infinite when v = 0)."""
        return self.L / self.v if self.v > 0 else math.inf

    def trajectory(self) -> RotatingApproach:
        return RotatingApproach(L=self.L, v=self.v, omega=self.omega, x0=self.x0)

    def coefficient(self, n: int) -> float:
        if n == self.leading_term:
            return self.c_leading
        if n == self.probe_term:
            return self.c_probe
        raise MissingTerm(f"protocol carries terms {self.leading_term} and {self.probe_term}, not {n}")

    def potential(self) -> Laurent:
        """The two-term series the protocol is designed around."""
        return Laurent({self.leading_term: self.c_leading, self.probe_term: self.c_probe})


@dataclass(frozen=True)
class EchoSweepRecord:
    omega: float
    v: float
    t_star: float
    t_bar: float
    phi2_at_t_star: float
    converged: bool


def _term_integrand(traj: RotatingApproach, n: int, c: float):
    """2 c (d_same**-n - d_cross**-n), written without the cancellation."""
    L, v, w, x0 = traj.L, traj.v, traj.omega, traj.x0
    x0sq = x0 * x0

    def integrand(tau: float) -> float:
        gap = L - v * tau
        half = 0.5 * w * tau
        s = math.sin(half)
        co = math.cos(half)
        gap2 = gap * gap
        d_same = math.sqrt(gap2 + x0sq * s * s)
        d_cross = math.sqrt(gap2 + x0sq * co * co)
        # d_cross - d_same = x0^2 cos(w tau) / (d_cross + d_same)
        diff = x0sq * math.cos(w * tau) / (d_cross + d_same)
        series = 0.0
        for k in range(n):
            series += d_cross**k * d_same ** (n - 1 - k)
        return 2.0 * c * diff * series / (d_same * d_cross) ** n

    return integrand


def term_phase(
    params: EchoProtocolParams,
    n: int,
    t: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    *,
    coefficient: float | None = None,
) -> float:
    """Phase accumulated by the ``c_n d**-n`` term alone up to time ``t``.

    ``coefficient`` overrides ``c_n``; by default it is taken from ``params``
    (which only knows the leading and probe terms).
    """
    traj = params.trajectory()
    t = float(t)
    check_time(traj, t)
    c = params.coefficient(n) if coefficient is None else float(coefficient)
    return integrate(_term_integrand(traj, int(n), c), 0.0, t, spec, traj.breakpoints(0.0, t))


def term_phase_function(
    params: EchoProtocolParams,
    n: int,
    spec: QuadratureSpec = DEFAULT_SPEC,
    *,
    horizon: float | None = None,
    coefficient: float | None = None,
) -> CumulativeIntegral:
    """``t -> term_phase(params, n, t)`` with prefix caching.

    Cheap to call at many increasing times; ``horizon`` is the largest time
    expected and sets how the absolute tolerance is shared between stretches.
    The horizon check of :func:`term_phase` is not repeated per call.
    """
    traj = params.trajectory()
    c = params.coefficient(n) if coefficient is None else float(coefficient)
    return CumulativeIntegral(
        _term_integrand(traj, int(n), c), spec, horizon=horizon, breakpoints=traj.breakpoints
    )


def _search_end(params: EchoProtocolParams, search_end: float | None) -> float:
    if params.v > 0:
        end = params.t_bar
        if search_end is not None:
            end = min(end, float(search_end))
    else:
        end = 2.0 * math.pi / abs(params.omega) if search_end is None else float(search_end)
    return end * (1.0 - END_GUARD)


def _scan_layout(params: EchoProtocolParams, end: float) -> tuple[int, list[float]]:
    half_period = math.pi / abs(params.omega)
    n = math.ceil(SCAN_POINTS_PER_HALF_PERIOD * end / half_period) + 1
    n = max(MIN_SCAN_POINTS, min(MAX_SCAN_POINTS, n))
    extra: list[float] = []
    if params.v > 0:
        # the integrand steepens on the x0 / v scale before contact; sample
        # geometrically toward the guard so late sign changes are bracketed
        t_bar = params.t_bar
        far = min(end, 10.0 * params.x0 / params.v)
        near = t_bar - end
        if far > near:
            gaps = np.geomspace(far, near, 200)
            extra = [float(t_bar - g) for g in gaps if 0.0 < t_bar - g <= end]
    return n, extra


def find_null_time(
    params: EchoProtocolParams,
    *,
    root: RootChoice = "first",
    search_end: float | None = None,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Time t* > 0 at which the leading term's phase vanishes.

    The search runs over (0, end) with ``end = min(t_bar, search_end)`` less
    a relative guard of 1e-6; for ``v = 0`` the default end is one full
    rotation period 2 pi / omega. ``root="first"`` (the default) returns the
    earliest zero, which follows one continuous branch from pi / omega at
    v -> 0 up to the speed where it meets t_bar; ``root="largest"`` returns
    the last zero before the end, which jumps between branches as v varies.

    Raises:
        NoRootFound: if no sign change of the leading phase is seen.
    """
    if root not in ("largest", "first"):
        raise ValueError(f"root must be 'largest' or 'first', got {root!r}")
    if params.omega == 0:
        raise NoRootFound("without rotation the leading-term integrand never changes sign")
    traj = params.trajectory()
    end = _search_end(params, search_end)
    n_scan, extra = _scan_layout(params, end)
    integrand = _term_integrand(traj, params.leading_term, params.c_leading)
    phase = term_phase_function(params, params.leading_term, spec, horizon=end)
    exact, brackets = scan_sign_changes(phase, scan_grid(0.0, end, n_scan, extra))
    candidates = [(t, t) for t in exact if t > 0.0] + brackets
    if not candidates:
        raise NoRootFound(
            f"leading phase keeps its sign on (0, {end:.6g}] for v={params.v}, omega={params.omega}"
        )
    candidates.sort()
    lo, hi = candidates[-1] if root == "largest" else candidates[0]
    if lo == hi:
        return lo
    t0 = refine_root(phase, lo, hi, xtol=1e-12 * end)
    return _polish_root(integrand, traj, t0, lo, hi, spec)


def _polish_root(integrand, traj: RotatingApproach, t0: float, lo: float, hi: float, spec):
    """Newton steps on a freshly integrated phase.

    The cached prefix sums carry per-segment relative error; re-integrating
    once from 0 and then only over the short correction keeps the residual
    at the quadrature's absolute tolerance.
    """
    t = t0
    value = integrate(integrand, 0.0, t, spec, traj.breakpoints(0.0, t))
    for _ in range(MAX_POLISH_STEPS):
        slope = integrand(t)
        if abs(value) <= POLISH_TARGET or slope == 0.0:
            break
        t_next = min(max(t - value / slope, lo), hi)
        if t_next == t:
            break
        if t_next > t:
            value += integrate(integrand, t, t_next, spec)
        else:
            value -= integrate(integrand, t_next, t, spec)
        t = t_next
    return t


def probe_phase_at_null(
    params: EchoProtocolParams,
    *,
    root: RootChoice = "first",
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Probe-term phase at the leading term's null time."""
    t_star = find_null_time(params, root=root, spec=spec)
    return term_phase(params, params.probe_term, t_star, spec)


def null_residuals(
    params: EchoProtocolParams,
    potential: Laurent,
    t: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> dict[str, float]:
    """Per-term phases below the probe term at ``t`` and their sum.

    Only one term is nulled by :func:`find_null_time`; this reports how far
    the other sub-probe terms of ``potential`` are from zero at the same time.
    """
    report: dict[str, float] = {}
    for n, c in potential.coefficients.items():
        if n < params.probe_term:
            report[f"phi_{n}"] = term_phase(params, n, t, spec, coefficient=c)
    report["sum"] = math.fsum(report.values())
    return report


def _sweep_point(
    args: tuple[EchoProtocolParams, RootChoice, QuadratureSpec]
) -> EchoSweepRecord:
    params, root, spec = args
    try:
        t_star = find_null_time(params, root=root, spec=spec)
        phi2 = term_phase(params, params.probe_term, t_star, spec)
    except (NoRootFound, QuadratureFailure):
        return EchoSweepRecord(params.omega, params.v, math.nan, params.t_bar, math.nan, False)
    return EchoSweepRecord(params.omega, params.v, t_star, params.t_bar, phi2, True)


def sweep(
    template: EchoProtocolParams,
    v_grid: Sequence[float],
    omega_grid: Sequence[float],
    *,
    workers: int = 1,
    root: RootChoice = "first",
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> list[EchoSweepRecord]:
    """Null time and probe phase over an (omega, v) grid, omega outermost.

    Each record is computed independently, so the output does not depend
    on ``workers``. Points with no null time are flagged ``converged=False``.
    """
    if not v_grid or not omega_grid:
        raise ValueError("v_grid and omega_grid must be non-empty")
    if any(not v > 0 for v in v_grid) or any(not w > 0 for w in omega_grid):
        raise ValueError("sweep grids need v > 0 and omega > 0")
    jobs = [
        (replace(template, omega=float(w), v=float(v)), root, spec)
        for w in omega_grid
        for v in v_grid
    ]
    if workers <= 1 or len(jobs) == 1:
        return [_sweep_point(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, jobs, chunksize=1))


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def write_sweep_csv(
    records: Iterable[EchoSweepRecord], fh: TextIO, *, log10_column: bool = False
) -> None:
    """Write sweep records as CSV; floats carry 17 significant digits."""
    header = list(SWEEP_CSV_HEADER)
    if log10_column:
        header.append("log10_phi2")
    fh.write(",".join(header) + "\n")
    for r in records:
        row = [
            format_float(r.omega),
            format_float(r.v),
            format_float(r.t_star),
            format_float(r.t_bar),
            format_float(r.phi2_at_t_star),
            "true" if r.converged else "false",
        ]
        if log10_column:
            mag = abs(r.phi2_at_t_star)
            row.append(format_float(math.log10(mag)) if r.converged and mag > 0 else "nan")
        fh.write(",".join(row) + "\n")
