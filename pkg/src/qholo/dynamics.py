"""Exact evolution under the state-dependent diagonal Hamiltonian.

Basis order throughout is (|1,1>, |1,2>, |2,1>, |2,2>). Each basis state
has energy ``f(d_ab(t))``, so the propagator is diagonal and a basis
amplitude simply picks up ``exp(-i * theta_ab(t))`` with
``theta_ab(t) = integral_0^t f(d_ab(tau)) dtau`` (hbar = 1).

The entangling phase reported alongside is

    Phi(t) = integral_0^t [f(d11) + f(d22) - f(d12) - f(d21)] dtau,

and for the symmetric product state the exact concurrence is
``|sin(Phi / 2)|``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from qholo.errors import NotNormalized, OutOfHorizon
from qholo.geometry import Trajectory
from qholo.numerics import DEFAULT_SPEC, CumulativeIntegral, QuadratureSpec, integrate
from qholo.potentials import Potential

NORM_TOL = 1e-9


@dataclass(frozen=True)
class CouplingCoefficients:
    """Weights of 1x1, sz x 1, 1 x sz and sz x sz in the Hamiltonian."""

    g1: float
    g2: float
    g3: float
    g4: float

    def energies(self) -> tuple[float, float, float, float]:
        """Back to the per-basis energies (f11, f12, f21, f22)."""
        g1, g2, g3, g4 = self.g1, self.g2, self.g3, self.g4
        return (
            g1 + g2 + g3 + g4,
            g1 + g2 - g3 - g4,
            g1 - g2 + g3 - g4,
            g1 - g2 - g3 + g4,
        )


def coupling_coefficients(f11: float, f12: float, f21: float, f22: float) -> CouplingCoefficients:
    """Decompose per-basis energies into Pauli-z product weights.

    sigma_z has eigenvalue +1 on state 1 and -1 on state 2.
    """
    return CouplingCoefficients(
        g1=(f11 + f12 + f21 + f22) / 4.0,
        g2=(f11 + f12 - f21 - f22) / 4.0,
        g3=(f11 - f12 + f21 - f22) / 4.0,
        g4=(f11 - f12 - f21 + f22) / 4.0,
    )


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Pure two-body state; amplitudes over (|1,1>, |1,2>, |2,1>, |2,2>)."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (4,):
            raise ValueError(f"expected 4 amplitudes, got {amps.shape[0]}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, alpha: int, beta: int) -> "TwoQubitState":
        """|alpha, beta> with alpha, beta in {1, 2}."""
        if alpha not in (1, 2) or beta not in (1, 2):
            raise ValueError("internal state labels are 1 or 2")
        amps = np.zeros(4, dtype=complex)
        amps[2 * (alpha - 1) + (beta - 1)] = 1.0
        return cls(amps)

    @classmethod
    def product(cls, body_a: Sequence[complex], body_b: Sequence[complex]) -> "TwoQubitState":
        return cls(np.kron(np.asarray(body_a, dtype=complex), np.asarray(body_b, dtype=complex)))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def equals_up_to_phase(self, other: "TwoQubitState", atol: float = 1e-12) -> bool:
        return abs(abs(np.vdot(self.amplitudes, other.amplitudes)) - 1.0) <= atol and (
            abs(self.norm() - other.norm()) <= atol
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TwoQubitState):
            return NotImplemented
        return bool(np.array_equal(self.amplitudes, other.amplitudes))

    __hash__ = None  # type: ignore[assignment]


def symmetric_product_state() -> TwoQubitState:
    """Both bodies in (|1> + |2>)/sqrt(2)."""
    return TwoQubitState(np.full(4, 0.5, dtype=complex))


def phase_state(phi: float) -> TwoQubitState:
    """exp(-i phi)/2 * (e^{2 i phi}|1,1> + |1,2> + |2,1> + e^{2 i phi}|2,2>).

    This is the symmetric product state after the sz x sz factor alone, with
    ``phi`` the accumulated sz x sz angle; its concurrence is |sin(2 phi)|.
    """
    hi = 0.5 * cmath.exp(1j * phi)
    lo = 0.5 * cmath.exp(-1j * phi)
    return TwoQubitState(np.array([hi, lo, lo, hi]))


def concurrence(s: TwoQubitState) -> float:
    """Pure-state concurrence 2|a d - b c|."""
    norm = s.norm()
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalized(f"state norm is {norm!r}, expected 1")
    a, b, c, d = s.amplitudes
    return float(min(1.0, 2.0 * abs(a * d - b * c)))


def _check_horizon(traj: Trajectory, t: float) -> None:
    # fail before any quadrature work; distances_at owns the horizon rule
    traj.distances_at(t)


def _phase_integrand(traj: Trajectory, p: Potential):
    def integrand(tau: float) -> float:
        d11, d12, d21, d22 = traj.distances_at(tau)
        return (p(d11) + p(d22)) - (p(d12) + p(d21))

    return integrand


def _basis_integrand(traj: Trajectory, p: Potential, k: int):
    def integrand(tau: float) -> float:
        return p(traj.distances_at(tau)[k])

    return integrand


def entangling_phase(
    traj: Trajectory, p: Potential, t: float, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Phi(t) = integral_0^t [f(d11) + f(d22) - f(d12) - f(d21)] dtau."""
    t = float(t)
    _check_horizon(traj, t)
    return integrate(_phase_integrand(traj, p), 0.0, t, spec, traj.breakpoints(0.0, t))


def _sorted_times(times: Iterable[float]) -> list[float]:
    ts = [float(t) for t in times]
    if any(t < 0 for t in ts):
        raise OutOfHorizon("times must be >= 0")
    return ts


def entangling_phases(
    traj: Trajectory,
    p: Potential,
    times: Iterable[float],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> list[float]:
    """Phi at each of ``times``, sharing integrated prefixes between them."""
    ts = _sorted_times(times)
    if not ts:
        return []
    horizon = max(ts)
    _check_horizon(traj, horizon)
    acc = CumulativeIntegral(
        _phase_integrand(traj, p), spec, horizon=horizon, breakpoints=traj.breakpoints
    )
    out = {}
    for t in sorted(set(ts)):
        out[t] = acc(t)
    return [out[t] for t in ts]


def _evolve_with_angles(initial: TwoQubitState, thetas: Sequence[float]) -> TwoQubitState:
    phases = np.array([cmath.exp(-1j * th) for th in thetas])
    return TwoQubitState(initial.amplitudes * phases)


def evolve(
    traj: Trajectory,
    p: Potential,
    t: float,
    initial: TwoQubitState,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> TwoQubitState:
    """Propagate ``initial`` from 0 to ``t`` under the diagonal Hamiltonian."""
    t = float(t)
    _check_horizon(traj, t)
    points = traj.breakpoints(0.0, t)
    thetas = [integrate(_basis_integrand(traj, p, k), 0.0, t, spec, points) for k in range(4)]
    return _evolve_with_angles(initial, thetas)


def evolve_many(
    traj: Trajectory,
    p: Potential,
    times: Iterable[float],
    initial: TwoQubitState,
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> list[TwoQubitState]:
    """:func:`evolve` at several times, integrating each stretch once."""
    ts = _sorted_times(times)
    if not ts:
        return []
    horizon = max(ts)
    _check_horizon(traj, horizon)
    accs = [
        CumulativeIntegral(
            _basis_integrand(traj, p, k), spec, horizon=horizon, breakpoints=traj.breakpoints
        )
        for k in range(4)
    ]
    states = {}
    for t in sorted(set(ts)):
        states[t] = _evolve_with_angles(initial, [acc(t) for acc in accs])
    return [states[t] for t in ts]


def collinear_phase_estimate(
    coupling: float, exponent: float, x: float, dx: float, t: float
) -> float:
    """Leading-order Phi for a power law on the static collinear layout.

    coupling * t * exponent * (exponent + 1) * dx**2 / x**(2 + exponent); the
    relative error against the exact phase is O(dx / x).
    """
    if not x > 0:
        raise ValueError("x must be > 0")
    if dx < 0 or t < 0:
        raise ValueError("dx and t must be >= 0")
    return coupling * t * exponent * (exponent + 1.0) * dx * dx / x ** (2.0 + exponent)


def exact_concurrence_from_phase(phi: float) -> float:
    """|sin(Phi / 2)|: concurrence of the evolved symmetric product state."""
    return abs(math.sin(0.5 * phi))
