"""Interparticle potentials f(d) and their inverse-power decomposition.

Three shapes are supported:

* :class:`Constant`: ``f(d) = c``, the only potential that never entangles.
* :class:`PowerLaw`: ``f(d) = coupling * d**(-exponent)`` with any real
  exponent > 0 (gravity and Coulomb use exponent 1).
* :class:`Laurent`: ``f(d) = sum_n c_n d**(-n)`` over positive integers n.

All quantities are in natural, dimensionless units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Union

from qholo.errors import MissingTerm, NonPositiveDistance


def _check_distance(d: float) -> float:
    d = float(d)
    if not d > 0.0:
        raise NonPositiveDistance(f"distance must be > 0, got {d!r}")
    return d


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise ValueError("constant potential must be finite")

    def __call__(self, d: float) -> float:
        _check_distance(d)
        return self.value

    def term(self, n: int, d: float) -> float:
        _check_distance(d)
        raise MissingTerm(f"constant potential has no d^-{n} term")

    def terms(self) -> tuple[int, ...]:
        return ()


@dataclass(frozen=True)
class PowerLaw:
    """``f(d) = coupling * d**(-exponent)``.

    A negative coupling gives an attractive interaction (gravity); it only
    flips the sign of accumulated phases.
    """

    coupling: float
    exponent: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "exponent", float(self.exponent))
        if not self.exponent > 0.0 or not math.isfinite(self.exponent):
            raise ValueError(f"exponent must be a finite number > 0, got {self.exponent}")
        if not math.isfinite(self.coupling):
            raise ValueError("coupling must be finite")

    def __call__(self, d: float) -> float:
        d = _check_distance(d)
        return self.coupling * d ** (-self.exponent)

    def term(self, n: int, d: float) -> float:
        d = _check_distance(d)
        if self.exponent != int(n):
            raise MissingTerm(f"power law with exponent {self.exponent} has no d^-{n} term")
        return self.coupling * d ** (-self.exponent)

    def terms(self) -> tuple[int, ...]:
        return (int(self.exponent),) if self.exponent.is_integer() else ()


@dataclass(frozen=True)
class Laurent:
    """Truncated series ``sum_n c_n d**(-n)`` with distinct positive integer n.

    The series is evaluated as given; no convergence check is made.
    """

    coefficients: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        coeffs: dict[int, float] = {}
        for key, value in dict(self.coefficients).items():
            n = int(key)
            if n != float(key) or n < 1:
                raise ValueError(f"Laurent powers must be positive integers, got {key!r}")
            if n in coeffs:
                raise ValueError(f"duplicate Laurent power {n}")
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"coefficient for n={n} must be finite")
            coeffs[n] = value
        object.__setattr__(self, "coefficients", dict(sorted(coeffs.items())))

    def __hash__(self) -> int:
        return hash(tuple(self.coefficients.items()))

    def __call__(self, d: float) -> float:
        d = _check_distance(d)
        return math.fsum(c * d ** (-n) for n, c in self.coefficients.items())

    def term(self, n: int, d: float) -> float:
        d = _check_distance(d)
        try:
            c = self.coefficients[int(n)]
        except KeyError:
            raise MissingTerm(f"Laurent series has no d^-{n} term") from None
        return c * d ** (-int(n))

    def terms(self) -> tuple[int, ...]:
        return tuple(self.coefficients)


Potential = Union[Constant, PowerLaw, Laurent]


def evaluate(p: Potential, d: float) -> float:
    """Interaction energy at distance ``d`` (> 0)."""
    return p(d)


def evaluate_term(p: Potential, n: int, d: float) -> float:
    """The single term ``c_n d**(-n)``; raises :class:`MissingTerm` if absent."""
    return p.term(n, d)


def term_dominates(
    p: Potential,
    n: int,
    d_min: float,
    d_max: float,
    threshold: float = 10.0,
) -> bool:
    """Whether ``|f_n(d)| > threshold * |f_{n+1}(d)|`` for all d in [d_min, d_max].

    The ratio of two inverse-power terms is monotone in d, so checking the
    interval ends is exact. A missing (n+1) term counts as dominated.
    """
    _check_distance(d_min)
    _check_distance(d_max)
    if d_min > d_max:
        raise ValueError("d_min must not exceed d_max")
    for d in (d_min, d_max):
        lead = abs(p.term(n, d))
        try:
            sub = abs(p.term(n + 1, d))
        except MissingTerm:
            continue
        if not lead > threshold * sub:
            return False
    return True
