"""Adaptive quadrature and bracketed root finding.

The quadrature is an adaptive Simpson rule with a Richardson-corrected
panel estimate, run from an explicit work stack so it is deterministic and
free of recursion limits.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from qholo.errors import QuadratureFailure

_EPS = np.finfo(float).eps
MIN_ATOL_SHARE = 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    atol: float = 1e-12
    rtol: float = 1e-10
    max_subdivisions: int = 2_000_000
    initial_panels: int = 8

    def __post_init__(self) -> None:
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("tolerances must be > 0")
        if self.max_subdivisions < 2:
            raise ValueError("max_subdivisions must be >= 2")
        if self.initial_panels < 1:
            raise ValueError("initial_panels must be >= 1")

    def scaled(self, fraction: float) -> "QuadratureSpec":
        """Same spec with the absolute tolerance scaled by ``fraction``."""
        return QuadratureSpec(
            atol=self.atol * fraction,
            rtol=self.rtol,
            max_subdivisions=self.max_subdivisions,
            initial_panels=self.initial_panels,
        )


DEFAULT_SPEC = QuadratureSpec()


def integrate_with_error(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    points: Iterable[float] = (),
) -> tuple[float, float]:
    """Integrate ``f`` over [a, b] and return ``(value, error_estimate)``.

    ``points`` are interior abscissae where ``f`` may be non-smooth or where
    the caller wants panels to start (e.g. quarter periods of an oscillation).
    Each piece between break points is split into ``spec.initial_panels``
    panels before adaptive refinement.

    Raises:
        QuadratureFailure: if the tolerance is not reached within
            ``spec.max_subdivisions`` panel splits.
    """
    a = float(a)
    b = float(b)
    if a > b:
        raise ValueError(f"integration bounds must satisfy a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0, 0.0

    edges = [a] + sorted({float(p) for p in points if a < p < b}) + [b]
    panels: list[tuple[float, float, float, float, float]] = []
    cache: dict[float, float] = {}

    def fx(x: float) -> float:
        v = cache.get(x)
        if v is None:
            v = float(f(x))
            if not math.isfinite(v):
                raise QuadratureFailure(f"integrand is not finite at t={x!r}")
            cache[x] = v
        return v

    for lo, hi in zip(edges[:-1], edges[1:]):
        xs = np.unique(np.linspace(lo, hi, spec.initial_panels + 1))
        for p_lo, p_hi in zip(xs[:-1], xs[1:]):
            p_lo, p_hi = float(p_lo), float(p_hi)
            mid = 0.5 * (p_lo + p_hi)
            panels.append((p_lo, p_hi, fx(p_lo), fx(mid), fx(p_hi)))
    # shared endpoints are only needed during panel setup
    cache.clear()

    coarse = [(hi - lo) / 6.0 * (fa + 4.0 * fm + fb) for lo, hi, fa, fm, fb in panels]
    tol = max(spec.atol, spec.rtol * abs(math.fsum(coarse)))
    width = b - a

    pieces: list[float] = []
    errors: list[float] = []
    stack = [(*panel, s) for panel, s in zip(reversed(panels), reversed(coarse))]
    splits = 0
    while stack:
        lo, hi, fa, fm, fb, whole = stack.pop()
        mid = 0.5 * (lo + hi)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        if not (lo < lm < mid < rm < hi):
            # a few ulps wide: nothing finer is representable, keep the estimate
            pieces.append(whole)
            errors.append(abs(whole - (hi - lo) * fm))
            continue
        flm = float(f(lm))
        frm = float(f(rm))
        if not (math.isfinite(flm) and math.isfinite(frm)):
            raise QuadratureFailure(f"integrand is not finite near t={mid!r}")
        h = hi - lo
        # actual sub-widths: mid is rounded, and children reuse these as `whole`
        left = (mid - lo) / 6.0 * (fa + 4.0 * flm + fm)
        right = (hi - mid) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        local_tol = tol * h / width
        # below this the difference is rounding noise, not truncation error:
        # value rounding plus the slope times the rounding of the abscissae
        noise = 64.0 * _EPS * h * (abs(fa) + abs(flm) + abs(fm) + abs(frm) + abs(fb))
        noise += 16.0 * abs(fb - fa) * math.ulp(max(abs(lo), abs(hi)))
        if abs(delta) <= 15.0 * local_tol or abs(delta) <= noise:
            pieces.append(left + right + delta / 15.0)
            errors.append(abs(delta) / 15.0)
            continue
        splits += 1
        if splits > spec.max_subdivisions:
            raise QuadratureFailure(
                f"tolerance {tol:.3g} not reached on [{a}, {b}] within "
                f"{spec.max_subdivisions} subdivisions"
            )
        stack.append((mid, hi, fm, frm, fb, right))
        stack.append((lo, mid, fa, flm, fm, left))
    return math.fsum(pieces), math.fsum(errors)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_SPEC,
    points: Iterable[float] = (),
) -> float:
    """Adaptive-Simpson estimate of the integral of ``f`` over [a, b]."""
    return integrate_with_error(f, a, b, spec, points)[0]


class CumulativeIntegral:
    """``F(t) = integral of f from origin to t`` with prefix caching.

    Querying ``F`` at a time beyond every cached knot integrates only the
    new stretch and stores the result, so a monotone sweep of t costs one
    pass over the interval. Queries inside the cached range integrate from
    the nearest knot below and are not stored.

    ``horizon`` is the largest t the caller expects to ask for; each cached
    stretch gets the share of ``spec.atol`` proportional to its length, so
    the accumulated error stays within ``spec.atol`` over the whole horizon.

    Instances are not thread-safe; give each worker its own.
    """

    def __init__(
        self,
        f: Callable[[float], float],
        spec: QuadratureSpec = DEFAULT_SPEC,
        *,
        origin: float = 0.0,
        horizon: float | None = None,
        breakpoints: Callable[[float, float], Sequence[float]] | None = None,
    ) -> None:
        self._f = f
        self._spec = spec
        self._horizon = horizon
        self._breakpoints = breakpoints
        self._knots = [float(origin)]
        self._values = [0.0]

    @property
    def origin(self) -> float:
        return self._knots[0]

    def _segment(self, lo: float, hi: float) -> float:
        spec = self._spec
        if self._horizon is not None and self._horizon > self.origin:
            share = (hi - lo) / (self._horizon - self.origin)
            # floor keeps atol positive for vanishingly short stretches
            spec = spec.scaled(min(1.0, max(share, MIN_ATOL_SHARE)))
        pts = self._breakpoints(lo, hi) if self._breakpoints is not None else ()
        return integrate(self._f, lo, hi, spec, pts)

    def __call__(self, t: float) -> float:
        t = float(t)
        if t < self.origin:
            raise ValueError(f"t={t} precedes the integration origin {self.origin}")
        i = bisect.bisect_right(self._knots, t) - 1
        knot = self._knots[i]
        if t == knot:
            return self._values[i]
        value = self._values[i] + self._segment(knot, t)
        if i == len(self._knots) - 1:
            self._knots.append(t)
            self._values.append(value)
        return value

    def knots(self) -> list[float]:
        return list(self._knots)


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def scan_sign_changes(
    g: Callable[[float], float], grid: Sequence[float]
) -> tuple[list[float], list[tuple[float, float]]]:
    """Evaluate ``g`` along an increasing ``grid``.

    Returns the grid points where ``g`` is exactly zero and the consecutive
    pairs ``(t_i, t_i+1)`` across which it changes sign strictly.
    """
    ts = [float(t) for t in grid]
    signs = [_sign(float(g(t))) for t in ts]
    exact = [t for t, s in zip(ts, signs) if s == 0]
    brackets = [
        (ts[i], ts[i + 1]) for i in range(len(ts) - 1) if signs[i] * signs[i + 1] < 0
    ]
    return exact, brackets


def refine_root(
    g: Callable[[float], float], lo: float, hi: float, xtol: float
) -> float:
    """Brent's method inside a sign-change bracket."""
    return float(brentq(g, lo, hi, xtol=xtol, rtol=4 * _EPS, maxiter=500))


def find_zeros(
    g: Callable[[float], float],
    a: float,
    b: float,
    scan_points: int = 1000,
    *,
    extra_points: Iterable[float] = (),
    xtol: float | None = None,
) -> list[float]:
    """Zeros of ``g`` on [a, b] located by a sign-change scan plus Brent refinement.

    ``g`` is sampled on ``scan_points`` evenly spaced points (plus any
    ``extra_points`` inside [a, b]) in increasing order, so a prefix-cached
    ``g`` is evaluated in one pass. Every bracket with a strict sign change
    is refined to a width below ``xtol`` (default ``1e-12 * (b - a)``);
    exact zeros at scan points are reported as they are. Tangential zeros
    that do not change sign between scan points are not detected.

    Returns:
        The zeros in increasing order (empty when no sign change is seen).
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if scan_points < 2:
        raise ValueError("scan_points must be >= 2")
    if xtol is None:
        xtol = 1e-12 * (b - a)
    grid = scan_grid(a, b, scan_points, extra_points)
    exact, brackets = scan_sign_changes(g, grid)
    zeros = exact + [refine_root(g, lo, hi, xtol) for lo, hi in brackets]
    return sorted(zeros)


def scan_grid(
    a: float, b: float, scan_points: int, extra_points: Iterable[float] = ()
) -> np.ndarray:
    grid = np.linspace(float(a), float(b), int(scan_points))
    extra = [float(x) for x in extra_points if a < x < b]
    if extra:
        grid = np.unique(np.concatenate([grid, extra]))
    return grid
