"""Closed-form weak-field response of N atoms in a driven cavity.

Everything is normalized to the incident intensity Y = |y|^2, so the
reported intensities are dimensionless and the resonant values obey
X + F = 1. The normalized field and polarization are

    x/y = 1 / [(1 - i W/kappa) + 2C / (1 - 2i W/gamma)]
    p/y = 2C (x/y) / (1 - 2i W/gamma)

with W the laser-cavity detuning. The polarization carries the +2C sign so
that y = x + p holds on resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .params import SystemRates


class EmptyGridError(ValueError):
    pass


class NonFiniteValueError(ArithmeticError):
    pass


@dataclass(frozen=True)
class WeakFieldPoint:
    """Response at one detuning, or at an array of detunings.

    Every field has the shape of ``omega``.
    """

    omega: np.ndarray
    x_over_y: np.ndarray
    p_over_y: np.ndarray
    X: np.ndarray
    F_cross: np.ndarray
    p_sq: np.ndarray

    @property
    def F(self):
        return self.F_cross + self.p_sq

    @property
    def Y_residual(self):
        """1 - (X + F): zero on resonance, nonzero off resonance."""
        return 1.0 - (self.X + self.F)

    def __len__(self):
        return np.size(self.omega)

    def __getitem__(self, i) -> WeakFieldPoint:
        return WeakFieldPoint(
            self.omega[i], self.x_over_y[i], self.p_over_y[i], self.X[i], self.F_cross[i], self.p_sq[i]
        )


def response(rates: SystemRates, omega) -> WeakFieldPoint:
    """Weak-field field and polarization at detuning(s) ``omega`` (rad/us)."""
    w = np.asarray(omega, dtype=float)
    c = rates.cooperativity
    atom = 1.0 - 2j * w / rates.gamma
    x = 1.0 / ((1.0 - 1j * w / rates.kappa) + 2.0 * c / atom)
    p = 2.0 * c * x / atom
    X = np.abs(x) ** 2
    f_cross = 2.0 * np.real(np.conj(x) * p)
    return WeakFieldPoint(w, x, p, X, f_cross, np.abs(p) ** 2)


def transmission(rates: SystemRates, omega):
    """X(omega) = |x/y|^2."""
    return response(rates, omega).X


def fluorescence_cross(rates: SystemRates, omega):
    """F_cross(omega) = 2 Re(conj(x) p) / Y."""
    return response(rates, omega).F_cross


def fluorescence_cross_rational(rates: SystemRates, omega):
    """F_cross written as C kappa^2 gamma^2 / [(g^2N + kappa gamma/2 - W^2)^2 + W^2 (kappa + gamma/2)^2].

    Algebraically identical to :func:`fluorescence_cross`; kept as an
    independent evaluation path.
    """
    w2 = np.asarray(omega, dtype=float) ** 2
    a = rates.g2n + 0.5 * rates.kappa * rates.gamma
    b = rates.kappa + 0.5 * rates.gamma
    den = (a - w2) ** 2 + w2 * b**2
    return rates.cooperativity * rates.kappa**2 * rates.gamma**2 / den


def omega_xp(rates: SystemRates) -> Optional[float]:
    """Positive detuning of the fluorescence doublet, sqrt(g^2N - (kappa^2 + gamma^2/4)/2).

    ``None`` when the discriminant is not positive (single peak at zero).
    """
    disc = rates.g2n - 0.5 * (rates.kappa**2 + 0.25 * rates.gamma**2)
    if disc <= 0:
        return None
    return math.sqrt(disc)


def omega_X(rates: SystemRates) -> Optional[float]:
    """Positive detuning of the transmission doublet.

    Omega_X^2 = sqrt(g^4N^2 + g^2N gamma (gamma/2 + kappa)) - gamma^2/4. The
    stationary point is always a maximum of X when it is positive, so a
    positive value is the whole test.
    """
    g2n = rates.g2n
    root = math.sqrt(g2n**2 + g2n * rates.gamma * (0.5 * rates.gamma + rates.kappa))
    disc = root - 0.25 * rates.gamma**2
    if disc <= 0:
        return None
    return math.sqrt(disc)


def split_thresholds(rates: SystemRates) -> tuple[float, float]:
    """Cooperativities above which X and F_cross split into doublets.

    Only g, kappa and gamma are used. Returns ``(c_threshold_X, c_threshold_xp)``.
    Both diverge as gamma -> 0, which is outside the domain of the rates.
    """
    kappa, gamma = rates.kappa, rates.gamma
    c_xp = (kappa**2 + 0.25 * gamma**2) / (2.0 * kappa * gamma)
    # smaller root of G^2 + G gamma (gamma/2 + kappa) - gamma^4/16 = 0, written
    # without cancellation
    b = gamma * (0.5 * gamma + kappa)
    g2n = (gamma**4 / 8.0) / (b + math.sqrt(b**2 + gamma**4 / 4.0))
    return g2n / (kappa * gamma), c_xp


@dataclass(frozen=True)
class ResonantCurves:
    c: np.ndarray
    X: np.ndarray
    F_cross: np.ndarray
    p_sq: np.ndarray

    def rows(self):
        return list(zip(self.c.tolist(), self.X.tolist(), self.F_cross.tolist(), self.p_sq.tolist()))


def resonant_curves(c_grid) -> ResonantCurves:
    """On-resonance X, F_cross and p_sq as functions of the cooperativity.

    Independent of the individual rates: X(0) = 1/(1+2C)^2,
    F_cross(0) = 4C/(1+2C)^2, p_sq(0) = 4C^2/(1+2C)^2.
    """
    c = np.asarray(c_grid, dtype=float)
    if np.any(c < 0):
        raise ValueError("cooperativities must be >= 0")
    d = (1.0 + 2.0 * c) ** 2
    return ResonantCurves(c, 1.0 / d, 4.0 * c / d, 4.0 * c**2 / d)


@dataclass(frozen=True)
class Peaks:
    """Local maxima found on omega >= 0, sorted by position."""

    positions: tuple[float, ...]
    heights: tuple[float, ...]

    @property
    def outermost(self) -> float:
        return self.positions[-1]

    @property
    def is_doublet(self) -> bool:
        return bool(self.positions[-1] > 0.0)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, xtol: float) -> float:
    """Maximize a unimodal ``f`` on [lo, hi] to bracket width ``xtol``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def find_peaks_numeric(func: Callable, interval: tuple[float, float], n_grid: int = 4001, rtol: float = 1e-8) -> Peaks:
    """Local maxima of ``func`` on the nonnegative part of ``interval``.

    ``func`` must accept a numpy array. A dense grid locates candidate maxima
    which are then refined by golden-section search to ``rtol`` times the
    interval width. A maximum at the left edge omega = 0 is reported as 0.
    """
    lo, hi = interval
    if not lo <= 0.0 <= hi:
        raise ValueError("search interval must contain 0")
    grid = np.linspace(0.0, hi, n_grid)
    vals = np.asarray(func(grid), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFiniteValueError("function returned non-finite values on the search grid")

    xtol = rtol * (hi - lo)

    def scalar(w):
        v = float(np.asarray(func(np.array([w])), dtype=float)[0])
        if not math.isfinite(v):
            raise NonFiniteValueError(f"non-finite value at omega={w!r}")
        return v

    positions, heights = [], []
    # symmetric functions: the mirror value at -grid[1] equals vals[1]
    if vals[0] >= vals[1]:
        positions.append(0.0)
        heights.append(float(vals[0]))
    interior = np.nonzero((vals[1:-1] > vals[:-2]) & (vals[1:-1] >= vals[2:]))[0] + 1
    for i in interior:
        w = golden_section_max(scalar, grid[i - 1], grid[i + 1], xtol)
        positions.append(float(w))
        heights.append(scalar(w))
    if not positions:
        # monotone increasing to the right edge
        positions.append(float(grid[-1]))
        heights.append(float(vals[-1]))
    return Peaks(tuple(positions), tuple(heights))


def default_search_interval(rates: SystemRates) -> tuple[float, float]:
    """[-W, W] with W = 5 max(g sqrt(N), kappa, gamma)."""
    w = 5.0 * max(math.sqrt(rates.g2n), rates.kappa, rates.gamma)
    return -w, w


@dataclass(frozen=True)
class PeakReport:
    """Closed-form doublet positions (rad/us) with heights and numeric checks.

    Positions are ``None`` when the spectrum has a single peak at zero; the
    heights are then the on-resonance values.
    """

    omega_X: Optional[float]
    omega_xp: Optional[float]
    height_X: float
    height_xp: float
    is_doublet_X: bool
    is_doublet_xp: bool
    numeric_X: float
    numeric_xp: float


def peak_report(rates: SystemRates) -> PeakReport:
    w_x, w_xp = omega_X(rates), omega_xp(rates)
    interval = default_search_interval(rates)
    num_x = find_peaks_numeric(lambda w: transmission(rates, w), interval).outermost
    num_xp = find_peaks_numeric(lambda w: fluorescence_cross(rates, w), interval).outermost
    return PeakReport(
        omega_X=w_x,
        omega_xp=w_xp,
        height_X=float(transmission(rates, w_x or 0.0)),
        height_xp=float(fluorescence_cross(rates, w_xp or 0.0)),
        is_doublet_X=w_x is not None,
        is_doublet_xp=w_xp is not None,
        numeric_X=num_x,
        numeric_xp=num_xp,
    )


@dataclass(frozen=True)
class SpectrumResult:
    grid: np.ndarray
    response: WeakFieldPoint
    peaks: PeakReport

    @property
    def points(self) -> list[WeakFieldPoint]:
        return [self.response[i] for i in range(len(self.grid))]


def spectrum(rates: SystemRates, grid) -> SpectrumResult:
    """Evaluate the response on a strictly increasing detuning grid."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise EmptyGridError("detuning grid must be a nonempty 1-d array")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("detuning grid must be strictly increasing")
    return SpectrumResult(grid, response(rates, grid), peak_report(rates))
