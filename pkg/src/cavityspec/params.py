"""Physical rates and the scalar quantities derived from them.

All rates are angular frequencies in rad/us. Linear frequencies in MHz
(nu = omega / 2 pi) are accepted only through :meth:`SystemRates.from_mhz`.
Conventions: the cavity field decays at ``kappa`` (photon number at
``2 kappa``), the atomic population at ``gamma`` and the atomic coherence
at ``gamma / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


class InvalidRateError(ValueError):
    """Raised when a rate or drive parameter is outside its domain."""


def mhz_to_angular(nu_mhz: float) -> float:
    return TWO_PI * nu_mhz


def angular_to_mhz(omega: float) -> float:
    return omega / TWO_PI


@dataclass(frozen=True)
class SystemRates:
    """Coupling ``g``, cavity field decay ``kappa``, atomic population decay
    ``gamma`` (all rad/us) and the number of atoms.

    ``n_atoms`` is an integer for the quantum model. The analytic spectra
    work with the cooperativity directly, so :meth:`with_cooperativity`
    builds rates carrying a real-valued effective atom number instead.
    """

    g: float
    kappa: float
    gamma: float
    n_atoms: float = 1

    def __post_init__(self):
        for name in ("g", "kappa", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidRateError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.n_atoms) and self.n_atoms >= 0):
            raise InvalidRateError(f"n_atoms must be >= 0, got {self.n_atoms!r}")

    @classmethod
    def from_mhz(cls, g_mhz: float, kappa_mhz: float, gamma_mhz: float, n_atoms: float = 1) -> SystemRates:
        """Build from linear frequencies nu = omega / 2 pi in MHz."""
        return cls(mhz_to_angular(g_mhz), mhz_to_angular(kappa_mhz), mhz_to_angular(gamma_mhz), n_atoms)

    @classmethod
    def with_cooperativity(cls, g: float, kappa: float, gamma: float, c: float) -> SystemRates:
        """Rates whose effective atom number gives N-atom cooperativity ``c``."""
        if not (math.isfinite(c) and c >= 0):
            raise InvalidRateError(f"cooperativity must be >= 0, got {c!r}")
        return cls(g, kappa, gamma, c * kappa * gamma / g**2)

    @property
    def is_integer_n(self) -> bool:
        return float(self.n_atoms).is_integer()

    @property
    def c1(self) -> float:
        return self.g**2 / (self.kappa * self.gamma)

    @property
    def cooperativity(self) -> float:
        return self.n_atoms * self.c1

    @property
    def g2n(self) -> float:
        """Collective coupling squared, g^2 N = C kappa gamma."""
        return self.g**2 * self.n_atoms

    @property
    def n_sat(self) -> float:
        return self.gamma**2 / (8.0 * self.g**2)

    def with_n(self, n_atoms: float) -> SystemRates:
        return SystemRates(self.g, self.kappa, self.gamma, n_atoms)

    def with_c(self, c: float) -> SystemRates:
        return SystemRates.with_cooperativity(self.g, self.kappa, self.gamma, c)

    def to_mhz(self) -> tuple[float, float, float]:
        return angular_to_mhz(self.g), angular_to_mhz(self.kappa), angular_to_mhz(self.gamma)


# Named parameter sets, linear MHz. The cavity decay is quoted as 2.6 MHz for
# the apparatus and 2.65 MHz for the theory spectra; both are kept.
PRESETS_MHZ = {
    "paper-apparatus": (2.0, 2.6, 6.0),
    "paper-fig1": (2.0, 2.65, 6.0),
}


def preset(name: str, n_atoms: float = 1) -> SystemRates:
    try:
        g, kappa, gamma = PRESETS_MHZ[name]
    except KeyError:
        raise InvalidRateError(f"unknown preset {name!r}; choose from {sorted(PRESETS_MHZ)}") from None
    return SystemRates.from_mhz(g, kappa, gamma, n_atoms)


@dataclass(frozen=True)
class DriveSpec:
    """Drive amplitude ``epsilon`` and laser-cavity detuning ``omega``
    (rad/us). Atoms and cavity are resonant, so only the detuning enters."""

    epsilon: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise InvalidRateError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not math.isfinite(self.omega):
            raise InvalidRateError(f"omega must be finite, got {self.omega!r}")

    @classmethod
    def from_y(cls, rates: SystemRates, y: float, omega: float = 0.0) -> DriveSpec:
        """Drive whose normalized amplitude epsilon / (kappa sqrt(n_sat)) is ``y``."""
        return cls(y * rates.kappa * math.sqrt(rates.n_sat), omega)


@dataclass(frozen=True)
class DerivedParams:
    c1: float
    c: float
    n_sat: float
    y: float


def derive_params(rates: SystemRates, drive: DriveSpec | None = None) -> DerivedParams:
    """Single- and N-atom cooperativity, saturation photon number and
    normalized drive."""
    drive = drive if drive is not None else DriveSpec()
    n_sat = rates.n_sat
    return DerivedParams(
        c1=rates.c1,
        c=rates.cooperativity,
        n_sat=n_sat,
        y=drive.epsilon / (rates.kappa * math.sqrt(n_sat)),
    )


def enhanced_emission_rate(rates: SystemRates) -> float:
    """Bad-cavity spontaneous emission rate gamma (1 + 2 C1).

    Returned unconditionally; it is only meaningful when kappa >> g, gamma.
    """
    return rates.gamma * (1.0 + 2.0 * rates.c1)


def cavity_emission_fraction(rates: SystemRates) -> tuple[float, float]:
    """Return ``(c1_prime, escape_fraction)``.

    ``escape_fraction = 2 kappa / (gamma + 2 kappa)`` is the share of photons
    emitted into the mode that leave through the mirrors, and
    ``c1_prime = c1 * escape_fraction``.
    """
    fraction = 2.0 * rates.kappa / (rates.gamma + 2.0 * rates.kappa)
    return rates.c1 * fraction, fraction
