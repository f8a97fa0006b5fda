"""Natural units and conversion to laboratory frequencies.

All energies inside the package are expressed in natural units
(hbar = c = 1) with the electron rest energy as the unit of energy, so a
physical mass ``m = 1`` means "one electron mass".  Lengths are then in units
of the reduced Compton wavelength and momenta in units of ``m c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace


class ParameterError(ValueError):
    """Raised when a :class:`Params` instance violates its invariants."""


@dataclass(frozen=True)
class Constants:
    """Conversion constants (CODATA-style defaults, overridable)."""

    rest_energy_eV: float = 510998.95
    MHz_per_eV: float = 2.417989e8

    @property
    def MHz_per_unit(self) -> float:
        """Frequency in MHz corresponding to one natural energy unit."""
        return self.rest_energy_eV * self.MHz_per_eV


@dataclass(frozen=True)
class Params:
    """Physical inputs shared by every module.

    Parameters
    ----------
    m : float
        Physical (renormalized) mass.
    m0 : float or None
        Bare mass.  When ``None`` it is derived from ``m`` on demand by the
        mass-renormalization inversion.
    alpha : float
        Coupling of the electron to the radiation field.
    beta, Z : float
        Coulomb coupling and nuclear charge, ``V(r) = -beta Z / r``.
    Lambda : float
        Ultraviolet cutoff of the photon momenta.
    constants : Constants
        Conversion constants used by :func:`to_frequency`.
    betaZ_limit : float
        Hard upper limit on ``beta * Z`` for hydrogenic formulas.
    """

    m: float = 1.0
    m0: float | None = None
    alpha: float = 1.0 / 137.0
    beta: float = 1.0 / 137.0
    Z: float = 1.0
    Lambda: float = 1.0
    constants: Constants = field(default_factory=Constants)
    betaZ_limit: float = 1.0

    def __post_init__(self) -> None:
        checks = (
            (self.m > 0, f"m must be positive, got {self.m}"),
            (self.m0 is None or self.m0 > 0, f"m0 must be positive, got {self.m0}"),
            (self.alpha >= 0, f"alpha must be non-negative, got {self.alpha}"),
            (self.beta >= 0, f"beta must be non-negative, got {self.beta}"),
            (self.Z > 0, f"Z must be positive, got {self.Z}"),
            (self.Lambda >= 0, f"Lambda must be non-negative, got {self.Lambda}"),
        )
        for ok, msg in checks:
            if not ok:
                raise ParameterError(msg)
        for name in ("m", "alpha", "beta", "Z", "Lambda"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")

    @property
    def betaZ(self) -> float:
        return self.beta * self.Z

    def require_hydrogenic(self) -> None:
        """Reject parameters outside the hydrogenic validity regime."""
        if not 0.0 < self.betaZ < self.betaZ_limit:
            raise ParameterError(
                f"beta*Z = {self.betaZ:.6g} outside (0, {self.betaZ_limit:g})"
            )

    def with_(self, **changes) -> "Params":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)


def to_frequency(energy, params: Params):
    """Convert a natural-unit energy (scalar or array) to MHz."""
    return energy * params.constants.MHz_per_unit


def rydberg(params: Params) -> float:
    """Magnitude of the hydrogenic ground-state energy, ``m (beta Z)^2 / 2``."""
    return 0.5 * params.m * params.betaZ**2
