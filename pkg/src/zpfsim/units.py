"""Unit handling.

The simulator works internally in dimensionless units with
hbar = c = epsilon_0 = 1. A ``UnitSystem`` anchors those units to SI by
choosing the SI value of the dimensionless unit angular frequency; every
other conversion factor follows from hbar, c and epsilon_0.
"""

from __future__ import annotations

from dataclasses import dataclass

HBAR_SI = 1.054571817e-34  # J s
C_SI = 2.99792458e8        # m / s
EPS0_SI = 8.8541878128e-12  # F / m


@dataclass(frozen=True)
class UnitSystem:
    """Maps dimensionless quantities to SI and back.

    ``omega_ref_si`` is the SI angular frequency (rad/s) corresponding to
    the dimensionless value 1. In dimensionless mode (the default anchor of
    1 rad/s) all conversion factors reduce to the trivial ones.
    """

    omega_ref_si: float = 1.0

    def __post_init__(self):
        if self.omega_ref_si <= 0:
            raise ValueError("omega_ref_si must be positive")

    # base scales -----------------------------------------------------------
    @property
    def time_si(self) -> float:
        """SI seconds per dimensionless time unit."""
        return 1.0 / self.omega_ref_si

    @property
    def length_si(self) -> float:
        """SI meters per dimensionless length unit."""
        return C_SI / self.omega_ref_si

    @property
    def energy_si(self) -> float:
        """SI joules per dimensionless energy unit (hbar * omega_ref)."""
        return HBAR_SI * self.omega_ref_si

    @property
    def intensity_si(self) -> float:
        """SI W/m^2 per dimensionless effective-intensity unit."""
        return self.energy_si * C_SI / self.length_si**3

    # conversions -----------------------------------------------------------
    def time_to_si(self, t: float) -> float:
        return t * self.time_si

    def time_from_si(self, t: float) -> float:
        return t / self.time_si

    def length_to_si(self, x: float) -> float:
        return x * self.length_si

    def length_from_si(self, x: float) -> float:
        return x / self.length_si

    def frequency_to_si(self, w: float) -> float:
        return w * self.omega_ref_si

    def frequency_from_si(self, w: float) -> float:
        return w / self.omega_ref_si

    def intensity_to_si(self, i: float) -> float:
        return i * self.intensity_si

    def intensity_from_si(self, i: float) -> float:
        return i / self.intensity_si
