"""Physical constants, all energy-like quantities expressed as frequencies."""

from dataclasses import dataclass

__all__ = ["PhysicalConstants", "CONSTANTS"]


@dataclass(frozen=True)
class PhysicalConstants:
    """Frozen constant set (CODATA-2018 values).

    Magnetic moments and k_B are divided by h so that products with tesla or
    kelvin come out directly in GHz.
    """

    mu_B_over_h: float = 13.996245  # GHz/T
    mu_N_over_h: float = 7.6225932e-3  # GHz/T
    k_B_over_h: float = 20.836619  # GHz/K
    g0: float = 2.0023
    mu0_over_4pi: float = 1e-7  # T m / A
    h: float = 6.62607e-34  # J s

    @property
    def mu_B(self) -> float:
        """Bohr magneton in J/T."""
        return self.mu_B_over_h * 1e9 * self.h

    @property
    def mu_N(self) -> float:
        """Nuclear magneton in J/T."""
        return self.mu_N_over_h * 1e9 * self.h


CONSTANTS = PhysicalConstants()
