"""Physical constants carried alongside fields (natural units by default)."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalUnits:
    """hbar, particle mass, and light speed used by every formula.

    Defaults are natural units hbar = m = 1; c enters only the
    relativistic (Dirac) formulas.
    """

    hbar: float = 1.0
    mass: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0 and self.c > 0):
            raise ValueError("hbar, mass and c must all be strictly positive")


NATURAL = PhysicalUnits()

# CODATA-ish electron constants in SI, used by the Zitterbewegung checks.
ELECTRON_SI = PhysicalUnits(
    hbar=1.054571817e-34,
    mass=9.1093837015e-31,
    c=2.99792458e8,
)
