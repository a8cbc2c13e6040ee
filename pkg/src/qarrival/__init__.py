"""qarrival: spectral laboratory for quantum detection-time distributions."""

__version__ = "0.1.0"

from .units import PhysicalUnits, NATURAL, ELECTRON_SI
from .fields import (Grid, WaveField, SpectralField, forward_transform,
                     inverse_transform)
from .streams import seeded_stream

__all__ = [
    "PhysicalUnits", "NATURAL", "ELECTRON_SI",
    "Grid", "WaveField", "SpectralField",
    "forward_transform", "inverse_transform",
    "seeded_stream",
    "__version__",
]
