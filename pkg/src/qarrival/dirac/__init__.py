"""Relativistic (Dirac) side of the laboratory: spinor algebra, exact
spectral evolution, far-field asymptotics with stationary-phase
verification, covariant Fourier conversions, Zitterbewegung helices, the
complex-wavevector eigenstructure, the imaginary-step reflection, and the
classical no-signaling ensemble."""

from .algebra import (ALPHA, BETA, GAMMA, SpinorAlgebra, projector,
                      complex_k_spectrum, omega_of_k)
from .spectral import (DiracSpectralField, evolve_dirac_spectral,
                       covariant_conversion, covariant_inverse,
                       GaussianSpinorProfile)
from .asymptotic import asymptotic_dirac_wave, direct_fourier_wave, \
    verify_stationary_phase
from .helix import HelixParams, helix_trajectory, helix_velocity, helix_fit, \
    integrate_helix_ode
from .step import dirac_step_reflection
from .classical import (SpacetimeTube, classical_ensemble_sigma,
                        velocity_density_from_packet, classical_sigma_oracle)

__all__ = [
    "ALPHA", "BETA", "GAMMA", "SpinorAlgebra", "projector",
    "complex_k_spectrum", "omega_of_k",
    "DiracSpectralField", "evolve_dirac_spectral", "covariant_conversion",
    "covariant_inverse", "GaussianSpinorProfile",
    "asymptotic_dirac_wave", "direct_fourier_wave", "verify_stationary_phase",
    "HelixParams", "helix_trajectory", "helix_velocity", "helix_fit",
    "integrate_helix_ode",
    "dirac_step_reflection",
    "SpacetimeTube", "classical_ensemble_sigma",
    "velocity_density_from_packet", "classical_sigma_oracle",
]
