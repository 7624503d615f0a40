"""Pseudospectral 2D incompressible Navier-Stokes on a periodic cylinder.

Simulation and diagnostics for the vorticity formulation on the domain
(R/lam*Z) x (R/Z): Biot-Savart velocity reconstruction, integrating-factor
RK4 time stepping, linear advection-diffusion checks, energy/enstrophy
budget diagnostics, and empirical verification of the functional
inequalities that control the long-time behavior (uniform velocity bound,
sup-norm vorticity decay, exponential relaxation to shear flow).
"""

from .spectral import (
    PHYSICAL,
    SPECTRAL,
    Profile,
    ScalarField,
    SpectralGrid,
    VelocityField,
    dealias,
    make_grid,
    spectral_derivative,
    to_physical,
    to_spectral,
    vertical_average,
)

__version__ = "0.1.0"
