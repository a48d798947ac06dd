"""Fixed-energy direct and inverse scattering for the discrete Schroedinger
operator on the square lattice ``Z^d``.

The package computes the free lattice resolvent kernel, solves the
Lippmann-Schwinger equation for finitely supported potentials, builds the
scattering amplitude and S-matrix, converts the amplitude into the interior
Dirichlet-to-Neumann map of a cube, and recovers the potential from that map
by layer stripping.
"""
__version__ = "0.1.0"

from .errors import (ExceptionalEnergyError, GateFailure, LatticeScatteringError,
                     NumericalError, SubdomainSingularError, ThresholdEnergyError,
                     ValidationError)
from .lattice import (BoxFunction, GridFunction, RectDomain, bstar_norm, build_domain, cone,
                      degree, discrete_laplacian, greens_identity_defect, normal_derivative,
                      radial_derivative)
from .geometry import (SpectralParam, amplitude_coeff, convexity_check, gaussian_curvature,
                       measure_weight, radiation_coeff, stationary_point, surface_point,
                       symbol_h)
from .green import GreenTable, green_table, r0_asymptotic, r0_defect, r0_eval
from .scattering import (AngularGrid, Potential, amplitude, angular_grid, far_field_defect,
                         generalized_fourier, incident_wave, radiation_defect, resolvent_apply,
                         s_matrix, unitarity_defect)
from .dnmap import (assemble_hamiltonian, boundary_op, deg_tilde, dirichlet_solve,
                    exterior_dn, interior_dn, shift_op, single_layer)
from .equivalence import (exterior_amplitude, factorization_defect, gamma_matrix,
                          smatrix_to_dn)
from .reconstruction import (cauchy_march, reconstruct, reflect_problem, sweep_level,
                             synth_boundary_data)

__all__ = [
    "ExceptionalEnergyError",
    "GateFailure",
    "LatticeScatteringError",
    "NumericalError",
    "SubdomainSingularError",
    "ThresholdEnergyError",
    "ValidationError",
    "BoxFunction",
    "GridFunction",
    "RectDomain",
    "bstar_norm",
    "build_domain",
    "cone",
    "degree",
    "discrete_laplacian",
    "greens_identity_defect",
    "normal_derivative",
    "radial_derivative",
    "SpectralParam",
    "amplitude_coeff",
    "convexity_check",
    "gaussian_curvature",
    "measure_weight",
    "radiation_coeff",
    "stationary_point",
    "surface_point",
    "symbol_h",
    "GreenTable",
    "green_table",
    "r0_asymptotic",
    "r0_defect",
    "r0_eval",
    "AngularGrid",
    "Potential",
    "amplitude",
    "angular_grid",
    "far_field_defect",
    "generalized_fourier",
    "incident_wave",
    "radiation_defect",
    "resolvent_apply",
    "s_matrix",
    "unitarity_defect",
    "assemble_hamiltonian",
    "boundary_op",
    "deg_tilde",
    "dirichlet_solve",
    "exterior_dn",
    "interior_dn",
    "shift_op",
    "single_layer",
    "exterior_amplitude",
    "factorization_defect",
    "gamma_matrix",
    "smatrix_to_dn",
    "cauchy_march",
    "reconstruct",
    "reflect_problem",
    "sweep_level",
    "synth_boundary_data",
]
