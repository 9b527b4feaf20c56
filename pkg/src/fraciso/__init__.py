"""Fractional Gagliardo seminorms, nonlocal interaction energies and tails on
uniform lattices, with certified interaction lower bounds, an empirical
isoperimetric probe and weak De Giorgi class checks."""

from .certifier import (ConstantsLedger, LowerBoundCertificate, certify_interaction_lower_bound, classify_cells,
                        column_census, constants_ledger, main_estimate_check)
from .dg import DGParams, caccioppoli_sides, growth_simulation, membership_scan
from .errors import DegenerateFamilyError, PreconditionError
from .grid import (GridFunction, KernelParams, LatticeDomain, PixelSet, Regime, ball_to_cube, build_grid_function,
                   cube_to_ball, level_set, rescale_levels, transfer_pixel_set)
from .iso_probe import default_beta, family_generator, fit_beta_C, iso_report, smoothed_step_sweep, trivial_bound_check
from .psi import psi, psi_inverse
from .quadrature import (Mode, QuadratureSpec, gagliardo_p, interaction, interaction_annulus,
                         interaction_lower_quadrature, tail)

__version__ = "0.1.0"
