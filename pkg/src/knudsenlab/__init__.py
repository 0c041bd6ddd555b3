"""Spectral simulator and verification harness for perturbative kinetic
equations on the torus, with Knudsen number eps.

Layout:
  spectral   Fourier-in-x x Hermite-in-v representation and norms
  models     collision operators, fluid projector, per-mode generators
  hypnorm    eps-weighted hypocoercivity norms and dissipation monitors
  evolve     time integration (exact linear / Strang IMEX) and decay fits
  branches   per-mode eigenvalue branches, dispersion fits, semigroup split
  hydro      moments, incompressible Navier-Stokes reference, rate studies
  cli        experiment runner
"""

from .spectral import (
    VelocityBasis,
    SpectralField,
    build_basis,
    velocity_transform,
    apply_spectral_operator,
    inner_or_norm,
)
from .models import (
    CollisionModel,
    OperatorConstants,
    make_model,
    kernel_basis,
    project_fluid,
    apply_collision,
    apply_transport,
    assemble_mode_generator,
    apply_gamma,
    constants_ledger,
    verify_hypotheses,
)
from .hypnorm import (
    HypNormCoefficients,
    build_h1_coefficients,
    build_hk_coefficients,
    eval_hyp_norm,
    eval_E_functional,
    dissipation_monitor,
)
from .evolve import IntegratorConfig, TrajectoryRecord, propagate, fit_decay_rate
from .branches import (
    ModeSpectrum,
    BranchFit,
    mode_spectrum,
    fit_dispersion,
    semigroup_decompose,
)
from .hydro import (
    MomentFields,
    NSState,
    extract_moments,
    leray_project,
    build_initial_data,
    ns_solve,
    convergence_study,
)

__version__ = "0.1.0"
