"""Interacting-particle aggregation with an environmental field, and its mean-field limit.

A numpy/scipy library for simulating N particles whose drift is the
nonlocal aggregation force of a kernel-smoothed density, coupled to a
degradable environmental field; solving the corresponding mean-field
PDE-ODE system with a spectral heat propagator; and measuring the
empirical convergence of the particle density to the PDE solution.
"""

__version__ = "0.1.0"

from .config import SimConfig, apply_overrides, config_from_dict, load_config
from .clustering import cluster_count, mean_pairwise_distance
from .errors import (
    AggrsimError,
    BallOutsideDomain,
    BoundaryMassLeak,
    ConfigError,
    GeometryMismatch,
    NoDecayBound,
    NonFiniteField,
    NonFiniteResult,
    ParticleOutOfDomain,
    UnresolvableKernel,
)
from .grid import (
    DensityField,
    GridGeometry,
    ScalarField,
    VectorField,
    field_to_csv,
    l2_norm,
    load_field,
    save_field,
)
from .interaction import InteractionKernel, bounded_drift, default_r_cut, drift_field, eval_g
from .metrics import BumpTestFunction, d_l2loc, l2_ball, weak_residual
from .particles import (
    InitialLaw,
    MatrixFieldState,
    ParticleState,
    RunRecord,
    Snapshot,
    f_zeta,
    sample_initial,
    simulate,
    step_em,
    update_m,
)
from .pde import (
    PdeRunRecord,
    PdeSnapshot,
    PdeState,
    divergence_flux,
    heat_propagate,
    pde_step,
    solve_pde,
)
from .presets import PRESETS, ScenarioPreset, default_link_radius, preset_config
from .runio import write_particle_run, write_pde_run, write_study
from .smoothing import KernelStencil, MollifierSpec, build_scaled_kernel, deposit_density
from .study import ConvergenceReport, StudyEntry, convergence_study, density_centroid

__all__ = [name for name in dir() if not name.startswith("_")]
