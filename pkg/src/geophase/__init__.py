"""Geometric phases of driven finite-dimensional quantum systems.

Propagates amplitudes under time-dependent Hermitian generators, extracts
total, dynamical, Aharonov-Anandan and Berry phases, and probes their gauge
structure, moving-frame representation and superposition behaviour.
"""
from .errors import *  # noqa: F401,F403
from .gauge import (
    GaugeFunction,
    density_invariance,
    generator_residual,
    nonlinear_residual,
    parallel_transport_representative,
    random_gauge,
    rephase_frame,
    rephase_trajectory,
)
from .hamiltonians import (
    EigenFrame,
    HamiltonianSpec,
    alpha_tilt,
    analytic_amplitude,
    analytic_energies,
    analytic_interference,
    analytic_phase_report,
    analytic_w_frame,
    eigen_frame,
    eigenvectors,
    evaluate,
    evaluate_many,
    initial_state,
    literal_interference,
    load_custom_samples,
    parse_custom_samples,
)
from .phases import (
    PhaseReport,
    aa_phase,
    berry_phase,
    connection_integral,
    dynamical_phase,
    pancharatnam_overlap,
    phase_report,
)
from .propagator import CyclicityVerdict, check_cyclic, default_steps, norm_drift, propagate, step
from .state import (
    ComplexState,
    FrameTrajectory,
    TimeGrid,
    Trajectory,
    arg_overlap,
    bloch_vector,
    inner_product,
    wrap_phase,
)
from .superposition import (
    SuperpositionSpec,
    adiabatic_interference_conditions,
    common_shift_residual,
    interference_intensity,
    level_splitting,
    linear_residual,
    nonlinear_superposition_test,
    resonance_check,
    resonant_mu_b,
    superpose,
)
from .wframe import (
    EffectiveHamiltonianTrack,
    build_w_frame,
    effective_hamiltonian,
    frame_holonomy,
    reconstruct_amplitude,
)

__version__ = "0.1.0"
