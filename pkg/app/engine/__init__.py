"""Counterdiabatic QAOA engine: operator algebra, problem models, gauge
potentials, generator expansions, angle matching and simulators.

Nothing here imports Flask; the engine is usable as a plain library.
"""
from .agp import AlphaProfile, VariationalAgp, alpha_closed, alpha_closed_for, alpha_numeric, alpha_profile
from .expand import GeneratorSeries, OperatorBasis, StepMatcher, bch_generator, magnus_generator, step_error
from .fermions import FermionModes, fermion_evolve, fermion_objective
from .matching import (
    AngleSet,
    MatchReport,
    OptimizerConfig,
    Validity,
    angle_budget,
    closed_form_step,
    derive_angles,
    effective_schedule,
    fit_power_law,
    reverse_protocol,
    validity_check,
)
from .model import (
    ProblemInstance,
    build_ising_ring,
    build_maxcut,
    build_two_level,
    cd_hamiltonian,
    instance_from_spec,
)
from .pauli import PauliSum, PauliTerm, commutator, multiply, nested_commutator, norm_sq, to_matrix, trace_product
from .schedule import Schedule
from .sim import StateVector, approximation_ratio, bloch_trajectory, cd_evolve, optimize_angles, qaoa_state, scan_p1

__all__ = [
    "AlphaProfile", "VariationalAgp", "alpha_closed", "alpha_closed_for", "alpha_numeric", "alpha_profile",
    "GeneratorSeries", "OperatorBasis", "StepMatcher", "bch_generator", "magnus_generator", "step_error",
    "FermionModes", "fermion_evolve", "fermion_objective",
    "AngleSet", "MatchReport", "OptimizerConfig", "Validity", "angle_budget", "closed_form_step",
    "derive_angles", "effective_schedule", "fit_power_law", "reverse_protocol", "validity_check",
    "ProblemInstance", "build_ising_ring", "build_maxcut", "build_two_level", "cd_hamiltonian",
    "instance_from_spec",
    "PauliSum", "PauliTerm", "commutator", "multiply", "nested_commutator", "norm_sq", "to_matrix",
    "trace_product",
    "Schedule",
    "StateVector", "approximation_ratio", "bloch_trajectory", "cd_evolve", "optimize_angles", "qaoa_state",
    "scan_p1",
]
