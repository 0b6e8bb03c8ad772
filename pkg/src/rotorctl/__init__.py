"""Rotational quantum dynamics of linear and symmetric-top molecules driven by
THz and nonresonant laser pulses, with optimal control towards states that are
oriented and delocalized in the plane at the same time."""

from .basis import OperatorMatrix, RotorBasis, build_basis, cos_squared_matrix, cos_theta_matrix, free_hamiltonian
from .dynamics import (
    TimeGrid,
    Trajectory,
    boltzmann_ensemble,
    free_evolve,
    period_grid,
    propagate,
    propagate_ensemble,
)
from .errors import (
    BasisOverflowError,
    ConfigError,
    DomainError,
    NumericError,
    RotorError,
    UnsupportedInputError,
)
from .oct import OctProblem, OctResult, fidelity, gradient, optimize
from .pulses import (
    FieldSamples,
    PulseSequence,
    PulseSpec,
    bipulse_sequence,
    field_at,
    hcp_train_sequence,
    default_guess_pulse,
)
from .states import EnsembleMember, RotorEnsemble, RotorState, basis_state
from .targets import (
    MeritParams,
    TargetState,
    angular_density,
    classical_optimum,
    classical_scan,
    expectations,
    projected_merit_matrix,
    target_state,
)
from .units import MoleculeParams

__version__ = "0.1.0"
