"""Nonovershooting cooperative output regulation for LTI multi-agent networks.

Design distributed dynamic measurement output feedback controllers so
every follower tracks the exosystem reference with zero steady-state
error and without a sign change in any regulated output component, then
verify the design by exact closed-loop simulation.
"""

from .errors import (
    DegeneratePencil,
    DimensionMismatch,
    GammaInfeasible,
    InconsistentSystem,
    NonzeroLeaderRow,
    NoregError,
    PlacementFailed,
    PreconditionViolated,
    RegulatorInfeasible,
    ScenarioFormatError,
    SearchFailed,
    SingularEigenvectorMatrix,
)
from .graph import (
    Digraph,
    LaplacianPartition,
    adjacency,
    laplacian,
    partition,
    partition_diagnostics,
    rooted_spanning_tree_exists,
)
from .model import (
    AgentPlant,
    AssumptionReport,
    EstimatorInit,
    Exosystem,
    Scenario,
    SynthesisOptions,
    check_assumptions,
    feasibility_heuristic,
    invariant_zeros,
)
from .numerics import expm, kernel_basis, kron, solve_linear, spectrum
from .observer import (
    AgentGains,
    ControllerGains,
    compute_lambda0,
    expected_coupling_spectrum,
    informed_observer_gains,
    select_gamma,
    uninformed_observer_gain,
)
from .pipeline import DesignReport, design_controller
from .regulator import RegulatorSolution, feedforward_gain, solve_regulator
from .seds import SedFunction, SedsFunction, add, delta_for_sign_preservation, evaluate, multiply
from .sim import (
    ClosedLoopSystem,
    Trace,
    assemble_closed_loop,
    block_spectrum_union,
    detect_overshoot,
    detect_overshoot_all,
    estimator_init,
    multiset_distance,
    simulate,
)
from .synthesis import (
    ModalErrorExpansion,
    ModeAssignment,
    SynthesisResult,
    build_feedback,
    candidate_directions,
    modal_error_expansion,
    place_spectrum,
    sign_constancy_test,
    synthesize_nonovershooting_F,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
