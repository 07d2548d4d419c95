"""Secure state estimation for power networks under sparse sensor attacks."""

from .decoder import (
    Annihilator,
    CodingProblem,
    SparseSolution,
    ZERO_THRESHOLD,
    certify_recoverability,
    compute_annihilator,
    decode,
    l0_bruteforce,
    l1_minimize,
)
from .errors import (
    ConfigError,
    DimensionError,
    Disconnected,
    GridsecError,
    Infeasible,
    IOFailure,
    MissingMeasurement,
    MissingNeighborMeasurement,
    NetworkParseError,
    ParamFileMissing,
    RankDeficient,
    SingularLoadBlock,
    SolverFailure,
    TooLarge,
    Unobservable,
)
from .grid import (
    BusNetwork,
    GeneratorParams,
    GridState,
    Line,
    ReducedNetwork,
    electrical_power,
    euler_step,
    kron_reduce,
    p_meas,
    storage_control,
)
from .linear import (
    LinearSystem,
    StackedObservation,
    build_observability,
    check_recovery_conditions,
    secure_estimate_linear,
)
from .netfile import PreparedPlant, prepare_plant, resolve_network_path
from .nonlinear import (
    LinearizedStack,
    NonlinearSystem,
    decode_linearized,
    transform_feedback_linearized,
    transform_with_mapping,
)
from .scenario import AttackScenario, FixedTarget, build_new_england_scenario
from .sim import SimulationConfig, SimulationTrace, run_simulation
from .wacs import (
    AttackEstimate,
    CorrectableBound,
    CouplingMatrix,
    StackedWacsSystem,
    WacsEstimator,
    WacsSystem,
    assemble_wacs,
    classify_two_step,
    correctable_bound,
    coupling_matrix,
    epsilon_from_attacks,
    estimate_window,
    recover_initial_state,
    stack_and_annihilate,
)

__version__ = "0.1.0"
