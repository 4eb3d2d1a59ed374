"""Seedable exact simulator of controller-gated quantum secret sharing.

A dealer spreads an N-qubit secret state over n players by entanglement
swapping through shared singlet pairs, while the two-bit Bell-measurement
records needed to finish the job go to m controllers.  Players cannot
reconstruct until enough controllers release their records; a withheld
record provably erases all knowledge of the matching qubit.  The package
also models decoy-state checking against an intercept-resend eavesdropper,
and counts the consumed entanglement and measurement resources.
"""

from .errors import (
    CapacityError,
    ControllerRefusal,
    CqssError,
    DecodeError,
    DimensionMismatch,
    IncompleteRun,
    InsufficientLinks,
    InternalInconsistency,
    NotNormalized,
    PolicyError,
    ProtocolError,
    ResourceAccountingError,
    ScenarioError,
    SimulationError,
    SweepError,
    UnknownQubit,
)
from .qubits import (
    BASIS_X,
    BASIS_Z,
    CORRECTION_FOR_OUTCOME,
    MAX_LIVE_QUBITS,
    BellKind,
    DensityMatrix,
    Pauli,
    QuantumRegister,
    QubitId,
    RandomSource,
    expected_withheld_density,
    fidelity,
    pure_density,
    sealed_mixture,
    trace_distance,
)
from .protocol import (
    AccessPolicy,
    ClassicalShare,
    EprLink,
    Message,
    PartyId,
    ProtocolRun,
    Recovered,
    ResourceReport,
    Role,
    Sealed,
    Transcript,
    decode_bits,
    encode_bits,
    setup,
)
from .security import (
    AuditReport,
    DecoyPlan,
    DecoyState,
    DetectionReport,
    EveModel,
    controller_channel_check,
    eve_tap,
    insert_decoys,
    no_information_audit,
    verify_decoys,
)
from .scenario import (
    ScenarioConfig,
    SecretSpec,
    load_scenario,
    parse_scenario_text,
    scenario_to_text,
)
from .harness import (
    DetectionCurve,
    RunReport,
    SweepTable,
    TrialResult,
    demo_decode,
    demo_encode,
    detection_curve,
    expected_outcome,
    haar_random_state,
    mstar_sweep,
    run_scenario,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [
    "AccessPolicy",
    "AuditReport",
    "BASIS_X",
    "BASIS_Z",
    "BellKind",
    "CORRECTION_FOR_OUTCOME",
    "CapacityError",
    "ClassicalShare",
    "ControllerRefusal",
    "CqssError",
    "DecodeError",
    "DecoyPlan",
    "DecoyState",
    "DensityMatrix",
    "DetectionCurve",
    "DetectionReport",
    "DimensionMismatch",
    "EprLink",
    "EveModel",
    "IncompleteRun",
    "InsufficientLinks",
    "InternalInconsistency",
    "MAX_LIVE_QUBITS",
    "Message",
    "NotNormalized",
    "PartyId",
    "Pauli",
    "PolicyError",
    "ProtocolError",
    "ProtocolRun",
    "QuantumRegister",
    "QubitId",
    "RandomSource",
    "Recovered",
    "ResourceAccountingError",
    "ResourceReport",
    "Role",
    "RunReport",
    "Sealed",
    "ScenarioConfig",
    "ScenarioError",
    "SecretSpec",
    "SimulationError",
    "SweepError",
    "SweepTable",
    "Transcript",
    "TrialResult",
    "UnknownQubit",
    "controller_channel_check",
    "decode_bits",
    "demo_decode",
    "demo_encode",
    "detection_curve",
    "encode_bits",
    "eve_tap",
    "expected_outcome",
    "expected_withheld_density",
    "fidelity",
    "haar_random_state",
    "insert_decoys",
    "load_scenario",
    "mstar_sweep",
    "no_information_audit",
    "parse_scenario_text",
    "pure_density",
    "run_scenario",
    "run_trial",
    "scenario_to_text",
    "sealed_mixture",
    "setup",
    "trace_distance",
    "verify_decoys",
]
