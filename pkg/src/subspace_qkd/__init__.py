"""Key rates for entanglement-based qudit QKD with simultaneous block coding.

The package computes asymptotic secret-key rates when a d-dimensional
entangled pair is carved into independent size-k blocks, models the photon
noise of time-bin and spatial-mode implementations, validates both noise
models by Monte Carlo event sampling, certifies the min-entropy bound with a
matched dual/primal pair, and simulates the finite-round protocol.
"""

from . import mc, noise_spatial, noise_temporal, protocol, sdp
from .keyrate import (
    KeyRateReport,
    SubspaceStats,
    conditional_entropy,
    critical_visibility,
    iso_block_probability,
    iso_effective_visibility,
    iso_keyrate_closed_form,
    iso_subspace_witness,
    keyrate_from_state,
    keyrate_subspace,
    keyrate_total,
    min_entropy_bound,
)
from .mc import (
    McComparison,
    McEstimate,
    active_backend,
    compare_to_analytic,
    simulate_spatial,
    simulate_temporal,
)
from .noise_spatial import EventProbabilities, SpatialDerived, SpatialParams
from .noise_temporal import MultiphotonCheck, TemporalDerived, TemporalParams
from .protocol import (
    AsymptoticRate,
    BlockEstimate,
    ProtocolConfig,
    ProtocolEstimates,
    RoundRecord,
    asymptotic_rate_estimate,
    estimate_parameters,
    run_protocol,
)
from .sdp import (
    DualCertificate,
    PrimalAttack,
    WitnessOperator,
    build_witness_operator,
    closed_form_guessing,
    dual_certificate,
    eigenvalue_formula_check,
    primal_search,
)
from .quantum import (
    BlockProjection,
    DensityMatrix,
    JointDistribution,
    MeasurementBasis,
    MeasurementSet,
    SubspaceLayout,
    born_joint_distribution,
    build_block_fourier_unitary,
    build_measurements,
    isotropic_state,
    maximally_entangled_state,
    project_subspace,
)

__all__ = [
    "AsymptoticRate",
    "BlockEstimate",
    "BlockProjection",
    "DensityMatrix",
    "DualCertificate",
    "EventProbabilities",
    "JointDistribution",
    "KeyRateReport",
    "McComparison",
    "McEstimate",
    "MeasurementBasis",
    "MeasurementSet",
    "MultiphotonCheck",
    "PrimalAttack",
    "ProtocolConfig",
    "ProtocolEstimates",
    "RoundRecord",
    "SpatialDerived",
    "SpatialParams",
    "SubspaceLayout",
    "SubspaceStats",
    "TemporalDerived",
    "TemporalParams",
    "WitnessOperator",
    "active_backend",
    "asymptotic_rate_estimate",
    "born_joint_distribution",
    "build_block_fourier_unitary",
    "build_measurements",
    "build_witness_operator",
    "closed_form_guessing",
    "compare_to_analytic",
    "conditional_entropy",
    "critical_visibility",
    "dual_certificate",
    "eigenvalue_formula_check",
    "estimate_parameters",
    "iso_block_probability",
    "iso_effective_visibility",
    "iso_keyrate_closed_form",
    "iso_subspace_witness",
    "isotropic_state",
    "keyrate_from_state",
    "keyrate_subspace",
    "keyrate_total",
    "maximally_entangled_state",
    "mc",
    "min_entropy_bound",
    "noise_spatial",
    "noise_temporal",
    "primal_search",
    "project_subspace",
    "protocol",
    "run_protocol",
    "sdp",
    "simulate_spatial",
    "simulate_temporal",
]

__version__ = "0.1.0"
