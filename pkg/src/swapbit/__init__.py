"""Simulator for learning a hidden bit by coherently swapping indistinguishable modes.

The package covers the full pipeline: a dense complex-matrix kernel
(:mod:`swapbit.linalg`), the mode-register and device bases
(:mod:`swapbit.spaces`), the control-gate channel family with Kraus
construction and membership checking (:mod:`swapbit.gates`), the guessing
protocol with its optimal-measurement bound and distinguishable-particle
baseline (:mod:`swapbit.protocol`), transposition-based entanglement
certificates (:mod:`swapbit.entanglement`), and a report-writing experiment
CLI (:mod:`swapbit.cli`).
"""

__version__ = "0.1.0"

from .entanglement import (
    DEGENERATE_ALPHA_TOL,
    IffTheoremRecord,
    NPT_ENTANGLED,
    NPT_TOL,
    PPT_INCONCLUSIVE,
    PptCertificate,
    analytic_npt_witness,
    iff_theorem_check,
    ppt_check,
)
from .gates import (
    GeneralizedControlGate,
    KrausSet,
    MembershipVerdict,
    apply_gate,
    classical_gate,
    ideal_gate,
    kraus_set,
    overlap_matrix,
    postselected_target,
    random_density_operator,
    random_gate,
    verify_membership,
)
from .linalg import (
    TensorFactorization,
    hermitian_eigen,
    is_hermitian,
    kron,
    partial_trace_a,
    partial_trace_b,
    partial_transpose_b,
    require_density,
    trace_distance,
    trace_norm,
)
from .protocol import (
    MeasurementSpec,
    ProtocolReport,
    build_report,
    canonical_measurement,
    distinguishable_baseline,
    helstrom_bound,
    helstrom_measurement,
    location_guess_probability,
    location_tradeoff,
    reduced_device_states,
    run_protocol,
    setting_outcome_distribution,
    success_probability,
)
from .spaces import (
    DeviceBasis,
    DistinguishableState,
    TargetBasis,
    distinguishable_joint_state,
    position_swap,
    swap_operator,
    swap_operators,
    target_state,
    uniform_device_state,
)
