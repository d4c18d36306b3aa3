"""Semi-quantum random number generation: simulation, reduction checks, rate bound, extraction."""

__version__ = "0.1.0"

from .attacks import (
    CollectiveAttack,
    GeneralAttack,
    InvalidAttackError,
    ReductionReport,
    accept_and_condition,
    build_eqrng_state,
    build_mu,
    build_rho_ace,
    build_sqrng_state,
    exact_conditional_entropy,
    honest_attack,
    honest_collective_attack,
    sample_collective_attack,
    sample_random_attack,
    stats_from_attack,
    verify_reduction,
)
from .bits import count_bits
from .extract import ExtractionConfig, ExtractionResult, extract, select_length, toeplitz_hash
from .protocol import ProtocolConfig, RoundRecord, Transcript, estimate_stats, run_protocol
from .quantum import (
    DensityMatrix,
    StateVector,
    apply_cnot,
    binary_entropy,
    conditional_entropy,
    depolarize,
    partial_trace,
    project_qubit,
    von_neumann_entropy,
)
from .rate import (
    ChannelModel,
    ObservedStats,
    RateReport,
    asymptotic_output_length,
    closed_form_rate,
    depolarization_stats,
    entropy_bound,
    lambda_c,
    rate_curve,
    recover_inner_products,
)
