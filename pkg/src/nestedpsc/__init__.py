"""Randomized nested polar subcodes for key agreement over noisy sources.

The package designs a pair of nested codes over a binary symmetric
measurement channel: a high-rate polar quantizer and a low-rate
randomized polar subcode.  Enrollment quantizes a measured word and
publishes helper syndromes; reconstruction list- or stack-decodes a
fresh noisy measurement back to the enrolled key.
"""

from .codes import (
    KIND_DYNAMIC_A,
    KIND_DYNAMIC_B,
    KIND_STATIC,
    ConstraintMatrix,
    ConstraintRow,
    NestedCodePair,
    PolarSubcode,
    build_randomized_psc,
    default_ta_tb,
    expand_info,
    load_code_file,
    sample_codewords,
    save_code_file,
    stack_nested,
)
from .decoding import (
    BatchDecodeResult,
    DecodeOutcome,
    FrozenSchedule,
    QuantizeResult,
    SclBatchDecoder,
    SequentialDecoder,
    channel_llrs,
    expected_metric_bias,
    quantize,
    quantize_batch,
    quantize_with_schedule,
    quantizer_schedule,
    sc_decode,
    scl_decode,
    sequential_decode,
)
from .design import (
    BlerPoint,
    BracketingError,
    CandidateOutcome,
    DesignError,
    DesignParams,
    DesignReport,
    DistortionPoint,
    default_design_grid,
    design_nested,
    find_pc,
    measure_bler,
    measure_distortion,
    select_quantizer_set,
    wilson_interval,
)
from .gf2 import (
    as_bit_array,
    binary_entropy,
    bits_to_hex,
    hamming_distance,
    hex_to_bits,
    index_weight,
    inverse_star,
    polar_transform,
    row_inner_product,
    star,
)
from .keyagreement import (
    CsHelper,
    EnrollmentRecord,
    RatePoint,
    ReconstructionResult,
    boundary_sweep,
    code_rate_point,
    cs_unwrap,
    cs_wrap,
    enroll,
    enroll_batch,
    load_records,
    rate_point_from_counts,
    reconstruct,
    reconstruction_schedule,
    region_boundary,
    save_records,
)
from .reliability import (
    LevelDistribution,
    ReliabilityProfile,
    density_evolution_minsum,
    genie_sc_error_rates,
)

__version__ = "0.1.0"
