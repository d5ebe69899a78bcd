"""LOCC protocol trees: evaluation and per-measurement width compression.

Represents finite LOCC protocols as trees of local instruments, evaluates
multipartite state-discrimination success, and compresses measurement width
two ways: an exact success-preserving reduction to at most 2 d_loc^2
outcomes per measurement, and a convex decomposition into slim protocols
with at most d_loc^2 outcomes each, including a bounded-shared-randomness
exact implementation of the protocol's instrument.
"""

from .caratheodory import (
    WeightedPointSet,
    barycentre,
    hermitian_to_vector,
    peel_decompose,
    reduce_support,
    vector_to_hermitian,
)
from .compress import (
    EqualizedOutcome,
    caratheodory_stage,
    compress_protocol_m1,
    conditional_success,
    equalize,
    matrix_sum_split,
)
from .errors import (
    CapExceeded,
    ConvergenceFailure,
    DimensionMismatch,
    LabelOutOfRange,
    LoccError,
    NoConvergence,
    NotHermitian,
    NotPsd,
    NumericalDegeneracy,
)
from .linalg import (
    HermitianEigen,
    hermitian_eig,
    inv_sqrt_on_support,
    real_null_vector,
    sqrt_psd,
)
from .quantum import (
    ChoiMatrix,
    CpMap,
    Ensemble,
    Instrument,
    MultipartiteSpace,
    Povm,
    canonicalize_kraus,
    choi_of,
    embed_local,
    map_of_choi,
)
from .slim import (
    BestSlimResult,
    SlimComponent,
    SlimDecomposition,
    best_slim,
    decompose_povm_slim,
    iter_slim_components,
    randomness_bound,
    reduce_shared_randomness,
    slim_decompose_tree,
)
from .tree import (
    Edge,
    Leaf,
    Node,
    ProtocolTree,
    cumulative_map,
    evaluate_success,
    extract_instrument,
    fine_grain,
    validate_tree,
    width_report,
)

__all__ = [
    "BestSlimResult",
    "CapExceeded",
    "ChoiMatrix",
    "ConvergenceFailure",
    "CpMap",
    "DimensionMismatch",
    "Edge",
    "Ensemble",
    "EqualizedOutcome",
    "HermitianEigen",
    "Instrument",
    "LabelOutOfRange",
    "Leaf",
    "LoccError",
    "MultipartiteSpace",
    "NoConvergence",
    "NotHermitian",
    "NotPsd",
    "Node",
    "NumericalDegeneracy",
    "Povm",
    "ProtocolTree",
    "SlimComponent",
    "SlimDecomposition",
    "WeightedPointSet",
    "barycentre",
    "best_slim",
    "canonicalize_kraus",
    "caratheodory_stage",
    "choi_of",
    "compress_protocol_m1",
    "conditional_success",
    "cumulative_map",
    "decompose_povm_slim",
    "embed_local",
    "equalize",
    "evaluate_success",
    "extract_instrument",
    "fine_grain",
    "hermitian_eig",
    "hermitian_to_vector",
    "inv_sqrt_on_support",
    "iter_slim_components",
    "map_of_choi",
    "matrix_sum_split",
    "peel_decompose",
    "randomness_bound",
    "real_null_vector",
    "reduce_shared_randomness",
    "reduce_support",
    "slim_decompose_tree",
    "sqrt_psd",
    "validate_tree",
    "vector_to_hermitian",
    "width_report",
]
