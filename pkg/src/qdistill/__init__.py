"""Distillability of bipartite states via Schmidt rank-2 witnesses and two-decomposable maps."""

__version__ = "0.1.0"

from .distill import (
    filter_state,
    n_distillable,
    named_map_prepass,
    one_distillable,
    projector_test,
    reduction_two_copy_identity,
    two_positivity_crosscheck,
    two_copy_witness_separability_check,
    witness_class_value,
)
from .maps import (
    LinearMapRep,
    Witness,
    adjoint,
    apply_extended,
    apply_map,
    is_k_positive,
    jamiolkowski_operator,
    map_from_operator,
    named_map,
    s_map_from_state,
    two_decomposable_from_vectors,
    witness_from_vector,
)
from .operators import (
    BipartiteOperator,
    PureVector,
    SchmidtForm,
    herm_eig,
    kron,
    partial_trace,
    partial_transpose,
    permute_to_bipartite,
    schmidt,
    schmidt_rank,
)
from .search import SearchParams, Verdict, VerdictKind, rank_constrained_min
from .states import (
    DensityMatrix,
    diag_projector_z,
    flip_operator,
    isotropic,
    load_state,
    max_entangled,
    random_density,
    random_rank2_vector,
    random_unitary,
    save_state,
    sym_antisym,
    tensor_power,
    werner,
)
