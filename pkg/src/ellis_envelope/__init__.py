"""Finite semigroup diagnostics, channel ergodics, and UCP-spectrahedron envelopes."""

__version__ = "0.1.0"

from .boundary import BoundaryResult, build_T_set, compute_boundary, tau_absorb
from .channels import (
    ChannelMap,
    ErgodicResult,
    NonConvergenceError,
    StructureReport,
    cesaro_idempotent,
    check_absorption,
    check_structure,
    compose,
    fixed_space,
    random_unital_channel,
    unitalize_kraus,
)
from .envelope import (
    ChoiEffrosTable,
    DescentResult,
    EnvelopeResult,
    choi_effros_table,
    compute_envelope,
    corner_extract,
    descend_to_minimal,
    lift_map,
    paulsen_lift,
    probe_minimality,
    rigidity_check,
    seed_idempotent,
)
from .linalg import SubspaceBasis, frobenius, hermitian_eig, orthonormalize, subspace_equal
from .semigroups import (
    CayleyTable,
    IdempotentPoset,
    SimilarityReport,
    check_remark_similarity,
    cyclic_group,
    enumerate_semigroups,
    idempotent_poset,
    idempotent_power,
    left_ideal,
    left_zero,
    minimal_idempotent_below,
    minimal_left_ideals,
    random_subsemigroup,
    transformation_monoid,
)
from .spectrahedron import (
    CbNormBracket,
    FeasibleSet,
    MembershipReport,
    OperatorSubspace,
    build_system_set,
    cb_norm,
    cb_norm_bracket,
    dykstra_project,
    maximize_linear,
    sample,
)

__all__ = [
    "__version__",
    "BoundaryResult",
    "CayleyTable",
    "CbNormBracket",
    "ChannelMap",
    "ChoiEffrosTable",
    "DescentResult",
    "EnvelopeResult",
    "ErgodicResult",
    "FeasibleSet",
    "IdempotentPoset",
    "MembershipReport",
    "NonConvergenceError",
    "OperatorSubspace",
    "SimilarityReport",
    "StructureReport",
    "SubspaceBasis",
    "build_system_set",
    "build_T_set",
    "cb_norm",
    "cb_norm_bracket",
    "cesaro_idempotent",
    "check_absorption",
    "check_remark_similarity",
    "check_structure",
    "choi_effros_table",
    "compose",
    "compute_boundary",
    "compute_envelope",
    "corner_extract",
    "cyclic_group",
    "descend_to_minimal",
    "dykstra_project",
    "enumerate_semigroups",
    "fixed_space",
    "frobenius",
    "hermitian_eig",
    "idempotent_poset",
    "idempotent_power",
    "left_ideal",
    "left_zero",
    "lift_map",
    "maximize_linear",
    "minimal_idempotent_below",
    "minimal_left_ideals",
    "orthonormalize",
    "paulsen_lift",
    "probe_minimality",
    "random_subsemigroup",
    "random_unital_channel",
    "rigidity_check",
    "sample",
    "seed_idempotent",
    "subspace_equal",
    "tau_absorb",
    "transformation_monoid",
    "unitalize_kraus",
]
