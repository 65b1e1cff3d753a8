"""Multi-user private information retrieval with colluding and curious
servers, over a prime field.

M users each privately fetch one index of an M-way data tensor replicated
(with optional secret-shared masking) across N servers; any T_m servers
learn nothing about user m's index, any X servers learn nothing about the
data, and each user's download is independent of the other users' indices.
"""

from ._version import __version__
from .errors import (
    BlindPirError,
    BudgetExceeded,
    DegenerateEvaluationPoints,
    DimensionMismatch,
    DivisionByZero,
    DuplicatePoints,
    FieldMismatch,
    FieldTooSmall,
    IndexOutOfRange,
    InfeasibleParams,
    NonPrimeModulus,
    NotPerfectSquare,
    SingularMatrix,
    UnnormalizedDistribution,
    VerificationFailed,
)
from .field import FieldElement, FieldSpec, Streams, is_prime, sample_residues
from .harness import (
    BenchReport,
    RunConfig,
    cmd_audit,
    cmd_bench,
    cmd_plan,
    cmd_retrieve,
    load_config,
)
from .privacy import (
    InterUserReport,
    LeakageReport,
    TPrivacyReport,
    ViewDistribution,
    XSecurityReport,
    audit_inter_user_privacy,
    audit_t_privacy,
    audit_x_security,
    leakage_bound,
    mi_estimate,
)
from .protocol import (
    AnswerShare,
    CommonRandomness,
    MessageDatabase,
    QueryShare,
    StorageShare,
    Transcript,
    UserSecret,
    decode,
    decode_full,
    encode_storage,
    gen_common_randomness,
    gen_queries,
    gen_user_secret,
    retrieve,
    server_answer,
    verify_round,
)
from .scheme import (
    RateReport,
    SchemeParams,
    achievable_rate,
    baseline_partition_rate,
    db_asymptotic_capacity,
    mbxs_capacity_bounds,
    rate_report,
    validate,
)
from .tensor import FieldMatrix, FieldVector, Tensor, cv_matrix, mode_m_mul, solve

__all__ = [
    "__version__",
    "BlindPirError",
    "BudgetExceeded",
    "DegenerateEvaluationPoints",
    "DimensionMismatch",
    "DivisionByZero",
    "DuplicatePoints",
    "FieldMismatch",
    "FieldTooSmall",
    "IndexOutOfRange",
    "InfeasibleParams",
    "NonPrimeModulus",
    "NotPerfectSquare",
    "SingularMatrix",
    "UnnormalizedDistribution",
    "VerificationFailed",
    "FieldElement",
    "FieldSpec",
    "Streams",
    "is_prime",
    "sample_residues",
    "BenchReport",
    "RunConfig",
    "cmd_audit",
    "cmd_bench",
    "cmd_plan",
    "cmd_retrieve",
    "load_config",
    "InterUserReport",
    "LeakageReport",
    "TPrivacyReport",
    "ViewDistribution",
    "XSecurityReport",
    "audit_inter_user_privacy",
    "audit_t_privacy",
    "audit_x_security",
    "leakage_bound",
    "mi_estimate",
    "AnswerShare",
    "CommonRandomness",
    "MessageDatabase",
    "QueryShare",
    "StorageShare",
    "Transcript",
    "UserSecret",
    "decode",
    "decode_full",
    "encode_storage",
    "gen_common_randomness",
    "gen_queries",
    "gen_user_secret",
    "retrieve",
    "server_answer",
    "verify_round",
    "RateReport",
    "SchemeParams",
    "achievable_rate",
    "baseline_partition_rate",
    "db_asymptotic_capacity",
    "mbxs_capacity_bounds",
    "rate_report",
    "validate",
    "FieldMatrix",
    "FieldVector",
    "Tensor",
    "cv_matrix",
    "mode_m_mul",
    "solve",
]
