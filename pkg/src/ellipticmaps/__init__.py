"""Numerical certification toolkit for gradient-free elliptic maps."""

from .constraint import (
    ConstraintSet,
    MembershipVerdict,
    Report,
    Verdict,
    canonical,
    check_duality_identities,
    check_q_monotone,
    dual,
    enlarge,
    from_function,
    membership,
    q_distance,
    spectral_set,
)
from .elliptic_map import (
    BoxDomain,
    ContinuityCertificate,
    JetMap,
    check_relaxed_continuity,
    check_translation_continuity,
    constant_map,
    dual_map,
    find_tau,
    replay_witness,
    truncate_map,
    windowed_hausdorff,
)
from .errors import ConvergenceDefect, EvaluationError, InvalidParameter
from .fieldlab import (
    ComparisonVerdict,
    GridFunction,
    check_qdual_subharmonic,
    check_semiconvex,
    check_subaffine,
    check_subharmonic,
    compare,
    discrete_jet,
    hessian_field,
    subharmonic_addition_test,
    sup_convolution,
    translate_perturb,
    zmp_check,
)
from .jetcore import Jet, JetBatch, SampleBox, SymMat, eig_sym, eigvalsh, jacobi_eigh, random_jets
from .operators import (
    CoefficientField,
    MonotoneProfile,
    OperatorSpec,
    PairCertificate,
    certify_pair,
    check_RC,
    classify_jet,
    correspondence_check,
    custom_operator,
    make_builtin,
    operator_from_json,
    theta_from_pair,
)
from .slag import (
    FailureWitness,
    G_eval,
    PhasePartition,
    certify_slag_continuity,
    eig_bound,
    failure_witness,
    phase_partition,
)

__version__ = "0.1.0"
