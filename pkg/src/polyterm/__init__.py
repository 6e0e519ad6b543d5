"""Termination checking for polymorphic functional systems.

Rewrite systems over System F-omega types are proved terminating by
verifying user-supplied polynomial interpretations: rule sides are mapped
into a small calculus of interpretation terms, normalized, and compared by
a symbolic absolute-positiveness engine that is cross-checked by a
ground-instance sampling oracle; strictly oriented rules are removed until
none remain.
"""

from .errors import PolytermError
from .interp import (
    INTERP_SIG,
    is_final,
    nat_value,
    nf,
    normalize,
    reduce_step,
    typecheck_interp,
)
from .ordering import (
    Closure,
    Verdict,
    compare_terms,
    ground_compare,
    sample_closures,
    symbolic_compare,
    to_polynomial,
)
from .pfs import (
    Context,
    Replacement,
    RuleSchema,
    System,
    check_rule_wellformed,
    match_schema,
    rewrite_step,
    validate_pfs_term,
)
from .prover import (
    Interpretation,
    OrientationResult,
    ProofTranscript,
    check_safety,
    interpret_term,
    interpret_type,
    orient_rule,
    rule_removal,
)
from .syntax import (
    Kind,
    Signature,
    Tm,
    Ty,
    beta_normalize_type,
    chi,
    kind_of,
    subst_type,
    typecheck,
)
from .textform import (
    parse_interp,
    parse_interp_term,
    parse_interp_type,
    parse_system,
    print_term,
    print_type,
)

__version__ = "0.1.0"
