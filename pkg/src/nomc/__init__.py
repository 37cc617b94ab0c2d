"""Nominal rewriting and narrowing modulo commutativity.

Terms carry binders and suspended permutations; equality is alpha-equivalence
extended with commutativity of designated binary symbols. On top of that the
package provides freshness/equality judgements, rule-based unification and
matching, rewriting with normalisation and coherence probes, and bounded
narrowing with lifting checkers relating the two.
"""

from .alpha import (
    EMPTY_CONTEXT,
    EqualityGoal,
    FreshnessConstraint,
    FreshnessContext,
    FreshnessGoal,
    INCONSISTENT,
    check_problem,
    context_of,
    derive_alpha,
    derive_alpha_c,
    derive_freshness,
    format_context,
    freshness_context_nf,
)
from .narrowing import (
    NarrowingNode,
    NarrowingStep,
    NarrowingTree,
    NotFound,
    PRECONDITION_FAIL,
    TruncationRecord,
    lifting_backward_construct,
    lifting_forward_check,
    narrow_search,
    narrowing_to_rewriting,
    one_step_narrowings,
)
from .parsing import (
    ParseError,
    SystemFile,
    format_system,
    format_term,
    parse_context,
    parse_judgement,
    parse_substitution,
    parse_system,
    parse_term,
)
from .rewriting import (
    CoherenceVerdict,
    NOT_WITNESSED,
    REJECTED,
    RewriteRule,
    RewriteStep,
    RewriteSystem,
    StepLimitExceeded,
    WITNESSED,
    alpha_variants,
    c_class_enumerate,
    canonical_alpha,
    coherence_check,
    commutative_variants,
    normal_form_equal_check,
    normalize,
    one_step_rewrites,
    primary_rewrite_steps,
    r_over_e_one_step,
    rename_rule,
    verify_rewrite_step,
)
from .terms import (
    Abstraction,
    App,
    Atom,
    HOLE,
    IDENTITY,
    IDENTITY_SUBST,
    Permutation,
    Position,
    Signature,
    Substitution,
    Suspension,
    Term,
    Var,
    apply_subst,
    difference_set,
    fresh_atom,
    fresh_variable,
    free_atoms,
    is_ground,
    permute_atom,
    permute_term,
    position_at_path,
    subterms_with_positions,
    term_atoms,
    term_vars,
)
from .unify import (
    CSolution,
    FAIL,
    STUCK,
    SearchSpaceExceeded,
    UNKNOWN,
    UnificationState,
    check_solution,
    enumerate_fixpoint_solutions,
    instance_of,
    match,
    simplify_step,
    solve,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
