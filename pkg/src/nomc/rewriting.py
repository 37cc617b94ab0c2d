"""Rewriting modulo commutativity: matching-based steps, normalisation,
a ground brute-force oracle over equivalence classes, and coherence probes.

A step rewrites a subterm that C-matches a rule's left-hand side, provided
the rule's freshness conditions hold under the ambient context. The public
one-step enumeration also lists the commutative rearrangements of each
result, so the step set shows every C-distinct outcome; the normalisation
strategy only ever follows the first (plain) result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .alpha import (
    EMPTY_CONTEXT,
    FreshnessConstraint,
    FreshnessContext,
    derive_alpha,
    derive_alpha_c,
    derive_freshness,
)
from .terms import (
    Abstraction,
    App,
    Atom,
    IDENTITY,
    Permutation,
    Position,
    Signature,
    Substitution,
    Suspension,
    Term,
    Var,
    apply_subst,
    fresh_atom,
    fresh_variables,
    free_atoms,
    is_ground,
    permute_term,
    position_at_path,
    subterms_with_positions,
    term_atoms,
    term_vars,
)
from .unify import DEFAULT_MAX_STATES, match


@dataclass(frozen=True)
class RewriteRule:
    """A rule `context |- lhs -> rhs` over the ambient signature."""

    name: str
    context: FreshnessContext
    lhs: Term
    rhs: Term

    def __post_init__(self) -> None:
        if isinstance(self.lhs, Suspension):
            raise ValueError(f"rule {self.name}: left-hand side is a bare variable")
        lhs_vars = term_vars(self.lhs)
        loose = (term_vars(self.rhs) | {c.var for c in self.context}) - lhs_vars
        if loose:
            names = ", ".join(sorted(v.name for v in loose))
            raise ValueError(f"rule {self.name}: variables not bound by the left-hand side: {names}")

    def variables(self) -> frozenset[Var]:
        return term_vars(self.lhs) | term_vars(self.rhs) | frozenset(c.var for c in self.context)

    def atoms(self) -> frozenset[Atom]:
        out = term_atoms(self.lhs) | term_atoms(self.rhs)
        return out | frozenset(c.atom for c in self.context)

    def __str__(self) -> str:
        ctx = ", ".join(sorted(str(c) for c in self.context))
        prefix = f"{ctx} |- " if ctx else "|- "
        return f"{prefix}{self.lhs} -> {self.rhs}"


class RewriteSystem:
    """A sequence of rules plus the signature declaring commutative symbols."""

    def __init__(self, rules: tuple[RewriteRule, ...] | list[RewriteRule], signature: Signature):
        self.rules = tuple(rules)
        self.signature = signature
        seen: set[str] = set()
        for rule in self.rules:
            if rule.name in seen:
                raise ValueError(f"duplicate rule name {rule.name}")
            seen.add(rule.name)

    def atoms(self) -> frozenset[Atom]:
        out: frozenset[Atom] = frozenset()
        for rule in self.rules:
            out |= rule.atoms()
        return out

    def without_commutativity(self) -> "RewriteSystem":
        return RewriteSystem(self.rules, self.signature.without_commutativity())

    def __repr__(self) -> str:
        return f"RewriteSystem({len(self.rules)} rules, sig={self.signature!r})"


@dataclass(frozen=True)
class RewriteStep:
    """One rewrite: rule applied at a position with a matching substitution.

    `rule_instance` is the renamed copy of the rule the matcher actually
    used; replaying the step re-derives the premises from it.
    """

    rule: str
    position: Position
    perm: Permutation
    subst: Substitution
    result: Term
    rule_instance: RewriteRule

    def __str__(self) -> str:
        return f"{self.rule} @ {self.position}: {self.result}"


class StepLimitExceeded(Exception):
    """Normalisation ran past its step bound (possible non-termination)."""

    def __init__(self, term: Term, trace: tuple[RewriteStep, ...]):
        super().__init__(f"step limit exceeded at {term}")
        self.term = term
        self.trace = trace


def rename_rule_with_map(
    rule: RewriteRule, avoid: frozenset[Var] | set[Var]
) -> tuple[RewriteRule, dict[Var, Var]]:
    """Copy of the rule with variables renamed apart from `avoid`, plus the
    renaming that was applied."""
    ordered: list[Var] = []
    for term in (rule.lhs, rule.rhs):
        for var in sorted(term_vars(term), key=lambda v: v.name):
            if var not in ordered:
                ordered.append(var)
    for constraint in sorted(rule.context, key=lambda c: (c.atom.name, c.var.name)):
        if constraint.var not in ordered:
            ordered.append(constraint.var)
    renaming = fresh_variables(avoid, ordered)
    subst = Substitution({v: Suspension(IDENTITY, w) for v, w in renaming.items()})
    context = frozenset(FreshnessConstraint(c.atom, renaming[c.var]) for c in rule.context)
    renamed = RewriteRule(
        rule.name,
        context,
        apply_subst(subst, rule.lhs),
        apply_subst(subst, rule.rhs),
    )
    return renamed, renaming


def rename_rule(rule: RewriteRule, avoid: frozenset[Var] | set[Var]) -> RewriteRule:
    """Copy of the rule with variables renamed apart from `avoid`."""
    return rename_rule_with_map(rule, avoid)[0]


def rename_atoms(term: Term, perm: Permutation) -> Term:
    """Rename atom occurrences throughout a term schema.

    Unlike the permutation action, variables stay bare: the permutation is
    applied inside suspension prefixes but never composed onto them. This is
    the right notion for renaming a rule's atoms.
    """
    if isinstance(term, Atom):
        return perm.act(term)
    if isinstance(term, Suspension):
        renamed = Permutation(tuple((perm.act(l), perm.act(r)) for l, r in term.perm.swappings))
        return Suspension(renamed, term.var)
    if isinstance(term, Abstraction):
        return Abstraction(perm.act(term.atom), rename_atoms(term.body, perm))
    return App(term.sym, tuple(rename_atoms(a, perm) for a in term.args))


def permute_rule(rule: RewriteRule, perm: Permutation) -> RewriteRule:
    """Rename a rule's atoms; its schematic variables are untouched."""
    context = frozenset(FreshnessConstraint(perm.act(c.atom), c.var) for c in rule.context)
    return RewriteRule(rule.name, context, rename_atoms(rule.lhs, perm), rename_atoms(rule.rhs, perm))


def clash_permutation(rule: RewriteRule, subject_atoms: frozenset[Atom], avoid: frozenset[Atom]) -> Permutation | None:
    """Permutation moving the rule's atoms off the subject's, or None if the
    atom sets are already disjoint.

    Identity-permutation matching can miss steps when a rule binder atom
    occurs free in the subject; retrying with the clashing atoms swapped to
    fresh ones recovers those steps.
    """
    clash = sorted(rule.atoms() & subject_atoms, key=lambda a: a.name)
    if not clash:
        return None
    taken = set(avoid) | set(subject_atoms) | set(rule.atoms())
    swappings = []
    for atom in clash:
        replacement = fresh_atom(taken)
        taken.add(replacement)
        swappings.append((atom, replacement))
    return Permutation(tuple(swappings))


def commutative_variants(term: Term, sig: Signature) -> tuple[Term, ...]:
    """All rearrangements of the term's commutative applications, term first."""
    if isinstance(term, (Atom, Suspension)):
        return (term,)
    if isinstance(term, Abstraction):
        return tuple(Abstraction(term.atom, b) for b in commutative_variants(term.body, sig))
    arg_variants = [commutative_variants(a, sig) for a in term.args]
    out: list[Term] = []
    for combo in itertools.product(*arg_variants):
        candidate = App(term.sym, combo)
        if candidate not in out:
            out.append(candidate)
        if sig.is_commutative(term.sym):
            swapped = App(term.sym, (combo[1], combo[0]))
            if swapped not in out:
                out.append(swapped)
    return tuple(out)


def c_class_enumerate(term: Term, sig: Signature) -> tuple[Term, ...]:
    """The commutative closure of a ground term (up to 2^n members for n
    commutative nodes; symmetric subterms collapse)."""
    if not is_ground(term):
        raise ValueError("class enumeration is only defined on ground terms")
    return commutative_variants(term, sig)


def canonical_alpha(term: Term, depth: int = 0) -> Term:
    """Canonical representative of a ground term's alpha-class.

    Binders are renamed to a reserved sequence indexed by nesting depth, so
    two ground terms are alpha-equivalent iff their canonical forms are equal.
    """
    if isinstance(term, Atom):
        return term
    if isinstance(term, Suspension):
        raise ValueError("canonical form is only defined on ground terms")
    if isinstance(term, Abstraction):
        marker = Atom(f"~{depth}")
        renamed = permute_term(Permutation(((term.atom, marker),)), term.body)
        return Abstraction(marker, canonical_alpha(renamed, depth + 1))
    return App(term.sym, tuple(canonical_alpha(a, depth) for a in term.args))


def alpha_variants(term: Term, pool: frozenset[Atom] | set[Atom]) -> tuple[Term, ...]:
    """All alpha-renamings of a ground term with binders drawn from `pool`."""
    if isinstance(term, Atom):
        return (term,)
    if isinstance(term, Suspension):
        raise ValueError("alpha variants are only defined on ground terms")
    if isinstance(term, Abstraction):
        out: list[Term] = []
        for body in alpha_variants(term.body, pool):
            out.append(Abstraction(term.atom, body))
            for atom in sorted(pool, key=lambda a: a.name):
                if atom != term.atom and atom not in free_atoms(body):
                    swapped = permute_term(Permutation(((term.atom, atom),)), body)
                    candidate = Abstraction(atom, swapped)
                    if candidate not in out:
                        out.append(candidate)
        return tuple(out)
    arg_variants = [alpha_variants(a, pool) for a in term.args]
    seen: list[Term] = []
    for combo in itertools.product(*arg_variants):
        candidate = App(term.sym, combo)
        if candidate not in seen:
            seen.append(candidate)
    return tuple(seen)


def heads_compatible(lhs: Term, sub: Term) -> bool:
    """Cheap pre-filter: can the pattern's outer constructor possibly match?"""
    if isinstance(lhs, Suspension):
        return True
    if isinstance(lhs, App):
        return isinstance(sub, App) and sub.sym == lhs.sym and len(sub.args) == len(lhs.args)
    if isinstance(lhs, Abstraction):
        return isinstance(sub, Abstraction)
    return lhs == sub


def _verified_matchers(
    delta: FreshnessContext,
    sub: Term,
    rule: RewriteRule,
    sig: Signature,
    max_states: int,
) -> list[Substitution]:
    """Match substitutions whose instantiated premises hold under delta."""
    out: list[Substitution] = []
    for sol in match(rule.context, rule.lhs, delta, sub, sig=sig, max_states=max_states):
        theta = sol.subst
        if not all(derive_freshness(delta, c.atom, theta.get(c.var)) for c in rule.context):
            continue
        if not derive_alpha_c(delta, sub, apply_subst(theta, rule.lhs), sig):
            continue
        out.append(theta)
    return out


def _candidate_steps(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    max_states: int,
) -> list[RewriteStep]:
    """Matching steps at every non-variable position, premises verified.

    When identity-permutation matching fails and the rule's atoms clash with
    the subterm's, the match is retried once with the clashing atoms moved to
    fresh ones; the permutation is recorded on the step.
    """
    sig = system.signature
    avoid = term_vars(term) | {c.var for c in delta}
    ambient_atoms = term_atoms(term) | frozenset(c.atom for c in delta)
    renamed_rules = [rename_rule(rule, avoid) for rule in system.rules]
    steps: list[RewriteStep] = []
    for pos, sub in subterms_with_positions(term):
        if isinstance(sub, Suspension):
            continue
        for rule, renamed in zip(system.rules, renamed_rules):
            if not heads_compatible(renamed.lhs, sub):
                continue
            perm = IDENTITY
            used = renamed
            thetas = _verified_matchers(delta, sub, renamed, sig, max_states)
            if not thetas:
                shift = clash_permutation(renamed, term_atoms(sub), ambient_atoms)
                if shift is not None:
                    shifted = permute_rule(renamed, shift)
                    thetas = _verified_matchers(delta, sub, shifted, sig, max_states)
                    if thetas:
                        perm, used = shift, shifted
            for theta in thetas:
                result = pos.plug(apply_subst(theta, used.rhs))
                steps.append(RewriteStep(rule.name, pos, perm, theta, result, renamed))
    return steps


def _dedup_steps(delta: FreshnessContext, steps: list[RewriteStep]) -> tuple[RewriteStep, ...]:
    kept: list[RewriteStep] = []
    for step in steps:
        if not any(derive_alpha(delta, step.result, k.result) for k in kept):
            kept.append(step)
    return tuple(kept)


def primary_rewrite_steps(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[RewriteStep, ...]:
    """One-step rewrites without commutative rearrangement of the results.

    This is the enumeration the normalisation strategy follows; results are
    deduplicated up to plain alpha-equivalence.
    """
    return _dedup_steps(delta, _candidate_steps(delta, term, system, max_states))


def one_step_rewrites(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[RewriteStep, ...]:
    """All one-step rewrites of the term under the context.

    Each match contributes its plain result followed by the commutative
    rearrangements of that result, so C-distinct outcomes are all visible.
    An empty answer means the term is in normal form under the context.
    """
    sig = system.signature
    expanded: list[RewriteStep] = []
    for step in _candidate_steps(delta, term, system, max_states):
        for variant in commutative_variants(step.result, sig):
            expanded.append(
                RewriteStep(step.rule, step.position, step.perm, step.subst, variant, step.rule_instance)
            )
    return _dedup_steps(delta, expanded)


def verify_rewrite_step(
    delta: FreshnessContext,
    source: Term,
    step: RewriteStep,
    sig: Signature,
) -> bool:
    """Re-derive the premises of a recorded step against its source term.

    The step's permutation (externally supplied or the engine's clash shift)
    is applied to the rule instance before the checks.
    """
    try:
        pos, sub = position_at_path(source, step.position.path())
    except ValueError:
        return False
    theta = step.subst
    used = permute_rule(step.rule_instance, step.perm)
    if not all(derive_freshness(delta, c.atom, theta.get(c.var)) for c in used.context):
        return False
    if not derive_alpha_c(delta, sub, apply_subst(theta, used.lhs), sig):
        return False
    return derive_alpha_c(delta, pos.plug(apply_subst(theta, used.rhs)), step.result, sig)


def normalize(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    max_steps: int,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[Term, tuple[RewriteStep, ...]]:
    """Repeatedly apply the first available step until none applies.

    Deterministic strategy: leftmost-outermost position, rule declaration
    order, first matching solution. Raises StepLimitExceeded past the bound.
    """
    if max_steps <= 0:
        raise ValueError("max_steps must be positive")
    current = term
    trace: list[RewriteStep] = []
    while True:
        steps = primary_rewrite_steps(delta, current, system, max_states=max_states)
        if not steps:
            return current, tuple(trace)
        if len(trace) >= max_steps:
            raise StepLimitExceeded(current, tuple(trace))
        chosen = steps[0]
        trace.append(chosen)
        current = chosen.result


def _ground_oracle_sources(term: Term, system: RewriteSystem) -> list[Term]:
    pool = term_atoms(term) | system.atoms()
    pool = pool | {fresh_atom(pool)}
    sources: list[Term] = []
    for member in c_class_enumerate(term, system.signature):
        for variant in alpha_variants(member, pool):
            if variant not in sources:
                sources.append(variant)
    return sources


def r_over_e_one_step(
    term: Term,
    system: RewriteSystem,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[Term, ...]:
    """Ground brute-force oracle: plain rewrites anywhere in the term's
    commutative-and-alpha class, deduplicated modulo =ac."""
    if not is_ground(term):
        raise ValueError("the class-rewriting oracle is only defined on ground terms")
    plain = system.without_commutativity()
    sig = system.signature
    results: list[Term] = []
    for source in _ground_oracle_sources(term, system):
        for step in primary_rewrite_steps(EMPTY_CONTEXT, source, plain, max_states=max_states):
            if not any(derive_alpha_c(EMPTY_CONTEXT, step.result, r, sig) for r in results):
                results.append(step.result)
    return tuple(results)


def _r_over_e_first(term: Term, system: RewriteSystem, max_states: int) -> Term | None:
    plain = system.without_commutativity()
    for source in _ground_oracle_sources(term, system):
        steps = primary_rewrite_steps(EMPTY_CONTEXT, source, plain, max_states=max_states)
        if steps:
            return steps[0].result
    return None


def normal_form_equal_check(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    max_steps: int,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> bool:
    """Compare the matching-based normal form with a class-rewriting normal
    form of a ground term; they agree modulo =ac exactly on coherent systems."""
    if not is_ground(term):
        raise ValueError("normal form comparison is only defined on ground terms")
    nf_matching, _ = normalize(delta, term, system, max_steps, max_states=max_states)
    current = term
    for _ in range(max_steps + 1):
        nxt = _r_over_e_first(current, system, max_states)
        if nxt is None:
            return derive_alpha_c(delta, nf_matching, current, system.signature)
        current = nxt
    raise StepLimitExceeded(current, ())


WITNESSED = "WITNESSED"
NOT_WITNESSED = "NOT-WITNESSED-WITHIN-BOUND"
REJECTED = "REJECTED"


@dataclass(frozen=True)
class CoherenceVerdict:
    index: int
    status: str
    detail: str = ""


def _reachable(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    max_steps: int,
    max_states: int,
) -> list[Term]:
    """Every term reachable in at most max_steps rewrite steps (term included)."""
    seen: list[Term] = [term]
    frontier = [term]
    for _ in range(max_steps):
        nxt: list[Term] = []
        for t in frontier:
            for step in primary_rewrite_steps(delta, t, system, max_states=max_states):
                if step.result not in seen:
                    seen.append(step.result)
                    nxt.append(step.result)
        if not nxt:
            break
        frontier = nxt
    return seen


def coherence_check(
    system: RewriteSystem,
    samples: list[tuple[FreshnessContext, Term, Term]],
    max_steps: int,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[CoherenceVerdict, ...]:
    """Probe the coherence diagram on =ac-related sample pairs.

    For every one-step reduct of the first term, search within the bound for
    reducts closing the diagram with the second term. NOT-WITNESSED is
    evidence of trouble, not a proof of incoherence.
    """
    sig = system.signature
    verdicts: list[CoherenceVerdict] = []
    for index, (delta, t1, t2) in enumerate(samples):
        if not derive_alpha_c(delta, t1, t2, sig):
            verdicts.append(CoherenceVerdict(index, REJECTED, "sample terms are not =ac-related"))
            continue
        t1_steps = primary_rewrite_steps(delta, t1, system, max_states=max_states)
        status = WITNESSED
        detail = ""
        t2_steps = None
        for step in t1_steps:
            reach_left = _reachable(delta, step.result, system, max_steps, max_states)
            if t2_steps is None:
                t2_steps = primary_rewrite_steps(delta, t2, system, max_states=max_states)
            witnessed = False
            for right in t2_steps:
                reach_right = _reachable(delta, right.result, system, max_steps, max_states)
                if any(
                    derive_alpha_c(delta, u, v, sig)
                    for u in reach_left
                    for v in reach_right
                ):
                    witnessed = True
                    break
            if not witnessed:
                status = NOT_WITNESSED
                detail = f"no closing reduct for {step.result}"
                break
        verdicts.append(CoherenceVerdict(index, status, detail))
    return tuple(verdicts)
