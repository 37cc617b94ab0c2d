"""Narrowing modulo commutativity and the lifting correspondence.

Narrowing replaces matching by full unification: a step may instantiate the
subject term's own variables. Unification solutions carrying residual
fixed-point equations are expanded through the bounded fixed-point
enumerator, so the (potentially infinitely branching) tree is explored up to
three caller-set bounds: tree depth, unifiers per node, and enumeration
depth. Every truncation is recorded in the result.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .alpha import (
    EqualityGoal,
    FreshnessContext,
    INCONSISTENT,
    derive_alpha,
    derive_alpha_c,
    derive_freshness,
    freshness_context_nf,
    satisfies_with,
)
from .rewriting import (
    RewriteRule,
    RewriteStep,
    RewriteSystem,
    clash_permutation,
    heads_compatible,
    permute_rule,
    primary_rewrite_steps,
    rename_rule,
    rename_rule_with_map,
    verify_rewrite_step,
)
from .terms import (
    IDENTITY_SUBST,
    Position,
    Signature,
    Substitution,
    Suspension,
    Term,
    Var,
    apply_subst,
    position_at_path,
    subterms_with_positions,
    term_atoms,
    term_vars,
)
from .unify import (
    DEFAULT_MAX_STATES,
    CSolution,
    UnificationState,
    check_solution,
    enumerate_fixpoint_solutions,
    solve,
)


@dataclass(frozen=True, eq=False)
class NarrowingNode:
    """A term in context reached by narrowing, with the accumulated
    substitution from the root."""

    context: FreshnessContext
    term: Term
    accumulated: Substitution
    depth: int

    def __str__(self) -> str:
        ctx = ", ".join(sorted(str(c) for c in self.context)) or "{}"
        return f"{ctx} |- {self.term}"


@dataclass(frozen=True, eq=False)
class NarrowingStep:
    """One narrowing edge; `used_fixpoint_enumeration` marks children built
    by expanding a residual fixed-point equation."""

    rule: str
    position: Position
    step_subst: Substitution
    used_fixpoint_enumeration: bool
    child: NarrowingNode
    parent: NarrowingNode
    rule_instance: RewriteRule

    def __str__(self) -> str:
        return f"{self.rule} @ {self.position} with {self.step_subst} ~> {self.child}"


@dataclass(frozen=True)
class TruncationRecord:
    """The bounds a tree was built under, plus how often they actually bit."""

    depth: int
    max_unifiers: int
    fixpoint_depth: int
    nodes_truncated: int = 0


@dataclass(frozen=True)
class NarrowingTree:
    root: NarrowingNode
    edges: tuple[NarrowingStep, ...]
    truncation: TruncationRecord

    def nodes(self) -> tuple[NarrowingNode, ...]:
        return (self.root,) + tuple(e.child for e in self.edges)

    def children(self, node: NarrowingNode) -> tuple[NarrowingStep, ...]:
        return tuple(e for e in self.edges if e.parent is node)


def _gather_vars(node: NarrowingNode) -> frozenset[Var]:
    out = term_vars(node.term) | frozenset(c.var for c in node.context)
    out |= node.accumulated.domain
    for _, image in node.accumulated.items():
        out |= term_vars(image)
    return out


def _expanded_solutions(
    sol: CSolution,
    sig: Signature,
    fixpoint_depth: int,
) -> list[tuple[FreshnessContext, Substitution, bool]]:
    """Close a solver answer into usable (context, substitution) pairs.

    Residual fixed-point equations are expanded through the bounded
    enumerator; answers without residuals pass through unchanged.
    """
    if not sol.residual_fixpoints:
        return [(sol.context, sol.subst, sol.protected_fixpoint_discharged)]
    option_lists = [
        enumerate_fixpoint_solutions(perm, var, sig, fixpoint_depth)
        for perm, var in sol.residual_fixpoints
    ]
    out: list[tuple[FreshnessContext, Substitution, bool]] = []
    for combo in itertools.product(*option_lists):
        context = sol.context
        theta = sol.subst
        consistent = True
        for extra_ctx, rho in combo:
            reduced = freshness_context_nf(context, rho)
            if reduced is INCONSISTENT:
                consistent = False
                break
            context = reduced | extra_ctx
            theta = theta.compose(rho)
        if consistent:
            out.append((context, theta, True))
    return out


def _expand_node(
    node: NarrowingNode,
    system: RewriteSystem,
    fixpoint_depth: int,
    max_unifiers: int,
    avoid: frozenset[Var],
    max_states: int,
) -> tuple[list[NarrowingStep], bool, frozenset[Var]]:
    sig = system.signature
    steps: list[NarrowingStep] = []
    truncated = False
    avoid = avoid | _gather_vars(node)
    ambient_atoms = term_atoms(node.term) | frozenset(c.atom for c in node.context)
    for pos, sub in subterms_with_positions(node.term):
        if isinstance(sub, Suspension):
            continue  # narrowing acts at non-variable positions only
        for rule in system.rules:
            if not heads_compatible(rule.lhs, sub):
                continue
            renamed = rename_rule(rule, avoid)
            avoid = avoid | renamed.variables()
            solutions = solve(
                node.context,
                sub,
                renamed.context,
                renamed.lhs,
                sig=sig,
                max_states=max_states,
            )
            if not solutions:
                shift = clash_permutation(renamed, term_atoms(sub), ambient_atoms)
                if shift is not None:
                    shifted = permute_rule(renamed, shift)
                    solutions = solve(
                        node.context,
                        sub,
                        shifted.context,
                        shifted.lhs,
                        sig=sig,
                        max_states=max_states,
                    )
                    if solutions:
                        renamed = shifted
            problem = UnificationState(
                node.context | renamed.context,
                IDENTITY_SUBST,
                (EqualityGoal(renamed.lhs, sub),),
            )
            for sol in solutions:
                for context, theta, flagged in _expanded_solutions(sol, sig, fixpoint_depth):
                    if not check_solution((context, theta), problem, sig):
                        continue
                    child_term = apply_subst(theta, pos.plug(renamed.rhs))
                    child = NarrowingNode(
                        context,
                        child_term,
                        node.accumulated.compose(theta),
                        node.depth + 1,
                    )
                    if len(steps) >= max_unifiers:
                        truncated = True
                        break
                    steps.append(
                        NarrowingStep(rule.name, pos, theta, flagged, child, node, renamed)
                    )
                    avoid = avoid | _gather_vars(child)
                if truncated:
                    break
            if truncated:
                break
        if truncated:
            break
    return steps, truncated, avoid


def one_step_narrowings(
    node: NarrowingNode,
    system: RewriteSystem,
    fixpoint_depth: int,
    max_unifiers: int,
    *,
    avoid: frozenset[Var] = frozenset(),
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[NarrowingStep, ...]:
    """All narrowing steps from a node, capped at max_unifiers children."""
    steps, _, _ = _expand_node(node, system, fixpoint_depth, max_unifiers, avoid, max_states)
    return tuple(steps)


def narrow_search(
    delta: FreshnessContext,
    term: Term,
    system: RewriteSystem,
    depth: int,
    fixpoint_depth: int,
    max_unifiers: int,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> NarrowingTree:
    """Breadth-first narrowing tree up to the given depth.

    The tree is an announced finite prefix of the full (possibly infinite)
    tree: every bound that actually cut something off is counted in the
    truncation record.
    """
    root = NarrowingNode(delta, term, IDENTITY_SUBST, 0)
    edges: list[NarrowingStep] = []
    frontier = [root]
    avoid = _gather_vars(root)
    nodes_truncated = 0
    for _ in range(depth):
        next_frontier: list[NarrowingNode] = []
        for node in frontier:
            steps, truncated, avoid = _expand_node(
                node, system, fixpoint_depth, max_unifiers, avoid, max_states
            )
            if truncated:
                nodes_truncated += 1
            edges.extend(steps)
            next_frontier.extend(s.child for s in steps)
        frontier = next_frontier
        if not frontier:
            break
    record = TruncationRecord(depth, max_unifiers, fixpoint_depth, nodes_truncated)
    return NarrowingTree(root, tuple(edges), record)


def narrowing_to_rewriting(step: NarrowingStep, parent: NarrowingNode, *, sig: Signature) -> bool:
    """Soundness oracle: instantiating the parent by the step substitution
    must rewrite, with the same rule at the same position, to the child."""
    theta = step.step_subst
    try:
        pos, sub = position_at_path(parent.term, step.position.path())
    except ValueError:
        return False
    context = step.child.context
    inst_pos = Position(apply_subst(theta, pos.context))
    inst_sub = apply_subst(theta, sub)
    if inst_pos.plug(inst_sub) != apply_subst(theta, parent.term):
        return False
    renamed = step.rule_instance
    if not all(derive_freshness(context, c.atom, theta.get(c.var)) for c in renamed.context):
        return False
    if not derive_alpha_c(context, inst_sub, apply_subst(theta, renamed.lhs), sig):
        return False
    rewritten = inst_pos.plug(apply_subst(theta, renamed.rhs))
    return derive_alpha(context, rewritten, step.child.term)


class _PreconditionFail:
    def __repr__(self) -> str:
        return "PRECONDITION_FAIL"

    def __bool__(self) -> bool:
        return False


PRECONDITION_FAIL = _PreconditionFail()


def _chain_or_raise(derivation: tuple[NarrowingStep, ...] | list[NarrowingStep]) -> None:
    for earlier, later in zip(derivation, derivation[1:]):
        if later.parent is not earlier.child:
            raise ValueError("narrowing steps do not form a chain")


def lifting_forward_check(
    derivation: tuple[NarrowingStep, ...] | list[NarrowingStep],
    rho: Substitution,
    delta: FreshnessContext,
    sig: Signature,
) -> bool | _PreconditionFail:
    """Verify that instantiating a narrowing derivation by rho yields a
    rewriting derivation under delta.

    rho must satisfy the final node's context with delta; otherwise the
    check reports PRECONDITION_FAIL. A False answer on a derivation the
    engine produced indicates an engine bug.
    """
    derivation = tuple(derivation)
    if not derivation:
        return True
    _chain_or_raise(derivation)
    final_ctx = derivation[-1].child.context
    if not satisfies_with(final_ctx, rho, delta):
        return PRECONDITION_FAIL
    # rho_i = theta_i ... theta_{n-1} rho, built right to left.
    rhos: list[Substitution] = [rho]
    for step in reversed(derivation):
        rhos.insert(0, step.step_subst.compose(rhos[0]))
    for i, step in enumerate(derivation):
        rho_i, rho_next = rhos[i], rhos[i + 1]
        parent, child = step.parent, step.child
        if not satisfies_with(parent.context, rho_i, delta):
            return False
        try:
            pos, sub = position_at_path(parent.term, step.position.path())
        except ValueError:
            return False
        renamed = step.rule_instance
        if not all(derive_freshness(delta, c.atom, rho_i.get(c.var)) for c in renamed.context):
            return False
        if not derive_alpha_c(
            delta, apply_subst(rho_i, sub), apply_subst(rho_i, renamed.lhs), sig
        ):
            return False
        rewritten = Position(apply_subst(rho_i, pos.context)).plug(
            apply_subst(rho_i, renamed.rhs)
        )
        if not derive_alpha(delta, rewritten, apply_subst(rho_next, child.term)):
            return False
    return True


@dataclass(frozen=True)
class NotFound:
    """Backward lifting failed to rebuild a narrowing step within bounds."""

    step_index: int

    def __bool__(self) -> bool:
        return False


def lifting_backward_construct(
    delta0: FreshnessContext,
    s0: Term,
    rho0: Substitution,
    delta: FreshnessContext,
    trace: tuple[RewriteStep, ...] | list[RewriteStep],
    fixpoint_depth: int,
    system: RewriteSystem,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> tuple[tuple[NarrowingStep, ...], Substitution] | NotFound:
    """Rebuild a narrowing derivation above a recorded rewriting trace.

    rho0 must be normalised under delta and satisfy delta0 with delta, and
    the trace must start at s0 rho0. Each trace step is lifted at its
    recorded position, preferring the direct construction (narrowing unifier
    = instantiation composed with the recorded matcher, residual identity);
    when that fails, unifier candidates at the position are searched with
    fixed-point expansion up to fixpoint_depth.
    """
    sig = system.signature
    trace = tuple(trace)
    for var in sorted(rho0.domain, key=lambda v: v.name):
        if primary_rewrite_steps(delta, rho0.get(var), system, max_states=max_states):
            raise ValueError(f"rho0 is not normalised: {var} maps to a reducible term")
    if not satisfies_with(delta0, rho0, delta):
        raise ValueError("rho0 does not satisfy the root context under delta")
    source = apply_subst(rho0, s0)
    for recorded in trace:
        if not verify_rewrite_step(delta, source, recorded, sig):
            raise ValueError("trace does not replay from s0 rho0 under delta")
        source = recorded.result
    if not trace:
        return (), rho0
    node = NarrowingNode(delta0, s0, IDENTITY_SUBST, 0)
    rho_cur = rho0
    steps: list[NarrowingStep] = []
    avoid = term_vars(s0) | {c.var for c in delta0} | {c.var for c in delta}
    avoid |= rho0.domain
    for _, image in rho0.items():
        avoid |= term_vars(image)
    for index, recorded in enumerate(trace):
        built = _lift_one(
            node, rho_cur, recorded, delta, system, fixpoint_depth, avoid, max_states
        )
        if built is None:
            return NotFound(index)
        step, rho_cur = built
        steps.append(step)
        node = step.child
        avoid = avoid | _gather_vars(node) | step.rule_instance.variables()
    return tuple(steps), rho_cur


def _lift_one(
    node: NarrowingNode,
    rho_cur: Substitution,
    recorded: RewriteStep,
    delta: FreshnessContext,
    system: RewriteSystem,
    fixpoint_depth: int,
    avoid: frozenset[Var],
    max_states: int,
) -> tuple[NarrowingStep, Substitution] | None:
    sig = system.signature
    path = recorded.position.path()
    try:
        pos, sub = position_at_path(node.term, path)
    except ValueError:
        return None
    if isinstance(sub, Suspension):
        return None
    recorded_rule = permute_rule(recorded.rule_instance, recorded.perm)
    renamed, var_map = rename_rule_with_map(recorded_rule, avoid)
    sigma = Substitution(
        {var_map[v]: image for v, image in recorded.subst.items() if v in var_map}
    )
    problem = UnificationState(
        node.context | renamed.context,
        IDENTITY_SUBST,
        (EqualityGoal(renamed.lhs, sub),),
    )
    # Direct construction: the narrowing unifier is the current instantiation
    # composed with the recorded matcher, leaving an identity residue.
    theta = rho_cur.compose(sigma)
    if check_solution((delta, theta), problem, sig):
        child_term = apply_subst(theta, pos.plug(renamed.rhs))
        if derive_alpha_c(delta, child_term, recorded.result, sig):
            variables = term_vars(node.term) | {c.var for c in node.context}
            if all(
                derive_alpha_c(delta, rho_cur.get(v), theta.get(v), sig) for v in variables
            ):
                child = NarrowingNode(delta, child_term, node.accumulated.compose(theta), node.depth + 1)
                step = NarrowingStep(recorded.rule, pos, theta, False, child, node, renamed)
                return step, IDENTITY_SUBST
    # Fallback: search solver answers at the recorded position.
    solutions = solve(
        node.context, sub, renamed.context, renamed.lhs, sig=sig, max_states=max_states
    )
    for sol in solutions:
        for context, theta_c, flagged in _expanded_solutions(sol, sig, fixpoint_depth):
            if not check_solution((context, theta_c), problem, sig):
                continue
            child_term = apply_subst(theta_c, pos.plug(renamed.rhs))
            variables = term_vars(node.term) | {c.var for c in node.context}
            for residue in (IDENTITY_SUBST, rho_cur):
                if not satisfies_with(context, residue, delta):
                    continue
                if not derive_alpha_c(
                    delta, apply_subst(residue, child_term), recorded.result, sig
                ):
                    continue
                if not all(
                    derive_alpha_c(
                        delta,
                        rho_cur.get(v),
                        apply_subst(residue, theta_c.get(v)),
                        sig,
                    )
                    for v in variables
                ):
                    continue
                child = NarrowingNode(
                    context, child_term, node.accumulated.compose(theta_c), node.depth + 1
                )
                step = NarrowingStep(
                    recorded.rule, pos, theta_c, flagged, child, node, renamed
                )
                return step, residue
    return None
