"""Freshness and alpha-equivalence judgements, modulo commutative symbols.

Both judgements are decided by a single syntax-directed pass. Equality of
commutative applications tries the aligned and the crossed argument pairing
and succeeds if either closes. Contexts are finite sets of primitive
constraints a#X used as hypotheses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .terms import (
    Abstraction,
    App,
    Atom,
    Permutation,
    Signature,
    Substitution,
    Suspension,
    Term,
    Var,
    difference_set,
    permute_term,
)


@dataclass(frozen=True)
class FreshnessConstraint:
    """Primitive constraint a#X: atom a cannot occur free in instances of X."""

    atom: Atom
    var: Var

    def __str__(self) -> str:
        return f"{self.atom}#{self.var}"


FreshnessContext = frozenset[FreshnessConstraint]

EMPTY_CONTEXT: FreshnessContext = frozenset()


def context_of(*pairs: tuple[Atom, Var]) -> FreshnessContext:
    return frozenset(FreshnessConstraint(a, v) for a, v in pairs)


def format_context(ctx: FreshnessContext) -> str:
    if not ctx:
        return "{}"
    return ", ".join(str(c) for c in sorted(ctx, key=lambda c: (c.atom.name, c.var.name)))


@dataclass(frozen=True)
class FreshnessGoal:
    """Goal a#t for an arbitrary term t."""

    atom: Atom
    term: Term

    def __str__(self) -> str:
        return f"{self.atom}#{self.term}"


@dataclass(frozen=True)
class EqualityGoal:
    """Goal s =ac t."""

    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} =ac {self.rhs}"


Goal = Union[FreshnessGoal, EqualityGoal]
ConstraintProblem = tuple[Goal, ...]


class _Inconsistent:
    """Result of normalising a freshness context that demands a#a."""

    def __repr__(self) -> str:
        return "INCONSISTENT"

    def __bool__(self) -> bool:
        return False


INCONSISTENT = _Inconsistent()


def derive_freshness(ctx: FreshnessContext, atom: Atom, term: Term) -> bool:
    """Decide ctx |- atom # term."""
    if isinstance(term, Atom):
        return atom != term
    if isinstance(term, Suspension):
        wanted = term.perm.inverse().act(atom)
        return FreshnessConstraint(wanted, term.var) in ctx
    if isinstance(term, Abstraction):
        if term.atom == atom:
            return True
        return derive_freshness(ctx, atom, term.body)
    return all(derive_freshness(ctx, atom, arg) for arg in term.args)


def derive_alpha_c(ctx: FreshnessContext, s: Term, t: Term, sig: Signature) -> bool:
    """Decide ctx |- s =ac t over the given signature.

    Suspensions of the same variable compare via the difference set of their
    permutations; abstractions with distinct binders compare after swapping,
    under a freshness side condition on the right body.
    """
    if isinstance(s, Atom) and isinstance(t, Atom):
        return s == t
    if isinstance(s, Suspension) and isinstance(t, Suspension):
        if s.var != t.var:
            return False
        needed = difference_set(s.perm, t.perm)
        return all(FreshnessConstraint(a, s.var) in ctx for a in needed)
    if isinstance(s, Abstraction) and isinstance(t, Abstraction):
        if s.atom == t.atom:
            return derive_alpha_c(ctx, s.body, t.body, sig)
        swapped = permute_term(Permutation(((s.atom, t.atom),)), t.body)
        return derive_alpha_c(ctx, s.body, swapped, sig) and derive_freshness(
            ctx, s.atom, t.body
        )
    if isinstance(s, App) and isinstance(t, App):
        if s.sym != t.sym or len(s.args) != len(t.args):
            return False
        if sig.is_commutative(s.sym):
            s0, s1 = s.args
            t0, t1 = t.args
            if derive_alpha_c(ctx, s0, t0, sig) and derive_alpha_c(ctx, s1, t1, sig):
                return True
            return derive_alpha_c(ctx, s0, t1, sig) and derive_alpha_c(ctx, s1, t0, sig)
        return all(
            derive_alpha_c(ctx, sa, ta, sig) for sa, ta in zip(s.args, t.args)
        )
    return False


def derive_alpha(ctx: FreshnessContext, s: Term, t: Term) -> bool:
    """Plain alpha-equivalence: commutativity switched off."""
    return derive_alpha_c(ctx, s, t, _NO_COMMUTATIVITY)


_NO_COMMUTATIVITY = Signature()


def freshness_context_nf(
    ctx: FreshnessContext, theta: Substitution
) -> FreshnessContext | _Inconsistent:
    """Instantiate ctx by theta and reduce to primitive constraints.

    Returns INCONSISTENT when some constraint reduces to a#a.
    """
    work: list[tuple[Atom, Term]] = [(c.atom, theta.get(c.var)) for c in ctx]
    out: set[FreshnessConstraint] = set()
    while work:
        atom, term = work.pop()
        if isinstance(term, Atom):
            if term == atom:
                return INCONSISTENT
        elif isinstance(term, Suspension):
            out.add(FreshnessConstraint(term.perm.inverse().act(atom), term.var))
        elif isinstance(term, Abstraction):
            if term.atom != atom:
                work.append((atom, term.body))
        else:
            work.extend((atom, arg) for arg in term.args)
    return frozenset(out)


def context_entails(ctx: FreshnessContext, other: FreshnessContext) -> bool:
    """Whether every primitive constraint of `other` is a hypothesis of ctx."""
    return other <= ctx


def satisfies_with(
    constrained: FreshnessContext, theta: Substitution, ctx: FreshnessContext
) -> bool:
    """Whether theta satisfies `constrained`, judged under ctx."""
    reduced = freshness_context_nf(constrained, theta)
    if reduced is INCONSISTENT:
        return False
    return context_entails(ctx, reduced)


def check_problem(ctx: FreshnessContext, problem: ConstraintProblem, sig: Signature) -> bool:
    """Conjunction of the freshness and equality judgements in the problem."""
    for goal in problem:
        if isinstance(goal, FreshnessGoal):
            if not derive_freshness(ctx, goal.atom, goal.term):
                return False
        else:
            if not derive_alpha_c(ctx, goal.lhs, goal.rhs, sig):
                return False
    return True
