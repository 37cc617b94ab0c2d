"""Nominal terms: atoms, suspended variables, abstractions, applications.

Permutations are finite bijections on atoms stored as sequences of swappings,
applied right-to-left. Substitutions map variables to terms and are possibly
capturing (first-order): applying [X -> a] under an abstraction [a]_ does not
rename the binder.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union


@dataclass(frozen=True)
class Atom:
    """A concrete name. Distinct names denote distinct atoms."""

    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    """A meta-variable (unknown), instantiable by substitution."""

    name: str

    def __str__(self) -> str:
        return self.name


Swapping = tuple[Atom, Atom]


@dataclass(frozen=True)
class Permutation:
    """A finite atom bijection, stored as swappings applied right-to-left.

    Composition concatenates the sequences; the inverse reverses them.
    """

    swappings: tuple[Swapping, ...] = ()

    def act(self, atom: Atom) -> Atom:
        for left, right in reversed(self.swappings):
            if atom == left:
                atom = right
            elif atom == right:
                atom = left
        return atom

    def inverse(self) -> "Permutation":
        return Permutation(tuple(reversed(self.swappings)))

    def compose(self, other: "Permutation") -> "Permutation":
        """self o other: `other` acts first."""
        return Permutation(self.swappings + other.swappings)

    def moved_atoms(self) -> frozenset[Atom]:
        mentioned = {a for pair in self.swappings for a in pair}
        return frozenset(a for a in mentioned if self.act(a) != a)

    def is_identity(self) -> bool:
        return not self.moved_atoms()

    def __str__(self) -> str:
        return "".join(f"({l} {r})" for l, r in self.swappings) or "id"


IDENTITY = Permutation()


@dataclass(frozen=True)
class Suspension:
    """A permutation pending on a variable, resolved at instantiation."""

    perm: Permutation
    var: Var

    def __str__(self) -> str:
        if self.perm.swappings:
            return f"{self.perm}.{self.var}"
        return str(self.var)


@dataclass(frozen=True)
class Abstraction:
    """Binder [a]t; equality of abstractions is alpha-equivalence."""

    atom: Atom
    body: "Term"

    def __str__(self) -> str:
        return f"[{self.atom}]{self.body}"


@dataclass(frozen=True)
class App:
    """Function application f(t1, ..., tn)."""

    sym: str
    args: tuple["Term", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.sym
        return f"{self.sym}({', '.join(str(a) for a in self.args)})"


Term = Union[Atom, Suspension, Abstraction, App]


def suspension(var: Var, perm: Permutation = IDENTITY) -> Suspension:
    return Suspension(perm, var)


def permute_atom(perm: Permutation, atom: Atom) -> Atom:
    """Image of an atom; atoms outside the moved set map to themselves."""
    return perm.act(atom)


def permute_term(perm: Permutation, term: Term) -> Term:
    """Structural permutation action; suspensions compose, binders move too."""
    if isinstance(term, Atom):
        return perm.act(term)
    if isinstance(term, Suspension):
        return Suspension(perm.compose(term.perm), term.var)
    if isinstance(term, Abstraction):
        return Abstraction(perm.act(term.atom), permute_term(perm, term.body))
    return App(term.sym, tuple(permute_term(perm, a) for a in term.args))


def difference_set(perm: Permutation, other: Permutation) -> frozenset[Atom]:
    """Atoms on which the two permutations disagree."""
    candidates = {a for pair in perm.swappings for a in pair}
    candidates |= {a for pair in other.swappings for a in pair}
    return frozenset(a for a in candidates if perm.act(a) != other.act(a))


class Substitution:
    """A finite map from variables to terms.

    Application is homomorphic and possibly capturing; on a suspension pi.X
    it yields the permutation action of pi on the image of X.
    """

    __slots__ = ("_map",)

    def __init__(self, mapping: Mapping[Var, Term] | None = None):
        cleaned: dict[Var, Term] = {}
        for var, term in (mapping or {}).items():
            if term != Suspension(IDENTITY, var):
                cleaned[var] = term
        self._map = cleaned

    def apply(self, term: Term) -> Term:
        return apply_subst(self, term)

    def get(self, var: Var) -> Term:
        return self._map.get(var, Suspension(IDENTITY, var))

    def compose(self, other: "Substitution") -> "Substitution":
        """Substitution acting as self first, then other."""
        mapping = {v: other.apply(t) for v, t in self._map.items()}
        for v, t in other._map.items():
            mapping.setdefault(v, t)
        return Substitution(mapping)

    def restrict(self, variables: Iterable[Var]) -> "Substitution":
        keep = set(variables)
        return Substitution({v: t for v, t in self._map.items() if v in keep})

    @property
    def domain(self) -> frozenset[Var]:
        return frozenset(self._map)

    def items(self) -> tuple[tuple[Var, Term], ...]:
        return tuple(sorted(self._map.items(), key=lambda it: it[0].name))

    def is_identity(self) -> bool:
        return not self._map

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Substitution) and self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __str__(self) -> str:
        if not self._map:
            return "Id"
        inner = ", ".join(f"{v} -> {t}" for v, t in self.items())
        return f"[{inner}]"

    def __repr__(self) -> str:
        return f"Substitution({dict(self.items())!r})"


IDENTITY_SUBST = Substitution()


def apply_subst(theta: Substitution, term: Term) -> Term:
    if isinstance(term, Atom):
        return term
    if isinstance(term, Suspension):
        if term.var in theta.domain:
            return permute_term(term.perm, theta.get(term.var))
        return term
    if isinstance(term, Abstraction):
        return Abstraction(term.atom, apply_subst(theta, term.body))
    return App(term.sym, tuple(apply_subst(theta, a) for a in term.args))


class Signature:
    """Declared function symbols with arities and commutativity flags."""

    def __init__(self, entries: Mapping[str, tuple[int, bool]] | None = None):
        self._entries: dict[str, tuple[int, bool]] = {}
        for sym, (arity, commutative) in (entries or {}).items():
            if commutative and arity != 2:
                raise ValueError(f"commutative symbol {sym} must have arity 2")
            if arity < 0:
                raise ValueError(f"negative arity for symbol {sym}")
            self._entries[sym] = (arity, commutative)

    def arity(self, sym: str) -> int | None:
        entry = self._entries.get(sym)
        return entry[0] if entry else None

    def is_commutative(self, sym: str) -> bool:
        entry = self._entries.get(sym)
        return bool(entry and entry[1])

    def declares(self, sym: str) -> bool:
        return sym in self._entries

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(sorted(self._entries))

    @property
    def commutative_symbols(self) -> tuple[str, ...]:
        return tuple(s for s in self.symbols if self.is_commutative(s))

    def without_commutativity(self) -> "Signature":
        return Signature({s: (a, False) for s, (a, _) in self._entries.items()})

    def entries(self) -> dict[str, tuple[int, bool]]:
        return dict(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Signature) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"Signature({self._entries!r})"


EMPTY_SIGNATURE = Signature()

# Distinguished hole of position contexts; not a legal source-level variable.
HOLE = Var("_")
HOLE_TERM = Suspension(IDENTITY, HOLE)


@dataclass(frozen=True)
class Position:
    """A term context with exactly one occurrence of the hole variable."""

    context: Term

    def plug(self, term: Term) -> Term:
        return apply_subst(Substitution({HOLE: term}), self.context)

    def is_root(self) -> bool:
        return self.context == HOLE_TERM

    def path(self) -> tuple[int, ...]:
        """Child-index path from the root to the hole (abstraction body is 0)."""
        path = _hole_path(self.context)
        if path is None:
            raise ValueError("position context does not contain the hole")
        return path

    def __str__(self) -> str:
        path = self.path()
        return "root" if not path else ".".join(str(i) for i in path)


ROOT_POSITION = Position(HOLE_TERM)


def _hole_path(context: Term) -> tuple[int, ...] | None:
    if context == HOLE_TERM:
        return ()
    if isinstance(context, Abstraction):
        inner = _hole_path(context.body)
        return None if inner is None else (0,) + inner
    if isinstance(context, App):
        for i, arg in enumerate(context.args):
            inner = _hole_path(arg)
            if inner is not None:
                return (i,) + inner
    return None


def subterms_with_positions(term: Term) -> tuple[tuple[Position, Term], ...]:
    """All context/subterm decompositions, leftmost-outermost, root first."""
    entries: list[tuple[Term, Term]] = [(HOLE_TERM, term)]
    if isinstance(term, Abstraction):
        for pos, sub in subterms_with_positions(term.body):
            entries.append((Abstraction(term.atom, pos.context), sub))
    elif isinstance(term, App):
        for i, arg in enumerate(term.args):
            for pos, sub in subterms_with_positions(arg):
                wrapped = App(term.sym, term.args[:i] + (pos.context,) + term.args[i + 1 :])
                entries.append((wrapped, sub))
    return tuple((Position(ctx), sub) for ctx, sub in entries)


def position_at_path(term: Term, path: tuple[int, ...]) -> tuple[Position, Term]:
    """Rebuild the context/subterm decomposition at a child-index path."""
    if not path:
        return ROOT_POSITION, term
    head, rest = path[0], path[1:]
    if isinstance(term, Abstraction) and head == 0:
        pos, sub = position_at_path(term.body, rest)
        return Position(Abstraction(term.atom, pos.context)), sub
    if isinstance(term, App) and 0 <= head < len(term.args):
        pos, sub = position_at_path(term.args[head], rest)
        wrapped = App(term.sym, term.args[:head] + (pos.context,) + term.args[head + 1 :])
        return Position(wrapped), sub
    raise ValueError(f"no position at path {path} in {term}")


def term_vars(term: Term) -> frozenset[Var]:
    if isinstance(term, Atom):
        return frozenset()
    if isinstance(term, Suspension):
        return frozenset({term.var})
    if isinstance(term, Abstraction):
        return term_vars(term.body)
    out: frozenset[Var] = frozenset()
    for arg in term.args:
        out |= term_vars(arg)
    return out


def term_atoms(term: Term) -> frozenset[Atom]:
    """Every atom mentioned anywhere: free, bound, or inside a suspension."""
    if isinstance(term, Atom):
        return frozenset({term})
    if isinstance(term, Suspension):
        return frozenset(a for pair in term.perm.swappings for a in pair)
    if isinstance(term, Abstraction):
        return term_atoms(term.body) | {term.atom}
    out: frozenset[Atom] = frozenset()
    for arg in term.args:
        out |= term_atoms(arg)
    return out


def free_atoms(term: Term) -> frozenset[Atom]:
    """Atoms occurring unabstracted; defined for ground terms only."""
    if isinstance(term, Atom):
        return frozenset({term})
    if isinstance(term, Suspension):
        raise ValueError("free_atoms is only defined on ground terms")
    if isinstance(term, Abstraction):
        return free_atoms(term.body) - {term.atom}
    out: frozenset[Atom] = frozenset()
    for arg in term.args:
        out |= free_atoms(arg)
    return out


def is_ground(term: Term) -> bool:
    return not term_vars(term)


def term_size(term: Term) -> int:
    if isinstance(term, (Atom, Suspension)):
        return 1
    if isinstance(term, Abstraction):
        return 1 + term_size(term.body)
    return 1 + sum(term_size(a) for a in term.args)


_TRAILING_DIGITS = re.compile(r"\d+$")


def fresh_variable(avoid: Iterable[Var], base: str = "X") -> Var:
    """First variable `<base><n>` not in avoid, counting from 0."""
    taken = {v.name for v in avoid}
    stem = _TRAILING_DIGITS.sub("", base) or "X"
    n = 0
    while f"{stem}{n}" in taken:
        n += 1
    return Var(f"{stem}{n}")


def fresh_atom(avoid: Iterable[Atom], base: str = "n") -> Atom:
    """First atom `<base><n>` not in avoid, counting from 0."""
    taken = {a.name for a in avoid}
    stem = _TRAILING_DIGITS.sub("", base) or "n"
    n = 0
    while f"{stem}{n}" in taken:
        n += 1
    return Atom(f"{stem}{n}")


def fresh_variables(avoid: Iterable[Var], bases: Iterable[Var]) -> dict[Var, Var]:
    """Rename each base variable to one fresh for avoid and the earlier picks."""
    taken = set(avoid)
    renaming: dict[Var, Var] = {}
    for var in bases:
        fresh = fresh_variable(taken, base=var.name)
        renaming[var] = fresh
        taken.add(fresh)
    return renaming
