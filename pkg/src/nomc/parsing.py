"""Concrete syntax: terms, contexts, substitutions, and system files.

Grammar sketch:

    term  := '(' atom atom ')'+ '.' VAR      suspended variable
           | '[' atom ']' term               abstraction
           | ident '(' term {',' term} ')'   application
           | ident                           atom, variable, or constant

Lowercase-initial identifiers are atoms (or declared symbols), uppercase are
variables. System files have `sig:`, `rules:` and optional `problems:`
sections; a line whose first non-blank character is `#` is a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .alpha import (
    EqualityGoal,
    FreshnessConstraint,
    FreshnessContext,
    FreshnessGoal,
    Goal,
)
from .rewriting import RewriteRule, RewriteSystem
from .terms import (
    Abstraction,
    App,
    Atom,
    IDENTITY,
    Permutation,
    Signature,
    Substitution,
    Suspension,
    Term,
    Var,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class ArityError(ParseError):
    def __init__(self, sym: str, expected: int, got: int, line: int, col: int):
        super().__init__(f"symbol {sym} takes {expected} argument(s), got {got}", line, col)
        self.sym = sym


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    line: int
    col: int


_PUNCT = {"(": "LPAREN", ")": "RPAREN", "[": "LBRACK", "]": "RBRACK",
          ",": "COMMA", ".": "DOT", "#": "HASH", ":": "COLON"}


def _tokenize(text: str, line_offset: int = 1) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = line_offset, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("|-", i):
            tokens.append(_Token("TURNSTILE", "|-", line, col))
            i += 2
            col += 2
            continue
        if text.startswith("->", i):
            tokens.append(_Token("ARROW", "->", line, col))
            i += 2
            col += 2
            continue
        if text.startswith("=ac", i):
            tokens.append(_Token("EQAC", "=ac", line, col))
            i += 3
            col += 3
            continue
        if ch in _PUNCT:
            tokens.append(_Token(_PUNCT[ch], ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha():
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(_Token("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature | None, line_offset: int = 1):
        self.tokens = _tokenize(text, line_offset)
        self.pos = 0
        self.sig = sig

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.value or 'end of input'}", tok.line, tok.col)
        return tok

    def done(self) -> bool:
        return self.peek().kind == "EOF"

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    def atom(self) -> Atom:
        tok = self.expect("IDENT")
        if not tok.value[0].islower():
            raise ParseError(f"expected an atom (lowercase), found {tok.value}", tok.line, tok.col)
        if self.sig is not None and self.sig.declares(tok.value):
            raise ParseError(f"{tok.value} is a declared symbol, not an atom", tok.line, tok.col)
        return Atom(tok.value)

    def variable(self) -> Var:
        tok = self.expect("IDENT")
        if not tok.value[0].isupper():
            raise ParseError(f"expected a variable (uppercase), found {tok.value}", tok.line, tok.col)
        return Var(tok.value)

    def term(self) -> Term:
        tok = self.peek()
        if tok.kind == "LPAREN":
            perm = self.permutation()
            self.expect("DOT")
            return Suspension(perm, self.variable())
        if tok.kind == "LBRACK":
            self.next()
            bound = self.atom()
            self.expect("RBRACK")
            return Abstraction(bound, self.term())
        if tok.kind == "IDENT":
            self.next()
            name = tok.value
            if self.peek().kind == "LPAREN":
                self.next()
                args: list[Term] = []
                if self.peek().kind != "RPAREN":
                    args.append(self.term())
                    while self.peek().kind == "COMMA":
                        self.next()
                        args.append(self.term())
                self.expect("RPAREN")
                if self.sig is not None and self.sig.declares(name):
                    expected = self.sig.arity(name)
                    if expected != len(args):
                        raise ArityError(name, expected, len(args), tok.line, tok.col)
                return App(name, tuple(args))
            if self.sig is not None and self.sig.declares(name):
                if self.sig.arity(name) == 0:
                    return App(name, ())
                raise ArityError(name, self.sig.arity(name), 0, tok.line, tok.col)
            if name[0].isupper():
                return Suspension(IDENTITY, Var(name))
            return Atom(name)
        raise self.fail(f"expected a term, found {tok.value or 'end of input'}")

    def permutation(self) -> Permutation:
        swappings: list[tuple[Atom, Atom]] = []
        while self.peek().kind == "LPAREN":
            self.next()
            left = self.atom()
            right = self.atom()
            self.expect("RPAREN")
            swappings.append((left, right))
        if not swappings:
            raise self.fail("expected a swapping")
        return Permutation(tuple(swappings))

    def freshness_group(self) -> list[FreshnessConstraint]:
        atoms = [self.atom()]
        while self.peek().kind == "COMMA" and self._comma_continues_atoms():
            self.next()
            atoms.append(self.atom())
        self.expect("HASH")
        var = self.variable()
        return [FreshnessConstraint(a, var) for a in atoms]

    def _comma_continues_atoms(self) -> bool:
        # inside an atom group `a,b#X` the identifier after the comma is
        # followed by another comma or by `#`; a new group looks like `b#Y`.
        return (
            self.peek(1).kind == "IDENT"
            and self.peek(2).kind in ("COMMA", "HASH")
        )

    def context(self) -> FreshnessContext:
        constraints: list[FreshnessConstraint] = []
        constraints.extend(self.freshness_group())
        while self.peek().kind == "COMMA":
            self.next()
            constraints.extend(self.freshness_group())
        return frozenset(constraints)

    def substitution(self) -> Substitution:
        bracketed = self.peek().kind == "LBRACK"
        if bracketed:
            self.next()
        mapping: dict[Var, Term] = {}
        if not (bracketed and self.peek().kind == "RBRACK"):
            while True:
                var = self.variable()
                self.expect("ARROW")
                mapping[var] = self.term()
                if self.peek().kind != "COMMA":
                    break
                self.next()
        if bracketed:
            self.expect("RBRACK")
        return Substitution(mapping)


def parse_term(text: str, sig: Signature | None = None) -> Term:
    """Parse a single term; with a signature, declared arities are enforced."""
    parser = _Parser(text, sig)
    term = parser.term()
    if not parser.done():
        raise parser.fail("trailing input after term")
    return term


def parse_context(text: str, sig: Signature | None = None) -> FreshnessContext:
    text = text.strip()
    if not text or text == "{}":
        return frozenset()
    parser = _Parser(text, sig)
    ctx = parser.context()
    if not parser.done():
        raise parser.fail("trailing input after freshness context")
    return ctx


def parse_substitution(text: str, sig: Signature | None = None) -> Substitution:
    text = text.strip()
    if not text or text in ("Id", "[]"):
        return Substitution()
    parser = _Parser(text, sig)
    subst = parser.substitution()
    if not parser.done():
        raise parser.fail("trailing input after substitution")
    return subst


def parse_judgement(text: str, sig: Signature | None = None) -> Goal:
    """Parse `a # t` or `s =ac t`."""
    parser = _Parser(text, sig)
    first = parser.term()
    tok = parser.next()
    if tok.kind == "HASH":
        if not isinstance(first, Atom):
            raise ParseError("freshness judgement needs an atom on the left", tok.line, tok.col)
        goal: Goal = FreshnessGoal(first, parser.term())
    elif tok.kind == "EQAC":
        goal = EqualityGoal(first, parser.term())
    else:
        raise ParseError(f"expected '#' or '=ac', found {tok.value or 'end of input'}", tok.line, tok.col)
    if not parser.done():
        raise parser.fail("trailing input after judgement")
    return goal


@dataclass
class SystemFile:
    """A parsed system file: the rewrite system plus named problem lines."""

    system: RewriteSystem
    problems: dict[str, str] = field(default_factory=dict)


def _parse_sig_line(line: str, lineno: int) -> tuple[str, int, bool]:
    parser = _Parser(line, None, line_offset=lineno)
    name = parser.expect("IDENT")
    parser.expect("COLON")
    arity = parser.expect("INT")
    commutative = False
    if parser.peek().kind == "IDENT":
        flag = parser.next()
        if flag.value != "commutative":
            raise ParseError(f"unknown signature flag {flag.value}", flag.line, flag.col)
        commutative = True
    if not parser.done():
        raise parser.fail("trailing input in signature entry")
    return name.value, int(arity.value), commutative


def _parse_rule_line(line: str, lineno: int, sig: Signature, default_name: str) -> RewriteRule:
    parser = _Parser(line, sig, line_offset=lineno)
    name = default_name
    if parser.peek().kind == "IDENT" and parser.peek(1).kind == "COLON":
        name = parser.next().value
        parser.next()
    context: FreshnessContext = frozenset()
    if parser.peek().kind == "TURNSTILE":
        parser.next()
    else:
        context = parser.context()
        parser.expect("TURNSTILE")
    lhs = parser.term()
    parser.expect("ARROW")
    rhs = parser.term()
    if not parser.done():
        raise parser.fail("trailing input in rule")
    try:
        return RewriteRule(name, context, lhs, rhs)
    except ValueError as exc:
        raise ParseError(str(exc), lineno, 1) from exc


def parse_system(text: str) -> SystemFile:
    """Parse a `.nrs` system file into a rewrite system and named problems."""
    section = None
    sig_entries: dict[str, tuple[int, bool]] = {}
    rule_lines: list[tuple[int, str]] = []
    problems: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in ("sig:", "rules:", "problems:"):
            section = line[:-1]
            continue
        if section == "sig":
            name, arity, commutative = _parse_sig_line(line, lineno)
            if name in sig_entries:
                raise ParseError(f"duplicate signature entry {name}", lineno, 1)
            sig_entries[name] = (arity, commutative)
        elif section == "rules":
            rule_lines.append((lineno, line))
        elif section == "problems":
            name, _, rest = line.partition(":")
            if not rest:
                raise ParseError("problem lines look like `name: text`", lineno, 1)
            problems[name.strip()] = rest.strip()
        else:
            raise ParseError("content before any section header", lineno, 1)
    try:
        sig = Signature(sig_entries)
    except ValueError as exc:
        raise ParseError(str(exc), 1, 1) from exc
    rules = tuple(
        _parse_rule_line(line, lineno, sig, f"r{i}")
        for i, (lineno, line) in enumerate(rule_lines, start=1)
    )
    return SystemFile(RewriteSystem(rules, sig), problems)


def format_term(term: Term) -> str:
    return str(term)


def format_substitution(subst: Substitution) -> str:
    return str(subst)


def format_rule(rule: RewriteRule) -> str:
    return f"{rule.name}: {rule}"


def format_system(system_file: SystemFile) -> str:
    """Canonical text of a system file; parsing it back is the identity."""
    system = system_file.system
    lines = ["sig:"]
    for sym, (arity, commutative) in sorted(system.signature.entries().items()):
        suffix = " commutative" if commutative else ""
        lines.append(f"  {sym}: {arity}{suffix}")
    lines.append("")
    lines.append("rules:")
    for rule in system.rules:
        lines.append(f"  {format_rule(rule)}")
    if system_file.problems:
        lines.append("")
        lines.append("problems:")
        for name, text in system_file.problems.items():
            lines.append(f"  {name}: {text}")
    return "\n".join(lines) + "\n"
