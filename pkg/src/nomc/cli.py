"""Command-line interface: judgement checking, unification, matching,
rewriting, narrowing, and the lifting correspondence checks.

Exit codes: 0 for any definitive answer (including "not derivable" and
"no match"), 1 for user errors, 2 when a search or step bound was exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

from .alpha import check_problem, format_context
from .narrowing import (
    NarrowingStep,
    NarrowingTree,
    PRECONDITION_FAIL,
    lifting_backward_construct,
    lifting_forward_check,
    narrow_search,
    NotFound,
)
from .parsing import (
    ParseError,
    SystemFile,
    parse_context,
    parse_judgement,
    parse_substitution,
    parse_system,
    parse_term,
)
from .rewriting import (
    RewriteStep,
    StepLimitExceeded,
    coherence_check,
    normalize,
    one_step_rewrites,
)
from .terms import Signature, Suspension, term_vars
from .unify import CSolution, SearchSpaceExceeded, match, solve

_BUNDLED = ("prenex.nrs", "ex22.nrs", "lambda.nrs")


class UserError(Exception):
    pass


def load_system_file(spec: str) -> SystemFile:
    """Load a system from a path or from the bundled examples by name."""
    path = Path(spec)
    if path.exists():
        return parse_system(path.read_text(encoding="utf-8"))
    name = spec if spec.endswith(".nrs") else f"{spec}.nrs"
    if name in _BUNDLED:
        text = resources.files("nomc.systems").joinpath(name).read_text(encoding="utf-8")
        return parse_system(text)
    raise UserError(f"no such system file: {spec} (bundled: {', '.join(_BUNDLED)})")


def _steps_payload(steps: tuple[RewriteStep, ...]) -> list[dict]:
    return [
        {
            "rule": s.rule,
            "position": str(s.position),
            "subst": str(s.subst),
            "result": str(s.result),
        }
        for s in steps
    ]


def _solutions_payload(solutions: tuple[CSolution, ...]) -> list[dict]:
    out = []
    for sol in solutions:
        out.append(
            {
                "context": format_context(sol.context),
                "subst": str(sol.subst),
                "residual": [
                    f"{Suspension(p, v)} =ac {v}" for p, v in sol.residual_fixpoints
                ],
                "fixpoint_discharged": sol.protected_fixpoint_discharged,
            }
        )
    return out


def _tree_payload(tree: NarrowingTree) -> dict:
    nodes = list(tree.nodes())
    index = {id(n): i for i, n in enumerate(nodes)}
    return {
        "nodes": [
            {
                "id": i,
                "depth": n.depth,
                "context": format_context(n.context),
                "term": str(n.term),
                "accumulated": str(n.accumulated),
            }
            for i, n in enumerate(nodes)
        ],
        "edges": [
            {
                "from": index[id(e.parent)],
                "to": index[id(e.child)],
                "rule": e.rule,
                "position": str(e.position),
                "subst": str(e.step_subst),
                "fixpoint": e.used_fixpoint_enumeration,
            }
            for e in tree.edges
        ],
        "truncation": {
            "depth": tree.truncation.depth,
            "max_unifiers": tree.truncation.max_unifiers,
            "fixpoint_depth": tree.truncation.fixpoint_depth,
            "nodes_truncated": tree.truncation.nodes_truncated,
        },
    }


def _require_system(args) -> SystemFile:
    if not args.system:
        raise UserError("this command needs --system FILE")
    return load_system_file(args.system)


def _signature(args) -> Signature:
    if args.system:
        return load_system_file(args.system).system.signature
    return Signature()


def _split_match_context(ctx, pattern_vars):
    nabla = frozenset(c for c in ctx if c.var in pattern_vars)
    delta = frozenset(c for c in ctx if c.var not in pattern_vars)
    return nabla, delta


def _cmd_check(args) -> tuple[dict, str]:
    sig = _signature(args)
    ctx = parse_context(args.context, sig)
    goal = parse_judgement(args.judgement, sig)
    derivable = check_problem(ctx, (goal,), sig)
    verdict = "derivable" if derivable else "not derivable"
    return {"judgement": str(goal), "derivable": derivable}, verdict


def _cmd_unify(args) -> tuple[dict, str]:
    sig = _signature(args)
    ctx = parse_context(args.context, sig)
    left = parse_term(args.left, sig)
    right = parse_term(args.right, sig)
    solutions = solve(ctx, right, frozenset(), left, sig=sig, max_states=args.max_states)
    payload = {"solutions": _solutions_payload(solutions)}
    lines = [f"{len(solutions)} solution(s)"]
    lines += [f"  {sol}" for sol in solutions]
    return payload, "\n".join(lines)


def _cmd_match(args) -> tuple[dict, str]:
    sig = _signature(args)
    ctx = parse_context(args.context, sig)
    pattern = parse_term(args.pattern, sig)
    subject = parse_term(args.subject, sig)
    nabla, delta = _split_match_context(ctx, term_vars(pattern))
    solutions = match(nabla, pattern, delta, subject, sig=sig, max_states=args.max_states)
    payload = {"solutions": _solutions_payload(solutions)}
    lines = [f"{len(solutions)} match(es)"]
    lines += [f"  {sol}" for sol in solutions]
    return payload, "\n".join(lines)


def _cmd_rewrite(args) -> tuple[dict, str]:
    loaded = _require_system(args)
    system = loaded.system
    ctx = parse_context(args.context, system.signature)
    term = parse_term(args.term, system.signature)
    steps = one_step_rewrites(ctx, term, system, max_states=args.max_states)
    payload = {"steps": _steps_payload(steps)}
    lines = [f"{len(steps)} step(s)"]
    lines += [f"  {s}" for s in steps]
    return payload, "\n".join(lines)


def _cmd_normalize(args) -> tuple[dict, str]:
    loaded = _require_system(args)
    system = loaded.system
    ctx = parse_context(args.context, system.signature)
    term = parse_term(args.term, system.signature)
    nf, trace = normalize(ctx, term, system, args.max_steps, max_states=args.max_states)
    payload = {"normal_form": str(nf), "steps": _steps_payload(trace), "count": len(trace)}
    return payload, f"{nf}\n{len(trace)} step(s)"


def _cmd_coherence(args) -> tuple[dict, str]:
    loaded = _require_system(args)
    system = loaded.system
    ctx = parse_context(args.context, system.signature)
    t1 = parse_term(args.left, system.signature)
    t2 = parse_term(args.right, system.signature)
    verdicts = coherence_check(system, [(ctx, t1, t2)], args.max_steps, max_states=args.max_states)
    payload = {
        "verdicts": [
            {"index": v.index, "status": v.status, "detail": v.detail} for v in verdicts
        ]
    }
    return payload, verdicts[0].status


def _cmd_narrow(args) -> tuple[dict, str]:
    loaded = _require_system(args)
    system = loaded.system
    ctx = parse_context(args.context, system.signature)
    term = parse_term(args.term, system.signature)
    tree = narrow_search(
        ctx, term, system, args.depth, args.fixpoint_depth, args.max_unifiers,
        max_states=args.max_states,
    )
    payload = _tree_payload(tree)
    lines = [f"{len(tree.edges)} narrowing step(s) to depth {args.depth}"]
    for edge in tree.edges:
        flag = " [fixpoint]" if edge.used_fixpoint_enumeration else ""
        lines.append(f"  {edge.rule} @ {edge.position} with {edge.step_subst}{flag}")
        lines.append(f"    ~> {edge.child}")
    return payload, "\n".join(lines)


def _select_path(tree: NarrowingTree, spec: str) -> list[NarrowingStep]:
    """Follow child indices level by level; empty spec means leftmost path."""
    derivation: list[NarrowingStep] = []
    node = tree.root
    indices = [int(p) for p in spec.split(",")] if spec else None
    level = 0
    while True:
        children = tree.children(node)
        if not children:
            break
        if indices is None:
            chosen = children[0]
        else:
            if level >= len(indices):
                break
            if indices[level] >= len(children):
                raise UserError(f"path index {indices[level]} out of range at level {level}")
            chosen = children[indices[level]]
        derivation.append(chosen)
        node = chosen.child
        level += 1
    return derivation


def _cmd_lift_forward(args) -> tuple[dict, str]:
    loaded = _require_system(args)
    system = loaded.system
    sig = system.signature
    ctx = parse_context(args.context, sig)
    target = parse_context(args.target_context, sig)
    term = parse_term(args.term, sig)
    rho = parse_substitution(args.rho, sig)
    tree = narrow_search(
        ctx, term, system, args.depth, args.fixpoint_depth, args.max_unifiers,
        max_states=args.max_states,
    )
    derivation = _select_path(tree, args.path)
    outcome = lifting_forward_check(derivation, rho, target, sig)
    if outcome is PRECONDITION_FAIL:
        status = "precondition_fail"
    else:
        status = "ok" if outcome else "failed"
    payload = {
        "status": status,
        "derivation": [
            {"rule": s.rule, "position": str(s.position), "subst": str(s.step_subst)}
            for s in derivation
        ],
    }
    return payload, status


def _cmd_lift_backward(args) -> tuple[dict, str]:
    loaded = _require_system(args)
    system = loaded.system
    sig = system.signature
    ctx = parse_context(args.context, sig)
    target = parse_context(args.target_context, sig)
    term = parse_term(args.term, sig)
    rho = parse_substitution(args.rho, sig)
    try:
        start = rho.apply(term)
        _, trace = normalize(target, start, system, args.max_steps, max_states=args.max_states)
        outcome = lifting_backward_construct(
            ctx, term, rho, target, trace, args.fixpoint_depth, system,
            max_states=args.max_states,
        )
    except ValueError as exc:
        raise UserError(str(exc)) from exc
    if isinstance(outcome, NotFound):
        payload = {"status": "not_found", "step_index": outcome.step_index}
        return payload, f"not found at step {outcome.step_index}"
    steps, rho_n = outcome
    payload = {
        "status": "ok",
        "steps": [
            {"rule": s.rule, "position": str(s.position), "subst": str(s.step_subst)}
            for s in steps
        ],
        "rho_n": str(rho_n),
    }
    return payload, f"ok: {len(steps)} narrowing step(s), residue {rho_n}"


_COMMANDS = {
    "check": _cmd_check,
    "unify": _cmd_unify,
    "match": _cmd_match,
    "rewrite": _cmd_rewrite,
    "normalize": _cmd_normalize,
    "coherence": _cmd_coherence,
    "narrow": _cmd_narrow,
    "lift-forward": _cmd_lift_forward,
    "lift-backward": _cmd_lift_backward,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--system", help="system file path or bundled name")
    sub.add_argument("--context", default="", help='freshness context, e.g. "a#X, b#Y"')
    sub.add_argument("--json", action="store_true", help="machine-readable report")
    sub.add_argument("--max-states", type=int, default=100_000, help="unification state cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nomc",
        description="Nominal rewriting and narrowing modulo commutativity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide a freshness or =ac judgement")
    _add_common(p)
    p.add_argument("judgement", help='e.g. "a # f(b)" or "s =ac t"')

    p = sub.add_parser("unify", help="solve l =ac? s")
    _add_common(p)
    p.add_argument("left")
    p.add_argument("right")

    p = sub.add_parser("match", help="match a pattern against a protected subject")
    _add_common(p)
    p.add_argument("pattern")
    p.add_argument("subject")

    p = sub.add_parser("rewrite", help="all one-step rewrites")
    _add_common(p)
    p.add_argument("term")

    p = sub.add_parser("normalize", help="rewrite to normal form")
    _add_common(p)
    p.add_argument("term")
    p.add_argument("--max-steps", type=int, default=1000)

    p = sub.add_parser("coherence", help="probe the coherence diagram on a sample pair")
    _add_common(p)
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--max-steps", type=int, default=10)

    p = sub.add_parser("narrow", help="bounded narrowing tree")
    _add_common(p)
    p.add_argument("term")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--fixpoint-depth", type=int, default=1)
    p.add_argument("--max-unifiers", type=int, default=50)

    p = sub.add_parser("lift-forward", help="instantiate a narrowing path into rewriting")
    _add_common(p)
    p.add_argument("term")
    p.add_argument("--rho", default="", help='substitution, e.g. "X -> a, Y -> f(b)"')
    p.add_argument("--target-context", default="", help="context the instance lives under")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--fixpoint-depth", type=int, default=1)
    p.add_argument("--max-unifiers", type=int, default=50)
    p.add_argument("--path", default="", help='child indices per level, e.g. "0,1"')

    p = sub.add_parser("lift-backward", help="rebuild narrowing above a rewrite trace")
    _add_common(p)
    p.add_argument("term")
    p.add_argument("--rho", default="", help="normalised instantiation of the term")
    p.add_argument("--target-context", default="", help="context the instance lives under")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--fixpoint-depth", type=int, default=1)

    return parser


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        payload, text = _COMMANDS[args.command](args)
        code = 0
    except (ParseError, UserError, ValueError) as exc:
        payload, text = {"error": str(exc)}, f"error: {exc}"
        code = 1
    except (StepLimitExceeded, SearchSpaceExceeded) as exc:
        payload, text = {"error": str(exc), "bound_exhausted": True}, f"bound exhausted: {exc}"
        code = 2
    elapsed_ms = round((time.perf_counter() - started) * 1000.0, 3)
    if args.json:
        report = {
            "command": args.command,
            "result": payload,
            "truncation": payload.get("truncation"),
            "timing_ms": elapsed_ms,
        }
        print(json.dumps(report, sort_keys=True))
    else:
        print(text)
    return code


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
