"""Command-line interface: reports, exit codes, JSON stability."""

import json

from nomc.cli import run_command


def run(capsys, *argv):
    code = run_command(list(argv))
    out = capsys.readouterr().out
    return code, out


class TestCheck:
    def test_binder_judgement_derivable(self, capsys):
        code, out = run(
            capsys,
            "check",
            "--context",
            "a#X, b#X, c#X",
            "lam([a]app(a, X)) =ac lam([b]app(b, (a c).X))",
        )
        assert code == 0 and "derivable" in out

    def test_negative_answer_is_success(self, capsys):
        code, out = run(capsys, "check", "a # a")
        assert code == 0 and "not derivable" in out

    def test_freshness_judgement(self, capsys):
        code, out = run(capsys, "check", "--context", "a#X, b#X, c#X",
                        "a # app(b, (a c).X)")
        assert code == 0 and out.strip() == "derivable"


class TestUnifyAndMatch:
    def test_single_unifier(self, capsys):
        code, out = run(capsys, "unify", "h(Y)", "h(fC([b][a]X, X))", "--system", "ex22")
        assert code == 0
        assert "1 solution(s)" in out
        assert "[Y -> fC([b][a]X, X)]" in out

    def test_fixpoint_residual_reported(self, capsys):
        code, out = run(capsys, "unify", "fC([a][b]Z, Z)", "fC([b][a]X, X)",
                        "--system", "ex22")
        assert code == 0 and "residual" in out and "(a b).X =ac X" in out

    def test_no_unifier_is_success(self, capsys):
        code, out = run(capsys, "unify", "a", "b", "--system", "ex22")
        assert code == 0 and "0 solution(s)" in out

    def test_match_splits_context_by_side(self, capsys):
        code, out = run(
            capsys,
            "match",
            "or(P, exists([a]Q))",
            "or(exists([a]Q1), P1)",
            "--system",
            "prenex",
            "--context",
            "a#P, a#P1",
        )
        assert code == 0 and "1 match(es)" in out
        assert "P -> P1" in out and "Q -> Q1" in out


class TestRewriteAndNormalize:
    def test_rewrite_lists_steps(self, capsys):
        code, out = run(
            capsys,
            "rewrite",
            "or(S1, or(exists([a]Q1), P1))",
            "--system",
            "prenex",
            "--context",
            "a#P1",
        )
        assert code == 0 and "or_exists" in out
        assert "or(S1, exists([a]or(P1, Q1)))" in out

    def test_normalize_normal_form(self, capsys):
        code, out = run(capsys, "normalize", "a", "--system", "prenex")
        assert code == 0 and out.splitlines()[0] == "a" and "0 step(s)" in out

    def test_step_limit_exit_code(self, capsys, tmp_path):
        loop = tmp_path / "loop.nrs"
        loop.write_text("sig:\n  f: 1\n\nrules:\n  spin: |- f(X) -> f(X)\n")
        code, out = run(capsys, "normalize", "f(a)", "--system", str(loop),
                        "--max-steps", "3")
        assert code == 2 and "bound exhausted" in out

    def test_coherence_verdict(self, capsys):
        code, out = run(
            capsys,
            "coherence",
            "or(not(forall([a]Q1)), P1)",
            "or(P1, not(forall([a]Q1)))",
            "--system",
            "prenex",
        )
        assert code == 0 and out.strip() == "WITNESSED"


class TestNarrowAndLift:
    def test_narrow_tree_report(self, capsys):
        code, out = run(
            capsys,
            "narrow",
            "h(fC([b][a]X, X))",
            "--system",
            "ex22",
            "--depth",
            "2",
            "--fixpoint-depth",
            "2",
            "--max-unifiers",
            "25",
        )
        assert code == 0
        assert "collapse" in out and "[fixpoint]" in out

    def test_lift_forward_ok(self, capsys):
        code, out = run(
            capsys,
            "lift-forward",
            "and(P1, not(forall([b]Q1)))",
            "--system",
            "prenex",
            "--rho",
            "Q1 -> forall([a]R), P1 -> R",
            "--target-context",
            "a#R",
            "--depth",
            "2",
            "--path",
            "2,1",
        )
        assert code == 0 and out.strip() == "ok"

    def test_lift_forward_precondition(self, capsys):
        code, out = run(
            capsys,
            "lift-forward",
            "and(P1, not(forall([b]Q1)))",
            "--system",
            "prenex",
            "--rho",
            "Q1 -> a, P1 -> a",
            "--target-context",
            "a#R",
            "--depth",
            "2",
            "--path",
            "2,1",
        )
        assert code == 0 and out.strip() == "precondition_fail"

    def test_lift_backward_reconstructs(self, capsys):
        code, out = run(
            capsys,
            "lift-backward",
            "not(forall([a]Q))",
            "--system",
            "prenex",
            "--rho",
            "Q -> b",
        )
        assert code == 0 and "ok: 1 narrowing step(s)" in out


class TestBounds:
    def test_state_cap_exit_two(self, capsys):
        code, out = run(
            capsys,
            "unify",
            "fC(fC(X1, X2), fC(X3, X4))",
            "fC(fC(Y1, Y2), fC(Y3, Y4))",
            "--system",
            "ex22",
            "--max-states",
            "5",
        )
        assert code == 2 and "bound exhausted" in out


class TestErrorsAndJson:
    def test_parse_error_exit_one(self, capsys):
        code, out = run(capsys, "check", "lam([a]")
        assert code == 1 and "error" in out

    def test_missing_system_exit_one(self, capsys):
        code, out = run(capsys, "normalize", "a", "--system", "nowhere.nrs")
        assert code == 1

    def test_arity_error_exit_one(self, capsys):
        code, out = run(capsys, "normalize", "forall(a, b)", "--system", "prenex")
        assert code == 1 and "forall" in out

    def test_json_report_shape(self, capsys):
        code, out = run(capsys, "check", "--json", "a # b")
        assert code == 0
        report = json.loads(out)
        assert set(report) == {"command", "result", "truncation", "timing_ms"}
        assert report["command"] == "check"
        assert report["result"]["derivable"] is True

    def test_json_stable_modulo_timing(self, capsys):
        args = ["narrow", "h(fC([b][a]X, X))", "--system", "ex22", "--depth", "1",
                "--fixpoint-depth", "1", "--json"]
        _, first = run(capsys, *args)
        _, second = run(capsys, *args)
        a = json.loads(first)
        b = json.loads(second)
        a.pop("timing_ms")
        b.pop("timing_ms")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_terms_in_reports_reparse(self, capsys):
        from nomc import parse_term
        from nomc.cli import load_system_file

        sig = load_system_file("ex22").system.signature
        _, out = run(capsys, "rewrite", "h(fC(a, b))", "--system", "ex22", "--json")
        report = json.loads(out)
        for step in report["result"]["steps"]:
            parse_term(step["result"], sig)

    def test_problem_lines_replay_through_cli(self, capsys):
        import shlex

        from nomc.cli import load_system_file

        for name in ("prenex", "ex22", "lambda"):
            loaded = load_system_file(name)
            for problem, line in loaded.problems.items():
                argv = shlex.split(line)
                argv.insert(1, "--system")
                argv.insert(2, name)
                code, _ = run(capsys, *argv)
                assert code == 0, (name, problem)
