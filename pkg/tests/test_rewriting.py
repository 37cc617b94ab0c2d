"""Rewriting steps, normalisation, the ground class oracle, and coherence."""

import random

import pytest

from nomc import (
    Abstraction,
    App,
    Atom,
    IDENTITY,
    Permutation,
    REJECTED,
    RewriteRule,
    RewriteSystem,
    Signature,
    StepLimitExceeded,
    Suspension,
    Var,
    WITNESSED,
    alpha_variants,
    c_class_enumerate,
    canonical_alpha,
    coherence_check,
    derive_alpha,
    derive_alpha_c,
    normal_form_equal_check,
    normalize,
    one_step_rewrites,
    parse_context,
    parse_term,
    permute_term,
    r_over_e_one_step,
    verify_rewrite_step,
)
from conftest import equivalent_variant, random_prenex_formula

a, b, c = Atom("a"), Atom("b"), Atom("c")
X = Var("X")
CSIG = Signature({"oplus": (2, True), "g": (1, False)})


class TestRuleValidation:
    def test_loose_rhs_variable_rejected(self):
        with pytest.raises(ValueError):
            RewriteRule("bad", frozenset(), parse_term("g(a)"), Suspension(IDENTITY, X))

    def test_bare_variable_lhs_rejected(self):
        with pytest.raises(ValueError):
            RewriteRule("bad", frozenset(), Suspension(IDENTITY, X), a)


class TestOneStep:
    def test_prenex_example_containment_and_count(self, prenex_system):
        sig = prenex_system.signature
        ctx = parse_context("a#P1")
        term = parse_term("or(S1, or(exists([a]Q1), P1))", sig)
        steps = one_step_rewrites(ctx, term, prenex_system)
        results = [s.result for s in steps]
        assert parse_term("or(S1, exists([a]or(P1, Q1)))", sig) in results
        or_exists = [s for s in steps if s.rule == "or_exists"]
        assert len(or_exists) >= 4
        for first in or_exists:
            for second in or_exists:
                assert derive_alpha_c(ctx, first.result, second.result, sig)

    def test_normal_form_has_no_steps(self, prenex_system):
        assert one_step_rewrites(frozenset(), a, prenex_system) == ()

    def test_steps_replay(self, prenex_system):
        sig = prenex_system.signature
        ctx = parse_context("a#P1")
        term = parse_term("or(S1, or(exists([a]Q1), P1))", sig)
        for step in one_step_rewrites(ctx, term, prenex_system):
            assert verify_rewrite_step(ctx, term, step, sig)

    def test_step_soundness_on_random_formulas(self, prenex_system):
        rng = random.Random(21)
        sig = prenex_system.signature
        for _ in range(60):
            term = random_prenex_formula(rng, 4)
            for step in one_step_rewrites(frozenset(), term, prenex_system):
                assert verify_rewrite_step(frozenset(), term, step, sig)


class TestNormalize:
    def test_negation_push(self, prenex_system):
        sig = prenex_system.signature
        nf, trace = normalize(
            frozenset(), parse_term("not(forall([a]Q1))", sig), prenex_system, 10
        )
        assert len(trace) == 1
        assert nf == App("exists", (Abstraction(a, App("not", (Suspension(IDENTITY, Var("Q1")),))),))

    def test_two_step_ground_instance(self, prenex_system):
        sig = prenex_system.signature
        delta = parse_context("a#R")
        start = parse_term("and(R, not(forall([b]forall([a]R))))", sig)
        nf, trace = normalize(delta, start, prenex_system, 10)
        assert len(trace) == 2
        shifted = permute_term(Permutation(((a, b),)), parse_term("forall([a]R)", sig))
        want = App(
            "exists",
            (Abstraction(a, App("and", (Suspension(IDENTITY, Var("R")), App("not", (shifted,))))),),
        )
        assert derive_alpha_c(delta, nf, want, sig)

    def test_zero_steps_on_normal_form(self, prenex_system):
        nf, trace = normalize(frozenset(), a, prenex_system, 5)
        assert nf == a and trace == ()

    def test_step_limit(self):
        sig = Signature({"f": (1, False)})
        system = RewriteSystem(
            (RewriteRule("spin", frozenset(), parse_term("f(X)", sig), parse_term("f(X)", sig)),),
            sig,
        )
        with pytest.raises(StepLimitExceeded):
            normalize(frozenset(), parse_term("f(a)", sig), system, 5)

    def test_alpha_variants_normalize_alike(self, prenex_system):
        rng = random.Random(22)
        sig = prenex_system.signature
        for _ in range(40):
            term = random_prenex_formula(rng, 4)
            variant = equivalent_variant(rng, frozenset(), term, sig)
            nf1, _ = normalize(frozenset(), term, prenex_system, 12)
            nf2, _ = normalize(frozenset(), variant, prenex_system, 12)
            assert derive_alpha_c(frozenset(), nf1, nf2, sig)


class TestClassEnumeration:
    def test_single_commutative_node(self):
        pair = App("oplus", (a, b))
        assert set(c_class_enumerate(pair, CSIG)) == {pair, App("oplus", (b, a))}

    def test_symmetric_term_collapses(self):
        pair = App("oplus", (a, b))
        square = App("oplus", (pair, pair))
        # three commutative nodes give at most eight variants; the equal
        # subtrees collapse the root swap, leaving four distinct terms.
        assert len(c_class_enumerate(square, CSIG)) == 4

    def test_asymmetric_term_full_size(self):
        term = App("oplus", (App("oplus", (a, b)), App("oplus", (a, c))))
        assert len(c_class_enumerate(term, CSIG)) == 8

    def test_non_commutative_singleton(self):
        assert c_class_enumerate(App("g", (a,)), CSIG) == (App("g", (a,)),)

    def test_rejects_non_ground(self):
        with pytest.raises(ValueError):
            c_class_enumerate(Suspension(IDENTITY, X), CSIG)


class TestCanonicalAlpha:
    def test_equal_iff_alpha_equal(self):
        rng = random.Random(23)
        from conftest import random_ground_term

        for _ in range(150):
            s = random_ground_term(rng, CSIG, 3)
            t = random_ground_term(rng, CSIG, 3)
            assert (canonical_alpha(s) == canonical_alpha(t)) == derive_alpha(
                frozenset(), s, t
            )

    def test_variants_share_canonical_form(self):
        s = Abstraction(a, App("oplus", (a, b)))
        t = Abstraction(c, App("oplus", (c, b)))
        assert canonical_alpha(s) == canonical_alpha(t)


class TestGroundOracle:
    def test_single_redex(self, prenex_system):
        sig = prenex_system.signature
        term = parse_term("not(forall([a]b))", sig)
        results = r_over_e_one_step(term, prenex_system)
        assert len(results) == 1
        assert derive_alpha_c(
            frozenset(), results[0], parse_term("exists([a]not(b))", sig), sig
        )

    def test_normal_form_empty(self, prenex_system):
        assert r_over_e_one_step(a, prenex_system) == ()

    def test_contains_matching_route_results(self, prenex_system):
        rng = random.Random(24)
        sig = prenex_system.signature
        for _ in range(25):
            term = random_prenex_formula(rng, 3)
            class_results = r_over_e_one_step(term, prenex_system)
            for step in one_step_rewrites(frozenset(), term, prenex_system):
                assert any(
                    derive_alpha_c(frozenset(), step.result, u, sig)
                    for u in class_results
                ), (str(term), str(step.result))

    def test_alpha_variants_cover_binder_renamings(self):
        term = Abstraction(a, b)
        pool = {a, b, c}
        variants = alpha_variants(term, pool)
        assert Abstraction(c, b) in variants
        assert all(derive_alpha(frozenset(), term, v) for v in variants)


class TestNormalFormAgreement:
    def test_ground_normal_form_trivial(self, prenex_system):
        assert normal_form_equal_check(frozenset(), a, prenex_system, 5)

    def test_single_step(self, prenex_system):
        term = parse_term("not(forall([a]b))", prenex_system.signature)
        assert normal_form_equal_check(frozenset(), term, prenex_system, 5)

    def test_random_samples(self, prenex_system):
        rng = random.Random(25)
        for _ in range(30):
            term = random_prenex_formula(rng, 4)
            assert normal_form_equal_check(frozenset(), term, prenex_system, 10)


class TestCoherence:
    def test_reflexive_sample(self, prenex_system):
        term = parse_term("not(forall([a]b))", prenex_system.signature)
        (verdict,) = coherence_check(prenex_system, [(frozenset(), term, term)], 3)
        assert verdict.status == WITNESSED

    def test_commuted_negation(self, prenex_system):
        sig = prenex_system.signature
        t1 = parse_term("or(not(forall([a]Q1)), P1)", sig)
        t2 = parse_term("or(P1, not(forall([a]Q1)))", sig)
        (verdict,) = coherence_check(prenex_system, [(frozenset(), t1, t2)], 3)
        assert verdict.status == WITNESSED

    def test_empty_samples(self, prenex_system):
        assert coherence_check(prenex_system, [], 3) == ()

    def test_unrelated_sample_rejected(self, prenex_system):
        (verdict,) = coherence_check(prenex_system, [(frozenset(), a, b)], 3)
        assert verdict.status == REJECTED
