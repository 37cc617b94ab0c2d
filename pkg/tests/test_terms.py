"""Core term machinery: permutations, substitutions, positions."""

import random

import pytest
from hypothesis import given, strategies as st

from nomc import (
    Abstraction,
    App,
    Atom,
    IDENTITY,
    Permutation,
    Signature,
    Substitution,
    Suspension,
    Var,
    apply_subst,
    difference_set,
    fresh_variable,
    parse_term,
    permute_atom,
    permute_term,
    position_at_path,
    subterms_with_positions,
    term_vars,
)

a, b, c, d = Atom("a"), Atom("b"), Atom("c"), Atom("d")
X, Y = Var("X"), Var("Y")

atoms_st = st.sampled_from([a, b, c, d, Atom("e"), Atom("f")])
perm_st = st.lists(st.tuples(atoms_st, atoms_st), max_size=4).map(
    lambda sw: Permutation(tuple(sw))
)


class TestPermutations:
    def test_single_swapping(self):
        assert permute_atom(Permutation(((a, b),)), a) == b

    def test_identity(self):
        assert permute_atom(IDENTITY, c) == c

    def test_right_to_left_evaluation(self):
        # (a b)(c d) sends c first to d, which (a b) leaves alone.
        assert permute_atom(Permutation(((a, b), (c, d))), c) == d

    @given(perm_st, atoms_st)
    def test_inverse_cancels(self, perm, atom):
        assert perm.inverse().act(perm.act(atom)) == atom

    @given(perm_st, perm_st, atoms_st)
    def test_compose_is_function_composition(self, p, q, atom):
        assert p.compose(q).act(atom) == p.act(q.act(atom))

    @given(perm_st)
    def test_moved_atoms_are_finite_domain(self, perm):
        for atom in perm.moved_atoms():
            assert perm.act(atom) != atom

    def test_difference_set_four_atoms(self):
        assert difference_set(Permutation(((a, b), (c, d))), Permutation(((c, b),))) == {
            a,
            b,
            c,
            d,
        }

    @given(perm_st)
    def test_difference_set_self_empty(self, perm):
        assert difference_set(perm, perm) == frozenset()

    def test_difference_set_against_identity(self):
        assert difference_set(Permutation(((a, b),)), IDENTITY) == {a, b}


class TestPermutationAction:
    def test_abstraction_binder_moves(self):
        swapped = permute_term(Permutation(((a, b),)), Abstraction(a, Suspension(IDENTITY, X)))
        assert swapped == Abstraction(b, Suspension(Permutation(((a, b),)), X))

    def test_suspension_composes(self):
        pi = Permutation(((a, b),))
        inner = Permutation(((a, c),))
        assert permute_term(pi, Suspension(inner, X)) == Suspension(pi.compose(inner), X)

    def test_identity_on_application(self):
        t = App("f", (a, Suspension(IDENTITY, X)))
        assert permute_term(IDENTITY, t) == t


class TestSubstitution:
    def test_suspension_applies_permutation_to_image(self):
        theta = Substitution({X: a})
        assert apply_subst(theta, Suspension(Permutation(((a, b),)), X)) == b

    def test_abstraction_capture_allowed(self):
        theta = Substitution({X: App("f", (a,))})
        out = apply_subst(theta, Abstraction(a, Suspension(IDENTITY, X)))
        assert out == Abstraction(a, App("f", (a,)))

    def test_identity_substitution(self):
        t = parse_term("g([a]X, b)")
        assert apply_subst(Substitution(), t) == t

    def test_identity_bindings_dropped(self):
        assert Substitution({X: Suspension(IDENTITY, X)}).is_identity()

    @given(perm_st, st.sampled_from([X, Y]))
    def test_commutes_with_permutation_at_variables(self, perm, var):
        rng = random.Random(11)
        sig = Signature({"f": (2, False), "g": (1, False)})
        from conftest import random_ground_term

        theta = Substitution({var: random_ground_term(rng, sig, 2)})
        left = apply_subst(theta, Suspension(perm, var))
        right = permute_term(perm, apply_subst(theta, Suspension(IDENTITY, var)))
        assert left == right

    def test_composition_applies_left_first(self):
        theta1 = Substitution({X: Suspension(IDENTITY, Y)})
        theta2 = Substitution({Y: a})
        composed = theta1.compose(theta2)
        assert apply_subst(composed, Suspension(IDENTITY, X)) == a

    def test_composition_associative(self):
        rng = random.Random(5)
        sig = Signature({"f": (2, False), "g": (1, False)})
        from conftest import random_substitution, random_term

        for _ in range(50):
            t1, t2, t3 = (random_substitution(rng, sig) for _ in range(3))
            term = random_term(rng, sig, 3)
            lhs = apply_subst(t1.compose(t2.compose(t3)), term)
            rhs = apply_subst(t1.compose(t2).compose(t3), term)
            assert lhs == rhs


class TestPositions:
    def test_atom_has_only_root(self):
        entries = subterms_with_positions(a)
        assert len(entries) == 1
        pos, sub = entries[0]
        assert pos.is_root() and sub == a

    def test_leftmost_outermost_order(self):
        t = App("f", (a, b))
        entries = subterms_with_positions(t)
        assert [sub for _, sub in entries] == [t, a, b]
        assert str(entries[1][0].context) == "f(_, b)"
        assert str(entries[2][0].context) == "f(a, _)"

    def test_abstraction_body_is_a_position(self):
        t = Abstraction(a, Suspension(IDENTITY, X))
        entries = subterms_with_positions(t)
        assert [sub for _, sub in entries] == [t, Suspension(IDENTITY, X)]

    def test_plug_round_trip(self):
        rng = random.Random(3)
        sig = Signature({"f": (2, False), "g": (1, False), "c": (2, True)})
        from conftest import random_term

        for _ in range(60):
            t = random_term(rng, sig, 3)
            for pos, sub in subterms_with_positions(t):
                assert pos.plug(sub) == t

    def test_path_round_trip(self):
        t = parse_term("f(g(a), [b]h(X))")
        for pos, sub in subterms_with_positions(t):
            pos2, sub2 = position_at_path(t, pos.path())
            assert pos2 == pos and sub2 == sub

    def test_bad_path_rejected(self):
        with pytest.raises(ValueError):
            position_at_path(a, (0,))


class TestFreshNames:
    def test_avoids_given_names(self):
        assert fresh_variable({Var("X0")}, base="X") == Var("X1")

    def test_first_name_deterministic(self):
        assert fresh_variable(set()) == Var("X0")

    def test_repeated_calls_distinct(self):
        avoid: set[Var] = set()
        first = fresh_variable(avoid, base="Q")
        avoid.add(first)
        second = fresh_variable(avoid, base="Q")
        assert first != second

    def test_strips_numeric_suffix_of_base(self):
        assert fresh_variable({Var("Q0")}, base="Q0") == Var("Q1")

    def test_vars_of_term(self):
        assert term_vars(parse_term("f((a b).X, [c]Y)")) == {X, Y}
