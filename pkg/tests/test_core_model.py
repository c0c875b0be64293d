"""Tests for terms, substitutions, unification, homomorphisms and canonical forms"""
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from app.engine.core_model import (
    Atom, AtomIndex, ConjunctiveQuery, Schema, Substitution, Term, apply, canonical_form,
    find_homomorphism, iter_homomorphisms, shared_variables, term_of, unify,
)
from app.engine.errors import UnsafeQueryError
from tests.strategies import boolean_queries, renamings

A, B, C, E = (Term.variable(n) for n in 'ABCE')
UNIFY_TERMS = ('X', 'Y', 'Z', 'a', 'b')


def cq(head, *body):
    return ConjunctiveQuery.of('q', head, body)


def _variables(atoms):
    return sorted({v for atom in atoms for v in atom.variables()}, key=lambda v: v.name)


class TestTerms:
    """Term construction and rendering"""

    def test_term_of_distinguishes_variables(self):
        """Uppercase names are variables, lowercase names are constants"""
        assert term_of('X').is_variable
        assert term_of('acme').is_constant
        assert term_of(42) == Term.constant('42')

    def test_constant_rendering_quotes_when_needed(self):
        """Constants that are not bare identifiers are single-quoted"""
        assert str(Term.constant('acme')) == 'acme'
        assert str(Term.constant('Acme Corp')) == "'Acme Corp'"
        assert str(Term.constant("o'neil")) == "'o''neil'"

    def test_null_rendering(self):
        """Labeled nulls print as z<n>"""
        assert str(Term.null(3)) == 'z3'

    def test_atom_rendering(self):
        assert str(Atom.of('p', 'A', 'b')) == 'p(A,b)'


class TestSubstitution:
    """Substitution application and composition"""

    def test_constants_cannot_be_bound(self):
        """Binding a constant raises ValueError"""
        with pytest.raises(ValueError):
            Substitution({Term.constant('a'): A})

    def test_apply_to_query_rewrites_head_and_body(self):
        """apply maps every head and body occurrence"""
        query = cq(['A'], Atom.of('p', 'A', 'B'))
        result = apply(Substitution({A: Term.constant('a'), B: C}), query)
        assert result.head == (Term.constant('a'),)
        assert result.body == {Atom.of('p', 'a', 'C')}

    def test_then_composes_left_to_right(self):
        first = Substitution({A: B})
        second = Substitution({B: C})
        assert first.then(second).apply_term(A) == C

    def test_identity_pairs_are_dropped(self):
        assert len(Substitution({A: A})) == 0


class TestUnify:
    """Most general unifiers"""

    def test_unify_variables_and_constants(self):
        """Variables bind to constants; between variables the smaller name survives"""
        mgu = unify([Atom.of('p', 'X', 'Y'), Atom.of('p', 'a', 'Z')])
        assert mgu.apply_term(Term.variable('X')) == Term.constant('a')
        assert mgu.apply_term(Term.variable('Z')) == Term.variable('Y')

    def test_factorization_unifier(self):
        """{t(A,B,C), t(A,E,C)} unify with E mapped to B"""
        mgu = unify([Atom.of('t', 'A', 'B', 'C'), Atom.of('t', 'A', 'E', 'C')])
        assert dict(mgu) == {E: B}

    def test_constant_clash(self):
        """Distinct constants at the same position do not unify"""
        assert unify([Atom.of('p', 'a', 'X'), Atom.of('p', 'b', 'Y')]) is None

    def test_predicate_mismatch(self):
        assert unify([Atom.of('p', 'X'), Atom.of('r', 'X')]) is None

    def test_transitive_chain_reaches_constant(self):
        """X=Y and Y=c force X=c"""
        mgu = unify([Atom.of('p', 'X', 'Y', 'c'), Atom.of('p', 'Y', 'X', 'X')])
        assert mgu.apply_term(Term.variable('X')) == Term.constant('c')
        assert mgu.apply_term(Term.variable('Y')) == Term.constant('c')

    def test_empty_set_unifies(self):
        assert unify([]) is not None

    @settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])
    @given(
        st.lists(st.sampled_from(UNIFY_TERMS), min_size=3, max_size=3),
        st.lists(st.sampled_from(UNIFY_TERMS), min_size=3, max_size=3),
        st.fixed_dictionaries({name: st.sampled_from(('a', 'b')) for name in ('X', 'Y', 'Z')}),
    )
    def test_mgu_is_idempotent_and_most_general(self, left, right, grounding):
        """Whenever a grounding unifies two atoms, it factors through their MGU"""
        atoms = [Atom.of('t', *left), Atom.of('t', *right)]
        ground = Substitution({Term.variable(k): Term.constant(v) for k, v in grounding.items()})
        assume(ground.apply_atom(atoms[0]) == ground.apply_atom(atoms[1]))
        mgu = unify(atoms)
        assert mgu is not None
        once = [mgu.apply_atom(a) for a in atoms]
        assert once[0] == once[1]
        assert [mgu.apply_atom(a) for a in once] == once
        for variable in (Term.variable(n) for n in ('X', 'Y', 'Z')):
            assert ground.apply_term(mgu.apply_term(variable)) == ground.apply_term(variable)


class TestHomomorphisms:
    """Homomorphism search between atom sets"""

    def test_find_homomorphism(self):
        """r(X,Y), s(Y) maps into r(a,b), s(b)"""
        match = find_homomorphism(
            [Atom.of('r', 'X', 'Y'), Atom.of('s', 'Y')],
            [Atom.of('r', 'a', 'b'), Atom.of('s', 'b')],
        )
        assert match.apply_term(Term.variable('X')) == Term.constant('a')
        assert match.apply_term(Term.variable('Y')) == Term.constant('b')

    def test_constants_are_fixed_points(self):
        assert find_homomorphism([Atom.of('p', 'X', 'c')], [Atom.of('p', 'a', 'b')]) is None

    def test_initial_mapping_is_respected(self):
        """A pinned variable only maps to its pinned value"""
        target = [Atom.of('p', 'a'), Atom.of('p', 'b')]
        matches = list(iter_homomorphisms([Atom.of('p', 'X')], target, {Term.variable('X'): Term.constant('b')}))
        assert len(matches) == 1

    def test_enumerates_all(self):
        target = AtomIndex([Atom.of('p', 'a'), Atom.of('p', 'b')])
        assert len(list(iter_homomorphisms([Atom.of('p', 'X')], target))) == 2

    def test_empty_source_maps(self):
        assert find_homomorphism([], [Atom.of('p', 'a')]) is not None

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_homomorphisms_compose(self, data):
        """h1: S -> T and h2: T -> U give h1 then h2: S -> U"""
        source = data.draw(boolean_queries()).body
        images = st.sampled_from([B, C, Term.constant('a')])
        first = Substitution({v: data.draw(images) for v in _variables(source)})
        middle = {first.apply_atom(a) for a in source}
        second = Substitution({v: data.draw(images) for v in _variables(middle)})
        target = {second.apply_atom(a) for a in middle}
        h1 = find_homomorphism(source, middle)
        h2 = find_homomorphism(middle, target)
        assert h1 is not None and h2 is not None
        composed = h1.then(h2)
        assert all(composed.apply_atom(a) in target for a in source)


class TestConjunctiveQuery:
    """Query construction, safety and shared variables"""

    def test_unsafe_query_rejected(self):
        """A head variable missing from the body raises UnsafeQueryError"""
        with pytest.raises(UnsafeQueryError):
            cq(['A'], Atom.of('p', 'B'))

    def test_rendering_sorts_body(self):
        query = cq(['A'], Atom.of('s', 'B'), Atom.of('p', 'A', 'B'))
        assert str(query) == 'q(A) :- p(A,B), s(B)'

    def test_shared_variables_count_head_and_body(self):
        """A is shared through the head, C through a repeated slot, B is not shared"""
        query = cq(['A'], Atom.of('p', 'A', 'B'), Atom.of('r', 'C', 'C'))
        assert shared_variables(query) == {A, C}

    def test_boolean_query(self):
        assert cq([], Atom.of('p', 'A')).is_boolean


class TestCanonicalForm:
    """Canonical forms identify queries up to variable renaming"""

    def test_renamed_queries_share_form(self):
        left = cq(['A'], Atom.of('p', 'A', 'B'), Atom.of('r', 'B'))
        right = ConjunctiveQuery.of('q', ['X'], [Atom.of('r', 'Y'), Atom.of('p', 'X', 'Y')])
        assert canonical_form(left) == canonical_form(right)

    def test_direction_matters(self):
        left = cq(['A'], Atom.of('p', 'A', 'B'))
        right = cq(['A'], Atom.of('p', 'B', 'A'))
        assert canonical_form(left) != canonical_form(right)

    def test_constants_are_kept(self):
        left = cq([], Atom.of('p', 'a'))
        right = cq([], Atom.of('p', 'A'))
        assert canonical_form(left) != canonical_form(right)

    @settings(max_examples=200, deadline=None)
    @given(st.data())
    def test_invariant_under_renaming(self, data):
        """Any bijective variable renaming leaves the canonical form unchanged"""
        query = data.draw(boolean_queries())
        renaming = data.draw(renamings(query))
        renamed = query.substitute(Substitution(renaming))
        assert canonical_form(renamed) == canonical_form(query)


class TestSchema:
    """Schema arities and auxiliary flags"""

    def test_declare_conflict(self):
        """Redeclaring a predicate with another arity raises ValueError"""
        schema = Schema({'p': 2})
        with pytest.raises(ValueError):
            schema.declare('p', 3)

    def test_auxiliary_predicates_are_hidden_from_user_list(self):
        schema = Schema({'p': 1}).declare('_aux_1_1', 2, auxiliary=True)
        assert schema.user_predicates == ['p']
        assert schema.is_auxiliary('_aux_1_1')

    def test_positions(self):
        assert [str(p) for p in Schema({'r': 2}).positions()] == ['r[1]', 'r[2]']
