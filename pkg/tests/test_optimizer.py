"""Tests for equality types, the dependency graph, cover checks and query elimination"""
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from app.engine.chase_engine import chase, entails
from app.engine.core_model import Atom, ConjunctiveQuery, Position, Term
from app.engine.errors import NotLinearError
from app.engine.normalizer import TGD
from app.engine.optimizer import (
    Eliminator, Equality, build_dependency_graph, cover_relation, covers, eliminate, equality_type,
)
from tests.strategies import boolean_queries, databases, linear_ontologies


def tgd(body, head, name):
    return TGD(tuple(body), tuple(head), name)


def cq(*body, head=()):
    return ConjunctiveQuery.of('q', head, body)


# p(X,Y) -> r(X,Y,Z); r(X,Y,c) -> s(X,Y,Y); s(X,X,Y) -> p(X,Y)
CYCLE_SIGMA = [
    tgd([Atom.of('p', 'X', 'Y')], [Atom.of('r', 'X', 'Y', 'Z')], 'sigma1'),
    tgd([Atom.of('r', 'X', 'Y', 'c')], [Atom.of('s', 'X', 'Y', 'Y')], 'sigma2'),
    tgd([Atom.of('s', 'X', 'X', 'Y')], [Atom.of('p', 'X', 'Y')], 'sigma3'),
]


def pos(text):
    predicate, index = text.rstrip(']').split('[')
    return Position(predicate, int(index))


class TestEqualityType:

    def test_constant_equality(self):
        """r(X,Y,c) carries r[3]=c"""
        assert equality_type(Atom.of('r', 'X', 'Y', 'c')) == {Equality(pos('r[3]'), Term.constant('c'))}

    def test_repeated_variable(self):
        """s(X,Y,Y) carries s[2]=s[3]"""
        assert equality_type(Atom.of('s', 'X', 'Y', 'Y')) == {Equality(pos('s[2]'), pos('s[3]'))}

    def test_distinct_variables(self):
        assert equality_type(Atom.of('p', 'X', 'Y')) == frozenset()

    def test_rendering(self):
        assert {str(e) for e in equality_type(Atom.of('r', 'X', 'Y', 'c'))} == {'r[3]=c'}


class TestDependencyGraph:
    """Edges follow frontier variables from body to head positions"""

    def test_edges(self):
        graph = build_dependency_graph(CYCLE_SIGMA)
        expected = {
            (pos('p[1]'), pos('r[1]'), 'sigma1'), (pos('p[2]'), pos('r[2]'), 'sigma1'),
            (pos('r[1]'), pos('s[1]'), 'sigma2'), (pos('r[2]'), pos('s[2]'), 'sigma2'),
            (pos('r[2]'), pos('s[3]'), 'sigma2'),
            (pos('s[1]'), pos('p[1]'), 'sigma3'), (pos('s[2]'), pos('p[1]'), 'sigma3'),
            (pos('s[3]'), pos('p[2]'), 'sigma3'),
        }
        assert graph.edges() == expected

    def test_existential_positions_have_no_incoming_edge(self):
        graph = build_dependency_graph(CYCLE_SIGMA)
        assert not any(target == pos('r[3]') for _, target, _ in graph.edges())

    def test_reachable_needs_a_path(self):
        """p[1] reaches itself only around the cycle; r[3] reaches nothing"""
        graph = build_dependency_graph(CYCLE_SIGMA)
        assert pos('p[1]') in graph.reachable(pos('p[1]'))
        assert graph.reachable(pos('r[3]')) == frozenset()


class TestCovers:
    """Atom coverage under the cyclic linear set"""

    def test_p_covers_r(self):
        query = cq(Atom.of('p', 'A', 'B'), Atom.of('r', 'A', 'B', 'C'), Atom.of('s', 'A', 'A', 'D'))
        assert covers(Atom.of('p', 'A', 'B'), Atom.of('r', 'A', 'B', 'C'), query, CYCLE_SIGMA)

    def test_r_does_not_cover_p(self):
        """r(A,B,C) has a variable where sigma2 needs the constant c"""
        query = cq(Atom.of('p', 'A', 'B'), Atom.of('r', 'A', 'B', 'C'))
        assert not covers(Atom.of('r', 'A', 'B', 'C'), Atom.of('p', 'A', 'B'), query, CYCLE_SIGMA)

    def test_chain_follows_generic_heads(self):
        """From r(A,A,c) the chain stops at s: s(X,Y,Y) does not match sigma3's body s(X,X,Y)"""
        query = cq(Atom.of('r', 'A', 'A', 'c'), Atom.of('p', 'A', 'A'))
        assert not covers(Atom.of('r', 'A', 'A', 'c'), Atom.of('p', 'A', 'A'), query, CYCLE_SIGMA)

    def test_shared_variable_must_be_carried(self):
        """B is shared with t(B) and does not occur in p(A,E)"""
        query = cq(Atom.of('p', 'A', 'E'), Atom.of('r', 'B', 'E', 'C'), Atom.of('t', 'B'))
        assert not covers(Atom.of('p', 'A', 'E'), Atom.of('r', 'B', 'E', 'C'), query, CYCLE_SIGMA)

    def test_unshared_variables_are_free(self):
        query = cq(Atom.of('p', 'A', 'E'), Atom.of('r', 'B', 'F', 'C'))
        assert covers(Atom.of('p', 'A', 'E'), Atom.of('r', 'B', 'F', 'C'), query, CYCLE_SIGMA)

    def test_an_atom_does_not_cover_itself(self):
        atom = Atom.of('p', 'A', 'B')
        assert not covers(atom, atom, cq(atom), CYCLE_SIGMA)

    def test_cover_relation(self):
        query = cq(Atom.of('p', 'A', 'B'), Atom.of('r', 'A', 'B', 'C'), Atom.of('s', 'A', 'A', 'D'))
        relation = cover_relation(query, CYCLE_SIGMA)
        assert relation[Atom.of('r', 'A', 'B', 'C')] == {Atom.of('p', 'A', 'B')}
        assert relation[Atom.of('p', 'A', 'B')] == set()
        assert relation[Atom.of('s', 'A', 'A', 'D')] == set()

    @settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(linear_ontologies(max_rules=4, with_constants=True), boolean_queries(max_atoms=4))
    def test_cover_relation_is_transitive(self, rules, query):
        """c covers a and a covers b imply c covers b"""
        cover = Eliminator(rules).cover_relation(query)
        for b, covering in cover.items():
            for a in covering:
                assert cover[a] - {b} <= covering


class TestEliminate:

    def test_eliminates_covered_atom(self):
        """r(A,B,C) is implied by p(A,B)"""
        query = cq(Atom.of('p', 'A', 'B'), Atom.of('r', 'A', 'B', 'C'), Atom.of('s', 'A', 'A', 'D'))
        result = eliminate(query, CYCLE_SIGMA)
        assert result.body == {Atom.of('p', 'A', 'B'), Atom.of('s', 'A', 'A', 'D')}

    def test_stock_exchange_query(self, stock_compiled, stock_query):
        """Only stock_portf(B,A,D) and list_comp(A,C) survive; the other atoms follow from them"""
        reduced = Eliminator(stock_compiled.tgds, stock_compiled.schema).eliminate(stock_query)
        assert reduced == cq(Atom.of('stock_portf', 'B', 'A', 'D'), Atom.of('list_comp', 'A', 'C'), head=['A', 'B', 'C'])

    def test_mutual_cover_keeps_one(self):
        """r(A) and s(A) cover each other; exactly one survives, chosen by the strategy"""
        rules = [
            tgd([Atom.of('r', 'X')], [Atom.of('s', 'X')], 'r1'),
            tgd([Atom.of('s', 'X')], [Atom.of('r', 'X')], 'r2'),
        ]
        query = cq(Atom.of('r', 'A'), Atom.of('s', 'A'))
        first = eliminate(query, rules, strategy=[Atom.of('r', 'A'), Atom.of('s', 'A')])
        second = eliminate(query, rules, strategy=[Atom.of('s', 'A'), Atom.of('r', 'A')])
        assert first.body == {Atom.of('s', 'A')}
        assert second.body == {Atom.of('r', 'A')}

    def test_single_atom_query_is_untouched(self):
        query = cq(Atom.of('p', 'A', 'B'))
        assert eliminate(query, CYCLE_SIGMA) is query

    def test_strategy_must_be_permutation(self):
        query = cq(Atom.of('p', 'A', 'B'), Atom.of('r', 'A', 'B', 'C'))
        with pytest.raises(ValueError):
            eliminate(query, CYCLE_SIGMA, strategy=[Atom.of('p', 'A', 'B')])

    def test_rejects_non_linear_rules(self):
        rule = tgd([Atom.of('p', 'X'), Atom.of('s', 'X')], [Atom.of('r', 'X')], 'r1')
        with pytest.raises(NotLinearError):
            Eliminator([rule])

    def test_chain_length_bound(self):
        """With chains of length one, p(A,B) cannot reach s through r"""
        rules = [
            tgd([Atom.of('p', 'X', 'Y')], [Atom.of('r', 'X', 'Y')], 'r1'),
            tgd([Atom.of('r', 'X', 'Y')], [Atom.of('s', 'X')], 'r2'),
        ]
        query = cq(Atom.of('p', 'A', 'B'), Atom.of('s', 'A'))
        assert Eliminator(rules).eliminate(query).body == {Atom.of('p', 'A', 'B')}
        assert Eliminator(rules, max_chain_length=1).eliminate(query) == query

    @settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.data())
    def test_eliminated_count_is_strategy_independent(self, data):
        """Every elimination order removes the same number of atoms"""
        rules = data.draw(linear_ontologies(max_rules=4))
        query = data.draw(boolean_queries(max_atoms=4))
        eliminator = Eliminator(rules)
        expected = len(eliminator.eliminated_atoms(query))
        for _ in range(10):
            order = data.draw(st.permutations(sorted(query.body, key=str)))
            assert len(eliminator.eliminated_atoms(query, order)) == expected

    @settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
    @given(linear_ontologies(max_rules=4), boolean_queries(max_atoms=4), databases())
    def test_elimination_keeps_a_sub_body_with_the_same_verdict(self, rules, query, database):
        """The eliminated query is a sub-body of the input and agrees with it on saturated chases"""
        reduced = Eliminator(rules).eliminate(query)
        assert reduced.body <= query.body
        result = chase(database, rules, 12)
        assume(result.saturated)
        assert entails(result.instance, reduced) == entails(result.instance, query)
