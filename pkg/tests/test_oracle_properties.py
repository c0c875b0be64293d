"""Randomized agreement between rewriting, normalization and the chase"""
import pytest
from hypothesis import HealthCheck, assume, given, settings

from app.engine.chase_engine import answers, chase, entails, evaluate
from app.engine.normalizer import normalize
from app.engine.rewriter import RewriteOptions, rewrite
from tests.strategies import boolean_queries, conjunctive_queries, databases, full_schema, linear_ontologies

DEPTH = 12
HEALTH = [HealthCheck.filter_too_much, HealthCheck.too_slow]


def _chase_verdict(database, rules, query):
    result = chase(database, rules, DEPTH)
    assume(result.saturated)
    return entails(result.instance, query)


@settings(max_examples=500, deadline=None, suppress_health_check=HEALTH)
@given(linear_ontologies(), databases(), boolean_queries())
def test_rewriting_agrees_with_chase(rules, database, query):
    """The rewriting holds on D exactly when the chase of D entails the query"""
    normal, schema = normalize(rules, full_schema())
    expected = _chase_verdict(database, normal, query)
    result = rewrite(query, normal, schema=schema)
    assert bool(evaluate(result.queries, database)) == expected


@settings(max_examples=500, deadline=None, suppress_health_check=HEALTH)
@given(linear_ontologies(), databases(), boolean_queries())
def test_rewriting_with_elimination_agrees_with_chase(rules, database, query):
    normal, schema = normalize(rules, full_schema())
    expected = _chase_verdict(database, normal, query)
    result = rewrite(query, normal, options=RewriteOptions(elimination=True), schema=schema)
    assert bool(evaluate(result.queries, database)) == expected


@settings(max_examples=200, deadline=None, suppress_health_check=HEALTH)
@given(linear_ontologies(max_head_atoms=2), databases(), boolean_queries())
def test_normalization_preserves_entailment(rules, database, query):
    """Chasing with the original and the normalized rules gives the same verdict"""
    normal, _ = normalize(rules, full_schema())
    assert _chase_verdict(database, rules, query) == _chase_verdict(database, normal, query)


@pytest.mark.parametrize('elimination', [False, True])
@settings(max_examples=500, deadline=None, suppress_health_check=HEALTH)
@given(linear_ontologies(with_constants=True), databases(), conjunctive_queries())
def test_answers_agree_with_chase(elimination, rules, database, query):
    """Answer tuples of the rewriting on D equal the null-free answers on the chase of D"""
    normal, schema = normalize(rules, full_schema())
    result = chase(database, normal, DEPTH)
    assume(result.saturated)
    rewriting = rewrite(query, normal, options=RewriteOptions(elimination=elimination), schema=schema)
    assert evaluate(rewriting.queries, database) == answers(query, result.instance)
