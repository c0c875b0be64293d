"""Hypothesis strategies for random ontologies, databases and Boolean queries."""
from hypothesis import strategies as st

from app.engine.core_model import Atom, ConjunctiveQuery, Schema, Term
from app.engine.normalizer import TGD

PREDICATES = {'p': 1, 'r': 2, 's': 2, 't': 3}
CONSTANTS = ('a', 'b', 'c')
BODY_VARIABLES = ('X', 'Y', 'Z')
EXISTENTIALS = ('U', 'W')
QUERY_VARIABLES = ('A', 'B', 'C')


@st.composite
def atoms(draw, terms, predicates=PREDICATES):
    predicate = draw(st.sampled_from(sorted(predicates)))
    args = draw(st.lists(st.sampled_from(terms), min_size=predicates[predicate], max_size=predicates[predicate]))
    return Atom.of(predicate, *args)


@st.composite
def tgds(draw, index, max_head_atoms=1, with_constants=False):
    constants = CONSTANTS[:2] if with_constants else ()
    body = draw(atoms(BODY_VARIABLES + constants))
    frontier_pool = sorted(v.name for v in body.variables())
    pool = frontier_pool + list(draw(st.lists(st.sampled_from(EXISTENTIALS), max_size=2, unique=True)))
    pool += list(constants)
    head = draw(st.lists(atoms(tuple(pool)), min_size=1, max_size=max_head_atoms, unique=True))
    return TGD((body,), tuple(head), f"r{index}")


@st.composite
def linear_ontologies(draw, max_rules=6, max_head_atoms=1, with_constants=False):
    count = draw(st.integers(min_value=1, max_value=max_rules))
    return [draw(tgds(i, max_head_atoms, with_constants)) for i in range(1, count + 1)]


def databases(max_atoms=8):
    return st.lists(atoms(CONSTANTS), min_size=1, max_size=max_atoms, unique=True)


@st.composite
def boolean_queries(draw, max_atoms=3, with_constants=True):
    terms = QUERY_VARIABLES + (('a',) if with_constants else ())
    body = draw(st.lists(atoms(terms), min_size=1, max_size=max_atoms, unique=True))
    return ConjunctiveQuery('q', (), frozenset(body))


@st.composite
def conjunctive_queries(draw, max_atoms=3):
    """Queries whose head is a (possibly empty) selection of body variables."""
    body = draw(st.lists(atoms(QUERY_VARIABLES + ('a',)), min_size=1, max_size=max_atoms, unique=True))
    variables = sorted({v.name for atom in body for v in atom.variables()})
    head = draw(st.lists(st.sampled_from(variables), unique=True)) if variables else []
    return ConjunctiveQuery.of('q', head, body)


@st.composite
def renamings(draw, query):
    """A bijective renaming of the query's variables onto fresh names."""
    variables = sorted(query.variables(), key=lambda v: v.name)
    targets = draw(st.permutations([f"N{i}" for i in range(len(variables))]))
    return {v: Term.variable(name) for v, name in zip(variables, targets)}


def schema_of(rules, extra_atoms=()):
    atoms_seen = [a for rule in rules for a in rule.body + rule.head] + list(extra_atoms)
    return Schema.from_atoms(atoms_seen) if atoms_seen else Schema()


def full_schema():
    return Schema(dict(PREDICATES))
