"""
Bounded breadth-first restricted chase.

The chase is the reference oracle of the engine: it decides entailment of
Boolean queries on small databases, checks negative constraints and key
dependencies, and computes certain answers of non-Boolean queries.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Iterator, Optional

from .core_model import (
    Atom,
    AtomIndex,
    ConjunctiveQuery,
    Substitution,
    Term,
    find_homomorphism,
    iter_homomorphisms,
)
from .normalizer import TGD, NegativeConstraint

logger = logging.getLogger(__name__)

NEQ = 'neq'


class Certainty(str, Enum):
    TRUE = 'true'
    FALSE = 'false'
    UNKNOWN = 'unknown'


class Consistency(str, Enum):
    CONSISTENT = 'consistent'
    INCONSISTENT = 'inconsistent'
    UNKNOWN = 'unknown'


class Instance:
    """A set of atoms over constants and labeled nulls, indexed by predicate."""

    def __init__(self, atoms: Iterable[Atom] = (), next_null: int = 1):
        self._index = AtomIndex()
        self._order: list[Atom] = []
        self._next_null = next_null
        for atom in atoms:
            self.add(atom)

    def add(self, atom: Atom) -> bool:
        if not self._index.add(atom):
            return False
        self._order.append(atom)
        return True

    def fresh_null(self) -> Term:
        null = Term.null(self._next_null)
        self._next_null += 1
        return null

    def copy(self) -> 'Instance':
        return Instance(self._order, self._next_null)

    @property
    def index(self) -> AtomIndex:
        return self._index

    @property
    def atoms(self) -> frozenset[Atom]:
        return frozenset(self._order)

    @property
    def null_count(self) -> int:
        return self._next_null - 1

    def constants(self) -> set[Term]:
        return {t for atom in self._order for t in atom.args if t.is_constant}

    def sorted_atoms(self) -> list[Atom]:
        return sorted(self._order, key=lambda a: a.sort_key)

    def __contains__(self, atom: object) -> bool:
        return atom in self._index

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._order)

    def __len__(self) -> int:
        return len(self._order)


@dataclass(frozen=True)
class ChaseResult:
    instance: Instance
    saturated: bool
    rounds_used: int


@dataclass(frozen=True)
class KeyDependency:
    predicate: str
    key_positions: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, 'key_positions', frozenset(self.key_positions))
        if not self.key_positions:
            raise ValueError(f"key({self.predicate}) needs at least one position")
        if min(self.key_positions) < 1:
            raise ValueError(f"key({self.predicate}) positions are 1-based")

    def __str__(self):
        return f"key({self.predicate}) = [{', '.join(str(i) for i in sorted(self.key_positions))}]"


def _is_satisfied(sigma: TGD, trigger: Substitution, instance: Instance) -> bool:
    pinned = trigger.restrict(sigma.frontier)
    return find_homomorphism(sigma.head, instance.index, pinned) is not None


def _active_triggers(sigmas: Iterable[TGD], instance: Instance) -> list[tuple[TGD, Substitution]]:
    return [
        (sigma, trigger)
        for sigma in sigmas
        for trigger in iter_homomorphisms(sigma.body, instance.index)
        if not _is_satisfied(sigma, trigger, instance)
    ]


def _fire(sigma: TGD, trigger: Substitution, instance: Instance) -> int:
    bindings = dict(trigger.restrict(sigma.frontier))
    for variable in sigma.frontier:
        bindings.setdefault(variable, trigger.apply_term(variable))
    for variable in sigma.existentials:
        bindings[variable] = instance.fresh_null()
    extension = Substitution(bindings)
    return sum(instance.add(extension.apply_atom(atom)) for atom in sigma.head)


def chase(database: Iterable[Atom], sigmas: Iterable[TGD], depth: int) -> ChaseResult:
    """
    Run at most ``depth`` breadth-first rounds of the restricted chase.

    Triggers of a round are collected against the instance as it stood at
    the start of the round; each one fires unless an extension of it
    already maps the head into the current instance.
    """
    sigmas = list(sigmas)
    instance = database.copy() if isinstance(database, Instance) else Instance(database)
    rounds = 0
    while rounds < depth:
        triggers = [
            (sigma, trigger)
            for sigma in sigmas
            for trigger in iter_homomorphisms(sigma.body, instance.index)
        ]
        fired = 0
        for sigma, trigger in triggers:
            if _is_satisfied(sigma, trigger, instance):
                continue
            _fire(sigma, trigger, instance)
            fired += 1
        if not fired:
            return ChaseResult(instance, True, rounds)
        rounds += 1
        logger.debug("chase round %d fired %d triggers, %d atoms", rounds, fired, len(instance))
    saturated = not _active_triggers(sigmas, instance)
    return ChaseResult(instance, saturated, rounds)


def entails(instance: Iterable[Atom], query: ConjunctiveQuery) -> bool:
    target = instance.index if isinstance(instance, Instance) else instance
    return find_homomorphism(query.body, target) is not None


def certain_answer(query: ConjunctiveQuery, database: Iterable[Atom], sigmas: Iterable[TGD], depth: int) -> Certainty:
    result = chase(database, sigmas, depth)
    if entails(result.instance, query):
        return Certainty.TRUE
    return Certainty.FALSE if result.saturated else Certainty.UNKNOWN


def answers(query: ConjunctiveQuery, instance: Iterable[Atom]) -> set[tuple[Term, ...]]:
    """Null-free answer tuples of ``query`` over ``instance``."""
    target = instance.index if isinstance(instance, Instance) else instance
    found = set()
    for match in iter_homomorphisms(query.body, target):
        row = tuple(match.apply_term(t) for t in query.head)
        if not any(t.is_null for t in row):
            found.add(row)
    return found


def evaluate(ucq: Iterable[ConjunctiveQuery], instance: Iterable[Atom]) -> set[tuple[Term, ...]]:
    """Union of the answers of each CQ; for Boolean queries a nonempty result means true."""
    target = instance if isinstance(instance, Instance) else Instance(instance)
    found: set[tuple[Term, ...]] = set()
    for query in ucq:
        found |= answers(query, target)
    return found


def certain_answers(
    query: ConjunctiveQuery, database: Iterable[Atom], sigmas: Iterable[TGD], depth: int,
) -> tuple[set[tuple[Term, ...]], bool]:
    """Certain answers and whether the chase saturated (answers are complete)."""
    result = chase(database, sigmas, depth)
    return answers(query, result.instance), result.saturated


def violated_constraints(instance: Instance, ncs: Iterable[NegativeConstraint]) -> list[NegativeConstraint]:
    return [nc for nc in ncs if find_homomorphism(nc.body, instance.index) is not None]


def check_consistency(
    database: Iterable[Atom], sigmas: Iterable[TGD], ncs: Iterable[NegativeConstraint], depth: int,
) -> Consistency:
    ncs = list(ncs)
    if not ncs:
        return Consistency.CONSISTENT
    result = chase(database, sigmas, depth)
    if violated_constraints(result.instance, ncs):
        return Consistency.INCONSISTENT
    return Consistency.CONSISTENT if result.saturated else Consistency.UNKNOWN


def key_constraints(kd: KeyDependency, arity: int) -> list[NegativeConstraint]:
    """One constraint per non-key position: equal keys and different values there is a violation."""
    if max(kd.key_positions) > arity:
        raise ValueError(f"{kd} exceeds arity {arity} of {kd.predicate}")
    left = [Term.variable(f"Y{i}") for i in range(1, arity + 1)]
    right = [left[i - 1] if i in kd.key_positions else Term.variable(f"Z{i}") for i in range(1, arity + 1)]
    constraints = []
    for i in range(1, arity + 1):
        if i in kd.key_positions:
            continue
        body = (
            Atom(kd.predicate, tuple(left)),
            Atom(kd.predicate, tuple(right)),
            Atom(NEQ, (left[i - 1], right[i - 1])),
        )
        constraints.append(NegativeConstraint(body, f"key({kd.predicate})@{i}"))
    return constraints


def with_disequalities(database: Iterable[Atom]) -> Instance:
    """The database plus neq(a, b) for every ordered pair of distinct constants."""
    instance = Instance(database)
    for a, b in combinations(sorted(instance.constants(), key=lambda t: t.sort_key), 2):
        instance.add(Atom(NEQ, (a, b)))
        instance.add(Atom(NEQ, (b, a)))
    return instance


def key_violations(database: Iterable[Atom], kds: Iterable[KeyDependency]) -> list[NegativeConstraint]:
    instance = with_disequalities(database)
    arities = {atom.predicate: atom.arity for atom in instance}
    violated = []
    for kd in kds:
        arity: Optional[int] = arities.get(kd.predicate)
        if arity is None:
            continue
        violated.extend(violated_constraints(instance, key_constraints(kd, arity)))
    return violated


def check_kds(database: Iterable[Atom], kds: Iterable[KeyDependency]) -> bool:
    return not key_violations(database, kds)
