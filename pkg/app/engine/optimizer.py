"""
Query elimination for linear TGDs.

An atom ``b`` of a query is redundant when another atom ``a`` forces it: a
chain of TGDs starting from ``a`` derives an atom into which ``b`` maps while
keeping every shared variable and constant of ``b`` in place. Redundant atoms
are removed before rewriting, together with everything they would have
generated.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import networkx as nx

from .core_model import (
    Atom,
    ConjunctiveQuery,
    Position,
    Schema,
    Substitution,
    Term,
    find_homomorphism,
    shared_variables,
    sort_atoms,
)
from .errors import NotLinearError
from .normalizer import TGD

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class Equality:
    """``left = right`` where right is a later position of the same atom or a constant."""
    left: Position
    right: object

    def __str__(self):
        return f"{self.left}={self.right}"


EqualitySet = frozenset


def equality_type(atom: Atom) -> frozenset[Equality]:
    equalities = set()
    for i, term in enumerate(atom.args, start=1):
        left = Position(atom.predicate, i)
        if term.is_constant:
            equalities.add(Equality(left, term))
            continue
        for j in range(i + 1, atom.arity + 1):
            if atom.args[j - 1] == term:
                equalities.add(Equality(left, Position(atom.predicate, j)))
    return frozenset(equalities)


class DependencyGraph:
    """Positions of the schema linked by the TGDs that propagate a variable between them."""

    def __init__(self, graph: nx.MultiDiGraph):
        self.graph = graph
        self._reach: dict[Position, frozenset[Position]] = {}

    def edges(self) -> set[tuple[Position, Position, str]]:
        return {(u, v, key) for u, v, key in self.graph.edges(keys=True)}

    def reachable(self, source: Position) -> frozenset[Position]:
        """Positions at the end of a path of length at least one from ``source``."""
        cached = self._reach.get(source)
        if cached is None:
            found: set[Position] = set()
            if source in self.graph:
                for successor in self.graph.successors(source):
                    found.add(successor)
                    found |= nx.descendants(self.graph, successor)
            cached = self._reach[source] = frozenset(found)
        return cached


def build_dependency_graph(sigmas: Iterable[TGD], schema: Optional[Schema] = None) -> DependencyGraph:
    sigmas = list(sigmas)
    graph = nx.MultiDiGraph()
    if schema is not None:
        graph.add_nodes_from(schema.positions())
    for index, sigma in enumerate(sigmas, start=1):
        label = sigma.name or f"r{index}"
        for atom in sigma.body + sigma.head:
            graph.add_nodes_from(Position(atom.predicate, i) for i in range(1, atom.arity + 1))
        for variable in sigma.frontier:
            for body_atom in sigma.body:
                for source in body_atom.positions_of(variable):
                    for head_atom in sigma.head:
                        for target in head_atom.positions_of(variable):
                            graph.add_edge(source, target, key=label)
    return DependencyGraph(graph)


def _frozen(index: int) -> Term:
    return Term.variable(f"_F{index}")


def _pattern_key(atom: Atom, rename_variables: bool = True) -> Atom:
    """The atom with its nulls (and optionally variables) renamed by first occurrence."""
    naming: dict[Term, Term] = {}
    args = []
    for term in atom.args:
        if term.is_constant or (term.is_variable and not rename_variables):
            args.append(term)
            continue
        if term not in naming:
            naming[term] = (Term.variable if term.is_variable else Term.null)(f"k{len(naming)}")
        args.append(naming[term])
    return Atom(atom.predicate, tuple(args))


class Eliminator:
    """
    Cover checks and elimination against one fixed set of linear normal TGDs.

    Symbolic closures are cached per atom shape, so one instance serves the
    whole rewriting run.
    """

    def __init__(self, sigmas: Sequence[TGD], schema: Optional[Schema] = None, max_chain_length: Optional[int] = None):
        self.sigmas = [sigma.rename_apart() for sigma in sigmas]
        offending = [s for s in sigmas if not s.is_linear]
        if offending:
            raise NotLinearError(f"query elimination needs linear TGDs; {offending[0]} is not")
        self.graph = build_dependency_graph(sigmas, schema)
        self.max_chain_length = max_chain_length
        self._by_body_predicate: dict[str, list[TGD]] = {}
        for sigma in self.sigmas:
            self._by_body_predicate.setdefault(sigma.body[0].predicate, []).append(sigma)
        self._closures: dict[Atom, list[Atom]] = {}

    def _closure(self, pattern: Atom) -> list[Atom]:
        """
        Atoms derivable from ``pattern`` by chains of one or more TGDs.

        The first TGD must match the pattern itself; each later TGD must
        match the generic head of its predecessor, not its instantiation.
        """
        cached = self._closures.get(pattern)
        if cached is not None:
            return cached
        counter = [0]

        def fresh() -> Term:
            counter[0] += 1
            return Term.null(counter[0])

        derived: list[Atom] = []
        seen: set[tuple[Atom, Atom]] = set()
        queue: deque[tuple[Atom, dict[Term, Term], int]] = deque()

        def push(sigma: TGD, match: Substitution, values: dict[Term, Term], length: int) -> None:
            head = sigma.head_atom
            binding: dict[Term, Term] = {}
            for variable in sigma.frontier:
                image = match.apply_term(variable)
                binding[variable] = values.get(image, image)
            for variable in sigma.existentials:
                binding[variable] = fresh()
            concrete = Substitution(binding).apply_atom(head)
            key = (_pattern_key(head), _pattern_key(concrete, rename_variables=False))
            if key in seen:
                return
            seen.add(key)
            derived.append(concrete)
            queue.append((head, binding, length))

        for sigma in self._by_body_predicate.get(pattern.predicate, ()):
            match = find_homomorphism(sigma.body, [pattern])
            if match is not None:
                push(sigma, match, {}, 1)

        while queue:
            generic, values, length = queue.popleft()
            if self.max_chain_length is not None and length >= self.max_chain_length:
                continue
            for sigma in self._by_body_predicate.get(generic.predicate, ()):
                if sigma.variables & generic.variables():
                    sigma = sigma.rename_apart(f"_{length}")
                match = find_homomorphism(sigma.body, [generic])
                if match is not None:
                    push(sigma, match, values, length + 1)

        self._closures[pattern] = derived
        return derived

    def derivations(self, atom: Atom) -> list[Atom]:
        """Closure of a concrete query atom, expressed over that atom's own terms."""
        renaming: dict[Term, Term] = {}
        for term in atom.args:
            if term.is_variable and term not in renaming:
                renaming[term] = _frozen(len(renaming))
        pattern = Substitution(renaming).apply_atom(atom)
        back = Substitution({frozen: original for original, frozen in renaming.items()})
        return [back.apply_atom(a) for a in self._closure(pattern)]

    def covers(self, a: Atom, b: Atom, query: ConjunctiveQuery) -> bool:
        if a == b:
            return False
        pinned = (b.variables() & shared_variables(query)) | b.constants()
        # every pinned term of b must already occur in a
        if not pinned <= a.terms():
            return False
        for term in pinned:
            if term.is_constant:
                continue
            starts = a.positions_of(term)
            if not all(any(goal in self.graph.reachable(s) for s in starts) for goal in b.positions_of(term)):
                return False
        identity = {t: t for t in pinned if t.is_variable}
        return any(
            find_homomorphism([b], [c], identity) is not None
            for c in self.derivations(a)
            if c.predicate == b.predicate
        )

    def cover_relation(self, query: ConjunctiveQuery) -> dict[Atom, set[Atom]]:
        """cover(b) for every body atom b, closed under transitivity."""
        atoms = sort_atoms(query.body)
        relation = nx.DiGraph()
        relation.add_nodes_from(atoms)
        for a in atoms:
            for b in atoms:
                if a != b and self.covers(a, b, query):
                    relation.add_edge(a, b)
        return {b: set(nx.ancestors(relation, b)) - {b} for b in atoms}

    def eliminated_atoms(self, query: ConjunctiveQuery, strategy: Optional[Sequence[Atom]] = None) -> list[Atom]:
        cover = self.cover_relation(query)
        order = list(strategy) if strategy is not None else sort_atoms(query.body)
        if set(order) != set(query.body) or len(order) != len(query.body):
            raise ValueError("an elimination strategy must be a permutation of the query body")
        eliminated = []
        for atom in order:
            if cover[atom]:
                eliminated.append(atom)
                for other in cover.values():
                    other.discard(atom)
        return eliminated

    def eliminate(self, query: ConjunctiveQuery, strategy: Optional[Sequence[Atom]] = None) -> ConjunctiveQuery:
        if len(query.body) < 2:
            return query
        eliminated = self.eliminated_atoms(query, strategy)
        if not eliminated:
            return query
        for atom in eliminated:
            logger.debug("eliminated %s from %s", atom, query)
        return query.with_body(query.body - set(eliminated))


def covers(a: Atom, b: Atom, query: ConjunctiveQuery, sigmas: Sequence[TGD], graph: Optional[DependencyGraph] = None) -> bool:
    eliminator = Eliminator(sigmas)
    if graph is not None:
        eliminator.graph = graph
    return eliminator.covers(a, b, query)


def cover_relation(query: ConjunctiveQuery, sigmas: Sequence[TGD]) -> dict[Atom, set[Atom]]:
    return Eliminator(sigmas).cover_relation(query)


def eliminate(query: ConjunctiveQuery, sigmas: Sequence[TGD], strategy: Optional[Sequence[Atom]] = None) -> ConjunctiveQuery:
    return Eliminator(sigmas).eliminate(query, strategy)
