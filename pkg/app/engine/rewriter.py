"""
UCQ rewriting of a conjunctive query under normal TGDs.

The fixpoint alternates two steps over every stored query:

* factorization unifies atoms that share a variable only at the existential
  position of a TGD, producing label-0 queries that are expanded further but
  never reported;
* rewriting replaces a set of atoms that unifies with a TGD head by the TGD
  body, producing label-1 queries that form the result.

Queries are deduplicated up to bijective variable renaming.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field

from .classifier import is_linear, termination_certificate
from .core_model import (
    RESERVED_PREFIX,
    Atom,
    ConjunctiveQuery,
    Schema,
    Substitution,
    Term,
    canonical_form,
    find_homomorphism,
    shared_variables,
    sort_atoms,
    unify,
)
from .errors import NotLinearError, NotNormalizedError, TerminationError
from .normalizer import AUX_PREFIX, TGD, NegativeConstraint
from .optimizer import Eliminator

logger = logging.getLogger(__name__)

INPUT = 'input'
FACTORIZE = 'factorize'
REWRITE = 'rewrite'


class RewriteOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    factorization: bool = Field(True, description="Run the factorization step")
    elimination: bool = Field(False, description="Apply query elimination (linear TGDs only)")
    nc_pruning: bool = Field(True, description="Discard queries violating a negative constraint")
    max_rounds: Optional[int] = Field(None, ge=1, description="Stop after this many rounds")
    trace: bool = Field(False, description="Collect one trace line per derivation")
    keep_auxiliary: bool = Field(False, description="Report queries over normalization predicates")

    def cache_key(self) -> str:
        return self.model_dump_json()


@dataclass(frozen=True)
class TraceEvent:
    step: int
    kind: str
    tgd: str
    parent: str
    child: str

    def __str__(self):
        return f"step={self.step} kind={self.kind} tgd={self.tgd} parent={self.parent} child={self.child}"


@dataclass
class RewriteEntry:
    query: ConjunctiveQuery
    label: int
    kind: str = INPUT
    tgd: str = ''
    parent: Optional[str] = None


@dataclass
class RewriteState:
    """Stored queries keyed by canonical form, plus the queries still to expand."""
    entries: dict[str, RewriteEntry] = field(default_factory=dict)
    frontier: list[str] = field(default_factory=list)
    rounds: int = 0

    def add(self, query: ConjunctiveQuery, label: int, kind: str, tgd: str, parent: Optional[str]) -> Optional[str]:
        """
        Store a derived query; returns its key when the state changed.

        A factorized query is dropped when any duplicate exists; a rewritten
        query is dropped only when a label-1 duplicate exists, and otherwise
        upgrades a label-0 duplicate in place.
        """
        key = canonical_form(query)
        existing = self.entries.get(key)
        if existing is not None:
            if label == 1 and existing.label == 0:
                existing.label = 1
                existing.kind, existing.tgd, existing.parent = kind, tgd, parent
                return key
            return None
        self.entries[key] = RewriteEntry(query, label, kind, tgd, parent)
        self.frontier.append(key)
        return key

    def take_frontier(self) -> list[str]:
        frontier, self.frontier = self.frontier, []
        return frontier

    def labelled(self, label: int) -> list[RewriteEntry]:
        return [entry for entry in self.entries.values() if entry.label == label]


@dataclass
class RewriteResult:
    queries: list[ConjunctiveQuery]
    complete: bool
    rounds: int
    explored: int
    pruned_input: bool = False
    auxiliary_dropped: int = 0
    trace: list[TraceEvent] = field(default_factory=list)
    provenance: dict[str, RewriteEntry] = field(default_factory=dict)

    def derivation(self, query: ConjunctiveQuery) -> list[RewriteEntry]:
        """Entries from ``query`` back to the input query, following parent links."""
        chain = []
        key: Optional[str] = canonical_form(query)
        while key is not None and key in self.provenance:
            entry = self.provenance[key]
            chain.append(entry)
            key = entry.parent
        return chain


class FreshVariables:
    """Generates V1, V2, ... skipping names already used by a query."""

    def __init__(self, start: int = 1):
        self.counter = start - 1

    def __call__(self, taken: set[str]) -> Term:
        while True:
            self.counter += 1
            name = f"V{self.counter}"
            if name not in taken:
                return Term.variable(name)


def _ensure_apart(sigma: TGD, query: ConjunctiveQuery) -> TGD:
    if sigma.variables & query.variables():
        return sigma.rename_apart()
    return sigma


def is_applicable(sigma: TGD, atoms: Iterable[Atom], query: ConjunctiveQuery) -> bool:
    """
    ``sigma`` may rewrite ``atoms`` when they unify with its head and no atom
    holds a constant or a shared variable at the existential position.
    """
    atoms = list(atoms)
    sigma = _ensure_apart(sigma, query)
    if unify(atoms + [sigma.head_atom]) is None:
        return False
    position = sigma.existential_position
    if position is None:
        return True
    shared = shared_variables(query)
    for atom in atoms:
        if atom.predicate != position.predicate:
            continue
        term = atom.term_at(position)
        if term.is_constant or term in shared:
            return False
    return True


def factorizable_sets(query: ConjunctiveQuery, sigma: TGD) -> Iterator[frozenset[Atom]]:
    """Every factorizable subset of the body, one per candidate variable, in canonical order."""
    position = sigma.existential_position
    if position is None:
        return
    head_terms = set(query.head)
    seen_variables = set()
    for atom in sort_atoms(query.body):
        if atom.predicate != position.predicate or atom.arity < position.index:
            continue
        variable = atom.term_at(position)
        if not variable.is_variable or variable in head_terms or variable in seen_variables:
            continue
        seen_variables.add(variable)
        group = [a for a in query.body if variable in a.args]
        if len(group) < 2:
            continue
        only_at_position = all(
            a.predicate == position.predicate
            and a.positions_of(variable) == [position]
            for a in group
        )
        if only_at_position and unify(group) is not None:
            yield frozenset(group)


def factorizable_set(query: ConjunctiveQuery, sigma: TGD) -> Optional[frozenset[Atom]]:
    return next(factorizable_sets(query, sigma), None)


def factorize(query: ConjunctiveQuery, sigma: TGD) -> ConjunctiveQuery:
    atoms = factorizable_set(query, sigma)
    if atoms is None:
        return query
    return query.substitute(unify(atoms))


def _rename_reserved(query: ConjunctiveQuery, fresh: FreshVariables) -> ConjunctiveQuery:
    leftovers = sorted((v for v in query.variables() if v.name.startswith(RESERVED_PREFIX)), key=lambda v: v.name)
    if not leftovers:
        return query
    taken = {v.name for v in query.variables()}
    renaming = {}
    for variable in leftovers:
        replacement = fresh(taken)
        taken.add(replacement.name)
        renaming[variable] = replacement
    return query.substitute(Substitution(renaming))


def rewrite_step(
    query: ConjunctiveQuery, atoms: Iterable[Atom], sigma: TGD, fresh: Optional[FreshVariables] = None,
) -> ConjunctiveQuery:
    """Replace ``atoms`` by the body of ``sigma`` and apply the MGU of atoms and head to the whole query."""
    atoms = frozenset(atoms)
    sigma = _ensure_apart(sigma, query)
    mgu = unify(list(atoms) + [sigma.head_atom])
    if mgu is None:
        raise ValueError(f"{sigma} is not applicable to {', '.join(map(str, atoms))}")
    body = (query.body - atoms) | set(sigma.body)
    replaced = ConjunctiveQuery(
        query.head_predicate,
        tuple(mgu.apply_term(t) for t in query.head),
        frozenset(mgu.apply_atom(a) for a in body),
    )
    return _rename_reserved(replaced, fresh or FreshVariables())


def prune_by_ncs(query: ConjunctiveQuery, ncs: Iterable[NegativeConstraint]) -> bool:
    return any(find_homomorphism(nc.body, query.body) is not None for nc in ncs)


def mentions_auxiliary(query: ConjunctiveQuery, schema: Optional[Schema] = None) -> bool:
    if schema is not None:
        return any(schema.is_auxiliary(p) for p in query.predicates())
    return any(p.startswith(AUX_PREFIX) for p in query.predicates())


class TGDRewriter:
    """One rewriting run over a fixed TGD set; holds the fresh-name counter and caches."""

    def __init__(
        self,
        sigmas: Sequence[TGD],
        ncs: Sequence[NegativeConstraint] = (),
        options: Optional[RewriteOptions] = None,
        schema: Optional[Schema] = None,
    ):
        self.options = options or RewriteOptions()
        for sigma in sigmas:
            if not sigma.is_normal:
                raise NotNormalizedError(f"{sigma} is not in normal form; normalize the TGD set first")
        if self.options.elimination and not is_linear(sigmas):
            raise NotLinearError("query elimination requires a linear TGD set")
        if self.options.max_rounds is None and termination_certificate(sigmas) is None:
            raise TerminationError(
                "the TGD set is neither linear nor sticky, so rewriting may not terminate; "
                "pass an explicit round bound"
            )
        self.sigmas = [sigma.rename_apart() for sigma in sigmas]
        self.ncs = list(ncs)
        self.schema = schema
        self.fresh = FreshVariables()
        self.eliminator = Eliminator(sigmas, schema) if self.options.elimination else None
        self.state = RewriteState()
        self.trace: list[TraceEvent] = []
        self.steps = 0
        self._by_head_predicate: dict[str, list[TGD]] = {}
        for sigma in self.sigmas:
            self._by_head_predicate.setdefault(sigma.head_atom.predicate, []).append(sigma)
        self._existential = [s for s in self.sigmas if s.existential_position is not None]

    def _prepare(self, query: ConjunctiveQuery) -> Optional[ConjunctiveQuery]:
        if self.eliminator is not None:
            query = self.eliminator.eliminate(query)
        if self.options.nc_pruning and prune_by_ncs(query, self.ncs):
            return None
        return query

    def _record(self, kind: str, sigma: TGD, parent: str, child: str) -> None:
        self.steps += 1
        event = TraceEvent(self.steps, kind, sigma.name, parent, child)
        if self.options.trace:
            self.trace.append(event)
        logger.debug("%s", event)

    def _factorization_step(self, key: str, query: ConjunctiveQuery) -> None:
        for sigma in self._existential:
            for atoms in factorizable_sets(query, sigma):
                produced = self._prepare(query.substitute(unify(atoms)))
                if produced is None:
                    continue
                child = self.state.add(produced, 0, FACTORIZE, sigma.name, key)
                if child is not None:
                    self._record(FACTORIZE, sigma, key, child)

    def _rewriting_step(self, key: str, query: ConjunctiveQuery) -> None:
        by_predicate: dict[str, list[Atom]] = {}
        for atom in sort_atoms(query.body):
            by_predicate.setdefault(atom.predicate, []).append(atom)
        for predicate, candidates in by_predicate.items():
            for sigma in self._by_head_predicate.get(predicate, ()):
                for size in range(1, len(candidates) + 1):
                    for atoms in combinations(candidates, size):
                        if not is_applicable(sigma, atoms, query):
                            continue
                        produced = self._prepare(rewrite_step(query, atoms, sigma, self.fresh))
                        if produced is None:
                            continue
                        child = self.state.add(produced, 1, REWRITE, sigma.name, key)
                        if child is not None:
                            self._record(REWRITE, sigma, key, child)

    def run(self, query: ConjunctiveQuery) -> RewriteResult:
        start = self._prepare(query)
        if start is None:
            logger.info("input query %s violates a negative constraint; rewriting is empty", query)
            return RewriteResult([], True, 0, 0, pruned_input=True)
        self.state.add(start, 1, INPUT, '', None)

        complete = True
        while self.state.frontier:
            if self.options.max_rounds is not None and self.state.rounds >= self.options.max_rounds:
                complete = False
                break
            self.state.rounds += 1
            for key in self.state.take_frontier():
                entry = self.state.entries[key]
                if self.options.factorization:
                    self._factorization_step(key, entry.query)
                self._rewriting_step(key, entry.query)

        reported = []
        dropped = 0
        for entry in self.state.labelled(1):
            if not self.options.keep_auxiliary and mentions_auxiliary(entry.query, self.schema):
                dropped += 1
                continue
            reported.append(entry.query)
        reported.sort(key=canonical_form)
        logger.info(
            "rewriting finished after %d rounds: %d stored, %d reported, %d auxiliary dropped%s",
            self.state.rounds, len(self.state.entries), len(reported), dropped,
            '' if complete else ' (round bound hit, possibly incomplete)',
        )
        return RewriteResult(
            queries=reported,
            complete=complete,
            rounds=self.state.rounds,
            explored=len(self.state.entries),
            auxiliary_dropped=dropped,
            trace=list(self.trace),
            provenance=dict(self.state.entries),
        )


def rewrite(
    query: ConjunctiveQuery,
    sigmas: Sequence[TGD],
    ncs: Sequence[NegativeConstraint] = (),
    options: Optional[RewriteOptions] = None,
    schema: Optional[Schema] = None,
) -> RewriteResult:
    """Perfect UCQ rewriting of ``query`` under normal TGDs ``sigmas`` and constraints ``ncs``."""
    return TGDRewriter(sigmas, ncs, options, schema).run(query)
