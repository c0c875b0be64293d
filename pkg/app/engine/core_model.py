"""
Symbolic substrate of the engine: terms, atoms, conjunctive queries,
substitutions, unification, homomorphism search and canonical forms.

Every value defined here is immutable once built, so queries and atoms can
be shared freely between the rewriter, the optimizer and the chase.
"""
from __future__ import annotations

import functools
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import UnsafeQueryError

# Variables introduced by the engine (renamed-apart TGD variables) start with
# this prefix; the parser rejects it in user input.
RESERVED_PREFIX = '_'

_BARE_CONSTANT = re.compile(r'(?:[a-z][A-Za-z0-9_]*|[0-9]+)\Z')


class TermKind(str, Enum):
    CONSTANT = 'constant'
    VARIABLE = 'variable'
    NULL = 'null'


@dataclass(frozen=True, slots=True)
class Term:
    """A constant, a variable or a labeled null; equality compares kind and name."""
    kind: TermKind
    name: str

    @classmethod
    def variable(cls, name: str) -> 'Term':
        return cls(TermKind.VARIABLE, name)

    @classmethod
    def constant(cls, name: str) -> 'Term':
        return cls(TermKind.CONSTANT, str(name))

    @classmethod
    def null(cls, ident: Union[int, str]) -> 'Term':
        return cls(TermKind.NULL, str(ident))

    @property
    def is_variable(self) -> bool:
        return self.kind is TermKind.VARIABLE

    @property
    def is_constant(self) -> bool:
        return self.kind is TermKind.CONSTANT

    @property
    def is_null(self) -> bool:
        return self.kind is TermKind.NULL

    @property
    def sort_key(self) -> tuple:
        return (self.kind.value, self.name)

    def __str__(self) -> str:
        if self.is_constant:
            return render_constant(self.name)
        if self.is_null:
            return f"z{self.name}"
        return self.name


def render_constant(name: str) -> str:
    """Bare lowercase identifiers stay bare; anything else is single-quoted."""
    if _BARE_CONSTANT.match(name):
        return name
    return "'" + name.replace("'", "''") + "'"


def term_of(value: Union[Term, str, int]) -> Term:
    """Shorthand used by tests and the HTTP layer: uppercase or '_' means variable."""
    if isinstance(value, Term):
        return value
    text = str(value)
    if text[:1].isupper() or text.startswith(RESERVED_PREFIX):
        return Term.variable(text)
    return Term.constant(text)


@dataclass(frozen=True, slots=True, order=True)
class Position:
    predicate: str
    index: int

    def __str__(self) -> str:
        return f"{self.predicate}[{self.index}]"


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @classmethod
    def of(cls, predicate: str, *args: Union[Term, str, int]) -> 'Atom':
        return cls(predicate, tuple(term_of(a) for a in args))

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def sort_key(self) -> tuple:
        return (self.predicate, len(self.args), tuple(t.sort_key for t in self.args))

    def terms(self) -> frozenset[Term]:
        return frozenset(self.args)

    def variables(self) -> frozenset[Term]:
        return frozenset(t for t in self.args if t.is_variable)

    def constants(self) -> frozenset[Term]:
        return frozenset(t for t in self.args if t.is_constant)

    def nulls(self) -> frozenset[Term]:
        return frozenset(t for t in self.args if t.is_null)

    def positions_of(self, term: Term) -> list[Position]:
        return [Position(self.predicate, i) for i, t in enumerate(self.args, start=1) if t == term]

    def term_at(self, position: Position) -> Term:
        return self.args[position.index - 1]

    def substitute(self, substitution: 'Substitution') -> 'Atom':
        return substitution.apply_atom(self)

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(str(t) for t in self.args)})"


def sort_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(atoms, key=lambda a: a.sort_key)


class Substitution(Mapping):
    """
    Finite map from variables (or nulls) to terms.

    Constants are never bound; application leaves unbound terms untouched.
    """
    __slots__ = ('_bindings',)

    def __init__(self, bindings: Optional[Mapping[Term, Term]] = None):
        items = dict(bindings or {})
        for key in items:
            if key.is_constant:
                raise ValueError(f"constant {key} cannot be bound by a substitution")
        self._bindings = {key: value for key, value in items.items() if key != value}

    def __getitem__(self, key: Term) -> Term:
        return self._bindings[key]

    def __iter__(self) -> Iterator[Term]:
        return iter(self._bindings)

    def __len__(self) -> int:
        return len(self._bindings)

    def apply_term(self, term: Term) -> Term:
        return self._bindings.get(term, term)

    def apply_atom(self, atom: Atom) -> Atom:
        if not self._bindings:
            return atom
        return Atom(atom.predicate, tuple(self._bindings.get(t, t) for t in atom.args))

    def then(self, other: 'Substitution') -> 'Substitution':
        """Composition applying this substitution first and ``other`` second."""
        bindings = {key: other.apply_term(value) for key, value in self._bindings.items()}
        for key, value in other.items():
            bindings.setdefault(key, value)
        return Substitution(bindings)

    def restrict(self, terms: Iterable[Term]) -> 'Substitution':
        keep = set(terms)
        return Substitution({k: v for k, v in self._bindings.items() if k in keep})

    def __repr__(self) -> str:
        pairs = ', '.join(f"{k}->{v}" for k, v in sorted(self._bindings.items(), key=lambda kv: kv[0].sort_key))
        return f"{{{pairs}}}"


IDENTITY = Substitution()


@dataclass(frozen=True, slots=True)
class ConjunctiveQuery:
    """``head_predicate(head) :- body``; an empty head makes it a Boolean query."""
    head_predicate: str
    head: tuple[Term, ...]
    body: frozenset[Atom]

    def __post_init__(self):
        object.__setattr__(self, 'head', tuple(self.head))
        object.__setattr__(self, 'body', frozenset(self.body))
        body_vars = set()
        for atom in self.body:
            body_vars.update(atom.variables())
        missing = [t for t in self.head if t.is_variable and t not in body_vars]
        if missing:
            names = ', '.join(str(t) for t in missing)
            raise UnsafeQueryError(f"head variables not in body of {self.head_predicate}: {names}")

    @classmethod
    def of(cls, head_predicate: str, head: Iterable[Union[Term, str]], body: Iterable[Atom]) -> 'ConjunctiveQuery':
        return cls(head_predicate, tuple(term_of(t) for t in head), frozenset(body))

    @property
    def is_boolean(self) -> bool:
        return not self.head

    @property
    def head_vars(self) -> tuple[Term, ...]:
        return tuple(t for t in self.head if t.is_variable)

    def variables(self) -> frozenset[Term]:
        found = set(self.head_vars)
        for atom in self.body:
            found.update(atom.variables())
        return frozenset(found)

    def predicates(self) -> frozenset[str]:
        return frozenset(a.predicate for a in self.body)

    def sorted_body(self) -> list[Atom]:
        return sort_atoms(self.body)

    def with_body(self, body: Iterable[Atom]) -> 'ConjunctiveQuery':
        return ConjunctiveQuery(self.head_predicate, self.head, frozenset(body))

    def substitute(self, substitution: Substitution) -> 'ConjunctiveQuery':
        if not substitution:
            return self
        return ConjunctiveQuery(
            self.head_predicate,
            tuple(substitution.apply_term(t) for t in self.head),
            frozenset(substitution.apply_atom(a) for a in self.body),
        )

    def __str__(self) -> str:
        head = f"{self.head_predicate}({','.join(str(t) for t in self.head)})"
        if not self.body:
            return head
        return f"{head} :- {', '.join(str(a) for a in self.sorted_body())}"


def apply(substitution: Substitution, target: Union[Atom, ConjunctiveQuery]):
    """Apply a substitution to an atom or to a whole query (head included)."""
    return target.substitute(substitution)


def _rank(term: Term) -> tuple:
    # constants first, then variables by name, so the smaller name survives
    return (0 if term.is_constant else 1, term.name)


def unify(atoms: Iterable[Atom]) -> Optional[Substitution]:
    """Most general unifier of a set of atoms, or None when they do not unify."""
    atoms = list(atoms)
    if not atoms:
        return IDENTITY
    first = atoms[0]
    for atom in atoms[1:]:
        if atom.predicate != first.predicate or atom.arity != first.arity:
            return None

    parent: dict[Term, Term] = {}

    def find(term: Term) -> Term:
        root = term
        while root in parent:
            root = parent[root]
        while term in parent and parent[term] != root:
            parent[term], term = root, parent[term]
        return root

    for atom in atoms[1:]:
        for left, right in zip(first.args, atom.args):
            left_root, right_root = find(left), find(right)
            if left_root == right_root:
                continue
            if left_root.is_constant and right_root.is_constant:
                return None
            if _rank(left_root) <= _rank(right_root):
                parent[right_root] = left_root
            else:
                parent[left_root] = right_root

    return Substitution({term: find(term) for term in parent})


class AtomIndex:
    """Atoms grouped by predicate, used as the target of homomorphism search."""
    __slots__ = ('_by_predicate', '_members')

    def __init__(self, atoms: Iterable[Atom] = ()):
        self._by_predicate: dict[str, list[Atom]] = defaultdict(list)
        self._members: set[Atom] = set()
        for atom in atoms:
            self.add(atom)

    def add(self, atom: Atom) -> bool:
        if atom in self._members:
            return False
        self._members.add(atom)
        self._by_predicate[atom.predicate].append(atom)
        return True

    def candidates(self, predicate: str) -> list[Atom]:
        return self._by_predicate.get(predicate, [])

    def __contains__(self, atom: object) -> bool:
        return atom in self._members

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._members)

    def __len__(self) -> int:
        return len(self._members)


def _match(atom: Atom, candidate: Atom, assignment: dict[Term, Term]) -> Optional[list[Term]]:
    added: list[Term] = []
    for source, target in zip(atom.args, candidate.args):
        if source.is_constant:
            if source != target:
                break
            continue
        bound = assignment.get(source)
        if bound is None:
            assignment[source] = target
            added.append(source)
        elif bound != target:
            break
    else:
        return added
    for term in added:
        del assignment[term]
    return None


def iter_homomorphisms(
    source: Iterable[Atom],
    target: Union[AtomIndex, Iterable[Atom]],
    initial: Optional[Mapping[Term, Term]] = None,
) -> Iterator[Substitution]:
    """
    Enumerate every homomorphism from ``source`` into ``target``.

    Constants are fixed points. ``initial`` pins part of the mapping and is
    included in every result. Target terms are treated as opaque values.
    """
    index = target if isinstance(target, AtomIndex) else AtomIndex(target)
    atoms = sorted(set(source), key=lambda a: (len(index.candidates(a.predicate)), a.sort_key))
    if any(not index.candidates(a.predicate) for a in atoms):
        return
    assignment = dict(initial or {})

    def extend(i: int) -> Iterator[Substitution]:
        if i == len(atoms):
            yield Substitution(assignment)
            return
        atom = atoms[i]
        for candidate in index.candidates(atom.predicate):
            if candidate.arity != atom.arity:
                continue
            added = _match(atom, candidate, assignment)
            if added is None:
                continue
            yield from extend(i + 1)
            for term in added:
                del assignment[term]

    yield from extend(0)


def find_homomorphism(
    source: Iterable[Atom],
    target: Union[AtomIndex, Iterable[Atom]],
    initial: Optional[Mapping[Term, Term]] = None,
) -> Optional[Substitution]:
    return next(iter_homomorphisms(source, target, initial), None)


def shared_variables(query: ConjunctiveQuery) -> frozenset[Term]:
    """Variables with two or more argument-slot occurrences, head slots included."""
    counts: Counter = Counter(t for t in query.head if t.is_variable)
    for atom in query.body:
        counts.update(t for t in atom.args if t.is_variable)
    return frozenset(v for v, n in counts.items() if n >= 2)


def _token(term: Term, naming: dict[Term, str]) -> str:
    if term.is_constant:
        return "'" + term.name.replace("'", "''") + "'"
    name = naming.get(term)
    if name is None:
        name = ('!' if term.is_null else '?') + str(len(naming))
        naming[term] = name
    return name


def _render(atom: Atom, naming: dict[Term, str]) -> str:
    return f"{atom.predicate}({','.join(_token(t, naming) for t in atom.args)})"


@functools.lru_cache(maxsize=1 << 16)
def canonical_form(query: ConjunctiveQuery) -> str:
    """
    Key identifying a query up to bijective variable renaming.

    Head variables are numbered first, in head order; the body is the
    lexicographically least serialization over all atom orderings. The
    search only branches on ties of the least next atom, which keeps it
    exact and cheap for the small bodies produced by rewriting.
    """
    naming: dict[Term, str] = {}
    head = ','.join(_token(t, naming) for t in query.head)
    best: list[Optional[tuple[str, ...]]] = [None]

    def search(remaining: tuple[Atom, ...], current: dict[Term, str], prefix: tuple[str, ...]) -> None:
        if not remaining:
            if best[0] is None or prefix < best[0]:
                best[0] = prefix
            return
        rendered = []
        for i, atom in enumerate(remaining):
            local = dict(current)
            rendered.append((_render(atom, local), i, local))
        lowest = min(text for text, _, _ in rendered)
        depth = len(prefix)
        if best[0] is not None and prefix + (lowest,) > best[0][:depth + 1]:
            return
        for text, i, local in rendered:
            if text == lowest:
                search(remaining[:i] + remaining[i + 1:], local, prefix + (text,))

    search(tuple(query.body), naming, ())
    return f"{query.head_predicate}({head}):-" + ';'.join(best[0] or ())


@dataclass(frozen=True)
class Schema:
    """Predicate arities plus the set of predicates introduced by normalization."""
    arities: Mapping[str, int] = field(default_factory=dict)
    auxiliary: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, 'arities', MappingProxyType(dict(self.arities)))
        object.__setattr__(self, 'auxiliary', frozenset(self.auxiliary))
        stray = self.auxiliary - set(self.arities)
        if stray:
            raise ValueError(f"auxiliary predicates without arity: {sorted(stray)}")

    @classmethod
    def from_atoms(cls, atoms: Iterable[Atom]) -> 'Schema':
        schema = cls()
        for atom in atoms:
            schema = schema.declare(atom.predicate, atom.arity)
        return schema

    def arity(self, predicate: str) -> Optional[int]:
        return self.arities.get(predicate)

    def __contains__(self, predicate: object) -> bool:
        return predicate in self.arities

    def declare(self, predicate: str, arity: int, auxiliary: bool = False) -> 'Schema':
        known = self.arities.get(predicate)
        if known is not None and known != arity:
            raise ValueError(f"predicate {predicate} has arity {known}, not {arity}")
        if known is not None and (predicate in self.auxiliary) == auxiliary:
            return self
        arities = dict(self.arities)
        arities[predicate] = arity
        flagged = self.auxiliary | {predicate} if auxiliary else self.auxiliary
        return Schema(arities, flagged)

    def merge(self, other: 'Schema') -> 'Schema':
        merged = self
        for predicate, arity in other.arities.items():
            merged = merged.declare(predicate, arity, predicate in other.auxiliary)
        return merged

    def is_auxiliary(self, predicate: str) -> bool:
        return predicate in self.auxiliary

    @property
    def user_predicates(self) -> list[str]:
        return sorted(p for p in self.arities if p not in self.auxiliary)

    def positions(self) -> list[Position]:
        return [
            Position(predicate, i)
            for predicate in sorted(self.arities)
            for i in range(1, self.arities[predicate] + 1)
        ]
