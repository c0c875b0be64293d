"""
Dependency rules and their normal form.

The rewriter works on TGDs with one head atom and at most one existential
variable occurring once. ``normalize`` brings an arbitrary set into that
shape by introducing auxiliary predicates named ``_aux_<rule>_<step>``.
"""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .core_model import RESERVED_PREFIX, Atom, Position, Schema, Substitution, Term

logger = logging.getLogger(__name__)

AUX_PREFIX = '_aux_'


def _ordered_variables(atoms: Iterable[Atom]) -> list[Term]:
    seen: dict[Term, None] = {}
    for atom in atoms:
        for term in atom.args:
            if term.is_variable:
                seen.setdefault(term, None)
    return list(seen)


@dataclass(frozen=True, slots=True)
class TGD:
    """``body -> exists Z. head``; head-only variables are existential."""
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'body', tuple(dict.fromkeys(self.body)))
        object.__setattr__(self, 'head', tuple(dict.fromkeys(self.head)))
        if not self.body or not self.head:
            raise ValueError(f"TGD {self.name or '?'} needs a nonempty body and head")
        for atom in self.body + self.head:
            if atom.nulls():
                raise ValueError(f"TGD {self.name or '?'} mentions a labeled null")

    def body_variables(self) -> list[Term]:
        return _ordered_variables(self.body)

    def head_variables(self) -> list[Term]:
        return _ordered_variables(self.head)

    @property
    def frontier(self) -> list[Term]:
        body = set(self.body_variables())
        return [v for v in self.head_variables() if v in body]

    @property
    def existentials(self) -> list[Term]:
        body = set(self.body_variables())
        return [v for v in self.head_variables() if v not in body]

    @property
    def variables(self) -> frozenset[Term]:
        return frozenset(self.body_variables()) | frozenset(self.head_variables())

    @property
    def is_linear(self) -> bool:
        return len(self.body) == 1

    @property
    def is_normal(self) -> bool:
        if len(self.head) != 1:
            return False
        existentials = self.existentials
        if not existentials:
            return True
        return len(existentials) == 1 and self.head[0].args.count(existentials[0]) == 1

    @property
    def head_atom(self) -> Atom:
        if len(self.head) != 1:
            raise ValueError(f"TGD {self.name} has {len(self.head)} head atoms")
        return self.head[0]

    @property
    def existential_position(self) -> Optional[Position]:
        """The head slot holding the existential variable of a normal TGD, if any."""
        existentials = self.existentials
        if not existentials:
            return None
        positions = self.head_atom.positions_of(existentials[0])
        return positions[0]

    def predicates(self) -> frozenset[str]:
        return frozenset(a.predicate for a in self.body + self.head)

    def substitute(self, substitution: Substitution) -> 'TGD':
        return TGD(
            tuple(substitution.apply_atom(a) for a in self.body),
            tuple(substitution.apply_atom(a) for a in self.head),
            self.name,
        )

    def rename_apart(self, prefix: str = RESERVED_PREFIX) -> 'TGD':
        """Rename every variable with ``prefix`` so it cannot clash with user variables."""
        renaming = {v: Term.variable(prefix + v.name) for v in self.variables if not v.name.startswith(prefix)}
        return self.substitute(Substitution(renaming))

    def __str__(self) -> str:
        rule = f"{', '.join(map(str, self.body))} -> {', '.join(map(str, self.head))}"
        return f"{self.name}: {rule}" if self.name else rule


@dataclass(frozen=True, slots=True)
class NegativeConstraint:
    """``body -> false``."""
    body: tuple[Atom, ...]
    name: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'body', tuple(dict.fromkeys(self.body)))
        if not self.body:
            raise ValueError(f"negative constraint {self.name or '?'} needs a nonempty body")
        for atom in self.body:
            if atom.nulls():
                raise ValueError(f"negative constraint {self.name or '?'} mentions a labeled null")

    def __str__(self) -> str:
        rule = f"{', '.join(map(str, self.body))} -> false"
        return f"{self.name}: {rule}" if self.name else rule


def _fresh_predicate(schema: Schema, index: int, step: int) -> str:
    name = f"{AUX_PREFIX}{index}_{step}"
    suffix = 0
    while name in schema:
        suffix += 1
        name = f"{AUX_PREFIX}{index}_{step}_{suffix}"
    return name


def _derived_name(sigma: TGD, index: int, part: int) -> str:
    return f"{sigma.name or f'r{index}'}.{part}"


def _split_heads_rule(sigma: TGD, index: int, schema: Schema) -> tuple[list[TGD], Schema]:
    if len(sigma.head) == 1:
        return [sigma], schema
    carried = sigma.head_variables()
    predicate = _fresh_predicate(schema, index, 0)
    schema = schema.declare(predicate, len(carried), auxiliary=True)
    joined = Atom(predicate, tuple(carried))
    rules = [TGD(sigma.body, (joined,), _derived_name(sigma, index, 0))]
    for part, atom in enumerate(sigma.head, start=1):
        rules.append(TGD((joined,), (atom,), _derived_name(sigma, index, part)))
    return rules, schema


def _needs_chain(sigma: TGD) -> bool:
    existentials = sigma.existentials
    if len(existentials) > 1:
        return True
    return len(existentials) == 1 and sigma.head_atom.args.count(existentials[0]) > 1


def _split_existentials_rule(sigma: TGD, index: int, schema: Schema) -> tuple[list[TGD], Schema]:
    if not _needs_chain(sigma):
        return [sigma], schema
    frontier = sigma.frontier
    existentials = sigma.existentials
    rules: list[TGD] = []
    previous: tuple[Atom, ...] = sigma.body
    for step, _ in enumerate(existentials, start=1):
        carried = tuple(frontier + existentials[:step])
        predicate = _fresh_predicate(schema, index, step)
        schema = schema.declare(predicate, len(carried), auxiliary=True)
        link = Atom(predicate, carried)
        rules.append(TGD(previous, (link,), _derived_name(sigma, index, step)))
        previous = (link,)
    rules.append(TGD(previous, sigma.head, _derived_name(sigma, index, len(existentials) + 1)))
    return rules, schema


def split_heads(sigmas: Iterable[TGD], schema: Schema) -> tuple[list[TGD], Schema]:
    """Replace each multi-head TGD by a rule into a fresh predicate plus one projection per head atom."""
    result: list[TGD] = []
    for index, sigma in enumerate(sigmas, start=1):
        rules, schema = _split_heads_rule(sigma, index, schema)
        result.extend(rules)
    return result, schema


def split_existentials(sigmas: Iterable[TGD], schema: Schema) -> tuple[list[TGD], Schema]:
    """Chain TGDs with several (or repeated) existentials, one fresh existential per link."""
    result: list[TGD] = []
    for index, sigma in enumerate(sigmas, start=1):
        if len(sigma.head) != 1:
            raise ValueError(f"split_existentials expects single-head TGDs, got {sigma}")
        rules, schema = _split_existentials_rule(sigma, index, schema)
        result.extend(rules)
    return result, schema


def normalize(sigmas: Iterable[TGD], schema: Schema) -> tuple[list[TGD], Schema]:
    """Split heads, then existentials; auxiliary names use the index of the original rule."""
    result: list[TGD] = []
    for index, sigma in enumerate(sigmas, start=1):
        heads, schema = _split_heads_rule(sigma, index, schema)
        for rule in heads:
            chained, schema = _split_existentials_rule(rule, index, schema)
            result.extend(chained)
    introduced = len(schema.auxiliary)
    if introduced:
        logger.debug("normalization introduced %d auxiliary predicates", introduced)
    return result, schema
