"""Rewriting metrics and serialisation of a UCQ to SQL and Datalog text."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping, Optional, Sequence

from pydantic import BaseModel, Field
from sqlalchemy import and_, column, false, literal, null, select, table, union
from sqlalchemy.engine import Dialect

from .core_model import ConjunctiveQuery, Schema, canonical_form
from .errors import EmitError


class Metrics(BaseModel):
    size: int = Field(0, ge=0, description="Number of CQs")
    length: int = Field(0, ge=0, description="Total number of body atoms")
    width: int = Field(0, ge=0, description="Total number of join equalities")

    def __str__(self):
        return f"size={self.size} length={self.length} width={self.width}"


def query_width(query: ConjunctiveQuery) -> int:
    """Pairs of body slots holding the same variable."""
    counts = Counter(t for atom in query.body for t in atom.args if t.is_variable)
    return sum(comb(n, 2) for n in counts.values())


def metrics(ucq: Iterable[ConjunctiveQuery]) -> Metrics:
    ucq = list(ucq)
    return Metrics(
        size=len(ucq),
        length=sum(len(q.body) for q in ucq),
        width=sum(query_width(q) for q in ucq),
    )


@dataclass(frozen=True)
class TableMapping:
    """Physical table and column names backing one predicate."""
    name: str
    columns: tuple[str, ...]


def default_table(predicate: str, arity: int) -> TableMapping:
    return TableMapping(predicate, tuple(f"c{i}" for i in range(1, arity + 1)))


def _ordered(ucq: Iterable[ConjunctiveQuery]) -> list[ConjunctiveQuery]:
    return sorted(ucq, key=canonical_form)


def _labels(query: ConjunctiveQuery) -> list[str]:
    labels = []
    for i, term in enumerate(query.head, start=1):
        label = term.name.lower() if term.is_variable else f"col{i}"
        if label in labels:
            label = f"col{i}"
        labels.append(label)
    return labels


def _select(
    query: ConjunctiveQuery,
    labels: Sequence[str],
    schema: Optional[Schema],
    table_map: Optional[Mapping[str, TableMapping]],
):
    first_column = {}
    conditions = []
    aliases = []
    for i, atom in enumerate(query.sorted_body()):
        if table_map is not None:
            mapping = table_map.get(atom.predicate)
            if mapping is None:
                raise EmitError(f"predicate {atom.predicate} has no table mapping")
        else:
            arity = schema.arity(atom.predicate) if schema is not None else None
            mapping = default_table(atom.predicate, arity or atom.arity)
        if len(mapping.columns) != atom.arity:
            raise EmitError(f"table {mapping.name} has {len(mapping.columns)} columns, {atom} needs {atom.arity}")
        alias = table(mapping.name, *(column(c) for c in mapping.columns)).alias(f"t{i}")
        aliases.append(alias)
        for term, name in zip(atom.args, mapping.columns):
            col = alias.c[name]
            if term.is_null:
                raise EmitError(f"{atom} contains a labeled null")
            if term.is_constant:
                conditions.append(col == literal(term.name))
            elif term in first_column:
                conditions.append(col == first_column[term])
            else:
                first_column[term] = col

    if query.is_boolean:
        projection = [literal(1).label('answer')]
    else:
        projection = [
            (first_column[t] if t.is_variable else literal(t.name)).label(label)
            for t, label in zip(query.head, labels)
        ]
    statement = select(*projection)
    if aliases:
        statement = statement.select_from(*aliases)
    if conditions:
        statement = statement.where(and_(*conditions))
    return statement


def to_sql(
    ucq: Iterable[ConjunctiveQuery],
    schema: Optional[Schema] = None,
    table_map: Optional[Mapping[str, TableMapping]] = None,
    dialect: Optional[Dialect] = None,
    head_arity: int = 0,
) -> str:
    """
    One SELECT per CQ joined by UNION.

    Atoms become aliases t0, t1, ... in canonical atom order; repeated
    variables and constants become WHERE equalities. An empty UCQ compiles
    to a SELECT that returns no rows.
    """
    queries = _ordered(ucq)
    if not queries:
        labels = ['answer'] if head_arity == 0 else [f"col{i}" for i in range(1, head_arity + 1)]
        statement = select(*(null().label(label) for label in labels)).where(false())
    else:
        arities = {len(q.head) for q in queries}
        if len(arities) > 1:
            raise EmitError(f"CQs of a union must share the head arity, got {sorted(arities)}")
        labels = _labels(queries[0])
        selects = [_select(q, labels, schema, table_map) for q in queries]
        statement = selects[0] if len(selects) == 1 else union(*selects)
    compiled = statement.compile(dialect=dialect, compile_kwargs={'literal_binds': True})
    return str(compiled).strip()


def to_datalog(ucq: Iterable[ConjunctiveQuery]) -> str:
    """One rule per CQ, re-parseable by the program parser."""
    queries = _ordered(ucq)
    if not queries:
        return "% empty rewriting\n"
    return ''.join(f"{q}.\n" for q in queries)
