"""Parse, normalize, classify and rewrite: the sequence shared by the CLI and the HTTP routes."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .chase_engine import (
    ChaseResult,
    Consistency,
    KeyDependency,
    chase,
    check_consistency,
    key_violations,
)
from .classifier import ClassReport, classify, termination_certificate
from .core_model import ConjunctiveQuery, Schema
from .emitter import Metrics, metrics, to_datalog, to_sql
from .errors import ArityError, EngineError
from .normalizer import TGD, normalize
from .parser import Program, parse_program
from .rewriter import RewriteOptions, RewriteResult, rewrite

logger = logging.getLogger(__name__)


class Toggle(str, Enum):
    ON = 'on'
    OFF = 'off'
    AUTO = 'auto'


class EmitFormat(str, Enum):
    UCQ = 'ucq'
    SQL = 'sql'
    DATALOG = 'datalog'


@dataclass(frozen=True)
class CompiledOntology:
    """A parsed program together with its normal form and class report."""
    program: Program
    tgds: list[TGD]
    schema: Schema
    report: ClassReport

    @property
    def certificate(self) -> Optional[str]:
        return termination_certificate(self.tgds)

    @property
    def kds(self) -> list[KeyDependency]:
        return self.program.kds


def compile_program(program: Program) -> CompiledOntology:
    tgds, schema = normalize(program.tgds, program.schema)
    # KD verdicts concern the user's rules, not the auxiliary chains
    report = classify(tgds, ())
    if program.kds:
        full = classify(program.tgds, program.kds)
        report = report.model_copy(update={
            'non_conflicting': full.non_conflicting,
            'violations': report.violations + [v for v in full.violations if v.property.startswith('non-conflicting')],
        })
    logger.info("compiled %d TGDs into %d normal TGDs: %s", len(program.tgds), len(tgds), report.summary())
    return CompiledOntology(program, tgds, schema, report)


def compile_text(text: str) -> CompiledOntology:
    return compile_program(parse_program(text))


def attach_query(compiled: CompiledOntology, query_text: str, name: Optional[str] = None) -> ConjunctiveQuery:
    """Parse a query file against the ontology's schema."""
    queries = parse_program(query_text)
    try:
        compiled.program.schema.merge(queries.schema)
    except ValueError as exc:
        raise ArityError(str(exc)) from exc
    return queries.query(name)


def resolve_options(
    compiled: CompiledOntology,
    elimination: Toggle = Toggle.AUTO,
    factorization: bool = True,
    nc_pruning: bool = True,
    max_rounds: Optional[int] = None,
    trace: bool = False,
    keep_auxiliary: bool = False,
) -> RewriteOptions:
    if elimination is Toggle.AUTO:
        eliminate = compiled.report.linear
    else:
        eliminate = elimination is Toggle.ON
    return RewriteOptions(
        factorization=factorization,
        elimination=eliminate,
        nc_pruning=nc_pruning,
        max_rounds=max_rounds,
        trace=trace,
        keep_auxiliary=keep_auxiliary,
    )


def run_rewrite(compiled: CompiledOntology, query: ConjunctiveQuery, options: RewriteOptions) -> RewriteResult:
    if compiled.report.non_conflicting is False:
        logger.warning("key dependencies conflict with the TGDs; the rewriting ignores them")
    unknown = query.predicates() - set(compiled.schema.arities)
    if unknown:
        logger.warning("query mentions predicates unknown to the ontology: %s", ', '.join(sorted(unknown)))
    return rewrite(query, compiled.tgds, compiled.program.ncs, options, compiled.schema)


@dataclass(frozen=True)
class RenderedRewriting:
    lines: list[str]
    metrics: Metrics
    text: Optional[str]


def render(compiled: CompiledOntology, query: ConjunctiveQuery, result: RewriteResult, emit: EmitFormat) -> RenderedRewriting:
    lines = [str(q) for q in result.queries]
    text = None
    if emit is EmitFormat.SQL:
        text = to_sql(result.queries, compiled.schema, compiled.program.table_map(), head_arity=len(query.head))
    elif emit is EmitFormat.DATALOG:
        text = to_datalog(result.queries)
    return RenderedRewriting(lines, metrics(result.queries), text)


@dataclass(frozen=True)
class ChaseReport:
    result: ChaseResult
    consistency: Optional[Consistency] = None
    kd_violations: Optional[list[str]] = None


def run_chase(
    compiled: CompiledOntology,
    facts: Program,
    depth: int,
    consistency: bool = False,
    kds: bool = False,
) -> ChaseReport:
    if facts.facts is None:
        raise EngineError("the data file contains no facts")
    try:
        compiled.program.schema.merge(facts.schema)
    except ValueError as exc:
        raise ArityError(str(exc)) from exc
    result = chase(facts.facts, compiled.tgds, depth)
    verdict = None
    if consistency:
        verdict = check_consistency(facts.facts, compiled.tgds, compiled.program.ncs, depth)
    violations = None
    if kds:
        violations = [nc.name for nc in key_violations(facts.facts, compiled.kds)]
    return ChaseReport(result, verdict, violations)
