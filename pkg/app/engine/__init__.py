"""Ontology-based query rewriting: TGDs, negative constraints, key dependencies and UCQ rewriting."""
from .chase_engine import Instance, KeyDependency, certain_answer, chase, check_consistency, check_kds, entails
from .classifier import ClassReport, classify
from .core_model import Atom, ConjunctiveQuery, Schema, Term, canonical_form
from .emitter import Metrics, metrics, to_datalog, to_sql
from .errors import EngineError, ParseError, TerminationError
from .normalizer import TGD, NegativeConstraint, normalize
from .optimizer import eliminate
from .parser import Program, parse_program
from .rewriter import RewriteOptions, RewriteResult, rewrite

__all__ = [
    'Atom', 'ClassReport', 'ConjunctiveQuery', 'EngineError', 'Instance', 'KeyDependency', 'Metrics',
    'NegativeConstraint', 'ParseError', 'Program', 'RewriteOptions', 'RewriteResult', 'Schema', 'TGD',
    'Term', 'TerminationError', 'canonical_form', 'certain_answer', 'chase', 'check_consistency',
    'check_kds', 'classify', 'eliminate', 'entails', 'metrics', 'normalize', 'parse_program', 'rewrite',
    'to_datalog', 'to_sql',
]
