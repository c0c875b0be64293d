"""
Parser for ontology, query and fact files.

Statements end with a period; ``%`` starts a comment::

    @relation stock_portf(company, stock, amount).
    s1: stock_portf(X,Y,Z) -> company(X,V,W).
    d1: legal_person(X), fin_ins(X) -> false.
    key(stock) = [1].
    q(A,B) :- stock_portf(A,B,C).
    stock_portf(acme, s42, '1000').
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .chase_engine import NEQ, Instance, KeyDependency
from .core_model import RESERVED_PREFIX, Atom, ConjunctiveQuery, Schema, Term
from .emitter import TableMapping
from .errors import ArityError, ParseError, ReservedSymbolError, UnsafeQueryError
from .normalizer import AUX_PREFIX, TGD, NegativeConstraint

RESERVED_PREDICATES = frozenset({NEQ, 'false'})

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>->)
  | (?P<implied>:-)
  | (?P<string>'(?:[^'\n]|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>[0-9]+)
  | (?P<punct>[(),.:=\[\]@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        if kind == 'newline':
            line, line_start = line + 1, match.end()
        elif kind not in ('ws', 'comment'):
            tokens.append(Token(kind, match.group(), line, pos - line_start + 1))
        pos = match.end()
    tokens.append(Token('eof', '', line, pos - line_start + 1))
    return tokens


@dataclass
class Program:
    schema: Schema = field(default_factory=Schema)
    tgds: list[TGD] = field(default_factory=list)
    ncs: list[NegativeConstraint] = field(default_factory=list)
    kds: list[KeyDependency] = field(default_factory=list)
    queries: list[tuple[str, ConjunctiveQuery]] = field(default_factory=list)
    facts: Optional[Instance] = None
    tables: dict[str, TableMapping] = field(default_factory=dict)

    def query(self, name: Optional[str] = None) -> ConjunctiveQuery:
        if not self.queries:
            raise ParseError("no query found")
        if name is None:
            return self.queries[0][1]
        for query_name, query in self.queries:
            if query_name == name:
                return query
        raise ParseError(f"no query named {name}")

    def table_map(self) -> Optional[dict[str, TableMapping]]:
        """Declared tables plus defaults for undeclared predicates; None when nothing is declared."""
        if not self.tables:
            return None
        mapping = {p: TableMapping(p, tuple(f"c{i}" for i in range(1, a + 1))) for p, a in self.schema.arities.items()}
        mapping.update(self.tables)
        return mapping

    def merge(self, other: 'Program') -> 'Program':
        """Combine two separately parsed files (e.g. an ontology and a query file)."""
        try:
            schema = self.schema.merge(other.schema)
        except ValueError as exc:
            raise ArityError(str(exc)) from exc
        for kd in self.kds + other.kds:
            arity = schema.arity(kd.predicate)
            if arity is not None and max(kd.key_positions) > arity:
                raise ArityError(f"key position {max(kd.key_positions)} exceeds arity {arity} of {kd.predicate}")
        facts = None
        if self.facts is not None or other.facts is not None:
            facts = Instance(list(self.facts or ()) + list(other.facts or ()))
        return Program(
            schema=schema,
            tgds=self.tgds + other.tgds,
            ncs=self.ncs + other.ncs,
            kds=self.kds + other.kds,
            queries=self.queries + other.queries,
            facts=facts,
            tables={**self.tables, **other.tables},
        )


class _Parser:

    def __init__(self, text: str, allow_auxiliary: bool):
        self.tokens = tokenize(text)
        self.pos = 0
        self.allow_auxiliary = allow_auxiliary
        self.program = Program()
        self.facts: list[Atom] = []
        self.query_heads: set[str] = set()
        self.key_tokens: list[tuple[KeyDependency, Token]] = []

    # token helpers

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.current
        self.pos += 1
        return token

    def error(self, message: str, token: Optional[Token] = None, kind=ParseError) -> ParseError:
        token = token or self.current
        return kind(message, token.line, token.column)

    def expect(self, text: str) -> Token:
        if self.current.text != text or self.current.kind == 'string':
            found = self.current.text or 'end of input'
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.current.kind != kind:
            raise self.error(f"expected {what}, found {self.current.text or 'end of input'!r}")
        return self.advance()

    # grammar

    def parse(self) -> Program:
        while self.current.kind != 'eof':
            self.statement()
        for kd, token in self.key_tokens:
            arity = self.program.schema.arity(kd.predicate)
            if arity is not None and max(kd.key_positions) > arity:
                raise self.error(
                    f"key position {max(kd.key_positions)} exceeds arity {arity} of {kd.predicate}", token, ArityError,
                )
        if self.facts:
            self.program.facts = Instance(self.facts)
        return self.program

    def statement(self) -> None:
        token = self.current
        if token.text == '@':
            self.relation_declaration()
        elif token.text == 'key' and self.peek().text == '(' and self.peek(3).text == ')' and self.peek(4).text == '=':
            self.key_dependency()
        elif token.kind == 'ident' and self.peek().text == ':':
            self.advance()
            self.advance()
            self.rule(token.text)
        else:
            self.rule_query_or_fact()

    def relation_declaration(self) -> None:
        self.expect('@')
        keyword = self.expect_kind('ident', "'relation'")
        if keyword.text != 'relation':
            raise self.error(f"unknown declaration @{keyword.text}", keyword)
        name = self.expect_kind('ident', 'relation name')
        self.check_predicate(name)
        self.expect('(')
        columns = []
        if self.current.text != ')':
            columns.append(self.expect_kind('ident', 'column name').text)
            while self.current.text == ',':
                self.advance()
                columns.append(self.expect_kind('ident', 'column name').text)
        self.expect(')')
        self.expect('.')
        if len(set(columns)) != len(columns):
            raise self.error(f"duplicate column names in @relation {name.text}", name)
        self.declare(name.text, len(columns), name)
        self.program.tables[name.text] = TableMapping(name.text, tuple(columns))

    def key_dependency(self) -> None:
        start = self.expect('key')
        self.expect('(')
        name = self.expect_kind('ident', 'predicate name')
        self.expect(')')
        self.expect('=')
        self.expect('[')
        positions = [int(self.expect_kind('number', 'key position').text)]
        while self.current.text == ',':
            self.advance()
            positions.append(int(self.expect_kind('number', 'key position').text))
        self.expect(']')
        self.expect('.')
        try:
            kd = KeyDependency(name.text, frozenset(positions))
        except ValueError as exc:
            raise self.error(str(exc), start) from exc
        self.key_tokens.append((kd, start))
        self.program.kds.append(kd)

    def rule(self, name: str) -> None:
        start = self.current
        body = self.atom_list()
        self.expect('->')
        self.finish_rule(body, name, start)

    def finish_rule(self, body: list[Atom], name: str, start: Token) -> None:
        if self.current.text == 'false' and self.peek().text == '.':
            self.advance()
            self.expect('.')
            self.program.ncs.append(NegativeConstraint(tuple(body), name or f"nc{len(self.program.ncs) + 1}"))
            return
        head = self.atom_list()
        self.expect('.')
        self.program.tgds.append(TGD(tuple(body), tuple(head), name or f"tgd{len(self.program.tgds) + 1}"))

    def rule_query_or_fact(self) -> None:
        start = self.current
        first = self.atom(register=False)
        if self.current.text == ':-':
            self.advance()
            body = self.atom_list()
            self.expect('.')
            self.check_query_head(first, start)
            try:
                query = ConjunctiveQuery(first.predicate, first.args, frozenset(body))
            except UnsafeQueryError as exc:
                raise self.error(str(exc), start) from exc
            self.program.queries.append((first.predicate, query))
            return
        self.register(first, start)
        if self.current.text == '.':
            self.advance()
            if first.variables():
                raise self.error(f"fact {first} must be ground", start)
            self.facts.append(first)
            return
        body = [first]
        while self.current.text == ',':
            self.advance()
            body.append(self.atom())
        self.expect('->')
        self.finish_rule(body, '', start)

    def atom_list(self) -> list[Atom]:
        atoms = [self.atom()]
        while self.current.text == ',':
            self.advance()
            atoms.append(self.atom())
        return atoms

    def atom(self, register: bool = True) -> Atom:
        start = self.current
        name = self.expect_kind('ident', 'predicate name')
        self.expect('(')
        args = []
        if self.current.text != ')':
            args.append(self.term())
            while self.current.text == ',':
                self.advance()
                args.append(self.term())
        self.expect(')')
        atom = Atom(name.text, tuple(args))
        if register:
            self.register(atom, start)
        return atom

    def term(self) -> Term:
        token = self.current
        if token.kind == 'string':
            self.advance()
            return Term.constant(token.text[1:-1].replace("''", "'"))
        if token.kind == 'number':
            self.advance()
            return Term.constant(token.text)
        if token.kind == 'ident':
            self.advance()
            if token.text.startswith(RESERVED_PREFIX):
                raise self.error(f"variable {token.text} uses the reserved prefix '_'", token, ReservedSymbolError)
            if token.text[0].isupper():
                return Term.variable(token.text)
            return Term.constant(token.text)
        raise self.error(f"expected a term, found {token.text or 'end of input'!r}")

    # schema bookkeeping

    def check_predicate(self, token: Token) -> None:
        name = token.text
        if name in RESERVED_PREDICATES:
            raise self.error(f"predicate {name} is reserved", token, ReservedSymbolError)
        if name.startswith(RESERVED_PREFIX):
            if not (self.allow_auxiliary and name.startswith(AUX_PREFIX)):
                raise self.error(f"predicate {name} uses the reserved prefix '_'", token, ReservedSymbolError)

    def declare(self, predicate: str, arity: int, token: Token) -> None:
        if predicate in self.query_heads:
            raise self.error(f"{predicate} is already used as a query name", token, ArityError)
        known = self.program.schema.arity(predicate)
        if known is not None and known != arity:
            raise self.error(f"predicate {predicate} used with arity {arity}, declared {known}", token, ArityError)
        auxiliary = predicate.startswith(AUX_PREFIX)
        self.program.schema = self.program.schema.declare(predicate, arity, auxiliary=auxiliary)

    def register(self, atom: Atom, token: Token) -> None:
        self.check_predicate(token)
        self.declare(atom.predicate, atom.arity, token)

    def check_query_head(self, head: Atom, token: Token) -> None:
        if head.predicate in RESERVED_PREDICATES or head.predicate.startswith(RESERVED_PREFIX):
            raise self.error(f"query name {head.predicate} is reserved", token, ReservedSymbolError)
        if head.predicate in self.program.schema:
            raise self.error(f"query name {head.predicate} clashes with a relation", token, ArityError)
        self.query_heads.add(head.predicate)


def parse_program(text: str, allow_auxiliary: bool = False) -> Program:
    """Parse ontology, query or fact text; ``allow_auxiliary`` admits normalization predicates."""
    return _Parser(text, allow_auxiliary).parse()


def parse_query(text: str, schema: Optional[Schema] = None) -> ConjunctiveQuery:
    program = parse_program(text, allow_auxiliary=True)
    if schema is not None:
        try:
            schema.merge(program.schema)
        except ValueError as exc:
            raise ArityError(str(exc)) from exc
    return program.query()


def parse_atoms(text: str) -> list[Atom]:
    """Parse a fact file into its ground atoms."""
    program = parse_program(text)
    return list(program.facts or ())


def parse_queries(text: str) -> list[ConjunctiveQuery]:
    return [query for _, query in parse_program(text, allow_auxiliary=True).queries]


def load_program(paths: Iterable[str]) -> Program:
    program = Program()
    for path in paths:
        with open(path, encoding='utf-8') as handle:
            program = program.merge(parse_program(handle.read()))
    return program
