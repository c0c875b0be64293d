"""Syntactic class membership tests for TGD sets."""
from __future__ import annotations

import logging
from collections import defaultdict
from typing import Iterable, Optional, Sequence

from pydantic import BaseModel, Field

from .core_model import Position, Term
from .errors import UnsupportedClassError
from .normalizer import TGD

logger = logging.getLogger(__name__)


class Violation(BaseModel):
    rule: str = Field(..., description="Name (or text) of the offending rule")
    property: str = Field(..., description="Class the rule violates")
    detail: str = Field(..., description="Human-readable reason")

    def __str__(self):
        return f"{self.rule}: not {self.property} ({self.detail})"


class Verdict(BaseModel):
    """Outcome of one membership test; truthy when the property holds."""
    holds: bool
    violations: list[Violation] = Field(default_factory=list)

    def __bool__(self):
        return self.holds


class ClassReport(BaseModel):
    linear: bool
    guarded: bool
    sticky: bool
    non_conflicting: Optional[bool] = Field(None, description="Only set when key dependencies are declared")
    violations: list[Violation] = Field(default_factory=list)

    def summary(self) -> str:
        flags = [
            f"linear={str(self.linear).lower()}",
            f"guarded={str(self.guarded).lower()}",
            f"sticky={str(self.sticky).lower()}",
        ]
        if self.non_conflicting is not None:
            flags.append(f"non_conflicting={str(self.non_conflicting).lower()}")
        return ' '.join(flags)


def _label(sigma: TGD) -> str:
    return sigma.name or str(sigma)


def _verdict(violations: list[Violation]) -> Verdict:
    return Verdict(holds=not violations, violations=violations)


def is_linear(sigmas: Iterable[TGD]) -> Verdict:
    violations = [
        Violation(rule=_label(s), property='linear', detail=f"{len(s.body)} body atoms")
        for s in sigmas if not s.is_linear
    ]
    return _verdict(violations)


def is_guarded(sigmas: Iterable[TGD]) -> Verdict:
    violations = []
    for sigma in sigmas:
        needed = set(sigma.body_variables())
        if not any(needed <= atom.variables() for atom in sigma.body):
            violations.append(Violation(
                rule=_label(sigma), property='guarded',
                detail=f"no body atom holds all of {', '.join(sorted(v.name for v in needed))}",
            ))
    return _verdict(violations)


def sticky_marking(sigmas: Sequence[TGD]) -> list[set[Term]]:
    """
    Marked body variables per rule, after the propagation fixpoint.

    Initially a body variable is marked when some head atom lacks it.
    Then, whenever a marked variable occurs at position p in some body, every
    rule whose head holds a variable V at p gets V marked in its body.
    """
    body_vars = [set(sigma.body_variables()) for sigma in sigmas]
    marked: list[set[Term]] = []
    for sigma, in_body in zip(sigmas, body_vars):
        marked.append({v for v in in_body if any(v not in atom.variables() for atom in sigma.head)})

    # head positions -> (rule index, variable) pairs
    producers: dict[Position, list[tuple[int, Term]]] = defaultdict(list)
    for i, sigma in enumerate(sigmas):
        for atom in sigma.head:
            for j, term in enumerate(atom.args, start=1):
                if term.is_variable:
                    producers[Position(atom.predicate, j)].append((i, term))

    changed = True
    while changed:
        changed = False
        for i, sigma in enumerate(sigmas):
            for atom in sigma.body:
                for j, term in enumerate(atom.args, start=1):
                    if term not in marked[i]:
                        continue
                    for k, variable in producers.get(Position(atom.predicate, j), ()):
                        if variable in body_vars[k] and variable not in marked[k]:
                            marked[k].add(variable)
                            changed = True
    return marked


def is_sticky(sigmas: Iterable[TGD]) -> Verdict:
    sigmas = list(sigmas)
    marking = sticky_marking(sigmas)
    violations = []
    for sigma, marked in zip(sigmas, marking):
        for variable in sorted(marked, key=lambda v: v.name):
            occurrences = sum(atom.args.count(variable) for atom in sigma.body)
            if occurrences > 1:
                violations.append(Violation(
                    rule=_label(sigma), property='sticky',
                    detail=f"marked variable {variable} occurs {occurrences} times in the body",
                ))
    return _verdict(violations)


def is_sticky_join(sigmas: Iterable[TGD]) -> Verdict:
    raise UnsupportedClassError(
        "sticky-join membership is PSPACE-complete and is not decided; "
        "pass an explicit round bound to rewrite such sets"
    )


def is_non_conflicting(sigmas: Iterable[TGD], kds) -> Verdict:
    """
    Check every (TGD, key dependency) pair for the non-conflicting condition.

    A pair conflicts when the TGD's head uses the keyed relation, the head
    positions of its frontier variables strictly include the key, or an
    existential variable repeats in the head.
    """
    violations = []
    for sigma in sigmas:
        frontier = set(sigma.frontier)
        existentials = sigma.existentials
        for kd in kds:
            for atom in sigma.head:
                if atom.predicate != kd.predicate:
                    continue
                universal = {i for i, t in enumerate(atom.args, start=1) if t in frontier}
                key = set(kd.key_positions)
                repeated = [z for z in existentials if sum(a.args.count(z) for a in sigma.head) > 1]
                if universal > key or repeated:
                    reason = (
                        f"frontier positions {sorted(universal)} strictly contain key {sorted(key)}"
                        if universal > key else f"existential {repeated[0]} repeats in the head"
                    )
                    violations.append(Violation(
                        rule=_label(sigma), property=f'non-conflicting with key({kd.predicate})', detail=reason,
                    ))
    return _verdict(violations)


def termination_certificate(sigmas: Iterable[TGD]) -> Optional[str]:
    """Name of a class guaranteeing that rewriting terminates, or None."""
    sigmas = list(sigmas)
    if is_linear(sigmas):
        return 'linear'
    if is_sticky(sigmas):
        return 'sticky'
    return None


def classify(sigmas: Iterable[TGD], kds=()) -> ClassReport:
    sigmas = list(sigmas)
    kds = list(kds)
    linear, guarded, sticky = is_linear(sigmas), is_guarded(sigmas), is_sticky(sigmas)
    violations = linear.violations + guarded.violations + sticky.violations
    non_conflicting = None
    if kds:
        verdict = is_non_conflicting(sigmas, kds)
        non_conflicting = verdict.holds
        violations += verdict.violations
    report = ClassReport(
        linear=linear.holds,
        guarded=guarded.holds,
        sticky=sticky.holds,
        non_conflicting=non_conflicting,
        violations=violations,
    )
    logger.debug("classified %d TGDs: %s", len(sigmas), report.summary())
    return report
