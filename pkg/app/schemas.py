from pydantic import BaseModel, ConfigDict, Field, field_validator
from datetime import datetime
from typing import Optional, List, Literal
"""
Pydantic models validating request payloads and serialising responses of the ontology service
"""


# ---Ontology Schemas---
class OntologyCreateRequest(BaseModel):
    """Store a new ontology (POST)"""
    name: str = Field(..., min_length=1, max_length=100, description="Unique ontology name")
    text: str = Field(..., min_length=1, description="Ontology program text")
    replace: bool = Field(False, description="Overwrite an existing ontology of the same name")

    @field_validator('name')
    @classmethod
    def name_is_slug(cls, v):
        if not all(c.isalnum() or c in '-_.' for c in v):
            raise ValueError('Name may only contain letters, digits, "-", "_" and "."')
        return v


class ViolationOut(BaseModel):
    rule: str
    property: str
    detail: str


class ClassReportOut(BaseModel):
    """Class membership of the normalized TGD set"""
    linear: bool
    guarded: bool
    sticky: bool
    non_conflicting: Optional[bool] = None
    termination: Optional[str] = None
    violations: List[ViolationOut] = []


class OntologySummary(BaseModel):
    """One row of the ontology listing"""
    model_config = ConfigDict(from_attributes=True)

    name: str
    linear: bool
    sticky: bool
    tgd_count: int
    updated_at: datetime


class OntologyListResponse(BaseModel):
    """Paginated list of ontologies."""
    page: int
    per_page: int
    total: int
    data: List[OntologySummary]


class OntologyDetailResponse(BaseModel):
    name: str
    text: str
    tgds: int
    ncs: int
    kds: int
    report: ClassReportOut


class OntologyCreatedResponse(BaseModel):
    name: str
    report: ClassReportOut


# ---Rewrite Schemas---
class RewriteOptionsIn(BaseModel):
    """Rewrite switches; elimination 'auto' means on exactly for linear sets"""
    model_config = ConfigDict(extra='forbid')

    elimination: Literal['on', 'off', 'auto'] = 'auto'
    factorization: bool = True
    nc_pruning: bool = True
    max_rounds: Optional[int] = Field(None, ge=1)
    auxiliary: Literal['keep', 'drop'] = 'drop'
    trace: bool = False


class RewriteRequest(BaseModel):
    query: str = Field(..., min_length=1, description="Query text, e.g. q(A) :- p(A,B).")
    query_name: Optional[str] = None
    options: RewriteOptionsIn = RewriteOptionsIn()
    emit: Literal['ucq', 'sql', 'datalog'] = 'ucq'


class MetricsOut(BaseModel):
    size: int
    length: int
    width: int


class RewriteResponse(BaseModel):
    """Rewriting of one query (cached or freshly computed)"""
    queries: List[str]
    metrics: MetricsOut
    complete: bool
    rounds: int
    explored: int
    auxiliary_dropped: int
    text: Optional[str] = None
    trace: List[str] = []
    cached: bool = False


# ---Chase Schemas---
class ChaseRequest(BaseModel):
    facts: str = Field(..., min_length=1, description="Ground facts, e.g. p(a).")
    depth: Optional[int] = Field(None, ge=0, le=1000)
    consistency: bool = False
    kds: bool = False


class ChaseResponse(BaseModel):
    facts: List[str]
    saturated: bool
    rounds: int
    consistency: Optional[str] = None
    kd_violations: Optional[List[str]] = None


# ---Delete Schema---
class DeleteResponse(BaseModel):
    """Response after deletion"""
    deleted: str
    cache_entries: int = Field(..., description="Number of cached rewritings removed")
