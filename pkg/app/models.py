from datetime import datetime, timezone
from sqlalchemy import Index
from .extensions import db

class Ontology(db.Model):
    __tablename__ = 'ontologies'

    id = db.Column(db.Integer, primary_key=True)
    name = db.Column(db.String(100), unique=True, nullable=False, index=True)
    text = db.Column(db.Text, nullable=False)
    # class verdicts are stored so listings do not re-parse every program
    linear = db.Column(db.Boolean, nullable=False, default=False)
    sticky = db.Column(db.Boolean, nullable=False, default=False)
    tgd_count = db.Column(db.Integer, nullable=False, default=0)
    created_at = db.Column(db.DateTime, default=lambda: datetime.now(timezone.utc))
    updated_at = db.Column(db.DateTime, default=lambda: datetime.now(timezone.utc), onupdate=lambda: datetime.now(timezone.utc))

    # removing an ontology removes its cached rewritings
    rewrites = db.relationship('RewriteCache', backref='ontology', lazy='select', cascade='all, delete-orphan')

class RewriteCache(db.Model): #computed rewritings keyed by query canonical form + options
    __tablename__ = 'rewrite_cache'

    id = db.Column(db.Integer, primary_key=True)
    ontology_id = db.Column(db.Integer, db.ForeignKey('ontologies.id'), nullable=False, index=True)
    cache_key = db.Column(db.String(64), nullable=False)
    payload = db.Column(db.JSON, nullable=False)
    computed_at = db.Column(db.DateTime, default=lambda: datetime.now(timezone.utc))
    __table_args__ = (
        db.UniqueConstraint('ontology_id', 'cache_key', name='ux_ontology_cache_key'),
        Index('idx_rewrite_cache_key', 'cache_key'),
    )
