"""Ontology routes - store ontologies, classify them, rewrite queries and chase databases"""
from flask import Blueprint, request, jsonify, current_app
from flasgger import swag_from
import hashlib
import logging
import os
from werkzeug.exceptions import NotFound, Conflict
from datetime import datetime, timezone
from app.models import Ontology, RewriteCache
from app.schemas import (
    OntologyCreateRequest, OntologyCreatedResponse, OntologyDetailResponse,
    OntologyListResponse, OntologySummary, ClassReportOut, RewriteRequest,
    RewriteResponse, ChaseRequest, ChaseResponse, DeleteResponse
)
from app.extensions import db
from app.engine.errors import EngineError, ParseError, NotLinearError, TerminationError, EmitError
from app.engine.parser import parse_program
from app.engine.pipeline import (
    EmitFormat, Toggle, attach_query, compile_text, render, resolve_options, run_chase, run_rewrite
)

logger = logging.getLogger(__name__)

# Get absolute path to specs directory
_specs_dir = os.path.join(os.path.dirname(__file__), '..', 'specs')

ontology_bp = Blueprint('ontology', __name__, url_prefix='')


def _report_out(compiled):
    return ClassReportOut(
        **compiled.report.model_dump(),
        termination=compiled.certificate,
    )


def _get_ontology(name):
    ontology = Ontology.query.filter_by(name=name).first()
    if ontology is None:
        raise NotFound(f"No ontology named {name}")
    return ontology


def _cache_key(query, options, emit):
    # rendered text keeps variable names, which appear in the cached output
    raw = f"{query}|{options.cache_key()}|{emit}"
    return hashlib.sha256(raw.encode('utf-8')).hexdigest()


@ontology_bp.route('', methods=['POST'])
@swag_from(os.path.join(_specs_dir, 'ontology_create.yaml'))
def create_ontology():
    """
    Store an ontology

    The text is parsed, normalized and classified before it is stored; the
    class report is returned. An existing ontology is only replaced when
    ``replace`` is true, which also clears its cached rewritings.
    """
    try:
        # 1. Validate the payload
        req_data = OntologyCreateRequest.model_validate(request.get_json(silent=True) or {})
        if len(req_data.text.encode('utf-8')) > current_app.config['MAX_ONTOLOGY_BYTES']:
            raise ValueError("Ontology text exceeds MAX_ONTOLOGY_BYTES")

        # 2. Compile it, rejecting parse errors before anything is stored
        compiled = compile_text(req_data.text)

        # 3. Insert or replace
        ontology = Ontology.query.filter_by(name=req_data.name).first()
        if ontology is not None and not req_data.replace:
            raise Conflict(f"Ontology {req_data.name} already exists")
        if ontology is None:
            ontology = Ontology(name=req_data.name)
            db.session.add(ontology)
        else:
            RewriteCache.query.filter_by(ontology_id=ontology.id).delete()
            ontology.updated_at = datetime.now(timezone.utc)
        ontology.text = req_data.text
        ontology.linear = compiled.report.linear
        ontology.sticky = compiled.report.sticky
        ontology.tgd_count = len(compiled.program.tgds)
        db.session.commit()

        response = OntologyCreatedResponse(name=ontology.name, report=_report_out(compiled))
        return jsonify(response.model_dump()), 201

    except (ValueError, ParseError) as ve:
        db.session.rollback()
        return jsonify({'error': str(ve)}), 400
    except Conflict as c:
        return jsonify({'error': c.description}), 409
    except Exception:
        db.session.rollback()
        logger.exception("storing ontology failed")
        return jsonify({'error': 'Internal server error'}), 500


@ontology_bp.route('', methods=['GET'])
@swag_from(os.path.join(_specs_dir, 'ontology_list.yaml'))
def list_ontologies():
    """
    List stored ontologies (paginated)
    """
    try:
        page = request.args.get('page', 1, type=int)
        per_page = request.args.get('per_page', 20, type=int)

        if page < 1 or per_page < 1 or per_page > 100:
            raise ValueError("Invalid pagination parameters provided from URL")

        paginated = Ontology.query.order_by(Ontology.name).paginate(page=page, per_page=per_page, error_out=False)
        response = OntologyListResponse(
            page=page,
            per_page=per_page,
            total=paginated.total,
            data=[OntologySummary.model_validate(row) for row in paginated.items],
        )
        return jsonify(response.model_dump(mode='json')), 200

    except ValueError as ve:
        return jsonify({'error': str(ve)}), 400
    except Exception:
        logger.exception("listing ontologies failed")
        return jsonify({'error': 'Internal server error'}), 500


@ontology_bp.route('/<name>', methods=['GET'])
@swag_from(os.path.join(_specs_dir, 'ontology_get.yaml'))
def get_ontology(name):
    """
    Get an ontology with its class report and rule counts
    """
    try:
        ontology = _get_ontology(name)
        compiled = compile_text(ontology.text)
        response = OntologyDetailResponse(
            name=ontology.name,
            text=ontology.text,
            tgds=len(compiled.program.tgds),
            ncs=len(compiled.program.ncs),
            kds=len(compiled.program.kds),
            report=_report_out(compiled),
        )
        return jsonify(response.model_dump()), 200

    except NotFound as nf:
        return jsonify({'error': nf.description}), 404
    except Exception:
        logger.exception("reading ontology %s failed", name)
        return jsonify({'error': 'Internal server error'}), 500


@ontology_bp.route('/<name>', methods=['DELETE'])
@swag_from(os.path.join(_specs_dir, 'ontology_delete.yaml'))
def delete_ontology(name):
    """
    Delete an ontology together with its cached rewritings
    """
    try:
        ontology = _get_ontology(name)
        cache_entries = len(ontology.rewrites)
        db.session.delete(ontology)
        db.session.commit()
        response = DeleteResponse(deleted=name, cache_entries=cache_entries)
        return jsonify(response.model_dump()), 200

    except NotFound as nf:
        return jsonify({'error': nf.description}), 404
    except Exception:
        db.session.rollback()
        logger.exception("deleting ontology %s failed", name)
        return jsonify({'error': 'Internal server error'}), 500


@ontology_bp.route('/<name>/check', methods=['GET'])
@swag_from(os.path.join(_specs_dir, 'ontology_check.yaml'))
def check_ontology(name):
    """
    Class report of an ontology (linear, guarded, sticky, non-conflicting)
    """
    try:
        compiled = compile_text(_get_ontology(name).text)
        return jsonify(_report_out(compiled).model_dump()), 200

    except NotFound as nf:
        return jsonify({'error': nf.description}), 404
    except Exception:
        logger.exception("checking ontology %s failed", name)
        return jsonify({'error': 'Internal server error'}), 500


@ontology_bp.route('/<name>/rewrite', methods=['POST'])
@swag_from(os.path.join(_specs_dir, 'ontology_rewrite.yaml'))
def rewrite_query(name):
    """
    Rewrite a query under an ontology (cached)

    Strategy: Cache results using RewriteCache table
    - Key: SHA-256 of the query's canonical form, the options and the output format
    - First request: rewrite synchronously and store the response
    - Subsequent requests: return the stored response with cached=true
    """
    try:
        # 1. Validate the payload and load the ontology
        req_data = RewriteRequest.model_validate(request.get_json(silent=True) or {})
        ontology = _get_ontology(name)
        compiled = compile_text(ontology.text)
        query = attach_query(compiled, req_data.query, req_data.query_name)

        # 2. Resolve options against the class report
        opts = req_data.options
        max_rounds = opts.max_rounds if opts.max_rounds is not None else current_app.config.get('DEFAULT_MAX_ROUNDS')
        options = resolve_options(
            compiled,
            elimination=Toggle(opts.elimination),
            factorization=opts.factorization,
            nc_pruning=opts.nc_pruning,
            max_rounds=max_rounds,
            trace=opts.trace,
            keep_auxiliary=opts.auxiliary == 'keep',
        )

        # 3. Check the cache
        use_cache = current_app.config.get('REWRITE_CACHE_ENABLED', True)
        key = _cache_key(query, options, req_data.emit)
        if use_cache:
            hit = RewriteCache.query.filter_by(ontology_id=ontology.id, cache_key=key).first()
            if hit:
                response = RewriteResponse.model_validate({**hit.payload, 'cached': True})
                return jsonify(response.model_dump()), 200

        # 4. Cache miss - rewrite and render
        result = run_rewrite(compiled, query, options)
        rendered = render(compiled, query, result, EmitFormat(req_data.emit))
        response = RewriteResponse(
            queries=rendered.lines,
            metrics=rendered.metrics.model_dump(),
            complete=result.complete,
            rounds=result.rounds,
            explored=result.explored,
            auxiliary_dropped=result.auxiliary_dropped,
            text=rendered.text,
            trace=[str(event) for event in result.trace],
        )

        # 5. Store for subsequent requests
        if use_cache:
            db.session.add(RewriteCache(ontology_id=ontology.id, cache_key=key, payload=response.model_dump()))
            db.session.commit()
        return jsonify(response.model_dump()), 200

    except (ValueError, ParseError, NotLinearError, EmitError) as ve:
        return jsonify({'error': str(ve)}), 400
    except NotFound as nf:
        return jsonify({'error': nf.description}), 404
    except TerminationError as te:
        return jsonify({'error': str(te)}), 422
    except EngineError as ee:
        return jsonify({'error': str(ee)}), 400
    except Exception:
        db.session.rollback()
        logger.exception("rewriting on ontology %s failed", name)
        return jsonify({'error': 'Internal server error'}), 500


@ontology_bp.route('/<name>/chase', methods=['POST'])
@swag_from(os.path.join(_specs_dir, 'ontology_chase.yaml'))
def chase_database(name):
    """
    Chase a small database with the ontology's TGDs

    Optionally checks the negative constraints and key dependencies.
    """
    try:
        req_data = ChaseRequest.model_validate(request.get_json(silent=True) or {})
        compiled = compile_text(_get_ontology(name).text)
        depth = req_data.depth if req_data.depth is not None else current_app.config['DEFAULT_CHASE_DEPTH']
        report = run_chase(compiled, parse_program(req_data.facts), depth, req_data.consistency, req_data.kds)
        response = ChaseResponse(
            facts=[f"{atom}." for atom in report.result.instance.sorted_atoms()],
            saturated=report.result.saturated,
            rounds=report.result.rounds_used,
            consistency=report.consistency.value if report.consistency is not None else None,
            kd_violations=report.kd_violations,
        )
        return jsonify(response.model_dump()), 200

    except ValueError as ve:
        return jsonify({'error': str(ve)}), 400
    except NotFound as nf:
        return jsonify({'error': nf.description}), 404
    except EngineError as ee:
        return jsonify({'error': str(ee)}), 400
    except Exception:
        logger.exception("chase on ontology %s failed", name)
        return jsonify({'error': 'Internal server error'}), 500
