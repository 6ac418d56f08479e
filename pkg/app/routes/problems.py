"""Problem instance routes."""
from flask import Blueprint, jsonify, request

from ..engine.model import instance_from_spec
from ..extensions import db
from ..models import ProblemRecord
from ..runconfig import stable_digest
from ..utils.decorators import json_body
from ..utils.validators import MAX_LIMIT, validate_instance_payload

problems_bp = Blueprint("problems", __name__)


@problems_bp.get("")
def list_problems():
    kind = request.args.get("kind")
    limit = request.args.get("limit", default=50, type=int)
    if limit is None or not 1 <= limit <= MAX_LIMIT:
        return jsonify({"error": f"limit must be between 1 and {MAX_LIMIT}."}), 400

    query = ProblemRecord.query
    if kind:
        query = query.filter_by(kind=kind)
    problems = query.order_by(ProblemRecord.created_at.desc(), ProblemRecord.id.desc()).limit(limit).all()
    return jsonify({"problems": [p.to_dict() for p in problems]})


@problems_bp.get("/<int:problem_id>")
def get_problem(problem_id: int):
    problem = db.session.get(ProblemRecord, problem_id)
    if not problem:
        return jsonify({"error": "Problem not found."}), 404
    payload = problem.to_dict()
    payload["run_count"] = problem.runs.count()
    return jsonify(payload)


@problems_bp.post("")
@json_body
def register_problem(data: dict):
    """Store an instance so later CLI runs can refer to it; nothing is simulated."""
    errors = validate_instance_payload(data)
    if errors:
        return jsonify({"errors": errors}), 400

    inst = instance_from_spec(data)
    created = ProblemRecord.query.filter_by(digest=stable_digest(inst.to_spec())).first() is None
    record = ProblemRecord.get_or_create(inst)
    db.session.commit()
    return jsonify(record.to_dict()), 201 if created else 200
