"""Stored run routes."""
from flask import Blueprint, jsonify, request
from sqlalchemy import func

from ..extensions import db
from ..models import ProblemRecord, RunRecord
from ..utils.validators import validate_run_filters

runs_bp = Blueprint("runs", __name__)


@runs_bp.get("")
def list_runs():
    filters, errors = validate_run_filters(request.args)
    if errors:
        return jsonify({"errors": errors}), 400

    query = RunRecord.query
    if "command" in filters:
        query = query.filter_by(command=filters["command"])
    if "problem_id" in filters:
        query = query.filter_by(problem_id=filters["problem_id"])
    runs = query.order_by(RunRecord.created_at.desc(), RunRecord.id.desc()).limit(filters["limit"]).all()
    return jsonify({"runs": [r.to_dict() for r in runs]})


@runs_bp.get("/summary")
def runs_summary():
    """Best stored ratio per problem and command."""
    rows = (
        db.session.query(
            RunRecord.problem_id,
            RunRecord.command,
            func.max(RunRecord.ratio).label("best_ratio"),
            func.count(RunRecord.id).label("runs"),
        )
        .filter(RunRecord.problem_id.isnot(None))
        .group_by(RunRecord.problem_id, RunRecord.command)
        .order_by(RunRecord.problem_id, RunRecord.command)
        .all()
    )
    problems = {p.id: p for p in ProblemRecord.query.filter(
        ProblemRecord.id.in_({r.problem_id for r in rows})).all()} if rows else {}

    summary = []
    for row in rows:
        problem = problems.get(row.problem_id)
        summary.append(
            {
                "problem_id": row.problem_id,
                "kind": problem.kind if problem else None,
                "n_qubits": problem.n_qubits if problem else None,
                "command": row.command,
                "best_ratio": row.best_ratio,
                "runs": row.runs,
            }
        )
    return jsonify({"summary": summary})


@runs_bp.get("/<int:run_id>")
def get_run(run_id: int):
    run = db.session.get(RunRecord, run_id)
    if not run:
        return jsonify({"error": "Run not found."}), 404
    return jsonify(run.to_dict(include_result=True))
