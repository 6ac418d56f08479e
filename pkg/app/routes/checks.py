"""Payload checks: normalize schedules and angle sets without simulating."""
from flask import Blueprint, jsonify

from ..engine.matching import AngleSet, angle_budget, effective_schedule
from ..engine.schedule import Schedule
from ..runconfig import stable_digest
from ..utils.decorators import json_body
from ..utils.validators import validate_angles_payload, validate_schedule_payload

checks_bp = Blueprint("checks", __name__)


@checks_bp.post("/schedule")
@json_body
def check_schedule(data: dict):
    errors = validate_schedule_payload(data)
    if errors:
        return jsonify({"errors": errors}), 400

    # endpoint violations surface as ScheduleError -> 400
    sched = Schedule.from_dict(data)
    normalized = sched.to_dict()
    return jsonify({"schedule": normalized, "digest": stable_digest(normalized)})


@checks_bp.post("/angles")
@json_body
def check_angles(data: dict):
    errors = validate_angles_payload(data)
    if errors:
        return jsonify({"errors": errors}), 400

    angles = AngleSet(data["gammas"], data["betas"])
    effective = effective_schedule(angles)
    return jsonify(
        {
            "p": angles.p,
            "angle_budget": angle_budget(angles),
            "equivalent_T": float(effective["tau"].sum()),
            "steps": [
                {"q": q + 1, "tau": float(tau), "lam_eff": float(lam), "cd_strength": float(cd)}
                for q, (tau, lam, cd) in enumerate(zip(effective["tau"], effective["lam_eff"], effective["cd_strength"]))
            ],
            "digest": stable_digest(angles.to_dict()),
        }
    )
