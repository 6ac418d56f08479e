"""Stored command runs."""
from __future__ import annotations

import json
from datetime import datetime

from ..extensions import db
from ..runconfig import canonical_json

COMMANDS = ("alpha", "derive", "reverse", "simulate", "oracle", "sweep", "transfer")


class RunRecord(db.Model):
    __tablename__ = "runs"

    id = db.Column(db.Integer, primary_key=True)
    problem_id = db.Column(db.Integer, db.ForeignKey(
        "problems.id"), nullable=True, index=True)
    command = db.Column(db.String(16), nullable=False, index=True)
    method = db.Column(db.String(32), nullable=True)
    p = db.Column(db.Integer, nullable=True)
    total_time = db.Column(db.Float, nullable=True)
    ratio = db.Column(db.Float, nullable=True)
    total_error = db.Column(db.Float, nullable=True)
    config_json = db.Column(db.Text, nullable=False)
    config_digest = db.Column(db.String(64), nullable=False, index=True)
    result_json = db.Column(db.Text, nullable=False)
    created_at = db.Column(
        db.DateTime, default=datetime.utcnow, nullable=False, index=True)

    problem = db.relationship("ProblemRecord", back_populates="runs")

    __table_args__ = (
        db.CheckConstraint("p IS NULL OR p >= 1", name="ck_runs_p_positive"),
        db.CheckConstraint("total_time IS NULL OR total_time > 0", name="ck_runs_total_time_positive"),
    )

    @classmethod
    def from_result(cls, config, result: dict, problem=None, method: str | None = None,
                    p: int | None = None, total_time: float | None = None,
                    ratio: float | None = None, total_error: float | None = None) -> "RunRecord":
        return cls(
            problem=problem,
            command=config.command,
            method=method,
            p=p,
            total_time=total_time,
            ratio=ratio,
            total_error=total_error,
            config_json=canonical_json(config.to_dict()),
            config_digest=config.digest,
            result_json=canonical_json(result),
        )

    def to_dict(self, include_result: bool = False) -> dict:
        payload = {
            "id": self.id,
            "problem_id": self.problem_id,
            "command": self.command,
            "method": self.method,
            "p": self.p,
            "total_time": self.total_time,
            "ratio": self.ratio,
            "total_error": self.total_error,
            "config_digest": self.config_digest,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }
        if include_result:
            payload["config"] = json.loads(self.config_json)
            payload["result"] = json.loads(self.result_json)
        return payload

    def __repr__(self) -> str:
        return f"<RunRecord {self.id} {self.command}>"
