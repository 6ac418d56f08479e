"""Stored problem instances."""
from __future__ import annotations

import json
from datetime import datetime

from ..extensions import db
from ..runconfig import canonical_json, stable_digest


class ProblemRecord(db.Model):
    __tablename__ = "problems"

    id = db.Column(db.Integer, primary_key=True)
    kind = db.Column(db.String(32), nullable=False, index=True)
    n_qubits = db.Column(db.Integer, nullable=False)
    spec_json = db.Column(db.Text, nullable=False)
    digest = db.Column(db.String(64), nullable=False, unique=True, index=True)
    obj_max = db.Column(db.Float, nullable=True)
    created_at = db.Column(
        db.DateTime, default=datetime.utcnow, nullable=False)

    runs = db.relationship("RunRecord", back_populates="problem", lazy="dynamic")

    __table_args__ = (
        db.CheckConstraint("n_qubits >= 1", name="ck_problems_n_qubits_positive"),
    )

    @classmethod
    def get_or_create(cls, inst) -> "ProblemRecord":
        """Row for a ``ProblemInstance``, keyed on the digest of its spec."""
        spec = inst.to_spec()
        digest = stable_digest(spec)
        record = cls.query.filter_by(digest=digest).first()
        if record is None:
            record = cls(
                kind=inst.kind,
                n_qubits=inst.n_qubits,
                spec_json=canonical_json(spec),
                digest=digest,
                obj_max=inst.obj_max,
            )
            db.session.add(record)
            db.session.flush()
        return record

    @property
    def spec(self) -> dict:
        return json.loads(self.spec_json)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "n_qubits": self.n_qubits,
            "spec": self.spec,
            "digest": self.digest,
            "obj_max": self.obj_max,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }

    def __repr__(self) -> str:
        return f"<ProblemRecord {self.kind} n={self.n_qubits}>"
