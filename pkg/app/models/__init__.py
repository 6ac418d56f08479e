"""Model exports."""
from .problem import ProblemRecord
from .run import COMMANDS, RunRecord

__all__ = ["ProblemRecord", "RunRecord", "COMMANDS"]
