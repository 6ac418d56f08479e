"""Error and warning types shared by the engine, the CLI and the JSON API."""
from __future__ import annotations


class CdqaoaError(Exception):
    """Base class for every failure the toolkit reports on purpose."""

    exit_code = 1
    http_status = 500

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        payload = {"error": self.message, "kind": type(self).__name__}
        if self.context:
            payload["context"] = self.context
        return payload


# Validation failures: bad input, exit code 2.


class ValidationError(CdqaoaError):
    exit_code = 2
    http_status = 400


class DimensionError(ValidationError):
    """Operands act on different numbers of qubits."""


class InstanceError(ValidationError):
    """Malformed problem instance (odd ring, duplicate edges, ...)."""


class ScheduleError(ValidationError):
    """Schedule outside its domain or violating endpoint conditions."""


class DegenerateStepError(ValidationError):
    """An angle pair with gamma + beta <= 0 has no step duration."""


# Numerical-contract failures: the math refuses, exit code 3.


class ContractError(CdqaoaError):
    exit_code = 3
    http_status = 422


class ResourceLimitError(ContractError):
    """Dense or statevector representation over the configured qubit cap."""


class DegenerateCommutatorError(ContractError):
    """[H_T, H_S] vanishes, so there is no counterdiabatic direction."""


class EdgeSingularityError(ContractError):
    """Closed-form step requested at a schedule endpoint."""


class NoMatchingError(ContractError):
    """The commutator coefficient has the wrong sign for a positive step."""


class InfeasibleDepthError(ContractError):
    """No total time inside the search bracket realizes the requested depth."""


class StepUnderflowError(ContractError):
    """The integrator could not reach its tolerance above the minimum step."""


class UnknownOptimumError(ContractError):
    """Approximation ratio requested for an instance without a known optimum."""


class OracleFailure(ContractError):
    """A dense-matrix oracle disagreed with the symbolic result."""


class CdqaoaWarning(UserWarning):
    pass


class TriangleWarning(CdqaoaWarning):
    pass


class NonSmoothAnglesWarning(CdqaoaWarning):
    pass


class MonotoneClampWarning(CdqaoaWarning):
    pass


class DivergenceWarning(CdqaoaWarning):
    pass
