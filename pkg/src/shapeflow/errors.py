"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations


class ShapeFlowError(Exception):
    """Base class for numeric failures. ``code`` is a stable machine-readable tag."""

    code = "numeric_failure"

    def __init__(self, message: str, tau: float | None = None) -> None:
        super().__init__(message)
        self.tau = tau

    def to_json(self) -> dict:
        out = {"code": self.code, "message": str(self)}
        if self.tau is not None:
            out["tau"] = self.tau
        return out


class SingularError(ShapeFlowError):
    code = "singular"


class DegeneratePointError(ShapeFlowError):
    code = "degenerate_point"


class DegenerateChartError(ShapeFlowError):
    code = "degenerate_chart"


class ProjectionError(ShapeFlowError):
    code = "projection_failure"

    def __init__(self, message: str, residual: float, tau: float | None = None) -> None:
        super().__init__(message, tau)
        self.residual = residual


class DegenerateShapeError(ShapeFlowError):
    code = "degenerate_shape"


class SpanConditionError(ShapeFlowError):
    code = "span_condition"
