from problems.model import (
    BoundaryConditionSpec,
    MeasurementSpec,
    OperatorSpec,
    ProblemSamples,
    ProblemSpec,
    ProblemValidationError,
    QTrajectory,
    StateField,
)

__all__ = [
    "BoundaryConditionSpec",
    "MeasurementSpec",
    "OperatorSpec",
    "ProblemSamples",
    "ProblemSpec",
    "ProblemValidationError",
    "QTrajectory",
    "StateField",
]
