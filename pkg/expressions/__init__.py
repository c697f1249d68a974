from expressions.fields import (
    FieldCoverageError,
    FieldSpec,
    Table,
    sample_field,
    sample_series,
    sample_spatial,
)
from expressions.parser import (
    EvaluationError,
    Expr,
    ExpressionSyntaxError,
    evaluate,
    parse,
    to_text,
)

__all__ = [
    "EvaluationError",
    "Expr",
    "ExpressionSyntaxError",
    "FieldCoverageError",
    "FieldSpec",
    "Table",
    "evaluate",
    "parse",
    "sample_field",
    "sample_series",
    "sample_spatial",
    "to_text",
]
