from traces.boundary import (
    combined_operator_traces,
    operator_trace,
    operator_traces,
    pair_with_weights,
    trace_derivatives,
    trace_value,
)

__all__ = [
    "combined_operator_traces",
    "operator_trace",
    "operator_traces",
    "pair_with_weights",
    "trace_derivatives",
    "trace_value",
]
