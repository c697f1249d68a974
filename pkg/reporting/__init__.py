from reporting.artifacts import (
    SCHEMA_VERSION,
    file_checksum,
    render_inverse_summary_markdown,
    write_json,
    write_markdown,
    write_series_csv,
    write_state_csv,
    write_table_csv,
    write_trajectory_csv,
)

__all__ = [
    "SCHEMA_VERSION",
    "file_checksum",
    "render_inverse_summary_markdown",
    "write_json",
    "write_markdown",
    "write_series_csv",
    "write_state_csv",
    "write_table_csv",
    "write_trajectory_csv",
]
