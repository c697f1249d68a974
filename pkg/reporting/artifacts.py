"""CSV, JSON and markdown artifacts of a run."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.17g"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def write_json(path, payload) -> Path:
    """Sorted keys, non-finite numbers as null, trailing newline."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, allow_nan=False)
    target.write_text(text + "\n", encoding="utf-8")
    return target


def _write_frame(path, frame: pd.DataFrame) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return target


def write_series_csv(path, times, series, prefix: str) -> Path:
    """Columns t, <prefix>_1 .. <prefix>_s from an (s, levels) array."""
    series = np.atleast_2d(np.asarray(series, dtype=float))
    columns = {"t": np.asarray(times, dtype=float)}
    for i, row in enumerate(series, start=1):
        columns[f"{prefix}_{i}"] = row
    return _write_frame(path, pd.DataFrame(columns))


def write_trajectory_csv(path, q, prefix: str = "q") -> Path:
    return write_series_csv(path, q.times, q.values, prefix)


def write_state_csv(path, u) -> Path:
    """Long format: one row per (level, node) with the node coordinates."""
    levels, nodes = u.values.shape
    coords = u.grid.coordinates
    frame = {
        "t": np.repeat(u.times, nodes),
        "node": np.tile(np.arange(nodes), levels),
        "x": np.tile(coords[:, 0], levels),
    }
    if u.grid.dim == 2:
        frame["y"] = np.tile(coords[:, 1], levels)
    frame["u"] = u.values.ravel()
    return _write_frame(path, pd.DataFrame(frame))


def write_table_csv(path, rows: list[dict]) -> Path:
    return _write_frame(path, pd.DataFrame(rows))


def file_checksum(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _fmt(value, spec=".3e"):
    if value is None:
        return "n/a"
    return format(value, spec)


def render_inverse_summary_markdown(report: dict) -> str:
    """Human-readable digest of an invert report."""
    result = report.get("result", {})
    lines = [
        f"# Coefficient recovery: {report.get('problem', {}).get('name', 'unnamed')}",
        "",
        f"- Status: **{report.get('status', 'unknown')}**",
        f"- Window policy: {result.get('policy', 'n/a')}, "
        f"windows solved: {result.get('window_count', 0)}, "
        f"halvings: {result.get('halvings', 0)}",
        f"- Total Picard iterations: {result.get('iterations_total', 0)}",
        f"- min |det B0|: {_fmt(result.get('min_abs_det'))}, "
        f"max cond B0: {_fmt(result.get('max_condition'))}",
    ]
    verification = result.get("verification") or {}
    if verification:
        lines.append(
            "- Overdetermination residual: "
            f"{_fmt(verification.get('overdetermination_residual'))}, "
            f"scheme residual: {_fmt(verification.get('pde_residual'))}, "
            f"boundary defect: {_fmt(verification.get('boundary_defect'))}"
        )
    errors = report.get("score")
    if errors:
        mode = "absolute" if errors["absolute"] else "relative"
        lines.append(
            f"- Error vs truth ({mode}): L2 {_fmt(errors['l2'])}, Linf {_fmt(errors['linf'])}"
        )

    header = "| Start | End | Accepted | Iterations | Last increment | Fixed-point residual |"
    lines.extend(["", "## Windows", "", header])
    lines.append("|---:|---:|---|---:|---:|---:|")
    for window in result.get("windows", []):
        span = window.get("window", {})
        increments = window.get("increments") or [None]
        lines.append(
            f"| {_fmt(span.get('t_start'), '.6g')} | {_fmt(span.get('t_end'), '.6g')} | "
            f"{'yes' if window.get('accepted') else 'no'} | {window.get('iterations', 'n/a')} | "
            f"{_fmt(increments[-1])} | {_fmt(window.get('fixed_point_residual'))} |"
        )
    failure = report.get("failure")
    if failure:
        lines.extend(["", "## Failure", "", f"- {failure.get('type')}: {failure.get('message')}"])
    return "\n".join(lines) + "\n"


def write_markdown(path, text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    return target
