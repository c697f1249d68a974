"""Pydantic models of the problem JSON file (see docs/problem_schema.md)."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class TableModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axes: dict[str, list[float]] = Field(min_length=1, max_length=3)
    values: list = Field(min_length=2)

    @field_validator("axes")
    @classmethod
    def _known_axes(cls, axes):
        unknown = set(axes) - {"t", "x", "y"}
        if unknown:
            raise ValueError(f"table axes must be among t, x, y; got {sorted(unknown)}")
        for name, knots in axes.items():
            if len(knots) < 2 or any(b <= a for a, b in zip(knots, knots[1:])):
                raise ValueError(f"table axis {name!r} needs >= 2 strictly increasing knots")
        return axes

    @model_validator(mode="after")
    def _shape_matches(self):
        expected = tuple(len(knots) for knots in self.axes.values())
        try:
            shape = np.asarray(self.values, dtype=float).shape
        except (TypeError, ValueError) as exc:
            raise ValueError(f"table values must be a numeric array: {exc}") from exc
        if shape != expected:
            raise ValueError(f"table values have shape {shape}, axes imply {expected}")
        return self


FieldValue = Union[float, str, TableModel]


class DomainModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    extents: list[float] = Field(min_length=1, max_length=2)
    nodes: list[int] = Field(min_length=1, max_length=2)

    @model_validator(mode="after")
    def _consistent(self):
        if len(self.extents) != len(self.nodes):
            raise ValueError("domain extents and nodes must have the same length")
        if any(e <= 0 for e in self.extents):
            raise ValueError("domain extents must be positive")
        if any(n < 3 for n in self.nodes):
            raise ValueError("every axis needs at least 3 nodes")
        return self


class TimeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    horizon: float = Field(gt=0)
    steps: int = Field(ge=1)
    theta: Optional[float] = None

    @field_validator("theta")
    @classmethod
    def _supported_theta(cls, theta):
        if theta is not None and theta not in (1.0, 0.5):
            raise ValueError("theta must be 1 or 0.5")
        return theta


class ModeModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    drift: list[FieldValue] = Field(min_length=1, max_length=2)
    reaction: FieldValue = 0.0


class OperatorModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    diffusion: Union[FieldValue, list[list[FieldValue]]]
    drift: Optional[list[FieldValue]] = None
    reaction: FieldValue = 0.0
    modes: list[ModeModel] = Field(default_factory=list)


class BoundaryModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    conormal: list[FieldValue] = Field(min_length=1, max_length=2)
    transfer: FieldValue = 0.0
    data: FieldValue = 0.0


class SourceModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base: FieldValue = 0.0
    modes: list[FieldValue] = Field(default_factory=list)


class MeasurementModel(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weights: list[FieldValue] = Field(min_length=1)
    data: Optional[list[FieldValue]] = None
    compat_tol: Optional[float] = Field(default=None, gt=0)


class ProblemFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1, max_length=120)
    description: str = Field(default="", max_length=2000)
    domain: DomainModel
    time: TimeModel
    operator: OperatorModel
    boundary: BoundaryModel
    source: SourceModel = Field(default_factory=SourceModel)
    initial: FieldValue
    measurement: MeasurementModel
    truth: Optional[list[FieldValue]] = None
    exact_solution: Optional[FieldValue] = None
    boundary_compat_tol: Optional[float] = Field(default=None, gt=0)
