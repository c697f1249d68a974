"""Synthetic boundary measurements from a known coefficient trajectory."""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from discretization.grid import refine, refine_time
from expressions.fields import FieldSpec
from forward.solver import solve_forward
from problems.model import MeasurementSpec, ProblemSpec, QTrajectory
from traces.boundary import pair_with_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    """
    ``oversample`` refines space and time by the same integer factor for data
    generation; ``inverse_crime`` generates on the inversion grid itself.
    """

    truth: tuple[FieldSpec, ...]
    oversample: int = 2
    noise_level: float = 0.0
    seed: int = 0
    inverse_crime: bool = False

    def __post_init__(self):
        if not self.truth:
            raise ValueError("synthetic data needs true coefficient fields")
        if int(self.oversample) != self.oversample or self.oversample < 1:
            raise ValueError(f"oversample must be an integer >= 1, got {self.oversample}")
        if not self.noise_level >= 0:
            raise ValueError(f"noise level must be >= 0, got {self.noise_level}")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")

    @property
    def factor(self) -> int:
        return 1 if self.inverse_crime else int(self.oversample)


def add_noise(psi, level: float, seed: int) -> np.ndarray:
    """
    psi * (1 + level * xi) with xi standard normal from numpy's PCG64 generator
    seeded by ``seed``. The t = 0 column is returned untouched.
    """
    psi = np.array(psi, dtype=float)
    if not level >= 0:
        raise ValueError(f"noise level must be >= 0, got {level}")
    if level == 0:
        return psi
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(psi.shape)
    noisy = psi * (1.0 + level * xi)
    noisy[..., 0] = psi[..., 0]
    return noisy


def noiseless_measurements(
    problem: ProblemSpec, synth: SynthConfig
) -> tuple[np.ndarray, QTrajectory]:
    """(s, levels) pairings on the inversion time grid and the truth sampled there."""
    factor = synth.factor
    fine = problem
    if factor > 1:
        fine = problem.with_discretization(
            grid=refine(problem.grid, factor), time_grid=refine_time(problem.time_grid, factor)
        )
    q_fine = QTrajectory.from_fields(synth.truth, fine.time_grid)
    logger.info(
        f"generating measurements on {fine.grid.counts} nodes x {fine.time_grid.n_steps} steps"
    )
    u = solve_forward(fine, q_fine)
    boundary = u.values[:, fine.grid.boundary_index]
    pairing = pair_with_weights(boundary, fine.samples.weights, fine.grid)
    psi = np.array(pairing.T[:, ::factor])

    grid = problem.grid
    psi[:, 0] = pair_with_weights(
        problem.samples.initial[grid.boundary_index], problem.samples.weights, grid
    )
    truth = QTrajectory.from_fields(synth.truth, problem.time_grid)
    return psi, truth


def measurement_from_series(problem: ProblemSpec, psi) -> MeasurementSpec:
    """Measured data as single-axis tables over the inversion time levels."""
    times = problem.time_grid.times
    data = tuple(FieldSpec.from_table({"t": times}, row) for row in np.atleast_2d(psi))
    return dataclasses.replace(problem.measurement, data=data)


def generate_measurements(problem: ProblemSpec, synth: SynthConfig):
    """Returns (MeasurementSpec, ground-truth QTrajectory) for ``problem``."""
    psi, truth = noiseless_measurements(problem, synth)
    psi = add_noise(psi, synth.noise_level, synth.seed)
    return measurement_from_series(problem, psi), truth
