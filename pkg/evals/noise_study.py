"""Reconstruction error against multiplicative measurement noise, averaged over seeds."""

from __future__ import annotations

import logging

import numpy as np

from inverse.continuation import windowed_solve
from problems.model import ProblemSpec
from synth.measurements import (
    SynthConfig,
    add_noise,
    measurement_from_series,
    noiseless_measurements,
)
from synth.scoring import score

logger = logging.getLogger(__name__)


def derive_seeds(base_seed: int, count: int) -> list[int]:
    """Independent sub-seeds from one base seed; the same list for every noise level."""
    children = np.random.SeedSequence(int(base_seed)).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def run_noise_study(
    problem: ProblemSpec,
    noise_levels=(1e-4, 1e-3, 1e-2),
    seeds: int = 5,
    base_seed: int = 0,
    oversample: int = 2,
    policy: str = "adaptive",
    tol: float = 1e-8,
    max_iter: int = 50,
    **picard_options,
) -> dict:
    if not problem.truth:
        raise ValueError(f"problem {problem.name!r} has no truth for a noise study")
    if seeds < 1:
        raise ValueError("at least one seed is required")
    levels = sorted(float(level) for level in noise_levels)
    if not levels or levels[0] < 0:
        raise ValueError("noise levels must be non-negative")

    psi, truth = noiseless_measurements(
        problem, SynthConfig(truth=problem.truth, oversample=oversample)
    )
    sub_seeds = derive_seeds(base_seed, seeds)

    rows = []
    for level in levels:
        for seed in sub_seeds:
            measurement = measurement_from_series(problem, add_noise(psi, level, seed))
            result = windowed_solve(
                problem.with_measurement(measurement), policy, tol, max_iter, **picard_options
            )
            rows.append({"noise": level, "seed": seed, "l2": score(result.q, truth)["l2"]})
        logger.info(f"noise level {level:g}: {seeds} seed(s) solved")

    means = [
        float(np.mean([row["l2"] for row in rows if row["noise"] == level])) for level in levels
    ]
    ratio = None
    if len(means) >= 2 and means[-2] > 0:
        ratio = means[-1] / means[-2]
    return {
        "problem": problem.name,
        "noise_levels": levels,
        "seeds": sub_seeds,
        "rows": rows,
        "mean_l2": means,
        "monotone": bool(all(b >= a for a, b in zip(means, means[1:]))),
        "top_ratio": ratio,
    }
