"""Error metrics of a recovered trajectory against the truth."""

from __future__ import annotations

import logging

import numpy as np
from scipy.integrate import trapezoid

from problems.model import QTrajectory

logger = logging.getLogger(__name__)


def _l2(values, times):
    return float(np.sqrt(trapezoid(values**2, times)))


def score(q_rec: QTrajectory, q_true: QTrajectory) -> dict:
    """
    Relative discrete L2 (trapezoid in time) and L-infinity errors per component and in
    aggregate. A component whose true norm vanishes is scored in absolute terms and flagged.
    """
    if q_rec.values.shape != q_true.values.shape or not np.array_equal(q_rec.times, q_true.times):
        raise ValueError("trajectories must share the time grid and component count")
    times = q_true.times
    diff = q_rec.values - q_true.values

    components = []
    for i in range(q_true.s):
        err_l2 = _l2(diff[i], times)
        err_inf = float(np.max(np.abs(diff[i])))
        ref_l2 = _l2(q_true.values[i], times)
        ref_inf = float(np.max(np.abs(q_true.values[i])))
        absolute = ref_l2 == 0.0
        components.append(
            {
                "component": i + 1,
                "absolute": absolute,
                "l2": err_l2 if absolute else err_l2 / ref_l2,
                "linf": err_inf if absolute or ref_inf == 0.0 else err_inf / ref_inf,
            }
        )

    total_err = float(np.sqrt(np.sum(trapezoid(diff**2, times, axis=1))))
    total_ref = float(np.sqrt(np.sum(trapezoid(q_true.values**2, times, axis=1))))
    absolute = total_ref == 0.0
    if absolute:
        logger.warning("true coefficients vanish; reporting absolute errors")
    max_ref = float(np.max(np.abs(q_true.values)))
    max_err = float(np.max(np.abs(diff)))
    return {
        "absolute": absolute,
        "l2": total_err if absolute else total_err / total_ref,
        "linf": max_err if absolute else max_err / max_ref,
        "components": components,
    }
