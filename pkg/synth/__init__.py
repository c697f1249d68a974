from synth.measurements import (
    SynthConfig,
    add_noise,
    generate_measurements,
    measurement_from_series,
    noiseless_measurements,
)
from synth.scoring import score

__all__ = [
    "SynthConfig",
    "add_noise",
    "generate_measurements",
    "measurement_from_series",
    "noiseless_measurements",
    "score",
]
