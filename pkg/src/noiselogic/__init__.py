"""Noise-based logic with clocked stochastic spike trains."""

__version__ = "0.1.0"

from .spike_core import (  # noqa: E402
    ClockConfig,
    OrthogonalSet,
    SpikeTrain,
    Superposition,
    coincidence_count,
    generate_orthogonal_set,
    generate_random_train,
    superpose,
    xor_fold,
)
