"""Heavy-tailed Pitman-Yor mixture models.

Random measure simulation, tail envelopes, parametric building blocks,
slice-sampler posterior inference, and a simulation-study harness, with
sklearn-style estimators on top and a CLI underneath ``heavymix``.
"""

__version__ = "0.1.0"

from .exceptions import InputError, ParameterError, SliceInvariantError
from .measures import (
    PyParams,
    RandomMeasureDraw,
    SubordinatorSpec,
    choose_truncation,
    dp_tail_trajectory,
    draw_random_measure,
    draw_stick_weights,
    expected_residual_mass,
    sample_positive_stable,
    sp_tail_trajectory,
    subordinator_path,
)

__all__ = [
    "__version__",
    "InputError",
    "ParameterError",
    "SliceInvariantError",
    "PyParams",
    "RandomMeasureDraw",
    "SubordinatorSpec",
    "choose_truncation",
    "dp_tail_trajectory",
    "draw_random_measure",
    "draw_stick_weights",
    "expected_residual_mass",
    "sample_positive_stable",
    "sp_tail_trajectory",
    "subordinator_path",
]
