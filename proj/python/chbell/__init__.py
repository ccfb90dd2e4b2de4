"""CH-inequality analysis of time-tagged Bell-test data and quantum-model simulation."""

from ._core import (
    __version__,
    analyze,
    ch_linear,
    greedy_coincidences,
    joint_detection_probabilities,
    powell_search,
    run_cli,
    run_experiment,
)

__all__ = [
    "__version__",
    "analyze",
    "ch_linear",
    "greedy_coincidences",
    "joint_detection_probabilities",
    "powell_search",
    "run_cli",
    "run_experiment",
]
