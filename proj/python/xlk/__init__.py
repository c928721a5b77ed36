# SPDX-License-Identifier: Apache-2.0
"""Randomized Kaczmarz receive combining for subarray-based XL-MIMO uplink."""

from ._xlk import (
    ConfigError,
    ModelError,
    __version__,
    complexity_counts,
    complexity_sweep,
    crd,
    crd_sweep,
    default_config,
    iteration_upper_bound,
    rka_combiner,
    rzf_combiner,
    self_checks,
    ser_sweep,
    sinr_per_user,
)

__all__ = [
    "ConfigError",
    "ModelError",
    "__version__",
    "complexity_counts",
    "complexity_sweep",
    "crd",
    "crd_sweep",
    "default_config",
    "iteration_upper_bound",
    "rka_combiner",
    "rzf_combiner",
    "self_checks",
    "ser_sweep",
    "sinr_per_user",
]
