"""Learning interaction kernels of first-order particle systems."""

from ._kinfer import (
    BlowUpError,
    InputError,
    Kernel,
    KinferError,
    LearnReport,
    SplineModel,
    Trajectory,
    coercivity,
    custom_kernel,
    empirical_rho,
    kernel,
    kernels,
    learn,
    random_matrix_mc,
    sample_initial,
    simulate,
    wasserstein1,
)

__all__ = [
    "BlowUpError",
    "InputError",
    "Kernel",
    "KinferError",
    "LearnReport",
    "SplineModel",
    "Trajectory",
    "coercivity",
    "custom_kernel",
    "empirical_rho",
    "kernel",
    "kernels",
    "learn",
    "random_matrix_mc",
    "sample_initial",
    "simulate",
    "wasserstein1",
]
