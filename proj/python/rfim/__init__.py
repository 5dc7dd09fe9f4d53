"""Random field Ising model: exact oracles, couplings and percolation diagnostics."""

from ._core import (
    ConfigError,
    __version__,
    beta_P,
    commands,
    decay_fit,
    exact_magnetization,
    h2_bound,
    h3_bound,
    ising_bc_coupling,
    min_upset_slack,
    run_command,
    sample_field,
    sign_bound_a,
    theta_n,
)

__all__ = [
    "ConfigError",
    "__version__",
    "beta_P",
    "commands",
    "decay_fit",
    "exact_magnetization",
    "h2_bound",
    "h3_bound",
    "ising_bc_coupling",
    "min_upset_slack",
    "run_command",
    "sample_field",
    "sign_bound_a",
    "theta_n",
]
