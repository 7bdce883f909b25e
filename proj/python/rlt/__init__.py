"""Boundary local time of Brownian motion reflected on [0, b]."""

from ._core import (
    ConfigError,
    ConvergenceError,
    DomainError,
    OverflowError,
    UnknownFunctional,
    VarianceError,
    __version__,
    alpha_star,
    alpha_star_prime,
    alpha_star_second,
    big_v,
    ergodic_limits,
    extension_floor,
    f_hat,
    hitting_laplace,
    lambda_star,
    laplace_consistency,
    ldp_tail_decay,
    log_mgf_limit,
    mc_functional,
    ode_residual,
    simulate_path,
    v_star,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
