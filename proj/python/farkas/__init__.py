"""Certifying checker for multi-objective reachability, invariant and mean-payoff queries on MDPs."""

from ._farkas import (
    Certified,
    FarkasError,
    certify,
    exit_distribution,
    model_states,
    run_cli,
    solve_exit_rates,
    witness_subsystem,
)

__all__ = [
    "Certified",
    "FarkasError",
    "certify",
    "exit_distribution",
    "model_states",
    "run_cli",
    "solve_exit_rates",
    "witness_subsystem",
]
