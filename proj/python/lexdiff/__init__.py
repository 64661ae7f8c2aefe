"""Agent-based lexical diffusion: simulation, calibration and spatial evaluation."""

from ._core import (
    InputError,
    SimulationConfig,
    ValidationError,
    World,
    WorldParams,
    classify_similarity,
    generate_world,
    getis_ord,
    great_circle_km,
    kendall_tau_b,
    lees_l,
    load_world,
    modes,
    run_experiment,
    simulate,
    tune_global,
    tune_stickiness,
    write_world,
    zero_inflated_tau,
)

__all__ = [
    "InputError",
    "SimulationConfig",
    "ValidationError",
    "World",
    "WorldParams",
    "classify_similarity",
    "generate_world",
    "getis_ord",
    "great_circle_km",
    "kendall_tau_b",
    "lees_l",
    "load_world",
    "modes",
    "run_experiment",
    "simulate",
    "tune_global",
    "tune_stickiness",
    "write_world",
    "zero_inflated_tau",
]
