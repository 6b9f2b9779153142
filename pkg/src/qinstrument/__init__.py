"""Simulation and verification of continuous simultaneous quantum measurements."""

from . import algebra_closure, kernels, linalg_ops, trajectories
from .algebra_closure import (
    cartan_split,
    close_instrumental_algebra,
    close_observable_algebra,
    run_closure_spec,
)
from .kernels import UnravelingKind, incremental_channel, verify_meter_model
from .linalg_ops import (
    Representation,
    build_fock_operators,
    build_single_observable,
    build_spin_operators,
    lindbladian,
)
from .trajectories import (
    BornRule,
    IntegratorKind,
    evolve_sme,
    pile_up,
    pile_up_ensemble,
    transition_estimators_agree,
)

__version__ = "0.1.0"

__all__ = [
    "BornRule",
    "IntegratorKind",
    "Representation",
    "UnravelingKind",
    "algebra_closure",
    "build_fock_operators",
    "build_single_observable",
    "build_spin_operators",
    "cartan_split",
    "close_instrumental_algebra",
    "close_observable_algebra",
    "evolve_sme",
    "incremental_channel",
    "kernels",
    "lindbladian",
    "linalg_ops",
    "pile_up",
    "pile_up_ensemble",
    "run_closure_spec",
    "trajectories",
    "transition_estimators_agree",
    "verify_meter_model",
]
