"""Cartan coordinates, Haar-relative densities and collapse metrics."""

from .ism import (
    CartanISM,
    RadialDensity,
    extract_ispin,
    haar_density_ism,
    ism_full_sde,
    ism_radial_exact_density,
    ism_radial_fpke,
    ism_radial_sde,
    rebuild_ispin,
    spherical_displacement,
    spin_coherent_state,
)
from .kod import KodHistogram, kod_histogram, merge_histograms
from .metrics import collapse_metrics, completeness_functional
from .single import CartanSingle, SingleKOD, analytic_kod_single, coherence_deviation, extract_single, single_ensemble
from .spqm import (
    CartanIWH,
    FockRotationStepper,
    IWHEnsemble,
    ReducedSPQM,
    displacement,
    extract_iwh,
    haar_density_iwh,
    iwh_pile_up,
    partition_function_check,
    rebuild_iwh,
    reduced_spqm,
    reduced_spqm_pde_residual,
    sigma_estimate,
    sigma_T,
    spqm_coordinate_sde,
)

__all__ = [
    "CartanISM",
    "CartanIWH",
    "CartanSingle",
    "FockRotationStepper",
    "IWHEnsemble",
    "KodHistogram",
    "RadialDensity",
    "ReducedSPQM",
    "SingleKOD",
    "analytic_kod_single",
    "coherence_deviation",
    "collapse_metrics",
    "completeness_functional",
    "displacement",
    "extract_ispin",
    "extract_iwh",
    "extract_single",
    "haar_density_ism",
    "haar_density_iwh",
    "ism_full_sde",
    "ism_radial_exact_density",
    "ism_radial_fpke",
    "ism_radial_sde",
    "iwh_pile_up",
    "kod_histogram",
    "merge_histograms",
    "partition_function_check",
    "rebuild_ispin",
    "rebuild_iwh",
    "reduced_spqm",
    "reduced_spqm_pde_residual",
    "sigma_T",
    "sigma_estimate",
    "single_ensemble",
    "spherical_displacement",
    "spin_coherent_state",
    "spqm_coordinate_sde",
]
