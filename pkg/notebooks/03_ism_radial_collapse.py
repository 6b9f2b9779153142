"""Isotropic spin measurement: radial diffusion and collapse to coherent states."""
import numpy as np

from qinstrument import build_spin_operators, pile_up_ensemble
from qinstrument.geometry import collapse_metrics, ism_radial_exact_density, ism_radial_fpke, ism_radial_sde

kappa, T = 1.0, 3.0

# Radial coordinate: SDE samples, Fokker-Planck grid and closed form.
a = ism_radial_sde(kappa, T, dt=1e-3, N=20_000, seed=1)
dens = ism_radial_fpke(kappa, T)
g = dens.grid
exact = ism_radial_exact_density(g, kappa * T)
print(f"FPKE vs closed form, max |diff| = {np.max(np.abs(dens.values - exact)):.2e}")
mean_exact = np.sum(g * exact) * dens.h
print(f"mean a: SDE {a.mean():.4f}, exact {mean_exact:.4f}; var a: SDE {a.var():.4f}")

# Collapse: POVM elements of spin 1 become rank one and spin coherent.
rep = build_spin_operators(1)
obs = [rep.operators[k] for k in ("Jx", "Jy", "Jz")]
for T in (0.5, 2.0, 5.0):
    ens = pile_up_ensemble(obs, kappa, T, 1e-3, 200, seed=3, singular_tol=0.0)
    purity = []
    for L in ens.kraus:
        E = L.conj().T @ L
        purity.append(collapse_metrics(E, rep)["purity"])
    print(f"kT={T}: median purity {np.median(purity):.6f}")
