"""Simultaneous position and momentum: the Weyl-Heisenberg instrument.

Piles up trajectories in the faithful 3x3 representation, reads off
Cartan coordinates, and estimates the width Σ_T of the β - α
distribution against its closed form.
"""
from qinstrument.geometry import partition_function_check, sigma_estimate, sigma_T

kappa = 1.0

print("kT    Sigma_T exact   estimate          rel.err   |r - 2kT|")
for T in (0.5, 1.0, 2.0):
    est = sigma_estimate(kappa, T, dt=1e-3, N=20_000, seed=7)
    print(
        f"{T:<5} {sigma_T(kappa * T):.6f}        {est['sigma_hat']:.6f} ± {est['sigma_err']:.6f}"
        f"  {est['rel_error']:+.4f}  {est['r_error']:.1e}"
    )

# Sampling paths with the Wiener measure and reweighting by e^{-2l}
# is the literal estimator. Its weights are heavy tailed.
raw = sigma_estimate(kappa, 1.0, dt=1e-3, N=20_000, seed=7, method="wiener-raw")
print(f"\nreweighted Wiener estimate at kT=1: rel.err {raw['rel_error']:+.3f}, ESS {raw['ess']:.0f} of 20000")

print("\nFock-space partition function check")
for kT, n_cut in ((0.25, 30), (1.0, 8), (1.0, 4)):
    p = partition_function_check(kT, n_cut)
    print(f"kT={kT} n_cut={n_cut}: rel.err {p['rel_error']:.2e} truncated={p['truncated']}")
