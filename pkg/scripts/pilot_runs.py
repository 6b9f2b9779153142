"""Seeded pilot runs that fix the pilot-derived thresholds in data/golden.json.

Run once; the acceptance checks use different seeds from the ones here.
    python3 scripts/pilot_runs.py
"""

import json
from pathlib import Path

import numpy as np
from scipy import stats

from qinstrument.geometry import collapse_metrics, ism_radial_fpke, ism_radial_sde, sigma_estimate
from qinstrument.linalg_ops import build_spin_operators
from qinstrument.trajectories import pile_up_ensemble

OUT = Path(__file__).resolve().parents[1] / "src" / "qinstrument" / "data" / "golden.json"


def pilot_sigma(seeds=(61, 62, 63), kTs=(0.5, 1.0, 2.0), N=100_000):
    errs = {}
    for kT, seed in zip(kTs, seeds):
        est = sigma_estimate(1.0, kT, 1e-3, N, seed, method="born")
        errs[str(kT)] = est["rel_error"]
        print("sigma", kT, est["rel_error"], est["sigma_err"] / est["sigma_T"], flush=True)
    return {
        "method": "born",
        "kappa_T": list(kTs),
        "tolerance": 0.05,
        "pilot_seeds": list(seeds),
        "pilot_rel_errors": errs,
        "test_seeds": [161, 162, 163],
    }


def pilot_radial(seeds=(2024, 7, 8), kT=5.0, N=100_000):
    P = ism_radial_fpke(1.0, kT)
    ks, off = [], []
    for seed in seeds:
        a = ism_radial_sde(1.0, kT, 1e-3, N=N, seed=seed)
        ks.append(float(stats.kstest(a, P.cdf).statistic))
        off.append(float(a.mean() - kT))
        print("radial", seed, ks[-1], off[-1], a.var(), flush=True)
    return {
        "pilot_seeds": list(seeds),
        "pilot_ks": ks,
        "pilot_offsets": off,
        # largest pilot distance with 25% headroom
        "ks_threshold": round(1.25 * max(ks), 5),
        "mean_offset": round(float(np.mean(off)), 4),
        "test_seed": 9,
    }


def pilot_collapse(seeds=(101, 202), kTs=(1.0, 3.0, 6.0), N=1000):
    rep = build_spin_operators(1)
    obs = [rep["Jx"], rep["Jy"], rep["Jz"]]
    table = {}
    for seed in seeds:
        for kT in kTs:
            ens = pile_up_ensemble(obs, 1.0, kT, 1e-3, N, seed, singular_tol=0)
            m = [collapse_metrics(E / np.trace(E).real, rep) for E in ens.povm_elements()]
            pu = float(np.median([x["purity"] for x in m]))
            fi = float(np.median([x["top_fidelity"] for x in m]))
            table[f"{seed}/{kT}"] = {"purity": pu, "fidelity": fi}
            print("collapse", seed, kT, pu, fi, flush=True)
    return {
        "kappa_T": list(kTs),
        "pilot_seeds": list(seeds),
        "pilot_medians": table,
        "purity_threshold": 0.99999,
        "fidelity_threshold": 1 - 1e-9,
        "test_seed": 303,
    }


def main():
    golden = {
        "criterion_6": pilot_sigma(),
        "criterion_9": pilot_radial(),
        "criterion_10": pilot_collapse(),
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(golden, indent=2) + "\n")
    print("wrote", OUT)


if __name__ == "__main__":
    main()
