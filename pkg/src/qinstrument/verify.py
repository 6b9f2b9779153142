"""Acceptance checks grouped into named suites.

Each ``criterion_k`` returns a list of :class:`CheckResult`; tolerances
that come from seeded pilot runs are read from ``data/golden.json``.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
from scipy import stats

from .algebra_closure import Verdict, run_closure_spec
from .geometry import (
    FockRotationStepper,
    coherence_deviation,
    collapse_metrics,
    completeness_functional,
    extract_ispin,
    ism_full_sde,
    ism_radial_fpke,
    ism_radial_sde,
    partition_function_check,
    reduced_spqm_pde_residual,
    sigma_estimate,
    single_ensemble,
)
from .kernels import UnravelingKind, incremental_channel, verify_meter_model
from .linalg_ops import build_spin_operators
from .trajectories import pile_up_ensemble, transition_estimators_agree

__all__ = ["CheckResult", "CRITERIA", "SUITES", "load_golden", "run_criterion", "run_suite"]


@dataclass
class CheckResult:
    """One measured quantity against its tolerance."""

    criterion: str
    name: str
    passed: bool
    measured: object
    tolerance: object
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.criterion} {self.name}: measured={_short(self.measured)} tolerance={_short(self.tolerance)}"

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self), default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return str(x)


def _short(x):
    if isinstance(x, float):
        return f"{x:.6g}"
    if isinstance(x, (list, tuple)):
        return "[" + ", ".join(_short(v) for v in x) + "]"
    return str(x)


def load_golden() -> dict:
    """Committed pilot-derived thresholds."""
    return json.loads(resources.files("qinstrument").joinpath("data/golden.json").read_text())


def _runtime(cid, t0, limit):
    dt = time.perf_counter() - t0
    return CheckResult(cid, "runtime_s", dt < limit, round(dt, 3), f"< {limit}")


def _spin_obs(j):
    rep = build_spin_operators(j)
    return rep, [rep["Jx"], rep["Jy"], rep["Jz"]]


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

CLOSURE_CASES = [
    ("x + quad @ abelian", 2),
    ("q,p @ weyl", 3),
    ("q,p + quad @ weyl", 7),
    ("jx,jy,jz @ su2", 6),
    ("jx,jy,jz + quad @ su2", 7),
    ("jz,jx + quad @ spin=1/2", 4),
    ("jz,jx + quad @ spin=1", 9),
]


def criterion_1(golden=None) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    for spec, want in CLOSURE_CASES:
        r = run_closure_spec(spec)
        got = r["dims"][-1]
        ok = got == want and r["verdict"] == Verdict.PRINCIPAL.value
        out.append(CheckResult("1", spec, ok, got, want, {"dims": r["dims"], "verdict": r["verdict"]}))
    spec = "jz,jx + quad @ universal su2, cap=60"
    r = run_closure_spec(spec)
    dims = r["dims"]
    growing = all(b > a for a, b in zip(dims, dims[1:])) and dims[-1] >= 60
    ok = growing and r["verdict"] == Verdict.CHAOTIC_UP_TO_CAP.value
    out.append(CheckResult("1", spec, ok, dims, "strictly growing to cap", {"verdict": r["verdict"]}))
    out.append(_runtime("1", t0, 10))
    return out


def criterion_2(golden=None) -> list[CheckResult]:
    t0 = time.perf_counter()
    _, obs = _spin_obs("1/2")
    dts = np.array([8e-3, 4e-3, 2e-3, 1e-3])
    kinds = [UnravelingKind.WIENER_GAUSSIAN, UnravelingKind.STOCHASTIC_UNITARY, UnravelingKind.JUMP]
    chans = [{k: incremental_channel(obs, 1.0, dt, k, method="quadrature").matrix for k in kinds} for dt in dts]
    out = []
    for i in range(3):
        for j in range(i + 1, 3):
            a, b = kinds[i], kinds[j]
            diff = np.array([np.linalg.norm(c[a] - c[b]) for c in chans])
            slope = float(np.polyfit(np.log(dts), np.log(diff), 1)[0])
            name = f"slope {a.name.lower()} vs {b.name.lower()}"
            out.append(CheckResult("2", name, abs(slope - 2) <= 0.2, slope, "2 ± 0.2", {"dts": dts, "diff": diff}))
    out.append(_runtime("2", t0, 60))
    return out


def criterion_3(golden=None) -> list[CheckResult]:
    t0 = time.perf_counter()
    rep, _ = _spin_obs("1/2")
    X = rep["Jx"]
    out = []
    for register, kdt in (("position", 1e-3), ("momentum", 1e-3), ("number", 1e-4)):
        r = verify_meter_model(X, register, 1.0, kdt)
        out.append(CheckResult("3", f"{register} κdt={kdt:g}", r.max_deviation <= 1e-6, r.max_deviation, 1e-6))
    out.append(_runtime("3", t0, 60))
    return out


def criterion_4(golden=None, N: int = 100_000, seed: int = 404) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    dev = coherence_deviation([-1.0, 0.0, 2.0], 1.0, 1.0)
    out.append(CheckResult("4a", "coherence factor", dev <= 1e-10, dev, 1e-10))
    r, a, _ = single_ensemble([1.0, -1.0], 1.0, 1.0, 1e-2, N, seed)
    ks = stats.kstest(a, stats.norm(0, 1.0).cdf)
    out.append(CheckResult("4b", "KS a_T vs N(0,κT) p-value", ks.pvalue > 0.01, float(ks.pvalue), "> 0.01", {"D": ks.statistic, "N": len(a)}))
    err = float(np.max(np.abs(r - 1.0)))
    out.append(CheckResult("4c", "max |r - κT|", err <= 1e-12, err, 1e-12))
    out.append(_runtime("4", t0, 120))
    return out


def criterion_5(golden=None, parts=("ism", "spqm"), N: int = 10_000) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    if "ism" in parts:
        _, obs = _spin_obs("1/2")
        ens = pile_up_ensemble(obs, 1.0, 1.0, 1e-3, N, 12)
        c = completeness_functional(ens)
        ratio = c["deviation"] / c["sigma"]
        out.append(CheckResult("5", "qubit ISM deviation/σ", ratio <= 5, ratio, 5, {"deviation": c["deviation"], "sigma": c["sigma"]}))
    if "spqm" in parts:
        st = FockRotationStepper(24, 1.0, 2e-3)
        ens = pile_up_ensemble(st.obs, 1.0, 1.0, 2e-3, N, 11, stepper=st, singular_tol=0)
        c = completeness_functional(ens)
        ratio = c["deviation"] / c["sigma"]
        out.append(
            CheckResult(
                "5", "SPQM n_cut=24 deviation/σ", ratio <= 5, ratio, 5,
                {"deviation": c["deviation"], "sigma": c["sigma"], "diag": np.real(np.diag(c["mean"]))[:6]},
            )
        )
    out.append(_runtime("5", t0, 300))
    return out


def criterion_6(golden=None, N: int = 100_000) -> list[CheckResult]:
    golden = golden or load_golden()
    g = golden["criterion_6"]
    t0 = time.perf_counter()
    out = []
    for kT, seed in zip(g["kappa_T"], g["test_seeds"]):
        est = sigma_estimate(1.0, kT, 1e-3, N, seed, method=g["method"])
        rel = abs(est["rel_error"])
        out.append(
            CheckResult("6", f"Σ_T relative error κT={kT:g}", rel <= g["tolerance"], rel, g["tolerance"],
                        {"sigma_hat": est["sigma_hat"], "sigma_T": est["sigma_T"], "sigma_err": est["sigma_err"]})
        )
        out.append(CheckResult("6", f"r_T - 2κT κT={kT:g}", est["r_error"] <= 1e-12, est["r_error"], 1e-12))
    out.append(_runtime("6", t0, 600))
    return out


def _partition_ncut(kT, tol=1e-12):
    # truncated tail relative to the total is e^{-4κT n_cut}
    return int(np.ceil(-np.log(tol) / (4 * kT))) + 1


def criterion_7(golden=None) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    for kT in (0.25, 0.5, 1.0, 2.0):
        r = partition_function_check(kT, _partition_ncut(kT))
        out.append(CheckResult("7", f"partition κT={kT:g}", r["rel_error"] < 1e-6, r["rel_error"], 1e-6))
    out.append(_runtime("7", t0, 1))
    return out


def criterion_8(golden=None) -> list[CheckResult]:
    t0 = time.perf_counter()
    out = []
    for kT in (0.5, 1.0):
        r1 = reduced_spqm_pde_residual(1.0, kT, 0.02)
        r2 = reduced_spqm_pde_residual(1.0, kT, 0.01)
        ratio = r1 / r2
        out.append(CheckResult("8", f"residual ratio κT={kT:g}", abs(ratio - 4) <= 0.5, ratio, "4 ± 0.5", {"h=0.02": r1, "h=0.01": r2}))
    out.append(_runtime("8", t0, 60))
    return out


def criterion_9(golden=None, N: int = 100_000) -> list[CheckResult]:
    golden = golden or load_golden()
    g = golden["criterion_9"]
    t0 = time.perf_counter()
    kT = 5.0
    P = ism_radial_fpke(1.0, kT)
    a = ism_radial_sde(1.0, kT, 1e-3, N=N, seed=g["test_seed"])
    D = float(stats.kstest(a, P.cdf).statistic)
    mean_rel = abs(a.mean() - g["mean_offset"] - kT) / kT
    var_rel = abs(a.var() - kT) / kT
    return [
        CheckResult("9", "KS FPKE vs SDE", D < g["ks_threshold"], D, g["ks_threshold"]),
        CheckResult("9", "mean(a) - offset vs κT", mean_rel <= 0.05, float(mean_rel), 0.05, {"mean": a.mean()}),
        CheckResult("9", "var(a) vs κT", var_rel <= 0.05, float(var_rel), 0.05, {"var": a.var(), "fpke_var": P.moments()[1]}),
        _runtime("9", t0, 600),
    ]


def criterion_10(golden=None, N: int = 1000) -> list[CheckResult]:
    golden = golden or load_golden()
    g = golden["criterion_10"]
    t0 = time.perf_counter()
    rep, obs = _spin_obs(1)
    pur, fid = [], []
    for kT in g["kappa_T"]:
        ens = pile_up_ensemble(obs, 1.0, kT, 1e-3, N, g["test_seed"], singular_tol=0)
        m = [collapse_metrics(E / np.trace(E).real, rep) for E in ens.povm_elements()]
        pur.append(float(np.median([x["purity"] for x in m])))
        fid.append(float(np.median([x["top_fidelity"] for x in m])))
    inc = lambda v: all(b > a for a, b in zip(v, v[1:]))  # noqa: E731
    return [
        CheckResult("10", "median purity κT=6", pur[-1] > g["purity_threshold"], pur[-1], g["purity_threshold"]),
        CheckResult("10", "median fidelity κT=6", fid[-1] > g["fidelity_threshold"], fid[-1], g["fidelity_threshold"]),
        CheckResult("10", "purity strictly increasing", inc(pur), pur, "strictly increasing"),
        CheckResult("10", "fidelity strictly increasing", inc(fid), fid, "strictly increasing"),
        _runtime("10", t0, 600),
    ]


def criterion_11(golden=None, M: int = 20, seed: int = 5) -> list[CheckResult]:
    t0 = time.perf_counter()
    kT, fine = 1.0, 2.5e-4
    dts = np.array([4e-3, 2e-3, 1e-3, 5e-4])
    rng = np.random.default_rng(seed)
    paths = rng.standard_normal((M, int(round(kT / fine)), 3)) * np.sqrt(fine)
    err, da = [], []
    for dt in dts:
        f = int(round(dt / fine))
        e, d = [], []
        for m in range(M):
            noise = paths[m].reshape(-1, f, 3).sum(axis=1)
            rec, p = ism_full_sde("1/2", 1.0, kT, dt, noise=noise, t_start=0.05)
            e.append(np.linalg.norm(p["x"] - rec.L) / np.linalg.norm(rec.L))
            d.append(abs(p["a"][-1] - extract_ispin(rec.L).a))
        err.append(float(np.mean(e)))
        da.append(float(np.mean(d)))
    slope = float(np.polyfit(np.log(dts), np.log(err), 1)[0])
    return [
        CheckResult("11", "discrepancy slope", slope >= 0.5, slope, ">= 0.5",
                    {"dts": dts, "mean_rel_discrepancy": err, "mean_abs_a_discrepancy": da}),
        _runtime("11", t0, 300),
    ]


def criterion_12(golden=None, N: int = 10_000, seed: int = 1212) -> list[CheckResult]:
    t0 = time.perf_counter()
    rep, obs = _spin_obs("1/2")
    Jz = rep["Jz"]
    rho0 = np.diag([0.75, 0.25]).astype(complex)

    def f(rho):
        return np.real(np.einsum("bij,ji->b", rho, Jz))

    est = transition_estimators_agree(rho0, f, obs, 1.0, 1.0, 1e-3, N, seed)
    diff = abs(est.wiener_weighted - est.born)
    return [
        CheckResult("12", "|weighted - Born| / σ", est.agree(5.0), diff / max(est.combined_error, 1e-15), 5,
                    {"wiener_weighted": est.wiener_weighted, "born": est.born, "sigma": est.combined_error, "ess": est.effective_sample_size}),
        _runtime("12", t0, 300),
    ]


CRITERIA = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
    7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10, 11: criterion_11, 12: criterion_12,
}

# suite -> list of (criterion, kwargs)
SUITES = {
    "closure": [(1, {})],
    "channels": [(2, {})],
    "meter": [(3, {})],
    "single": [(4, {})],
    "spqm": [(5, {"parts": ("spqm",)}), (6, {}), (7, {}), (8, {})],
    "ism": [(5, {"parts": ("ism",)}), (9, {}), (10, {}), (11, {})],
    "appendixB": [(12, {})],
}


def run_criterion(k: int, golden=None, **kw) -> list[CheckResult]:
    return CRITERIA[k](golden, **kw)


def run_suite(name: str, golden=None) -> dict:
    """Run one suite; ``passed`` is true when every check passes."""
    if name not in SUITES:
        raise KeyError(name)
    golden = golden or load_golden()
    checks = []
    for k, kw in SUITES[name]:
        checks.extend(run_criterion(k, golden, **kw))
    return {"suite": name, "passed": all(c.passed for c in checks), "checks": [c.to_dict() for c in checks], "results": checks}
