"""Command-line runner: ``simulate``, ``closure``, ``verify`` and ``meter``.

Exit codes: 0 success, 2 usage, 3 numerical failure, 4 acceptance failure.
A JSON file given by ``--config`` supplies defaults; flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import exceptions as exc
from .algebra_closure import run_closure_spec
from .geometry import (
    FockRotationStepper,
    analytic_kod_single,
    collapse_metrics,
    completeness_functional,
    extract_ispin,
    extract_iwh,
)
from .geometry.single import _fit as fit_single
from .io import write_csv
from .kernels import verify_meter_model
from .linalg_ops import build_fock_operators, build_single_observable, build_spin_operators
from .trajectories import SINGULAR_TOL, BornRule, IntegratorKind, n_steps, pile_up_ensemble

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4

NUMERICAL_ERRORS = (
    exc.SingularMatrixError,
    exc.DegenerateTrajectoryError,
    exc.PositivityViolationError,
    exc.ExtractionError,
    exc.RepresentationTooSmallError,
    exc.NumericalRankError,
    exc.DegreeOverflowError,
    FloatingPointError,
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated simulation settings.

    ``case`` is ``single:λ1,λ2,...``, ``spqm:n_cut``, ``ism:j`` or
    ``custom:names@backend`` with ``backend`` ``spin=j`` or ``fock=n``.
    ``sampling`` is ``wiener``, ``born`` (maximally mixed ρ₀) or
    ``born:k`` (basis state ``|k⟩``).
    """

    case: str = "ism:1/2"
    kappa: float = 1.0
    T: float = 1.0
    dt: float = 1e-3
    N: int = 1000
    seed: int = 0
    sampling: str = "wiener"
    integrator: str = "exact"
    out: str = "out"

    def validate(self):
        if self.N < 1:
            raise UsageError("N must be at least 1")
        if not self.dt > 0 or not self.T > 0 or not self.kappa > 0:
            raise UsageError("kappa, T and dt must be positive")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must fit in 64 bits")
        try:
            n_steps(self.T, self.dt)
            IntegratorKind(self.integrator)
        except (exc.InvalidArgumentError, ValueError) as e:
            raise UsageError(str(e)) from e
        return self


_CUSTOM_NAMES = {"jx": "Jx", "jy": "Jy", "jz": "Jz", "q": "Q", "p": "P"}


def build_case(case: str):
    """``(kind, representation, observables)`` for a case string."""
    kind, _, arg = case.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "single":
            rep = build_single_observable([float(v) for v in arg.split(",")])
            return kind, rep, rep.observables()
        if kind == "spqm":
            rep = build_fock_operators(int(arg))
            return kind, rep, rep.observables()
        if kind == "ism":
            rep = build_spin_operators(Fraction(arg))
            return kind, rep, rep.observables()
        if kind == "custom":
            names, _, backend = arg.partition("@")
            b, _, val = backend.strip().partition("=")
            rep = build_spin_operators(Fraction(val)) if b == "spin" else build_fock_operators(int(val)) if b == "fock" else None
            if rep is None:
                raise UsageError(f"unknown backend {backend!r}")
            return kind, rep, [rep[_CUSTOM_NAMES[n.strip().lower()]] for n in names.split(",")]
    except (KeyError, ValueError, exc.InvalidArgumentError) as e:
        raise UsageError(f"bad case {case!r}: {e}") from e
    raise UsageError(f"unknown case {case!r}")


def _sampling(spec: str, dim: int):
    spec = spec.strip().lower()
    if spec == "wiener":
        return "wiener"
    head, _, k = spec.partition(":")
    if head != "born":
        raise UsageError(f"unknown sampling {spec!r}")
    if not k:
        return BornRule(np.eye(dim, dtype=complex) / dim)
    rho = np.zeros((dim, dim), complex)
    try:
        rho[int(k), int(k)] = 1
    except (ValueError, IndexError) as e:
        raise UsageError(f"bad basis state in {spec!r}") from e
    return BornRule(rho)


def _header(cfg: RunConfig, **extra) -> dict:
    h = {"master_seed": cfg.seed, "kappa": cfg.kappa, "T": cfg.T, "dt": cfg.dt, "N": cfg.N, "config": asdict(cfg)}
    h.update(extra)
    return h


def _coordinates(kind, ens, rep):
    """Per-trajectory Cartan coordinates; failures give NaN plus a reason."""
    n = len(ens)
    if kind == "single":
        lam = np.real(np.diag(rep["X"]))
        logs = np.log(np.real(np.diagonal(ens.kraus, axis1=-2, axis2=-1))) + ens.log_norm[:, None]
        r, a = fit_single(lam, logs)
        return {"r": r, "a": a}
    L = ens.kraus * np.exp(ens.log_norm)[:, None, None]
    if kind == "ism" and rep.dim > 2:
        # singular values are e^{m a - j(j+1) ℓ}, m = j, ..., -j
        j = float(rep.params["j"])
        m = np.arange(j, -j - 1, -1)
        logs = np.log(np.linalg.svd(ens.kraus, compute_uv=False)) + ens.log_norm[:, None]
        A = np.stack([m, -np.full_like(m, j * (j + 1))], axis=1)
        a, ell = np.linalg.lstsq(A, logs.T, rcond=None)[0]
        return {"a": a, "ell": ell, "status": np.array(["radial_only"] * n, dtype=object)}
    if kind == "ism":
        cols = {k: np.full(n, np.nan) for k in ("a", "ell", "psi", "m_x", "m_y", "m_z", "n_x", "n_y", "n_z")}
        cols["status"] = np.array(["ok"] * n, dtype=object)
        for i in range(n):
            try:
                c = extract_ispin(L[i])
            except exc.ExtractionError as e:
                cols["status"][i] = type(e).__name__
                continue
            cols["a"][i], cols["ell"][i], cols["psi"][i] = c.a, c.ell, c.psi
            for ax, v in zip("xyz", c.m_hat):
                cols["m_" + ax][i] = v
            for ax, v in zip("xyz", c.n_hat):
                cols["n_" + ax][i] = v
        return cols
    if kind == "spqm":
        cols = {k: np.full(n, np.nan) for k in ("beta_re", "beta_im", "phi", "r", "ell", "alpha_re", "alpha_im")}
        cols["status"] = np.array(["ok"] * n, dtype=object)
        for i in range(n):
            try:
                c = extract_iwh(L[i])
            except (exc.ExtractionError, exc.RepresentationTooSmallError) as e:
                cols["status"][i] = type(e).__name__
                continue
            cols["beta_re"][i], cols["beta_im"][i] = c.beta.real, c.beta.imag
            cols["alpha_re"][i], cols["alpha_im"][i] = c.alpha.real, c.alpha.imag
            cols["phi"][i], cols["r"][i], cols["ell"][i] = c.phi, c.r, c.ell
        return cols
    s = np.linalg.svd(ens.kraus, compute_uv=False)
    return {f"log_sv_{k}": np.log(s[:, k]) + ens.log_norm for k in range(s.shape[1])}


def _metrics(kind, ens, rep, coords, cfg):
    if kind == "single":
        a = coords["a"]
        edges = np.linspace(-5, 5, 41) * np.sqrt(cfg.kappa * cfg.T)
        hist, _ = np.histogram(a, bins=edges, density=False)
        centers = (edges[1:] + edges[:-1]) / 2
        kod = analytic_kod_single(cfg.kappa, cfg.T)
        return {
            "a": centers,
            "count": hist,
            "empirical_density": hist / (len(a) * np.diff(edges)),
            "analytic_density": kod.pdf(centers),
            "r_mean": np.full(len(centers), float(np.mean(coords["r"]))),
            "r_analytic": np.full(len(centers), kod.r),
        }
    if kind == "ism" or (kind == "custom" and rep.kind == "spin"):
        rows = [collapse_metrics(E / np.trace(E).real, rep) for E in ens.povm_elements()]
        return {
            "trajectory_id": ens.ids,
            "purity": [m["purity"] for m in rows],
            "top_fidelity": [m["top_fidelity"] for m in rows],
            "coherent_weight": [m["coherent_weight"] for m in rows],
            "ambiguous": [m["ambiguous"] for m in rows],
        }
    if isinstance(ens.sampling, str):
        c = completeness_functional(ens)
        return {"deviation": [c["deviation"]], "sigma": [c["sigma"]], "n": [c["n"]]}
    return {"note": ["completeness needs wiener sampling"]}


def cmd_simulate(cfg: RunConfig) -> int:
    cfg.validate()
    kind, rep, obs = build_case(cfg.case)
    sampling = _sampling(cfg.sampling, rep.dim)
    out = Path(cfg.out)
    kw = {}
    if kind == "spqm" and cfg.integrator == "exact":
        kw = {"stepper": FockRotationStepper(rep.dim, cfg.kappa, cfg.dt), "singular_tol": 0}
    elif rep.kind == "fock":
        kw = {"singular_tol": 0}
    ens = pile_up_ensemble(
        obs, cfg.kappa, cfg.T, cfg.dt, cfg.N, cfg.seed, sampling=sampling,
        integrator=IntegratorKind(cfg.integrator), store_increments=True, **kw,
    )
    header = _header(cfg, discarded=ens.discarded, singular_tol=kw.get("singular_tol", SINGULAR_TOL))
    W = ens.increments.sum(axis=1)
    traj = {"trajectory_id": ens.ids, "t": np.full(len(ens), cfg.T), "log_norm": ens.log_norm}
    for k in range(W.shape[1]):
        traj[f"W_{k}"] = W[:, k]
    write_csv(out / "trajectories.csv", traj, header)
    coords = _coordinates(kind, ens, rep)
    write_csv(out / "coordinates.csv", {"trajectory_id": ens.ids, **coords}, header)
    write_csv(out / "metrics.csv", _metrics(kind, ens, rep, coords, cfg), header)
    print(f"wrote {len(ens)} trajectories to {out} (discarded {ens.discarded})")
    return EXIT_OK


def cmd_closure(spec: str, out: str | None) -> int:
    try:
        r = run_closure_spec(spec)
    except exc.InvalidArgumentError as e:
        raise UsageError(str(e)) from e
    text = f"spec: {spec}\nbackend: {r['backend']}\ndims: {r['dims']}\nverdict: {r['verdict']}\n"
    print(text, end="")
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    return EXIT_OK


def cmd_verify(suite: str, out: str | None) -> int:
    from .verify import SUITES, run_suite

    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    res = run_suite(suite)
    for c in res["results"]:
        print(c.line())
    print(f"suite {suite}: {'PASS' if res['passed'] else 'FAIL'}")
    if out:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps({k: res[k] for k in ("suite", "passed", "checks")}, indent=2) + "\n")
    return EXIT_OK if res["passed"] else EXIT_ACCEPTANCE


def cmd_meter(cfg: RunConfig) -> int:
    kind, rep, obs = build_case(cfg.case)
    regs, devs = [], []
    for register in ("position", "momentum", "number"):
        r = verify_meter_model(obs[0], register, cfg.kappa, cfg.dt)
        regs.append(register)
        devs.append(r.max_deviation)
        print(f"{register}: max deviation {r.max_deviation:.3e} at κdt={cfg.kappa * cfg.dt:g}")
    write_csv(Path(cfg.out) / "meter.csv", {"register": regs, "max_deviation": devs}, _header(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qinstrument", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("--config", help="JSON file with defaults for the flags below")
        sp.add_argument("--case")
        sp.add_argument("--kappa", type=float)
        sp.add_argument("--T", type=float)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--N", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--sampling")
        sp.add_argument("--integrator", choices=[k.value for k in IntegratorKind])
        sp.add_argument("--out")

    run_flags(sub.add_parser("simulate", help="pile up an ensemble and write CSV files"))
    run_flags(sub.add_parser("meter", help="compare meter-model Kraus operators with analytic forms"))
    c = sub.add_parser("closure", help="Lie-closure dimension tower")
    c.add_argument("spec", help='e.g. "jz,jx + quad @ spin=1"')
    c.add_argument("--out")
    v = sub.add_parser("verify", help="run an acceptance suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--out")
    return p


def load_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config: {e}") from e
        unknown = set(base) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
    for k in RunConfig.__dataclass_fields__:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    return RunConfig(**base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    try:
        if args.command == "simulate":
            cfg = load_config(args)
            try:
                return cmd_simulate(cfg)
            except NUMERICAL_ERRORS as e:
                d = Path(cfg.out)
                d.mkdir(parents=True, exist_ok=True)
                (d / "diagnostics.txt").write_text(f"{type(e).__name__}: {e}\n\n{traceback.format_exc()}")
                print(f"numerical failure: {e}", file=sys.stderr)
                return EXIT_NUMERICAL
        if args.command == "meter":
            return cmd_meter(load_config(args).validate())
        if args.command == "closure":
            return cmd_closure(args.spec, args.out)
        return cmd_verify(args.suite, args.out)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
