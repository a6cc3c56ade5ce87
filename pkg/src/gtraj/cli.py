"""Command-line entry point: ``gtraj <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import GtrajError, ValidationError


def _time_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        a, b, step = (float(x) for x in parts)
    except ValueError:
        raise ValidationError(f"--t expects start:stop:step, got {text!r}") from None
    if step <= 0 or b < a:
        raise ValidationError("--t needs step > 0 and stop >= start")
    n = int(np.floor((b - a) / step + 1e-9))
    return a + step * np.arange(n + 1)


def _load(args):
    from .io import parse_config
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None and args.seed != cfg.master_seed:
        cfg.notes.append(f"master_seed overridden on the command line ({cfg.master_seed} -> {args.seed})")
        cfg.master_seed = args.seed
    if getattr(args, "traj", None) is not None:
        cfg.n_traj = args.traj
    if getattr(args, "out", None):
        cfg.output = args.out
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    return cfg


def _run_ensemble(cfg, observables):
    from .engine import run_ensemble
    from .io import config_echo, threads_env
    model = cfg.compiled()
    init = cfg.initial_state(model)
    res = run_ensemble(model, init, cfg.schedule, cfg.master_seed, cfg.n_traj, observables,
                       workers=cfg.workers)
    extra = {"config": config_echo(cfg), "notes": cfg.notes, "GTRJ_THREADS": threads_env()}
    return res, extra


def cmd_run(args) -> int:
    from .io import write_results
    cfg = _load(args)
    res, extra = _run_ensemble(cfg, cfg.observables)
    snaps = {"final_covariance": res.final_covariance} if "covariance" in cfg.formats else None
    files = write_results(res, cfg.output, cfg.formats, extra, snaps)
    for f in files:
        print(f)
    return 0


def cmd_entropy(args) -> int:
    from .io import write_results
    cfg = _load(args)
    n = cfg.compiled().n_sites
    suffix = "" if args.order == "vonNeumann" else ",order=renyi2"
    reqs = [f"entropy@cut={m}{suffix}" for m in range(1, n)]
    res, extra = _run_ensemble(cfg, reqs)
    write_results(res, cfg.output, [f for f in cfg.formats if f != "covariance"], extra)
    print("cut,mean,stderr")
    for m, name in enumerate(res.mean, start=1):
        print(f"{m},{float(res.mean[name][-1])!r},{float(res.stderr[name][-1])!r}")
    return 0


def cmd_exact(args) -> int:
    from .engine import EnsembleResult
    from .honeycomb import HoneycombModel
    from .io import config_echo, initial_state, write_results
    from .oracles import dense as D
    cfg = _load(args)
    if isinstance(cfg.model, HoneycombModel):
        dm = D.dense_honeycomb(cfg.model)
        lattice = cfg.model
        psi = _honeycomb_dense_initial(cfg.model, dm)
        rho0 = np.outer(psi, psi.conj())
    else:
        dm = D.dense_from_spec(cfg.model)
        lattice = None
        if cfg.initial == "ground":
            w, v = np.linalg.eigh(dm.hamiltonian)
            rho0 = np.outer(v[:, 0], v[:, 0].conj())
        else:
            occ = cfg.initial
            if not isinstance(occ, list):
                n = cfg.model.n_sites
                occ = {"neel": [(i + 1) % 2 for i in range(n)], "neel_odd": [i % 2 for i in range(n)],
                       "filled": [1] * n, "empty": [0] * n}[occ]
            rho0 = D.product_density(occ)
    ops = {}
    for r in cfg.observables:
        ops.update(D.dense_observables(r, dm.n_sites, dm, lattice))
    sched = cfg.schedule
    times, series = D.dense_evolve(dm, rho0, sched.t_final, sched.dt, sched.observable_stride, ops)
    res = EnsembleResult(times, series, {k: np.zeros_like(v) for k, v in series.items()}, 1,
                         {"dt": sched.dt, "model_hash": cfg.model.model_hash(), "method": "dense"})
    files = write_results(res, cfg.output, [f for f in cfg.formats if f != "covariance"],
                          {"config": config_echo(cfg)})
    for f in files:
        print(f)
    return 0


def _honeycomb_dense_initial(model, dm):
    """Lowest-energy spin state with the fluxes and winding loops fixed by the gauge bits."""
    from .oracles import dense as D
    fixed = [(w, D.plaquette_operator(model, p)) for p, w in enumerate(model.flux())]
    fixed += [(w, D.pauli_string(dict(loop), dm.n_sites))
              for w, loop in zip(model.wilson_loops(), model.loops)]
    penalty = sum(np.eye(dm.dim) - w * op for w, op in fixed)
    scale = 10 * (1 + np.abs(dm.hamiltonian).sum())
    _, v = np.linalg.eigh(dm.hamiltonian + scale * penalty)
    return v[:, 0]


def cmd_meanfield(args) -> int:
    from .oracles.meanfield import MeanFieldState, meanfield_tfim, tfim_phase_boundary
    if args.boundary is not None:
        b = tfim_phase_boundary(args.boundary)
        print("h_low,h_high")
        print("nan,nan" if b is None else f"{b[0]!r},{b[1]!r}")
        return 0
    grid = _time_grid(args.t)
    s0 = MeanFieldState(*[float(x) for x in args.s0.split(",")])
    dt = float(grid[1] - grid[0]) if grid.size > 1 else 0.01
    times, states = meanfield_tfim(args.J, args.h, args.kappa, s0, float(grid[-1]), dt)
    if args.out:
        from .engine import EnsembleResult
        from .io import write_results
        series = {k: states[:, c] for c, k in enumerate(("sx", "sy", "sz"))}
        res = EnsembleResult(times, series, {k: np.zeros_like(v) for k, v in series.items()}, 1,
                             {"dt": dt, "method": "meanfield", "J": args.J, "h": args.h,
                              "kappa": args.kappa})
        for f in write_results(res, args.out):
            print(f)
        return 0
    print("time,sx,sy,sz")
    for t, (x, y, z) in zip(times, states):
        print(",".join(repr(float(v)) for v in (t, x, y, z)))
    return 0


def cmd_analytic(args) -> int:
    from .oracles import analytic as A
    t = _time_grid(args.t)
    if args.which == "afm":
        v = A.free_fermion_afm(t, args.J, args.kappa)
    elif args.which == "subradiant":
        v = A.free_fermion_subradiant_density(t, args.kappa)
    elif args.which == "dd":
        v = A.free_fermion_dd_corr(args.d, t, args.kappa)
    elif args.which == "ansatz":
        v = A.disorder_ansatz_afm(t, args.J, args.kappa, args.alpha)
    else:
        v = A.disorder_ansatz_asymptote(t, args.J, args.kappa, args.alpha)
    if args.out:
        from .io import series_csv
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(series_csv(t, v), encoding="utf-8")
        print(args.out)
        return 0
    print(f"time,{args.which}")
    for a, b in zip(t, v):
        print(f"{float(a)!r},{float(b)!r}")
    return 0


def random_chain_spec(n: int, rng: np.random.Generator, dephasing: bool = True):
    """Random chain with complex hopping/pairing and generic bond and on-site jumps."""
    from .models import JumpTerm, ModelSpec

    def c(k):
        return rng.normal(size=k) + 1j * rng.normal(size=k)
    jumps = [JumpTerm(i, tuple(0.5 * c(4))) for i in range(n - 1)]
    z = 0.5 * c(2)
    jumps.append(JumpTerm(n - 1, (z[0], z[1], 0, 0)))
    deph = rng.uniform(0.1, 0.5, size=n) if dephasing else None
    return ModelSpec(n, rng.normal(size=n), c(n - 1), c(n - 1), jumps, deph)


def otoc_verify(n: int, n_jumps: int, seed: int, t_final: float = 1.0, dt: float = 1e-3) -> float:
    from .gaussian import CovarianceState
    from .models import compile
    from .oracles.dense import random_pure_covariance
    from .oracles.otoc import (otoc_expectation, pairwise_observables, random_jump_record,
                               schrodinger_expectation)
    rng = np.random.default_rng(seed)
    model = compile(random_chain_spec(n, rng))
    init = CovarianceState.from_real(random_pure_covariance(n, rng))
    record = random_jump_record(model, n_jumps, t_final, rng)
    obs = list(pairwise_observables(n))
    if n >= 2:
        obs += [(1.0, tuple(range(4)))]
    worst = 0.0
    for o in obs:
        a = otoc_expectation(model, init, record, o, t_final)
        b = schrodinger_expectation(model, init, record, o, t_final, dt)
        worst = max(worst, abs(a - b))
    return worst


def cmd_otoc_verify(args) -> int:
    worst = otoc_verify(args.N, args.jumps, args.seed, args.t, args.dt)
    print(f"max deviation: {worst:.3e}")
    return 0 if worst <= args.tol else 3


def cmd_sample_plan(args) -> int:
    from .engine import required_samples
    print(required_samples(args.epsilon, args.delta))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gtraj", description="Gaussian quantum-jump trajectories for "
                                "Jordan-Wigner spin chains")
    p.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def cfg_args(sp, traj=True):
        sp.add_argument("--config", required=True)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        if traj:
            sp.add_argument("--traj", type=int)
            sp.add_argument("--workers", type=int)

    sp = sub.add_parser("run", help="trajectory ensemble")
    cfg_args(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("entropy", help="trajectory-averaged entanglement entropy at every cut")
    cfg_args(sp)
    sp.add_argument("--order", choices=["vonNeumann", "renyi2"], default="vonNeumann")
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("exact", help="dense Lindblad reference (small N)")
    cfg_args(sp, traj=False)
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("meanfield", help="TFIM product-state mean field")
    sp.add_argument("--J", type=float, default=1.0)
    sp.add_argument("--h", type=float, default=0.5)
    sp.add_argument("--kappa", type=float, default=1.0)
    sp.add_argument("--s0", default="1,0,0", help="initial Bloch vector sx,sy,sz")
    sp.add_argument("--t", default="0:10:0.01")
    sp.add_argument("--boundary", type=float, metavar="J_TILDE",
                    help="print the ordered band in h/kappa for J/kappa = J_TILDE")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_meanfield)

    sp = sub.add_parser("analytic", help="closed-form free-fermion curves")
    sp.add_argument("which", choices=["afm", "subradiant", "dd", "ansatz", "ansatz-asymptote"])
    sp.add_argument("--J", type=float, default=1.0)
    sp.add_argument("--kappa", type=float, default=1.0)
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--alpha", type=float, default=0.1)
    sp.add_argument("--t", default="0:10:0.01")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_analytic)

    sp = sub.add_parser("otoc-verify", help="Pfaffian evaluator vs covariance pipeline")
    sp.add_argument("--N", type=int, default=3)
    sp.add_argument("--jumps", type=int, default=2)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_otoc_verify)

    sp = sub.add_parser("sample-plan", help="Hoeffding trajectory count")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.set_defaults(func=cmd_sample_plan)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except GtrajError as exc:
        info = {"error": exc.error_class, "message": str(exc)}
        if getattr(exc, "violations", None):
            info["violations"] = exc.violations
        if isinstance(exc, ValidationError) and hasattr(exc, "line"):
            info["line"], info["column"] = exc.line, exc.column
        print(json.dumps(info, default=str), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
