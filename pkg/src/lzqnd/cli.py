"""Batch command-line front end.

Subcommands: trace, sweep, strobe, noise-mc, nm, gap, verify.  Every run
is driven by an INI config (see configs/ for annotated examples); the
flags --seed, --workers and --out override the corresponding config
entries.  Exit codes: 0 success, 1 configuration/validation error,
2 verification failure, 3 runtime invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .config import (
    Config,
    ConfigError,
    TRACE_ENGINES,
    apply_overrides,
    load_config,
)
from .csvio import write_csv
from .dephasing import DephasingModel, run_ame
from .linalg import InvariantViolation
from .lindblad import effective_gap, run_continuous
from .lz import coherent_transfer_trajectory
from .nonmarkov import blp_measure
from .strobe import NoiseSpec, build_schedule, run_noisy_mc, run_stroboscopic
from .sweep import SweepSpec, run_sweep, sweep_to_csv
from .verify import run_checks

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_INVARIANT = 3


def _load(args) -> Config:
    cfg = load_config(args.config)
    return apply_overrides(cfg, seed=args.seed, workers=args.workers, out=args.out)


def _out_path(cfg: Config, args, default: str) -> str:
    return cfg.get("output", "path") or default


def _workers(cfg: Config) -> int:
    w = cfg.get("run", "workers")
    return w if w > 0 else (os.cpu_count() or 1)


def _trajectory_columns(traj):
    return [
        ("t", traj.times),
        ("P", traj.p_values),
        ("trace_dev", traj.trace_dev),
        ("herm_dev", traj.herm_dev),
        ("min_eig", traj.min_eig),
        ("quad", traj.quad),
        ("meter_tail", traj.tail),
    ]


def _meta(cfg: Config, extra=None) -> dict:
    md = cfg.header_metadata(__version__)
    md.update(extra or {})
    return md


def _volatile() -> dict:
    return {"written_at_unix": f"{time.time():.3f}"}


def cmd_trace(args) -> int:
    cfg = _load(args)
    engine = cfg.get("trace", "engine")
    if engine not in TRACE_ENGINES:
        raise ConfigError(f"[trace] engine must be one of {TRACE_ENGINES}")
    lz = cfg.build_lz()
    window_gu = cfg.get("run", "t_half_gu")
    dt = cfg.dt_or_none()
    values = cfg.get("trace", "values")
    vary = cfg.get("trace", "vary")
    if values is not None and len(values) == 0:
        raise ConfigError("[trace] values list is empty")
    if (values is None) != (vary is None):
        raise ConfigError("[trace] vary and values must be given together")
    out_base = _out_path(cfg, args, "trace.csv")

    runs = [(None, None)] if values is None else [(vary, v) for v in values]
    for vary_path, v in runs:
        run_cfg = Config({s: dict(d) for s, d in cfg.data.items()})
        if vary_path is not None:
            sec, key = vary_path.split(".")
            run_cfg.set(sec, key, v)
        lz_r = run_cfg.build_lz()
        if engine == "coherent":
            traj = coherent_transfer_trajectory(
                lz_r, window_gu, dt=dt, n_store=run_cfg.n_store_or(1201)
            )
            cols = [("t", traj.times), ("P", traj.p_values)]
        elif engine == "lindblad":
            res = run_continuous(
                lz_r, run_cfg.build_meter(), window_gu, dt,
                n_store=run_cfg.n_store_or(401),
            )
            cols = _trajectory_columns(res.trajectory)
        else:
            model = run_cfg.build_model(lz_r)
            res = run_ame(lz_r, model, window_gu, dt, n_store=run_cfg.n_store_or(1201))
            cols = _trajectory_columns(res.trajectory)
        path = out_base
        if vary_path is not None:
            stem, dot, ext = out_base.rpartition(".")
            stem = stem if dot else out_base
            ext = ext if dot else "csv"
            path = f"{stem}_{vary_path.split('.')[1]}_{v:g}.{ext}"
        write_csv(
            path, cols,
            metadata=_meta(cfg, {"engine": engine, "varied": vary_path or "", "value": v if v is not None else ""}),
            volatile=_volatile(),
        )
        print(f"wrote {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = SweepSpec.from_config(cfg)
    records = run_sweep(spec, workers=_workers(cfg))
    path = _out_path(cfg, args, "sweep.csv")
    sweep_to_csv(path, spec, records, metadata=_meta(cfg, {"task": spec.task}),
                 volatile=_volatile())
    n_err = sum(1 for r in records if r.status != "ok")
    print(f"wrote {path} ({len(records)} cells, {n_err} failed)")
    return EXIT_OK


def cmd_strobe(args) -> int:
    cfg = _load(args)
    lz = cfg.build_lz()
    m = cfg.build_meter()
    th = cfg.get("run", "t_half_gu") * lz.time_unit()
    window = (-th, th)
    tp_raw = cfg.get("strobe", "t_p")
    t_p = 1.0 / m.x0 if tp_raw == "auto" else float(tp_raw)
    mode = cfg.get("strobe", "amplitude_mode")
    dlist = cfg.get("strobe", "delta_t_gu_list") or [cfg.get("strobe", "delta_t_gu")]
    out_base = _out_path(cfg, args, "strobe.csv")
    for dl in dlist:
        sched = build_schedule(window, dl * lz.time_unit(), t_p)
        traj = run_stroboscopic(
            lz, m, sched, window, dt=cfg.dt_or_none(), amplitude_mode=mode,
            n_store=cfg.n_store_or(801),
        )
        stem, dot, ext = out_base.rpartition(".")
        stem = stem if dot else out_base
        ext = ext if dot else "csv"
        path = f"{stem}_dt_{dl:g}.{ext}" if len(dlist) > 1 else out_base
        write_csv(
            path, _trajectory_columns(traj),
            metadata=_meta(cfg, {
                "delta_t_gu": dl, "t_p": t_p, "amplitude_mode": mode,
                "n_pulses": sched.n_pulses, "final_T": traj.final_p,
            }),
            volatile=_volatile(),
        )
        print(f"wrote {path} (final T = {traj.final_p:.6f})")
    return EXIT_OK


def cmd_noise_mc(args) -> int:
    cfg = _load(args)
    lz = cfg.build_lz()
    m = cfg.build_meter()
    th = cfg.get("run", "t_half_gu") * lz.time_unit()
    window = (-th, th)
    noise = NoiseSpec(
        tau=cfg.get("noise", "tau_gu") * lz.time_unit(),
        n_it=cfg.get("noise", "n_it"),
        seed=cfg.get("run", "seed"),
    )
    tp_raw = cfg.get("strobe", "t_p")
    t_p = 1.0 / m.x0 if tp_raw == "auto" else float(tp_raw)
    mc = run_noisy_mc(
        lz, m, cfg.get("strobe", "delta_t_gu") * lz.time_unit(), noise, window,
        dt=cfg.dt_or_none(), t_p=t_p,
        amplitude_mode=cfg.get("strobe", "amplitude_mode"),
        n_store=cfg.n_store_or(801), workers=_workers(cfg),
    )
    path = _out_path(cfg, args, "noise_mc.csv")
    write_csv(
        path,
        [("t", mc.times), ("mean_P", mc.mean_p), ("stderr", mc.stderr)],
        metadata=_meta(cfg, {
            "tau": noise.tau, "n_it": noise.n_it, "seed": noise.seed,
            "amplitude_mode": mc.meta["amplitude_mode"], "delta_t": mc.meta["delta_t"],
            "t_p": mc.meta["t_p"], "mean_final_T": mc.mean_p[-1],
            "stderr_final_T": mc.stderr[-1],
        }),
        volatile=_volatile(),
    )
    print(f"wrote {path} (mean final T = {mc.mean_p[-1]:.6f} +- {mc.stderr[-1]:.6f})")
    return EXIT_OK


def cmd_nm(args) -> int:
    cfg = _load(args)
    lz = cfg.build_lz()
    m = cfg.build_meter()
    res = blp_measure(
        lz, m, cfg.get("run", "t_half_gu"), cfg.dt_or_none(),
        n_store=cfg.n_store_or(2001),
    )
    print(
        f"N = {res.n_value:.8f} at bloch angles theta={res.best_pair.theta:.4f}, "
        f"phi={res.best_pair.phi:.4f}"
    )
    if cfg.get("output", "path") or args.out:
        path = _out_path(cfg, args, "nm.csv")
        write_csv(
            path,
            [("t", res.times), ("D", res.d_trajectory)],
            metadata=_meta(cfg, {
                "N": res.n_value, "best_theta": res.best_pair.theta,
                "best_phi": res.best_pair.phi, **{f"nm.{k}": v for k, v in res.meta.items()},
            }),
            volatile=_volatile(),
        )
        print(f"wrote {path}")
    return EXIT_OK


def cmd_gap(args) -> int:
    cfg = _load(args)
    lz = cfg.build_lz()
    m = cfg.build_meter()
    gap = effective_gap(lz, m, cfg.get("run", "t_half_gu"), cfg.dt_or_none())
    print(f"effective gap = {gap:.8f} (bare g = {lz.g:g})")
    if cfg.get("output", "path") or args.out:
        path = _out_path(cfg, args, "gap.csv")
        write_csv(path, [("gap", [gap])], metadata=_meta(cfg), volatile=_volatile())
        print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results, ok = run_checks(only=args.only, echo=print)
    if not results:
        print(f"no checks match filter {args.only!r}")
        return EXIT_CONFIG
    if args.out:
        write_csv(
            args.out,
            [
                ("name", [r.name for r in results]),
                ("value", [r.value for r in results]),
                ("bound", [str(r.bound) for r in results]),
                ("op", [r.op for r in results]),
                ("passed", [r.passed for r in results]),
                ("runtime_s", [r.runtime_s for r in results]),
            ],
            metadata={"engine_version": __version__},
            volatile=_volatile(),
        )
        print(f"wrote {args.out}")
    n_fail = sum(1 for r in results if not r.passed)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lzqnd",
        description="Landau-Zener qubit with a damped-oscillator meter: "
                    "simulation batch runner",
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="INI run configuration")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None, help="override run seed")
        p.add_argument("--workers", type=int, default=None, help="override worker count")

    common(sub.add_parser("trace", help="time-resolved transfer probability"))
    common(sub.add_parser("sweep", help="grid sweep over one or two parameters"))
    common(sub.add_parser("strobe", help="pulsed-coupling run(s)"))
    common(sub.add_parser("noise-mc", help="timing-error Monte Carlo"))
    common(sub.add_parser("nm", help="information-backflow measure of one cell"))
    common(sub.add_parser("gap", help="meter-dressed gap of one cell"))
    pv = sub.add_parser("verify", help="run the verification suite")
    pv.add_argument("--only", default=None, help="substring filter on check groups")
    pv.add_argument("--out", default=None, help="write the report as CSV")
    return ap


HANDLERS = {
    "trace": cmd_trace,
    "sweep": cmd_sweep,
    "strobe": cmd_strobe,
    "noise-mc": cmd_noise_mc,
    "nm": cmd_nm,
    "gap": cmd_gap,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return HANDLERS[args.command](args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as e:
        print(f"invariant violation: {e}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
