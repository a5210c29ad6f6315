"""Command-line front end.

Subcommands: estimate, estimate-mmv, synth, verify, sweep, demo-am and
config.  Exit codes: 0 success, 1 runtime failure, 2 usage error, 3
verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

import numpy as np

from . import io as sio
from .bench import (
    SweepSpec,
    TrialParams,
    am_message_signal,
    rsnr,
    run_sweep,
    segment_reconstruct,
)
from .mmv import run_sure_ir_mmv
from .model import TWO_PI, random_instance
from .oracle import SUITE_NAMES, run_suites
from .solver import SolverConfig, SolverFailure, run_sure_ir

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3

_CONFIG_FLAGS = {
    "lambda0": "lambda0",
    "d": "d",
    "tau": "tau",
    "eps_init": "eps_init",
    "eps_min": "eps_min",
    "warmup": "warmup_iters",
    "max_iters": "max_outer_iters",
    "conv_tol": "conv_tol",
    "n_init": "n_init",
}


class _UsageError(Exception):
    pass


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SURE_IR_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise _UsageError(f"SURE_IR_SEED must be an integer, got {env!r}") from exc
    return 0


def _config_from_args(args) -> SolverConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read config file: {exc}") from exc
    for flag, field_name in _CONFIG_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            base[field_name] = val
    if getattr(args, "no_adaptive_lambda", False):
        base["adaptive_lambda"] = False
    try:
        return SolverConfig.from_json(json.dumps(base))
    except (TypeError, ValueError) as exc:
        raise _UsageError(f"invalid configuration: {exc}") from exc


def _print_estimate(freqs, amps, radians: bool, verbose: bool, cfg: SolverConfig,
                    iterations: int, final_lambda: float) -> None:
    unit = "rad" if radians else "cycles"
    shown = freqs if radians else freqs / TWO_PI
    print(f"K_hat = {len(freqs)}")
    amps = np.atleast_2d(np.asarray(amps))
    for i, f in enumerate(shown):
        mag = float(np.linalg.norm(amps[i])) if amps.ndim == 2 else abs(amps[i])
        print(f"  component {i}: freq = {f:.9f} {unit}  |amp| = {mag:.6f}")
    if verbose:
        print(f"iterations = {iterations}, final lambda = {final_lambda:.6g}")
        print("resolved config:")
        print(cfg.to_json())


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="solver config JSON file")
    p.add_argument("--lambda0", type=float, help="initial regularization weight")
    p.add_argument("--d", type=float, help="lambda update scale factor")
    p.add_argument("--tau", type=float, help="pruning threshold")
    p.add_argument("--eps-init", dest="eps_init", type=float)
    p.add_argument("--eps-min", dest="eps_min", type=float)
    p.add_argument("--warmup", type=int, help="iterations with lambda frozen")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--conv-tol", dest="conv_tol", type=float)
    p.add_argument("--n-init", dest="n_init", type=int, help="initial grid size")
    p.add_argument("--no-adaptive-lambda", action="store_true",
                   help="freeze lambda at lambda0 (fixed-regularization variant)")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sure-ir",
        description="Super-resolution line spectral estimation by iterative "
                    "reweighted least squares.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate frequencies from a signal CSV")
    p.add_argument("input", help="signal CSV (index,re,im)")
    p.add_argument("--out", help="write estimate JSON here")
    p.add_argument("--radians", action="store_true", help="print radians, not cycles")
    p.add_argument("--verbose", action="store_true")
    _add_config_flags(p)

    p = sub.add_parser("estimate-mmv", help="estimate from an observation-matrix CSV")
    p.add_argument("input", help="MMV CSV (index,snapshot,re,im)")
    p.add_argument("--out", help="write estimate JSON here")
    p.add_argument("--radians", action="store_true")
    p.add_argument("--verbose", action="store_true")
    _add_config_flags(p)

    p = sub.add_parser("synth", help="generate a random instance")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--t", type=int, default=64)
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--psnr", type=float, default=None,
                   help="observation PSNR in dB (omit for noiseless)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output prefix (.csv/.json)")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("verify", help="run independent oracle suites")
    p.add_argument("--suite", action="append", choices=SUITE_NAMES,
                   help="restrict to named suites (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write OracleReport JSON array here")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one parameter")
    p.add_argument("--spec", help="SweepSpec JSON file")
    p.add_argument("--variable", choices=("m", "k", "psnr_db", "spacing_mu"))
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--t", type=int, default=64)
    p.add_argument("--m", type=int, default=30)
    p.add_argument("--psnr", type=float, default=25.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--full", action="store_true",
                   help="use 1000 trials per point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--trial-log", help="optional per-trial JSON-lines path")
    p.add_argument("--verbose", action="store_true")
    _add_config_flags(p)

    p = sub.add_parser("demo-am", help="segmented reconstruction of a synthetic AM record")
    p.add_argument("--n-samples", type=int, default=4096)
    p.add_argument("--seg-len", type=int, default=256)
    p.add_argument("--ratios", default="0.05,0.1",
                   help="comma-separated sampling ratios M/T")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write per-ratio RSNR JSON here")
    p.add_argument("--verbose", action="store_true")
    _add_config_flags(p)

    p = sub.add_parser("config", help="print solver configuration")
    p.add_argument("--default", action="store_true", help="print the defaults")
    _add_config_flags(p)

    return ap


def _cmd_estimate(args) -> int:
    cfg = _config_from_args(args)
    indices, values = sio.read_signal_csv(args.input)
    est = run_sure_ir(values, indices, cfg)
    _print_estimate(est.freqs, est.amps, args.radians, args.verbose, cfg,
                    est.iterations, est.final_lambda)
    if args.out:
        sio.write_json(args.out, sio.estimate_to_dict(
            est.freqs, est.amps, est.objective_trace, est.iterations,
            est.final_lambda))
    return EXIT_OK


def _cmd_estimate_mmv(args) -> int:
    cfg = _config_from_args(args)
    indices, y = sio.read_mmv_csv(args.input)
    est = run_sure_ir_mmv(y, indices, cfg)
    _print_estimate(est.freqs, est.coeff_matrix, args.radians, args.verbose, cfg,
                    est.iterations, est.final_lambda)
    if args.out:
        sio.write_json(args.out, sio.estimate_to_dict(
            est.freqs, est.coeff_matrix, est.objective_trace, est.iterations,
            est.final_lambda))
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.m > args.t:
        raise _UsageError("m must not exceed t")
    if args.k < 1 or args.m < 1:
        raise _UsageError("k and m must be positive")
    inst = random_instance(args.k, args.t, args.m, args.psnr, _default_seed(args))
    csv_path, json_path = sio.write_instance(args.out, inst)
    if args.verbose:
        print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    reports = run_suites(args.suite, seed=_default_seed(args))
    payload = [r.to_dict() for r in reports]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: max_rel_err={r.max_rel_err:.3e} "
              f"tol={r.tolerance:.0e} cases={r.cases}")
    if args.out:
        sio.write_json(args.out, payload)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    if args.spec:
        try:
            payload = sio.read_json(args.spec)
            fixed = TrialParams(
                k=payload.get("k", 3), t=payload.get("t", 64),
                m=payload.get("m", 30), psnr_db=payload.get("psnr_db", 25.0),
                config=cfg,
            )
            spec = SweepSpec(
                variable=payload["variable"], values=payload["values"],
                fixed=fixed, trials=payload.get("trials", args.trials),
                base_seed=payload.get("base_seed", _default_seed(args)),
            )
        except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"invalid sweep spec: {exc}") from exc
    else:
        if not args.variable or not args.values:
            raise _UsageError("either --spec or both --variable and --values")
        try:
            values = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError as exc:
            raise _UsageError(f"bad --values: {exc}") from exc
        if not values:
            raise _UsageError("empty --values")
        fixed = TrialParams(k=args.k, t=args.t, m=args.m, psnr_db=args.psnr,
                            config=cfg)
        spec = SweepSpec(
            variable=args.variable, values=values, fixed=fixed,
            trials=1000 if args.full else args.trials,
            base_seed=_default_seed(args),
        )

    def progress(value, records):
        rate = float(np.mean([r.success for r in records]))
        print(f"{spec.variable}={value}: success={rate:.3f} "
              f"({len(records)} trials)")

    rows, per_value = run_sweep(spec, jobs=args.jobs, progress=progress)
    sio.write_sweep_csv(args.out, rows)
    if args.trial_log:
        sio.write_trial_jsonl(
            args.trial_log,
            [r.to_dict() for recs in per_value for r in recs],
        )
    if args.verbose:
        print("resolved config:")
        print(cfg.to_json())
    return EXIT_OK


def _cmd_demo_am(args) -> int:
    cfg = _config_from_args(args)
    try:
        ratios = [float(r) for r in args.ratios.split(",") if r.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --ratios: {exc}") from exc
    if not ratios or any(not 0 < r <= 1 for r in ratios):
        raise _UsageError("ratios must lie in (0, 1]")
    signal = am_message_signal(args.n_samples)
    seed = _default_seed(args)
    results = {}
    for ratio in ratios:
        m_per_seg = max(1, int(round(ratio * args.seg_len)))
        recon = segment_reconstruct(signal, args.seg_len, m_per_seg, cfg, seed)
        results[str(ratio)] = rsnr(signal, recon)
        print(f"ratio={ratio}: RSNR = {results[str(ratio)]:.2f} dB")
    if args.out:
        sio.write_json(args.out, results)
    return EXIT_OK


def _cmd_config(args) -> int:
    cfg = SolverConfig() if args.default else _config_from_args(args)
    print(cfg.to_json())
    return EXIT_OK


_HANDLERS = {
    "estimate": _cmd_estimate,
    "estimate-mmv": _cmd_estimate_mmv,
    "synth": _cmd_synth,
    "verify": _cmd_verify,
    "sweep": _cmd_sweep,
    "demo-am": _cmd_demo_am,
    "config": _cmd_config,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (sio.FormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
