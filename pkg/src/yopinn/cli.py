"""Command-line interface.

Subcommands:

* ``forward``  -- train on one rogue-wave family and score against the exact
  solution (presets: bright, intermediate, dark, bright-desk).
* ``inverse``  -- recover the two physical coefficients from data
  (presets: inverse, inverse-desk, sweep-desk).
* ``sweep``    -- cross-product of inverse runs over (alpha, noise).
* ``verify``   -- exact-solution checks: derived parameters, closed-form
  identities, and PDE residuals for all three families.
* ``selftest`` -- fast property suite over the numerical core.

Configuration comes from the preset, optionally overridden by a TOML/JSON
config file (--config) and then by individual flags.  The output directory
defaults to $YOPINN_OUTDIR or ./runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .data import Domain
from .experiment import PRESETS, ExperimentConfig, run_forward, run_inverse, run_sweep

OUTDIR_ENV = "YOPINN_OUTDIR"

_OVERRIDE_FIELDS = {
    "seed": int, "n_q": int, "n_f": int, "alpha": float, "noise": float,
    "adam_iters": int, "lbfgs_iters": int, "hidden_layers": int,
    "hidden_width": int, "adam_lr": float, "chunk": int,
    "checkpoint_every": int,
}


def _load_config_file(path):
    with open(path, "rb") as fh:
        if path.endswith(".json"):
            return json.load(fh)
        try:
            import tomllib
        except ImportError:
            import tomli as tomllib
        return tomllib.load(fh)


def _resolve_config(args) -> ExperimentConfig:
    cfg = PRESETS[args.preset]
    overrides = {}
    if args.config:
        doc = _load_config_file(args.config)
        dom = doc.pop("domain", None)
        if dom is not None:
            overrides["domain"] = Domain.from_dict(dom)
        for key, value in doc.items():
            if key not in _OVERRIDE_FIELDS:
                raise SystemExit(f"unknown config key {key!r}")
            overrides[key] = _OVERRIDE_FIELDS[key](value)
    for key, conv in _OVERRIDE_FIELDS.items():
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = conv(value)
    return replace(cfg, **overrides) if overrides else cfg


def _outdir(args, default_name):
    base = args.outdir or os.environ.get(OUTDIR_ENV, "runs")
    return os.path.join(base, default_name)


def _add_run_flags(p, presets):
    p.add_argument("--preset", choices=sorted(presets), required=True)
    p.add_argument("--config", help="TOML or JSON file with config overrides")
    p.add_argument("--outdir", help=f"output base directory (default ${OUTDIR_ENV} or ./runs)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("--log-every", type=int, default=0, metavar="K",
                   help="print the loss every K iterations")
    for key in _OVERRIDE_FIELDS:
        p.add_argument(f"--{key.replace('_', '-')}", default=None, metavar="V")


def cmd_forward(args):
    cfg = _resolve_config(args)
    outdir = _outdir(args, f"{cfg.kind}_seed{cfg.seed}")
    rec = run_forward(cfg, outdir, make_plots=not args.no_plots,
                      save_prediction=not args.no_prediction,
                      log_every=args.log_every)
    print(f"rel L2 error S = {rec.metrics['rel_l2_S']:.6e}")
    print(f"rel L2 error L = {rec.metrics['rel_l2_L']:.6e}")
    print(f"outputs in {rec.outdir}")
    if rec.passed is False:
        print(f"FAIL: thresholds tol_S={cfg.tol_S:g}, tol_L={cfg.tol_L:g} not met")
        return 1
    return 0


def cmd_inverse(args):
    cfg = _resolve_config(args)
    outdir = _outdir(args, f"inverse_seed{cfg.seed}_alpha{cfg.alpha:g}_noise{cfg.noise:g}")
    rec = run_inverse(cfg, outdir, make_plots=not args.no_plots,
                      log_every=args.log_every)
    m = rec.metrics
    print(f"lambda1 = {m['lambda1']:.6f} (error {m['re1_pct']:.4f}%)")
    print(f"lambda2 = {m['lambda2']:.6f} (error {m['re2_pct']:.4f}%)")
    print(f"outputs in {rec.outdir}")
    if rec.passed is False:
        print(f"FAIL: thresholds tol_re1={cfg.tol_re1:g}%, tol_re2={cfg.tol_re2:g}% not met")
        return 1
    return 0


def cmd_sweep(args):
    cfg = _resolve_config(args)
    alphas = [float(a) for a in args.alphas.split(",")]
    noises = [float(n) for n in args.noises.split(",")]
    outdir = _outdir(args, f"sweep_seed{cfg.seed}")
    records = run_sweep(alphas, noises, cfg, outdir,
                        make_plots=not args.no_plots, log_every=args.log_every)
    print(f"{'noise':>8} {'alpha':>10} {'re1 %':>12} {'re2 %':>12}")
    any_failed = False
    for noise, row in zip(noises, records):
        for alpha, rec in zip(alphas, row):
            if rec.failed:
                any_failed = True
                print(f"{noise:>8g} {alpha:>10g} {'failed':>12} {'failed':>12}")
            else:
                print(f"{noise:>8g} {alpha:>10g} "
                      f"{rec.metrics['re1_pct']:>12.4f} {rec.metrics['re2_pct']:>12.4f}")
    print(f"outputs in {outdir}")
    return 1 if any_failed else 0


def cmd_verify(args):
    from . import exact

    ok = True

    def check(label, value, tol):
        nonlocal ok
        good = value < tol
        ok = ok and good
        print(f"  [{'PASS' if good else 'FAIL'}] {label}: {value:.3e} (tol {tol:g})")

    print("derived rogue-wave parameters:")
    p = exact.bright_params()
    check("bright m - (-1/2)", abs(p.m + 0.5), 1e-12)
    check("bright n - sqrt(3)/2", abs(p.n - np.sqrt(3.0) / 2.0), 1e-12)

    print("closed-form identities:")
    rng = np.random.default_rng(0)
    xs = rng.uniform(-5, 5, 2000)
    ts = rng.uniform(-2, 2, 2000)
    u1, v1, L1 = exact.eval_bright_bright(xs, ts)
    u2, v2, L2 = exact.eval_general_rw(p, xs, ts)
    dev = max(np.abs(u1 - u2).max(), np.abs(v1 - v2).max(), np.abs(L1 - L2).max())
    check("bright-bright vs general form", dev, 1e-12)
    u0, v0, L0 = exact.eval_bright_bright(0.0, 0.0)
    check("|S(0,0)| - 2", abs(np.hypot(u0, v0) - 2.0), 1e-15)
    check("L(0,0) - 6", abs(L0 - 6.0), 1e-15)

    print("PDE residuals (6th-order finite differences):")
    grid_x = np.linspace(-5, 5, 101)
    grid_t = np.linspace(-2, 2, 41)
    for name, params in (("bright", exact.bright_params()),
                         ("intermediate", exact.intermediate_params()),
                         ("dark", exact.dark_params())):
        res = exact.verify_pde_residual(params, grid_x, grid_t)
        check(f"{name} max residual", res, 1e-6)

    print("verification PASSED" if ok else "verification FAILED")
    return 0 if ok else 1


def cmd_selftest(args):
    from .selftest import run_selftest

    return 0 if run_selftest() else 1


def main(argv=None):
    parser = argparse.ArgumentParser(prog="yopinn", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", help="train a forward rogue-wave run")
    _add_run_flags(p, [k for k, v in PRESETS.items() if v.kind.startswith("forward")])
    p.add_argument("--no-prediction", action="store_true",
                   help="skip writing the full prediction grid CSV")
    p.set_defaults(fn=cmd_forward)

    p = sub.add_parser("inverse", help="train an inverse coefficient-recovery run")
    _add_run_flags(p, [k for k, v in PRESETS.items() if v.kind == "inverse"])
    p.set_defaults(fn=cmd_inverse)

    p = sub.add_parser("sweep", help="sweep inverse runs over (alpha, noise)")
    _add_run_flags(p, [k for k, v in PRESETS.items() if v.kind == "inverse"])
    p.add_argument("--alphas", default="0,1e-4,1e-3,1e-2",
                   help="comma-separated alpha values")
    p.add_argument("--noises", default="0,0.01,0.02,0.03",
                   help="comma-separated noise levels")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("verify", help="exact-solution and PDE-residual checks")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("selftest", help="fast property suite")
    p.set_defaults(fn=cmd_selftest)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
