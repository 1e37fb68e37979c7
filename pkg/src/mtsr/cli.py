"""Command-line surface.

Exit codes: 0 success, 2 config error, 3 calibration invalid for the given
parameters, 4 I/O error.  MTSR_THREADS overrides --threads when set.
"""

import argparse
import json
import os
import sys
from dataclasses import replace

from . import calibration, estimators, io, theory
from .backend import COMPILED
from .calibration import CalibrationInvalid
from .experiment import SweepConfig, run_sweep, type_one_experiment
from .io import ConfigError
from .model import ProblemConfig, generate_instance

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION = 3
EXIT_IO = 4


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load_problem_config(path):
    cfg = io.parse_config(path)
    if not isinstance(cfg, ProblemConfig):
        raise ConfigError(f"{path}: expected a problem config, found a sweep config")
    return cfg


def _resolve_threads(args):
    env = os.environ.get("MTSR_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MTSR_THREADS must be an integer, got {env!r}")
    return max(1, args.threads)


def cmd_generate(args):
    cfg = _load_problem_config(args.config)
    inst = generate_instance(cfg, args.mu, args.seed)
    io.write_matrix_csv(inst.observations, args.out)
    started = io._utcnow()
    io.write_manifest("generate", io.config_digest(cfg), inst.seed, started,
                      [args.out], args.out + ".manifest.json")
    _print_json({
        "support": list(inst.support),
        "seed": inst.seed,
        "mu": args.mu,
        "observations": args.out,
        "active_entries": int(inst.activations.sum()),
    })
    return EXIT_OK


def cmd_estimate(args):
    y = io.read_matrix_csv(args.infile)
    proc = args.procedure
    if args.lam is None and args.config is None:
        raise ConfigError("estimate needs --lam or --config to set the penalty")
    cfg = _load_problem_config(args.config) if args.config else None
    if cfg is not None and (cfg.p, cfg.k) != y.shape:
        raise ConfigError(
            f"config dimensions ({cfg.p}, {cfg.k}) do not match data {y.shape}")

    out = {"procedure": proc}
    if proc == "lasso":
        lam = args.lam if args.lam is not None else calibration.lambda_lasso(cfg)
        est = estimators.estimate_lasso(y, lam)
        support = estimators.support_lasso(y, lam)
    elif proc == "group_l2":
        lam = args.lam if args.lam is not None else calibration.lambda_group_l2(cfg)
        est = estimators.estimate_group_l2(y, lam)
        support = estimators.support_group_l2(y, lam)
    elif proc == "group_linf":
        lam = args.lam if args.lam is not None else calibration.lambda_group_linf(cfg)
        est = None  # coefficient values intentionally unsupported for l1/linf
        support = estimators.support_group_linf(y, lam)
    else:
        if cfg is None:
            raise ConfigError("the union procedure needs --config for its two penalties")
        half = replace(cfg, alpha_prime=cfg.alpha_prime / 2.0)
        lam = None
        s1 = estimators.support_lasso(y, calibration.lambda_lasso(half))
        s2 = estimators.support_group_l2(y, calibration.lambda_group_l2(half))
        support = estimators.union_support(s1, s2)
        est = None
    out["lambda_used"] = lam
    out["support"] = list(support)
    if args.out:
        if est is None:
            raise ConfigError(f"{proc} has no coefficient output; drop --out")
        io.write_matrix_csv(est.values, args.out)
        out["estimate"] = args.out
    if args.support_out:
        io.write_support_csv(support, args.support_out)
        out["support_csv"] = args.support_out
    _print_json(out)
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _load_problem_config(args.config)
    _print_json(calibration.calibrate(cfg).to_json_dict())
    return EXIT_OK


def cmd_lowerbound(args):
    cfg = _load_problem_config(args.config)
    rep = theory.mu_lower_bound(cfg, args.alpha)
    _print_json({"mu_min": rep.mu_min, "u": rep.u, "valid": rep.valid,
                 "alpha": rep.alpha})
    return EXIT_OK


def cmd_sweep(args):
    cfg = io.parse_config(args.config)
    if not isinstance(cfg, SweepConfig):
        raise ConfigError(f"{args.config}: expected a sweep config (with p_list)")
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    threads = _resolve_threads(args)
    result = run_sweep(cfg, threads=threads)
    manifest = io.write_results(result, args.out, svg_path=args.plot)
    summary = {
        "cells": len(result.cells),
        "derived": cfg.derived_cells(),
        "skipped": [list(item) for item in result.skipped],
        "csv": args.out,
        "manifest": args.out + ".manifest.json",
        "threads": threads,
        "compiled_kernel": COMPILED,
        "outputs": manifest.outputs,
    }
    if args.plot:
        summary["svg"] = args.plot
    _print_json(summary)
    return EXIT_OK


def cmd_plot(args):
    curves = io.parse_result_csv(args.infile)
    io._atomic_write(args.out, io.svg_from_curves(curves).encode())
    _print_json({"svg": args.out, "panels": len({(p, b) for (_, p, b) in curves})})
    return EXIT_OK


def cmd_typeone(args):
    counts = type_one_experiment(args.p, args.beta, args.runs, args.seed,
                                 threads=_resolve_threads(args))
    _print_json({"n_instances": args.runs,
                 "fw_false_inclusions": counts,
                 "rates": {k: v / args.runs for k, v in counts.items()}})
    return EXIT_OK


def _selftest_checks():
    """The lemma-oracle property suite; yields (name, passed, detail)."""
    import math

    from . import special

    # Gaussian tail bound: 2 Qbar(lam) <= 2/(sqrt(2 pi) lam) exp(-lam^2/2)
    worst = None
    ok = True
    for lam in (0.5, 1.0, 2.0, 4.0):
        exact = 2.0 * special.normal_upper_tail(lam)
        bound = 2.0 / (math.sqrt(2.0 * math.pi) * lam) * math.exp(-lam * lam / 2.0)
        ok &= exact <= bound
        worst = max(worst or 0.0, exact / bound)
    yield "gaussian_tail_bound", ok, f"max exact/bound ratio {worst:.6f}"

    # zero-count bound: (1 - pi)^k <= exp(-k pi) on the grid
    ok = True
    for k in range(1, 201):
        for pi in [0.001] + [i / 40 for i in range(1, 40)] + [0.999]:
            z = theory.binomial_zero_prob(k, pi)
            if z.exact > z.bound * (1.0 + 1e-12):
                ok = False
    yield "binomial_zero_bound", ok, "k in 1..200, pi in [0.001, 0.999]"

    # Chernoff lower tail versus exact binomial CDF
    ok = True
    worst = 0.0
    cases = [(k, pi) for k in (10, 50, 100, 250, 500, 1000)
             for pi in (0.01, 0.1, 0.3, 0.5, 0.8)]
    for k, pi in cases:
        for frac in (0.2, 0.5, 0.9):
            t = frac * k * pi
            exact = special.binomial_cdf(k, pi, math.floor(k * pi - t))
            bound = theory.chernoff_lower_tail(k, pi, t).lower
            if exact > bound * (1.0 + 1e-12):
                ok = False
            if bound > 0:
                worst = max(worst, exact / bound)
    yield "chernoff_lower_tail", ok, f"{3 * len(cases)} grid points, max exact/bound {worst:.4f}"

    # chi-square quantile round trip
    ok = True
    worst = 0.0
    for dof in (1, 2, 5, 10, 100):
        for alpha in (0.2, 0.05, 1e-4):
            t = calibration.chi_square_quantile(dof, alpha)
            gap = abs(special.chi_square_upper_tail(dof, t) - alpha)
            worst = max(worst, gap)
            ok &= gap <= 1e-8
    yield "chi_square_roundtrip", ok, f"max |Q(t) - alpha| = {worst:.2e}"


def cmd_selftest(args):
    failures = 0
    for name, ok, detail in _selftest_checks():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    return EXIT_OK if failures == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="mtsr",
                                     description="Multi-task support recovery lab")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate one synthetic instance")
    g.add_argument("--config", required=True)
    g.add_argument("--mu", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("estimate", help="apply a procedure to an observations CSV")
    e.add_argument("--in", dest="infile", required=True)
    e.add_argument("--procedure", required=True,
                   choices=("lasso", "group_l2", "group_linf", "union"))
    e.add_argument("--lam", type=float, default=None,
                   help="penalty (squared units for group_l2)")
    e.add_argument("--config", default=None, help="problem config to calibrate the penalty")
    e.add_argument("--out", default=None, help="write the estimated means CSV here")
    e.add_argument("--support-out", default=None,
                   help="write the declared support as a one-column CSV")
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("calibrate", help="print the calibration report as JSON")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_calibrate)

    l = sub.add_parser("lowerbound", help="print the minimax lower bound as JSON")
    l.add_argument("--config", required=True)
    l.add_argument("--alpha", type=float, required=True)
    l.set_defaults(func=cmd_lowerbound)

    s = sub.add_parser("sweep", help="run a Monte-Carlo phase-transition sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="result CSV path")
    s.add_argument("--plot", default=None, help="optional SVG path")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--seed", type=int, default=None, help="override master_seed")
    s.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="re-plot an existing sweep CSV to SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    t = sub.add_parser("typeone", help="pure-noise family-wise false inclusion rates")
    t.add_argument("--p", type=int, default=128)
    t.add_argument("--beta", type=float, default=0.0)
    t.add_argument("--runs", type=int, default=1000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--threads", type=int, default=1)
    t.set_defaults(func=cmd_typeone)

    st = sub.add_parser("selftest", help="run the lemma-oracle property suite")
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CalibrationInvalid as exc:
        print(f"calibration invalid: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
