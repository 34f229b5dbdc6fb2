"""Command-line front end: ``macdecode {simulate,sweep,bounds,verify}``.

Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 guard skip under ``--strict``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from typing import List, Optional

import numpy as np

from . import bounds as bd
from . import verify as vf
from .model import antennas_for
from .report import gnuplot_script, make_row, to_csv, to_jsonl
from .sim import ConfigError, ExperimentConfig, run_experiment, summarize_by_cell

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_SKIP = 0, 2, 3, 4

# flag dest -> ExperimentConfig field
_OVERRIDES = {"n": "n_values", "sigma": "sigma_values", "alpha": "alpha", "xi": "xi",
              "decoder": "decoders", "constellation": "constellation", "fading": "fading",
              "trials": "trials", "seed": "master_seed", "k_fraction": "k_fraction",
              "epsilon": "epsilon", "delta": "delta", "amp_iters": "amp_iters",
              "max_exhaustive_bits": "max_exhaustive_bits"}


def _int_list(s: str) -> List[int]:
    return [int(v) for v in s.split(",") if v.strip()]


def _float_list(s: str) -> List[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _str_list(s: str) -> List[str]:
    return [v.strip() for v in s.split(",") if v.strip()]


def _add_experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON document with ExperimentConfig keys")
    p.add_argument("--n", type=_int_list, help="user counts, comma separated")
    p.add_argument("--alpha", type=float)
    p.add_argument("--xi", type=float)
    p.add_argument("--sigma", type=_float_list, help="noise levels, comma separated")
    p.add_argument("--decoder", type=_str_list, help="comma list of ml,isq,risq,grid,amp")
    p.add_argument("--constellation", choices=["bpsk", "pam4", "psk4"])
    p.add_argument("--fading", choices=["gaussian", "rademacher", "uniform"])
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--k-fraction", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--amp-iters", type=int)
    p.add_argument("--max-exhaustive-bits", type=float)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--jsonl", help="also write rows as JSON lines to this path")
    p.add_argument("--gnuplot", help="write a gnuplot script plotting the CSV to this path")
    p.add_argument("--strict", action="store_true", help="exit 4 if any cell is skipped")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="macdecode", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    _add_experiment_flags(sub.add_parser("simulate", help="run a Monte Carlo SER experiment"))
    _add_experiment_flags(sub.add_parser("sweep", help="run a grid over n and print trend verdicts"))

    b = sub.add_parser("bounds", help="evaluate the analytical error bounds")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--alpha", type=float)
    b.add_argument("--sigma", type=float)
    b.add_argument("--k-prime", type=float, default=0.05)
    b.add_argument("--epsilon", type=float, default=0.25)
    b.add_argument("--t", type=float, default=1.0, help="Chernoff parameter of the tail bound")
    b.add_argument("--a", type=float, help="exponent a of the grid union bound")
    b.add_argument("--p", type=float, help="use this P_i for every i in the union bound")
    b.add_argument("--optimize-t", action="store_true", help="minimize the tail bound over t")

    v = sub.add_parser("verify", help="run a built-in property suite")
    v.add_argument("suite", choices=[*vf.SUITES, "all"])
    return ap


def load_config(args) -> ExperimentConfig:
    """Merge the JSON config (if any) with flag overrides and validate."""
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("config", f"cannot read {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
    for flag, key in _OVERRIDES.items():
        val = getattr(args, flag, None)
        if val is not None:
            data[key] = val
    # an explicit alpha or xi flag replaces the other one from the file
    if args.alpha is not None and args.xi is None:
        data.pop("xi", None)
    if args.xi is not None and args.alpha is None:
        data.pop("alpha", None)
    for key in ("n_values", "sigma_values"):
        if key not in data:
            raise ConfigError(key, "is required")
    try:
        return ExperimentConfig(**data)
    except TypeError as e:
        raise ConfigError("config", str(e)) from None


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _run(args, sweep: bool) -> int:
    cfg = load_config(args)
    if sweep and len(cfg.n_values) < 2:
        raise ConfigError("n_values", "a sweep needs at least two n values")
    if args.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    res = run_experiment(cfg, threads=args.threads)
    rows = [make_row(s, cfg) for s in res.stats]
    _write(args.out, to_csv(rows))
    if args.jsonl:
        _write(args.jsonl, to_jsonl(rows))
    if args.gnuplot:
        _write(args.gnuplot, gnuplot_script(args.out or "results.csv", cfg.decoders))
    for s in res.skips:
        print(f"skip: {s.decoder} n={s.n} sigma={s.sigma:g}: {s.reason}", file=sys.stderr)
    if sweep:
        # keep stdout clean CSV when no --out was given
        dest = sys.stdout if args.out else sys.stderr
        for summ in summarize_by_cell(res.stats):
            print(f"{summ.decoder_id.lower()} sigma={summ.sigma:.9g}", file=dest)
            for n, p, lo, hi in summ.rows:
                print(f"  n={n:<6d} ser={p:.9g}  ci=[{lo:.9g}, {hi:.9g}]", file=dest)
            print(f"  non-increasing within CI: {str(summ.non_increasing).lower()}", file=dest)
    if args.strict and res.skips:
        return EXIT_SKIP
    return EXIT_OK


def cmd_bounds(args) -> int:
    n, kp = args.n, args.k_prime
    if n < 2:
        raise ConfigError("n", "must be >= 2")
    if not 0 < kp <= 1:
        raise ConfigError("k_prime", "must lie in (0, 1]")
    if args.sigma is not None and not args.sigma > 0:
        raise ConfigError("sigma", "must be positive")
    if args.alpha is not None and not args.alpha > 0:
        raise ConfigError("alpha", "must be positive")
    if args.p is not None and not 0 <= args.p <= 1:
        raise ConfigError("p", "must lie in [0, 1]")
    if not args.t > 0:
        raise ConfigError("t", "must be positive")
    if not 0 < args.epsilon < 1:
        raise ConfigError("epsilon", "must lie in (0, 1)")
    if args.a is not None and not args.a > 0:
        raise ConfigError("a", "must be positive")

    i0 = max(1, bd._ceil_frac(kp, n))
    rows = []

    m = antennas_for(n, alpha=args.alpha).m if args.alpha is not None else None
    if args.alpha is not None:
        t = args.t
        if args.optimize_t:
            t = bd.optimal_chernoff_t(n, args.alpha, kp * n)
        thr, prob = bd.lemma1_tail_bound(n, args.alpha, t, k_prime=kp)
        rows += [("threshold", thr), ("t", t), ("tail_bound", prob)]

    if args.p is not None:
        p = {i: args.p for i in range(i0, n + 1)}
    elif args.sigma is not None and m is not None:
        # P_i from the chi-square transform with all |c_j| = 1 on i positions
        tt = 1.0 / (8.0 * args.sigma ** 2)
        p = {i: bd.chi_sq_mgf_bound(tt, np.ones(i), m) for i in range(i0, n + 1)}
        rows.append((f"chi_sq_pattern_bound(i={i0})", p[i0]))
    else:
        p = None
    if p is not None:
        ub = bd.union_bound(n, kp, p)
        rows += [("union_bound", ub), ("per_user_bound", bd.per_user_bound(kp, ub))]
    if args.a is not None:
        rows += [("grid_union_log2", bd.grid_union_log2(n, kp, args.epsilon, args.a)),
                 ("grid_union_bound", bd.grid_union_bound(n, kp, args.epsilon, args.a))]
    if not rows:
        raise ConfigError("alpha", "nothing to evaluate; give --alpha, --p/--sigma or --a")
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v:.9g}")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = vf.SUITES if args.suite == "all" else (args.suite,)
    ok = True
    for name in names:
        print(f"[{name}]")
        for r in vf.run_suite(name):
            print("  " + r.line())
            ok &= r.passed
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _run(args, sweep=False)
        if args.command == "sweep":
            return _run(args, sweep=True)
        if args.command == "bounds":
            return cmd_bounds(args)
        return cmd_verify(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
