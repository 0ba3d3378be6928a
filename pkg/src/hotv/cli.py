"""Command-line entry point.

Subcommands: ``simulate`` (randomized 1D optimal-weight campaign),
``reconstruct`` (2D phantom study, scaled and/or unscaled weights), and
``verify`` (exact identity suites).  Exit codes: 0 success, 1 verification
failure, 2 usage or configuration error, 3 campaign invalid.

A config file holds one ``key=value`` pair per line (``#`` comments
allowed); command-line flags override file values.  Every run echoes its
effective configuration to ``run_config.txt`` in the output directory, in
the same format, so a run can be reproduced from that file alone.
"""

from __future__ import annotations

import argparse
import os
import sys

from .harness import (
    CampaignInvalid,
    run_1d_campaign,
    run_2d_experiment,
    save_2d_experiment,
    save_campaign,
    summarize_campaign,
    svg_histogram,
)
from .operators import PATransform, pa_matrix_l1_norm, verify_binomial_identity
from .signals import spaced_piecewise_constant

_INT_KEYS = {"trials", "seed", "n", "jobs", "kmax"}
_FLOAT_KEYS = {"lambda1", "snr", "sigma", "rate", "level-scale", "dev-scale"}
_BOOL_KEYS = {"snr-db", "svg", "scaled", "unscaled"}


def _parse_config_file(path) -> dict:
    values: dict = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"line {lineno}: expected key=value")
                key, _, val = line.partition("=")
                key, val = key.strip(), val.strip()
                if key in _INT_KEYS:
                    values[key] = int(val)
                elif key in _FLOAT_KEYS:
                    values[key] = float(val)
                elif key in _BOOL_KEYS:
                    values[key] = val.lower() in ("1", "true", "yes")
                else:
                    values[key] = val
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from exc
    return values


def _merge_config(args: argparse.Namespace, argv,
                  parser: argparse.ArgumentParser):
    """File values fill in flags the user did not pass explicitly."""
    if not getattr(args, "config", None):
        return args
    try:
        file_values = _parse_config_file(args.config)
    except ValueError as exc:
        parser.error(str(exc))
    passed = set()
    for token in argv:
        if token.startswith("--"):
            passed.add(token[2:].split("=", 1)[0].replace("-", "_"))
    for key, value in file_values.items():
        attr = key.replace("-", "_")
        if attr == "subcommand":
            continue
        if hasattr(args, attr) and attr not in passed:
            setattr(args, attr, value)
    return args


def _resolve_out(args, default: str) -> str:
    out = getattr(args, "out", None) or os.environ.get("HOTV_OUT") or default
    os.makedirs(out, exist_ok=True)
    return out


def _echo_config(args, out_dir: str, subcommand: str, keys) -> None:
    with open(os.path.join(out_dir, "run_config.txt"), "w") as fh:
        fh.write(f"subcommand={subcommand}\n")
        for key in keys:
            value = getattr(args, key.replace("-", "_"))
            if value is None:
                continue
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            fh.write(f"{key}={value}\n")


def _parse_orders(text) -> tuple[int, ...]:
    if isinstance(text, tuple):
        return text
    try:
        orders = tuple(int(tok) for tok in str(text).split(","))
    except ValueError:
        raise ValueError(f"bad orders list {text!r}") from None
    if not orders or any(not 1 <= k <= 8 for k in orders):
        raise ValueError("orders must be a comma list within 1..8")
    return orders


def cmd_simulate(args, parser) -> int:
    if args.trials < 1:
        parser.error("--trials must be at least 1")
    try:
        orders = _parse_orders(args.orders)
    except ValueError as exc:
        parser.error(str(exc))
    out = _resolve_out(args, "simulate_out")
    _echo_config(args, out, "simulate",
                 ["trials", "seed", "n", "orders", "jobs", "svg", "sigma",
                  "rate", "level-scale", "dev-scale", "out"])
    overrides = dict(n=args.n, orders=orders)
    if args.level_scale is not None:
        overrides["level_scale"] = args.level_scale
    if args.dev_scale is not None:
        overrides["dev_scale"] = args.dev_scale
    if args.sigma is not None:
        overrides["sigma_range"] = (args.sigma, args.sigma)
    if args.rate is not None:
        overrides["rate_range"] = (args.rate, args.rate)
    try:
        results = run_1d_campaign(args.trials, args.seed, jobs=args.jobs,
                                  **overrides)
    except CampaignInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    summary = summarize_campaign(results)
    save_campaign(results, summary, out)
    if args.svg:
        for k, counts in summary.histograms.items():
            svg_histogram(counts, summary.bin_edges,
                          os.path.join(out, f"histogram_k{k}.svg"),
                          title=f"scaling relative error, order {k}")
    for k in sorted(summary.mean_scaled):
        print(f"order {k}: mean scaled lambda "
              f"{summary.mean_scaled[k]:.4g}, median "
              f"{summary.median_scaled[k]:.4g}")
    print(f"results written to {out}")
    return 0


def cmd_reconstruct(args, parser) -> int:
    if args.lambda1 is None:
        parser.error("--lambda1 is required")
    if args.lambda1 <= 0:
        parser.error("--lambda1 must be positive")
    if args.n < 32:
        parser.error("--n must be at least 32")
    try:
        orders = _parse_orders(args.orders)
    except ValueError as exc:
        parser.error(str(exc))
    if args.scaled and args.unscaled:
        parser.error("pass at most one of --scaled / --unscaled")
    modes = [True, False]
    if args.scaled:
        modes = [True]
    elif args.unscaled:
        modes = [False]
    out = _resolve_out(args, "reconstruct_out")
    _echo_config(args, out, "reconstruct",
                 ["phantom", "n", "lambda1", "seed", "orders", "snr",
                  "snr-db", "scaled", "unscaled", "out"])
    metrics = os.path.join(out, "metrics.csv")
    if os.path.exists(metrics):
        os.remove(metrics)
    for scaled in modes:
        rows, recons = run_2d_experiment(
            args.phantom, args.n, args.seed, args.lambda1, scaled,
            orders=orders, snr=args.snr, snr_db=args.snr_db, jobs=args.jobs,
        )
        save_2d_experiment(rows, recons, out)
        for r in rows:
            sn = " ".join(f"sn{j}={r.seminorms[j]:.4g}" for j in range(1, 5))
            print(f"{r.label:>12}: rel_err={r.rel_data_error:.4f} {sn}")
    print(f"results written to {out}")
    return 0


def cmd_verify(args, parser) -> int:
    if args.kmax < 1:
        parser.error("--kmax must be at least 1")
    if args.n < 4 * args.kmax:
        parser.error("--n too small for the requested orders")
    checks: list[tuple[str, bool]] = []
    for k in range(1, args.kmax + 1):
        t = PATransform(k, (args.n,), "periodic")
        checks.append((f"matrix l1 norm k={k} equals 2^{k}",
                       pa_matrix_l1_norm(t) == 2**k))
    identity_ok = all(
        verify_binomial_identity(k, m)
        for k in range(1, 21) for m in range(k)
    )
    checks.append(("alternating binomial identity, k<=20", identity_ok))
    rng_orders = [k for k in range(2, min(args.kmax, 4) + 1)]
    for k in rng_orders:
        ok = True
        for seed in range(10):
            f = spaced_piecewise_constant(512, k, (seed, k))
            t1 = PATransform(1, (512,), "valid")
            tk = PATransform(k, (512,), "valid")
            lhs = tk.seminorm(f)
            rhs = 2.0 ** (k - 1) * t1.seminorm(f)
            ok &= abs(lhs - rhs) <= 1e-10 * max(rhs, 1.0)
        checks.append((f"spaced-step seminorm ratio k={k} equals 2^{k-1}",
                       ok))
    width = max(len(name) for name, _ in checks)
    all_ok = True
    for name, ok in checks:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}")
        all_ok &= ok
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hotv",
        description="higher-order TV regularization experiments",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="randomized 1D optimal-weight study")
    sim.add_argument("--trials", type=int, default=100)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--n", type=int, default=256)
    sim.add_argument("--orders", default="1,2,3,4")
    sim.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    sim.add_argument("--sigma", type=float, default=None,
                     help="fix the noise level instead of drawing from "
                          "{0,1,2,3}")
    sim.add_argument("--rate", type=float, default=None,
                     help="fix the sampling rate instead of drawing")
    sim.add_argument("--level-scale", type=float, default=None)
    sim.add_argument("--dev-scale", type=float, default=None)
    sim.add_argument("--svg", action="store_true",
                     help="emit SVG histograms alongside the CSVs")
    sim.add_argument("--config")
    sim.add_argument("--out")

    rec = sub.add_parser("reconstruct", help="2D phantom reconstruction study")
    rec.add_argument("--phantom", choices=["shepp-logan", "smooth"],
                     default="shepp-logan")
    rec.add_argument("--n", type=int, default=64)
    rec.add_argument("--lambda1", type=float, default=None)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--orders", default="1,2,3,4")
    rec.add_argument("--snr", type=float, default=23.75)
    rec.add_argument("--snr-db", action="store_true",
                     help="interpret --snr in decibels")
    rec.add_argument("--scaled", action="store_true",
                     help="only the run with 2^(k-1) weight scaling")
    rec.add_argument("--unscaled", action="store_true",
                     help="only the run without weight scaling")
    rec.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    rec.add_argument("--config")
    rec.add_argument("--out")

    ver = sub.add_parser("verify", help="exact identity suites")
    ver.add_argument("--kmax", type=int, default=8)
    ver.add_argument("--n", type=int, default=64)
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _merge_config(args, argv, parser)
    if args.subcommand == "simulate":
        return cmd_simulate(args, parser)
    if args.subcommand == "reconstruct":
        return cmd_reconstruct(args, parser)
    return cmd_verify(args, parser)


if __name__ == "__main__":
    sys.exit(main())
