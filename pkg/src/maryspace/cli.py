"""Command-line front end: ``maryspace <command> [flags]``.

Commands: roots, tree, mean, fixpoint, compare, oscillate.  Every output
carries the tool version, the full flag set, the seed and lambda2.  Exit
codes: 0 success, 2 invalid input or domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import datetime as _dt
import os
import re
import sys
from typing import Any, Iterator, Optional, Sequence, TextIO

import numpy as np

from maryspace import __version__
from maryspace import rng as _rng
from maryspace.charpoly import find_roots
from maryspace.errors import DomainError, MarySpaceError, NumericalError
from maryspace.report import dumps_json, fmt_complex, write_csv

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_NUMERICAL = 3

SEED_ENV = "MST_SEED"


def _complex_arg(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in re.split(r"[,\s]+", text.strip()) if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from exc


def _int(text: str) -> int:
    # accepts 1e5 style as well
    value = float(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=_int, help="branching factor")
    common.add_argument("--seed", type=_int, help=f"master seed (fallback: ${SEED_ENV}, then OS entropy)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=_int, default=1, help="worker threads (results do not depend on it)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from metadata")
    common.add_argument("--config", help="flat key=value file supplying defaults")

    p = argparse.ArgumentParser(prog="maryspace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"maryspace {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("roots", parents=[common], help="roots of phi_m, sigma, tau, rho")

    t = sub.add_parser("tree", parents=[common], help="space requirement of one tree")
    src = t.add_mutually_exclusive_group()
    src.add_argument("--keys", help="file of distinct integer keys (whitespace or comma separated)")
    src.add_argument("--random", type=_int, metavar="N", help="random permutation of [N]")
    t.add_argument("--dump", action="store_true", help="print the tree, one node per line")

    mn = sub.add_parser("mean", parents=[common], help="exact E[X_n], E[V_n] table")
    mn.add_argument("--n-max", type=_int, default=10_000)

    fp = sub.add_parser("fixpoint", parents=[common], help="population sample of the fixed point Y")
    fp.add_argument("--N", type=_int, default=100_000, help="pool size")
    fp.add_argument("--generations", type=_int, default=200)
    fp.add_argument("--mu", type=_complex_arg, help="mean of Y (default: fitted from the exact mean table)")
    fp.add_argument("--fit-n-max", type=_int, default=30_000)

    cp = sub.add_parser("compare", parents=[common], help="d2(V_n, V^_n) over a grid of n")
    cp.add_argument("--n-grid", type=_int_list, default=[1_000, 3_000, 10_000, 30_000, 100_000])
    cp.add_argument("--N", type=_int, default=10_000, help="samples per n")
    cp.add_argument("--generations", type=_int, default=200)
    cp.add_argument("--mu", type=_complex_arg)

    osc = sub.add_parser("oscillate", parents=[common], help="E[V_n]/n^sigma against the fitted oscillation")
    osc.add_argument("--n-max", type=_int, default=100_000)
    osc.add_argument("--fit-lo", type=_int, default=10_000)
    osc.add_argument("--fit-hi", type=_int, default=30_000)
    osc.add_argument("--grid-lo", type=_int, default=40_000)
    osc.add_argument("--grid-points", type=_int, default=25)
    p.set_defaults(_subparsers={"roots": r, "tree": t, "mean": mn, "fixpoint": fp, "compare": cp, "oscillate": osc})
    return p


def _read_config(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        # flags given on the command line win over the file
        cfg = _read_config(args.config)
        sub = args._subparsers[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in cfg.items():
            if key not in known:
                raise DomainError(f"unknown config key {key!r}")
            action = known[key]
            if action.type is not None:
                defaults[key] = action.type(value)
            elif action.const is True:
                defaults[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                defaults[key] = value
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    if args.m is None:
        parser.error("--m is required")
    if args.seed is None and os.environ.get(SEED_ENV):
        args.seed = _int(os.environ[SEED_ENV])
    if args.seed is None:
        args.seed = _rng.entropy_seed()
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    return args


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _meta(args: argparse.Namespace, lambda2: Optional[complex], **extra: Any) -> dict[str, Any]:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "_subparsers")}
    flags = {k: (",".join(map(str, v)) if isinstance(v, list) else v) for k, v in flags.items()}
    meta: dict[str, Any] = {
        "tool": "maryspace",
        "version": __version__,
        "command": args.command,
        "flags": flags,
        "seed": args.seed,
        "lambda2": fmt_complex(lambda2) if lambda2 is not None else None,
    }
    meta.update(extra)
    if not args.no_timestamp:
        meta["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def _emit(args: argparse.Namespace, header: Sequence[str], rows: list[Sequence[Any]], meta: dict[str, Any]) -> None:
    with _output(args.out) as out:
        if args.format == "json":
            out.write(dumps_json({"meta": meta, "columns": list(header), "rows": [list(r) for r in rows]}))
        else:
            write_csv(out, header, rows, meta)


def _lambda2_or_none(m: int) -> Optional[complex]:
    return find_roots(m).lambda2 if m >= 3 else None


def cmd_roots(args: argparse.Namespace) -> int:
    roots = find_roots(args.m)
    lam = roots.lambda2 if args.m >= 3 else None
    extra: dict[str, Any] = {"max_relative_residual": roots.max_relative_residual}
    if lam is not None:
        extra.update(sigma=roots.sigma, tau=roots.tau, sigma_gt_half=roots.sigma > 0.5)
        if 2 * roots.sigma + 1 > 0:
            extra["rho"] = roots.rho
    rows = [[i + 1, z.real, z.imag, r] for i, (z, r) in enumerate(zip(roots.roots, roots.residuals))]
    _emit(args, ["index", "re", "im", "relative_residual"], rows, _meta(args, lam, **extra))
    return EXIT_OK


def cmd_tree(args: argparse.Namespace) -> int:
    from maryspace.mtree import build_tree

    if args.keys:
        with open(args.keys, encoding="utf-8") as fh:
            keys = [int(x) for x in re.split(r"[,\s]+", fh.read().strip()) if x]
    else:
        n = args.random or 0
        keys = (_rng.generator(args.seed).permutation(n) + 1).tolist()
    tree = build_tree(args.m, keys)
    if args.dump:
        with _output(args.out) as out:
            out.write(tree.dump() + "\n")
        return EXIT_OK
    row = [args.m, tree.n, tree.node_count_total, tree.node_count_nonempty, tree.full_nodes]
    header = ["m", "n", "space_requirement", "nonempty_nodes", "full_nodes"]
    _emit(args, header, [row], _meta(args, _lambda2_or_none(args.m)))
    return EXIT_OK


def cmd_mean(args: argparse.Namespace) -> int:
    from maryspace.recurrence import exact_mean_X

    table = exact_mean_X(args.m, args.n_max)
    norm = table.mean_V_over_n_sigma()
    rows = [[n, table.mean_X[n], table.mean_V[n], norm[n]] for n in range(table.N + 1)]
    meta = _meta(
        args, _lambda2_or_none(args.m), H_m=table.H_m, mean_linear_coefficient=table.mean_linear_coefficient
    )
    _emit(args, ["n", "mean_X", "mean_V", "mean_V_over_n_sigma"], rows, meta)
    return EXIT_OK


def cmd_fixpoint(args: argparse.Namespace) -> int:
    from maryspace.fixpoint import default_spec, fixed_point_second_moments, sample_Y

    spec = default_spec(args.m, args.mu, fit_n_max=args.fit_n_max)
    pool = sample_Y(spec, args.N, args.generations, args.seed, threads=args.threads)
    abs2, sq = fixed_point_second_moments(spec)
    meta = _meta(
        args,
        spec.lambda2,
        m=spec.m,
        mu=spec.mu,
        mu_source="given" if args.mu is not None else "fitted",
        rho=spec.rho,
        generations=args.generations,
        pool_mean=pool.mean(),
        E_abs2_closed_form=abs2,
        E_sq_closed_form=sq,
    )
    rows = [[z.real, z.imag] for z in pool.samples]
    _emit(args, ["re", "im"], rows, meta)
    if args.out and args.out != "-":
        with open(args.out + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps_json(meta))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    from maryspace.compare import convergence_report
    from maryspace.fixpoint import default_spec

    spec = default_spec(args.m, args.mu)
    report = convergence_report(
        args.m, args.n_grid, args.N, args.seed, generations=args.generations, spec=spec, threads=args.threads
    )
    header = ["n", "d2_hat", "d2_over_n_sigma", "null_d2", "null_over_n_sigma", "N", "seed"]
    rows = [[r.n, r.d2_hat, r.d2_over_n_sigma, r.null_d2, r.null_over_n_sigma, r.N, r.seed] for r in report.rows]
    meta = _meta(
        args,
        spec.lambda2,
        sigma=report.sigma,
        tau=report.tau,
        mu=report.mu,
        rho=spec.rho,
        nonincreasing_10pct=report.nonincreasing(0.10),
        null_exceeds=report.null_exceeds(),
    )
    _emit(args, header, rows, meta)
    return EXIT_OK


def cmd_oscillate(args: argparse.Namespace) -> int:
    from maryspace.compare import oscillation_report, peak_spacing
    from maryspace.recurrence import estimate_mu, exact_mean_X

    roots = find_roots(args.m)
    table = exact_mean_X(args.m, args.n_max, sigma=roots.sigma)
    fit = estimate_mu(table, roots.lambda2, (args.fit_lo, args.fit_hi))
    table = table.with_fit(fit)
    grid = np.unique(np.geomspace(args.grid_lo, args.n_max, args.grid_points).round().astype(int))
    rows = oscillation_report(table, fit.mu_hat, roots.lambda2, grid)
    spacings, period = peak_spacing(table)
    meta = _meta(
        args,
        roots.lambda2,
        sigma=roots.sigma,
        tau=roots.tau,
        mu_hat=fit.mu_hat,
        mu_hat_stderr=fit.stderr,
        fit_range=list(fit.fit_range),
        fit_max_rel_residual=fit.max_rel_residual,
        period_2pi_over_tau=period,
        peak_spacings=[float(s) for s in spacings],
    )
    out_rows = [[r.n, r.exact, r.model, r.rel_err, r.amp_err] for r in rows]
    _emit(args, ["n", "exact_over_n_sigma", "model", "rel_err", "amp_err"], out_rows, meta)
    return EXIT_OK


COMMANDS = {
    "roots": cmd_roots,
    "tree": cmd_tree,
    "mean": cmd_mean,
    "fixpoint": cmd_fixpoint,
    "compare": cmd_compare,
    "oscillate": cmd_oscillate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"maryspace: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (MarySpaceError, ValueError, OSError) as exc:
        print(f"maryspace: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
