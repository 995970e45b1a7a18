"""Command-line interface.

Subcommands: sample, converge, variance, oracle-compare, verify-lemmas,
verify-aau, plot-data.  Exit codes: 0 success, 1 usage error, 2 numerical
failure, 3 verification violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .. import __version__
from ..bandmatrix import BandSpec, build_X
from ..spectra import NumericalFailure, eigenvalues
from .config import ConfigError, build_config
from .experiments import (
    EIGENVALUES_CSV,
    MANIFEST_JSON,
    _scheme_description,
    draw_scheme,
    run_aau_report,
    run_convergence,
    run_lemma_suite,
    run_oracle_comparison,
    run_variance_study,
)
from .manifest import RunManifest, derive_seed, utc_now, write_csv
from .plotdata import PLOT_KINDS, emit_plot_data

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_VIOLATION = 3


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise UsageError(message)


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part.strip())


def _common_flags(parser: Parser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed")
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="parallel replica workers")
    parser.add_argument("--config", default=None, help="configuration file")


def _scheme_flags(parser: Parser) -> None:
    parser.add_argument("--scheme", choices=("wigner", "curie_weiss", "gaussian"), default=None)
    parser.add_argument("--dist", choices=("rademacher", "standard_normal"), default=None)
    parser.add_argument("--beta", type=float, default=None, help="inverse temperature")
    parser.add_argument("--alpha", type=float, default=None, help="correlation decay exponent")
    parser.add_argument("--off-diag", type=float, default=None, help="equicorrelation value")
    parser.add_argument("--replicas", type=int, default=None)
    parser.add_argument("--moments", type=str, default=None, help="comma list, e.g. 1,2,3,4")
    parser.add_argument("--n-values", type=str, default=None, help="comma list of dimensions")
    parser.add_argument(
        "--bandwidth",
        type=str,
        default=None,
        help="bandwidth rule: 'n', 'gamma:<float>', 'fixed:<odd int>' or an integer",
    )


def _experiment_config(args):
    overrides = {
        "scheme": args.scheme,
        "dist": args.dist,
        "beta": args.beta,
        "alpha": args.alpha,
        "off_diag": args.off_diag,
        "replicas": args.replicas,
        "moments": args.moments,
        "n_values": args.n_values,
        "bandwidth": args.bandwidth,
        "seed": args.seed,
        "out_dir": args.out_dir,
        "threads": args.threads,
    }
    return build_config(args.config, **overrides)


def _cmd_sample(args) -> int:
    config = _experiment_config(args)
    n, b = config.sizes[0]
    seed = derive_seed(config.seed, 0, 0)
    manifest = RunManifest(
        command="sample",
        config=config.echo(),
        master_seed=config.seed,
        artifact_version=__version__,
        started_at=utc_now(),
        seeds=[{"n": n, "b": b, "replica": 0, "seed": seed}],
    )
    sample = draw_scheme(_scheme_description(config), n, np.random.default_rng(seed), seed)
    scaled = build_X(sample, BandSpec(n, b))
    spectrum = eigenvalues(scaled.values)
    path = write_csv(
        Path(config.out_dir) / EIGENVALUES_CSV,
        ["index", "eigenvalue"],
        [[i + 1, val] for i, val in enumerate(spectrum.eigenvalues)],
    )
    manifest.finished_at = utc_now()
    manifest.register_file(path)
    manifest.write(Path(config.out_dir) / MANIFEST_JSON)
    print(f"wrote {path} ({n} eigenvalues, b={b})")
    return EXIT_OK


def _cmd_converge(args) -> int:
    result = run_convergence(_experiment_config(args))
    for entry in result.summary:
        print(
            f"n={entry['n']} b={entry['b']} k={entry['k']}: "
            f"mean={entry['mean_moment']:.6f} (ref {entry['reference']:.1f}, "
            f"se {entry['stderr_moment']:.2e}), KS={entry['mean_kolmogorov']:.4f}"
        )
    print(f"wrote {', '.join(str(p) for p in result.files.values())}")
    return EXIT_OK


def _cmd_variance(args) -> int:
    result = run_variance_study(_experiment_config(args))
    for row in result.slope_rows:
        print(
            f"k={row['k']}: slope={row['slope']:.3f} +- {row['slope_stderr']:.3f}, "
            f"decreasing={bool(row['strictly_decreasing'])}, "
            f"summable-consistent={bool(row['slope_consistent'])}"
        )
    print(f"wrote {', '.join(str(p) for p in result.files.values())}")
    return EXIT_OK


def _cmd_oracle_compare(args) -> int:
    result = run_oracle_comparison(_experiment_config(args))
    for row in result.rows:
        marker = "ok" if row["mc_ok"] else "DISCREPANT"
        print(
            f"n={row['n']} b={row['b']} k={row['k']}: exact={row['exact']:.6f} "
            f"mc={row['mc_mean']:.6f} (se {row['mc_stderr']:.2e}) {marker}"
        )
    print(f"wrote {', '.join(str(p) for p in result.files.values())}")
    return EXIT_OK if result.ok else EXIT_VIOLATION


def _cmd_verify_lemmas(args) -> int:
    result = run_lemma_suite(
        max_n=args.max_n,
        max_k=args.max_k,
        pair_max_n=args.pair_max_n,
        pair_max_k=args.pair_max_k,
        out_dir=args.out_dir,
    )
    checked = sum(report.checked for report in result.reports)
    print(f"{len(result.reports)} checks, {checked} instances scanned")
    for violation in result.violations:
        print(f"VIOLATION: {violation}")
    print("all bounds hold" if result.ok else f"{len(result.violations)} violations")
    return EXIT_OK if result.ok else EXIT_VIOLATION


def _cmd_verify_aau(args) -> int:
    if args.scheme is None:
        raise UsageError("verify-aau requires --scheme")
    report = run_aau_report(
        scheme=args.scheme,
        alpha=args.alpha if args.alpha is not None else 0.5,
        n_values=_int_list(args.n_values) if args.n_values else (4, 8, 16),
        max_l=args.max_l,
        beta=args.beta if args.beta is not None else 0.5,
        dist=args.dist if args.dist is not None else "rademacher",
        off_diag=args.off_diag,
        out_dir=args.out_dir or "runs",
    )
    print(f"{len(report.rows)} rows for scheme {report.scheme} at alpha={report.alpha}")
    print(f"squared-factor deviations nonincreasing: {report.squared_factors_nonincreasing}")
    print(f"fourth-power deviations nonincreasing: {report.fourth_power_nonincreasing}")
    return EXIT_OK if report.decays_ok else EXIT_VIOLATION


def _cmd_plot_data(args) -> int:
    out = emit_plot_data(args.csv, args.kind, args.out, k=args.k, render=args.render)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> Parser:
    parser = Parser(prog="bandsemi", description=__doc__)
    parser.add_argument("--version", action="version", version=f"bandsemi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, runner, blurb in (
        ("sample", _cmd_sample, "draw one realization and write its eigenvalues (first configured size)"),
        ("converge", _cmd_converge, "moments and Kolmogorov distances across sizes"),
        ("variance", _cmd_variance, "across-replica variance of moments and its decay slope"),
        ("oracle-compare", _cmd_oracle_compare, "exact expected moments vs Monte Carlo on small instances"),
    ):
        p = sub.add_parser(name, help=blurb)
        _common_flags(p)
        _scheme_flags(p)
        p.set_defaults(runner=runner)

    p = sub.add_parser("verify-lemmas")
    _common_flags(p)
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--max-k", type=int, default=6)
    p.add_argument("--pair-max-n", type=int, default=4)
    p.add_argument("--pair-max-k", type=int, default=4)
    p.set_defaults(runner=_cmd_verify_lemmas)

    p = sub.add_parser("verify-aau")
    _common_flags(p)
    _scheme_flags(p)
    p.add_argument("--max-l", type=int, default=3)
    p.set_defaults(runner=_cmd_verify_aau)

    p = sub.add_parser("plot-data")
    _common_flags(p)
    p.add_argument("--kind", choices=PLOT_KINDS, required=True)
    p.add_argument("--csv", required=True, help="input CSV produced by a run")
    p.add_argument("--out", required=True, help="output data file")
    p.add_argument("--k", type=int, default=None, help="moment order to select")
    p.add_argument("--render", action="store_true", help="also write an SVG")
    p.set_defaults(runner=_cmd_plot_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.runner(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
