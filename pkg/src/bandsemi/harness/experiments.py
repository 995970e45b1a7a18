"""Experiment drivers: convergence, variance decay, oracle comparison, lemma suite.

Every run writes deterministic CSVs plus a manifest with per-stream seeds
and file checksums.  Replicas are independent streams derived from the
master seed, so results do not depend on scheduling; with threads > 1 the
replicas of a case are computed in a process pool and merged in replica
order.  Wall-clock timings go to a separate timings CSV so that the data
CSVs stay byte-identical across reruns.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..bandmatrix import BandSpec, band_mask, build_X
from ..ensembles import (
    CurieWeissMomentOracle,
    Equicorrelated,
    GaussianMomentOracle,
    GaussianSchemeParams,
    WignerMomentOracle,
    curie_weiss_scheme,
    curie_weiss_spin_block,
    gaussian_scheme,
    triangle_index_matrix,
    triangle_size,
    verify_aau,
    wigner_scheme,
)
from ..oracle import (
    CheckReport,
    exact_expected_moment,
    rademacher_enumeration_moment,
    verify_count_bounds,
    verify_gaussian_lemmas,
    verify_pair_bounds,
    verify_vertex_bounds,
)
from ..spectra import (
    NumericalFailure,
    eigenvalues,
    esd_moment,
    kolmogorov_distance,
    semicircle_moment,
)
from .config import ExperimentConfig
from .manifest import RunManifest, derive_seed, utc_now, write_csv

CONVERGENCE_CSV = "convergence.csv"
SUMMARY_CSV = "summary.csv"
TIMINGS_CSV = "timings.csv"
VARIANCE_CSV = "variance.csv"
VARIANCE_SUMMARY_CSV = "variance_summary.csv"
ORACLE_CSV = "oracle_comparison.csv"
LEMMA_CSV = "lemma_report.csv"
AAU_CSV = "aau_report.csv"
EIGENVALUES_CSV = "eigenvalues.csv"
MANIFEST_JSON = "manifest.json"

ORACLE_MAX_N = {"curie_weiss": 4, "gaussian": 4, "wigner": 6}
MC_TOLERANCE_SE = 4.0


@dataclass(frozen=True)
class ConvergenceRow:
    """One replica's measurement for one moment order."""

    n: int
    b: int
    replica: int
    k: int
    moment: float
    kolmogorov: float
    wall_time: float


def _scheme_description(config: ExperimentConfig) -> tuple:
    if config.scheme == "wigner":
        return ("wigner", config.dist)
    if config.scheme == "curie_weiss":
        return ("curie_weiss", config.beta)
    return ("gaussian", config.alpha, config.off_diag)


def draw_scheme(description: tuple, n: int, rng: np.random.Generator, seed: int | None):
    """Sample one raw scheme realization from a picklable description."""
    kind = description[0]
    if kind == "wigner":
        return wigner_scheme(description[1], n, rng, seed=seed)
    if kind == "curie_weiss":
        return curie_weiss_scheme(description[1], n, rng, seed=seed)
    if kind == "gaussian":
        _, alpha, off_diag = description
        c = triangle_size(n) ** (-alpha) if off_diag is None else off_diag
        params = GaussianSchemeParams(alpha=alpha, n=n, cov=Equicorrelated(c))
        return gaussian_scheme(params, rng, seed=seed)
    raise ValueError(f"unknown scheme kind {kind!r}")


def scheme_moment_oracle(config: ExperimentConfig):
    """Exact mixed-moment oracle matching the configured scheme."""
    if config.scheme == "wigner":
        return WignerMomentOracle(dist=config.dist)
    if config.scheme == "curie_weiss":
        return CurieWeissMomentOracle(beta=config.beta)
    return GaussianMomentOracle(alpha=config.alpha, off_diag=config.off_diag)


def _replica_task(args: tuple) -> tuple[dict[int, float], float, float]:
    """Worker: sample, band, scale, decompose, measure.  Picklable."""
    description, n, b, seed, moment_orders = args
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    sample = draw_scheme(description, n, rng, seed)
    scaled = build_X(sample, BandSpec(n, b))
    spectrum = eigenvalues(scaled.values)
    moments = {k: esd_moment(spectrum, k) for k in moment_orders}
    distance = kolmogorov_distance(spectrum)
    return moments, distance, time.perf_counter() - start


def _run_replicas(tasks: list[tuple], threads: int) -> list:
    if threads <= 1:
        return [_replica_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_replica_task, tasks))


def _collect_rows(config: ExperimentConfig, command: str):
    """Run all (case, replica) tasks; return rows, seed records, manifest."""
    manifest = RunManifest(
        command=command,
        config=config.echo(),
        master_seed=config.seed,
        artifact_version=__version__,
        started_at=utc_now(),
    )
    description = _scheme_description(config)
    rows: list[ConvergenceRow] = []
    for case_index, (n, b) in enumerate(config.sizes):
        tasks = []
        for replica in range(config.replicas):
            seed = derive_seed(config.seed, case_index, replica)
            manifest.seeds.append({"n": n, "b": b, "replica": replica, "seed": seed})
            tasks.append((description, n, b, seed, config.moments))
        try:
            results = _run_replicas(tasks, config.threads)
        except Exception as exc:
            failing = [t[3] for t in tasks]
            raise NumericalFailure(
                f"replica batch failed for n={n}, b={b} (seeds {failing}): {exc}"
            ) from exc
        for replica, (moments, distance, wall) in enumerate(results):
            for k in config.moments:
                rows.append(
                    ConvergenceRow(
                        n=n,
                        b=b,
                        replica=replica,
                        k=k,
                        moment=moments[k],
                        kolmogorov=distance,
                        wall_time=wall,
                    )
                )
    return rows, manifest


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    if values.size < 2:
        return mean, float("nan")
    return mean, float(np.std(values, ddof=1) / math.sqrt(values.size))


@dataclass
class ConvergenceResult:
    rows: list[ConvergenceRow]
    summary: list[dict]
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)


def run_convergence(config: ExperimentConfig) -> ConvergenceResult:
    """Spectral statistics per (n, b) against the semicircle references.

    Per replica: raw moments and the Kolmogorov distance; per case and
    moment order: mean, standard error and the absolute deviation from the
    semicircle moment.
    """
    rows, manifest = _collect_rows(config, "converge")
    summary: list[dict] = []
    for n, b in config.sizes:
        case_rows = [r for r in rows if r.n == n and r.b == b]
        distances = np.array(sorted({r.replica: r.kolmogorov for r in case_rows}.items()))[:, 1]
        ks_mean, ks_se = _mean_stderr(distances)
        for k in config.moments:
            values = np.array([r.moment for r in case_rows if r.k == k])
            mean, se = _mean_stderr(values)
            reference = semicircle_moment(k)
            summary.append(
                {
                    "n": n,
                    "b": b,
                    "k": k,
                    "mean_moment": mean,
                    "stderr_moment": se,
                    "reference": reference,
                    "abs_deviation": abs(mean - reference),
                    "mean_kolmogorov": ks_mean,
                    "stderr_kolmogorov": ks_se,
                }
            )

    out = Path(config.out_dir)
    files = {}
    files[CONVERGENCE_CSV] = write_csv(
        out / CONVERGENCE_CSV,
        ["n", "b", "replica", "k", "moment", "kolmogorov"],
        [[r.n, r.b, r.replica, r.k, r.moment, r.kolmogorov] for r in rows],
    )
    files[SUMMARY_CSV] = write_csv(
        out / SUMMARY_CSV,
        [
            "n",
            "b",
            "k",
            "mean_moment",
            "stderr_moment",
            "reference",
            "abs_deviation",
            "mean_kolmogorov",
            "stderr_kolmogorov",
        ],
        [[s[key] for key in (
            "n", "b", "k", "mean_moment", "stderr_moment", "reference",
            "abs_deviation", "mean_kolmogorov", "stderr_kolmogorov",
        )] for s in summary],
    )
    seen = set()
    timing_rows = []
    for r in rows:
        key = (r.n, r.b, r.replica)
        if key not in seen:
            seen.add(key)
            timing_rows.append([r.n, r.b, r.replica, r.wall_time])
    files[TIMINGS_CSV] = write_csv(
        out / TIMINGS_CSV, ["n", "b", "replica", "wall_seconds"], timing_rows
    )
    manifest.finished_at = utc_now()
    for path in files.values():
        manifest.register_file(path)
    manifest.write(out / MANIFEST_JSON)
    return ConvergenceResult(rows=rows, summary=summary, out_dir=out, files=files)


@dataclass
class VarianceResult:
    variance_rows: list[dict]
    slope_rows: list[dict]
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(row["slope_consistent"] for row in self.slope_rows)


def run_variance_study(config: ExperimentConfig) -> VarianceResult:
    """Sample variance of each ESD moment across replicas, per (n, b).

    Adds, per moment order, the least-squares slope of log variance against
    log n together with its regression standard error and the flag
    slope <= -1 + 2 * stderr (consistency with summable decay when the
    bandwidth grows linearly).
    """
    if config.replicas < 2:
        raise ValueError("variance undefined for fewer than 2 replicas")
    if config.replicas < 100:
        warnings.warn(
            f"variance study with only {config.replicas} replicas; >= 100 recommended",
            stacklevel=2,
        )
    rows, manifest = _collect_rows(config, "variance")
    variance_rows: list[dict] = []
    for n, b in config.sizes:
        for k in config.moments:
            values = np.array(
                [r.moment for r in rows if r.n == n and r.b == b and r.k == k]
            )
            variance_rows.append(
                {
                    "n": n,
                    "b": b,
                    "k": k,
                    "mean_moment": float(np.mean(values)),
                    "variance": float(np.var(values, ddof=1)),
                    "replicas": values.size,
                }
            )

    slope_rows: list[dict] = []
    for k in config.moments:
        points = [(row["n"], row["variance"]) for row in variance_rows if row["k"] == k]
        decreasing = all(b[1] < a[1] for a, b in zip(points, points[1:]))
        if len(points) >= 2 and all(v > 0 for _, v in points):
            x = np.log([float(n) for n, _ in points])
            y = np.log([v for _, v in points])
            slope, intercept = np.polyfit(x, y, 1)
            if len(points) >= 3:
                residuals = y - (slope * x + intercept)
                dof = len(points) - 2
                s2 = float(residuals @ residuals) / dof
                se = math.sqrt(s2 / float(((x - x.mean()) ** 2).sum()))
            else:
                se = float("nan")
        else:
            slope, se = float("nan"), float("nan")
        consistent = bool(slope <= -1.0 + 2.0 * se) if math.isfinite(slope) and math.isfinite(se) else False
        slope_rows.append(
            {
                "k": k,
                "slope": float(slope),
                "slope_stderr": float(se),
                "strictly_decreasing": int(decreasing),
                "slope_consistent": int(consistent),
            }
        )

    out = Path(config.out_dir)
    files = {}
    files[VARIANCE_CSV] = write_csv(
        out / VARIANCE_CSV,
        ["n", "b", "k", "mean_moment", "variance", "replicas"],
        [[r["n"], r["b"], r["k"], r["mean_moment"], r["variance"], r["replicas"]] for r in variance_rows],
    )
    files[VARIANCE_SUMMARY_CSV] = write_csv(
        out / VARIANCE_SUMMARY_CSV,
        ["k", "slope", "slope_stderr", "strictly_decreasing", "slope_consistent"],
        [[r["k"], r["slope"], r["slope_stderr"], r["strictly_decreasing"], r["slope_consistent"]] for r in slope_rows],
    )
    manifest.finished_at = utc_now()
    for path in files.values():
        manifest.register_file(path)
    manifest.write(out / MANIFEST_JSON)
    return VarianceResult(
        variance_rows=variance_rows, slope_rows=slope_rows, out_dir=out, files=files
    )


def sample_scheme_block(
    config: ExperimentConfig, n: int, replicas: int, rng: np.random.Generator
) -> np.ndarray:
    """(replicas, n, n) block of raw symmetric scheme realizations."""
    dim = triangle_size(n)
    if config.scheme == "curie_weiss":
        spins = curie_weiss_spin_block(config.beta, n * n, replicas, rng)
        grid = spins.reshape(replicas, n, n).astype(float)
        return np.triu(grid) + np.triu(grid, 1).transpose(0, 2, 1)
    if config.scheme == "gaussian":
        c = dim ** (-config.alpha) if config.off_diag is None else config.off_diag
        if c < 0:
            raise ValueError("block sampling supports nonnegative equicorrelation only")
        y = math.sqrt(1.0 - c) * rng.standard_normal((replicas, dim))
        if c:
            y += math.sqrt(c) * rng.standard_normal((replicas, 1))
    elif config.dist == "rademacher":
        y = 2.0 * rng.integers(0, 2, size=(replicas, dim)) - 1.0
    else:
        y = rng.standard_normal((replicas, dim))
    return y[:, triangle_index_matrix(n)]


@dataclass
class OracleComparisonResult:
    rows: list[dict]
    out_dir: Path
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(row["mc_ok"] and row["enum_ok"] != 0 for row in self.rows)


def run_oracle_comparison(config: ExperimentConfig) -> OracleComparisonResult:
    """Exact expected ESD moments against Monte Carlo (and full enumeration).

    Small instances only.  The exact side sums scheme moments over relevant
    tuples; the Monte Carlo side averages spectra over replicas and is
    required to agree within 4 standard errors.  For the +-1 independent
    scheme the tuple sum is additionally compared with complete sign
    enumeration at tolerance 1e-12.
    """
    limit = ORACLE_MAX_N[config.scheme]
    for n, _ in config.sizes:
        if n > limit:
            raise ValueError(
                f"oracle comparison for scheme {config.scheme} limited to n <= {limit}"
            )
    oracle = scheme_moment_oracle(config)
    manifest = RunManifest(
        command="oracle-compare",
        config=config.echo(),
        master_seed=config.seed,
        artifact_version=__version__,
        started_at=utc_now(),
    )
    rows: list[dict] = []
    for case_index, (n, b) in enumerate(config.sizes):
        spec = BandSpec(n, b)
        seed = derive_seed(config.seed, case_index)
        manifest.seeds.append({"n": n, "b": b, "replica": "block", "seed": seed})
        rng = np.random.default_rng(seed)
        block = sample_scheme_block(config, n, config.replicas, rng)
        scaled = block * band_mask(spec)[None, :, :] / math.sqrt(b)
        spectra = np.linalg.eigvalsh(scaled)
        for k in config.moments:
            exact = exact_expected_moment(oracle, n, k, spec)
            samples = np.mean(spectra**k, axis=1)
            mc_mean, mc_se = _mean_stderr(samples)
            gap = abs(exact - mc_mean)
            # almost-surely constant statistics (sign entries at even k) have
            # zero sample variance; allow float roundoff there
            mc_ok = gap <= max(MC_TOLERANCE_SE * mc_se, 1e-12)
            if config.scheme == "wigner" and config.dist == "rademacher" and triangle_size(n) <= 16:
                enumeration = rademacher_enumeration_moment(n, k, spec)
                enum_ok = int(abs(exact - enumeration) <= 1e-12)
            else:
                enumeration = float("nan")
                enum_ok = -1  # not applicable
            rows.append(
                {
                    "scheme": config.scheme,
                    "n": n,
                    "b": b,
                    "k": k,
                    "exact": exact,
                    "mc_mean": mc_mean,
                    "mc_stderr": mc_se,
                    "mc_ok": bool(mc_ok),
                    "enumeration": enumeration,
                    "enum_ok": enum_ok,
                }
            )
    out = Path(config.out_dir)
    files = {
        ORACLE_CSV: write_csv(
            out / ORACLE_CSV,
            ["scheme", "n", "b", "k", "exact", "mc_mean", "mc_stderr", "mc_ok", "enumeration", "enum_ok"],
            [
                [
                    r["scheme"], r["n"], r["b"], r["k"], r["exact"], r["mc_mean"],
                    r["mc_stderr"], int(r["mc_ok"]), r["enumeration"], r["enum_ok"],
                ]
                for r in rows
            ],
        )
    }
    manifest.finished_at = utc_now()
    for path in files.values():
        manifest.register_file(path)
    manifest.write(out / MANIFEST_JSON)
    return OracleComparisonResult(rows=rows, out_dir=out, files=files)


def valid_bandwidths(n: int) -> list[int]:
    """All admissible bandwidths for dimension n: odd values below n, then n."""
    return [b for b in range(1, n, 2)] + [n]


@dataclass
class LemmaSuiteResult:
    reports: list[CheckReport]
    out_dir: Path | None = None
    files: dict[str, Path] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(report.ok for report in self.reports)

    @property
    def violations(self) -> list[str]:
        return [v for report in self.reports for v in report.violations]


def run_lemma_suite(
    max_n: int = 5,
    max_k: int = 6,
    pair_max_n: int = 4,
    pair_max_k: int = 4,
    gaussian_alphas: tuple[float, ...] = (0.3, 0.5, 0.75),
    gaussian_n_values: tuple[int, ...] = (4, 8, 16),
    gaussian_z_values: tuple[int, ...] = (1, 2, 3),
    out_dir: str | Path | None = None,
) -> LemmaSuiteResult:
    """Exhaustive verification of the counting bounds on small instances.

    Vertex bounds over all tuples, class-count bounds per valid bandwidth,
    paired-tuple bounds on the smaller pair ranges, and the Gaussian
    product-moment bounds.  Zero violations expected.
    """
    reports: list[CheckReport] = []
    for n in range(1, max_n + 1):
        for k in range(1, max_k + 1):
            reports.append(verify_vertex_bounds(n, k))
            for b in valid_bandwidths(n):
                spec = BandSpec(n, b)
                report, _ = verify_count_bounds(n, k, spec)
                reports.append(report)
    for n in range(1, pair_max_n + 1):
        for k in range(1, pair_max_k + 1):
            for b in valid_bandwidths(n):
                reports.append(verify_pair_bounds(n, k, BandSpec(n, b)))
    for alpha in gaussian_alphas:
        reports.append(verify_gaussian_lemmas(alpha, gaussian_n_values, gaussian_z_values))

    result = LemmaSuiteResult(reports=reports)
    if out_dir is not None:
        out = Path(out_dir)
        result.out_dir = out
        result.files[LEMMA_CSV] = write_csv(
            out / LEMMA_CSV,
            ["description", "checked", "violations"],
            [[r.description, r.checked, len(r.violations)] for r in reports],
        )
    return result


def run_aau_report(
    scheme: str,
    alpha: float,
    n_values: tuple[int, ...],
    max_l: int = 3,
    beta: float = 0.5,
    dist: str = "rademacher",
    off_diag: float | None = None,
    out_dir: str | Path | None = None,
):
    """Build the matching exact oracle and measure the moment-decay constants."""
    if scheme == "curie_weiss":
        oracle = CurieWeissMomentOracle(beta=beta)
    elif scheme == "wigner":
        oracle = WignerMomentOracle(dist=dist)
    elif scheme == "gaussian":
        oracle = GaussianMomentOracle(alpha=alpha, off_diag=off_diag)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    report = verify_aau(oracle, alpha, n_values, max_l=max_l)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.to_csv(out / AAU_CSV)
    return report
