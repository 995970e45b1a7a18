"""Samplers and exact entry-moment oracles for the three scheme families.

Three ways to fill the symmetric n x n array of raw entries:

  * Curie-Weiss: one exchangeable vector of n^2 ferromagnetic +-1 spins with
    weight exp(beta * S^2 / (2 N)), S the total spin, arranged row-major and
    symmetrized.  Sampling is exact and two-stage: draw the total spin from
    its marginal law, then place the +1 spins uniformly.
  * correlated Gaussian: a centered Gaussian vector, one coordinate per
    upper-triangle cell, with unit variances and off-diagonal covariances
    bounded by (triangle size)^(-alpha).
  * Wigner: independent mean-zero unit-variance entries on the closed upper
    triangle (Rademacher signs or standard normals), symmetrized.

Each family also exposes an exact mixed-moment oracle with the shared
signature oracle(n, pairs, deltas) -> E[prod_i a_n(p_i, q_i)^delta_i] for
fundamentally different index pairs, which backs the moment-decay
verification and the exact expected-moment computation.
"""

from __future__ import annotations

import csv
import itertools
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

from .oracle import wick_mixed_moment

EXPLICIT_COV_MAX_DIM = 4096
_PMF_CACHE_SIZE = 4


@dataclass(frozen=True)
class CurieWeissParams:
    """Inverse temperature and spin count of an exchangeable spin family."""

    beta: float
    num_spins: int

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"inverse temperature must be positive, got {self.beta}")
        if self.num_spins < 1:
            raise ValueError(f"need at least one spin, got {self.num_spins}")


@dataclass(frozen=True)
class Equicorrelated:
    """Covariance with unit diagonal and constant off-diagonal value."""

    off_diag_value: float

    def __post_init__(self) -> None:
        if not -1.0 < self.off_diag_value < 1.0:
            raise ValueError(
                f"off-diagonal value must lie in (-1, 1), got {self.off_diag_value}"
            )


@dataclass(frozen=True, eq=False)
class Explicit:
    """Covariance given as an explicit symmetric matrix."""

    matrix: np.ndarray


CovSpec = Equicorrelated | Explicit


def triangle_size(n: int) -> int:
    """Number n(n+1)/2 of closed upper-triangle cells of an n x n matrix."""
    return n * (n + 1) // 2


@dataclass(frozen=True, eq=False)
class GaussianSchemeParams:
    """Correlation decay exponent, matrix dimension and covariance choice."""

    alpha: float
    n: int
    cov: CovSpec

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"decay exponent must be positive, got {self.alpha}")
        if self.n < 1:
            raise ValueError(f"dimension must be positive, got {self.n}")
        if isinstance(self.cov, Explicit):
            d = triangle_size(self.n)
            if np.asarray(self.cov.matrix).shape != (d, d):
                raise ValueError(
                    f"explicit covariance must have shape ({d}, {d}) for n={self.n}"
                )


@dataclass
class SchemeSample:
    """A realized symmetric array of raw entries plus provenance."""

    n: int
    entries: np.ndarray
    kind: str
    seed: int | None
    params: dict


# --- Curie-Weiss ------------------------------------------------------------

_pmf_cache: OrderedDict[tuple[float, int], tuple[np.ndarray, np.ndarray]] = OrderedDict()
_pmf_lock = threading.Lock()


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def magnetization_pmf(beta: float, N: int) -> np.ndarray:
    """Marginal law of the total spin S over the N+1 values -N, -N+2, ..., N.

    Entry j is P(S = 2j - N), i.e. the probability of j spins being +1:
    proportional to binom(N, j) * exp(beta (2j - N)^2 / (2N)).  All weights
    are computed in log space with the maximum subtracted before
    exponentiation, so no (beta, N) overflows.  The returned array is cached
    and read-only.
    """
    pmf, _ = _cached_magnetization(beta, N)
    return pmf


def _cached_magnetization(beta: float, N: int) -> tuple[np.ndarray, np.ndarray]:
    if not beta > 0:
        raise ValueError(f"inverse temperature must be positive, got {beta}")
    if N < 1:
        raise ValueError(f"need at least one spin, got {N}")
    key = (float(beta), int(N))
    cached = _pmf_cache.get(key)
    if cached is not None:
        return cached
    j = np.arange(N + 1, dtype=float)
    s = 2.0 * j - N
    logw = _log_binom(float(N), j) + beta * s * s / (2.0 * N)
    logw -= logw.max()
    pmf = np.exp(logw)
    pmf /= pmf.sum()
    cdf = np.cumsum(pmf)
    pmf.setflags(write=False)
    cdf.setflags(write=False)
    with _pmf_lock:
        _pmf_cache[key] = (pmf, cdf)
        while len(_pmf_cache) > _PMF_CACHE_SIZE:
            _pmf_cache.popitem(last=False)
    return pmf, cdf


def sample_curie_weiss(params: CurieWeissParams, rng: np.random.Generator) -> np.ndarray:
    """One exact sample of the exchangeable spin vector, values in {-1, +1}.

    Two stages: draw the number of +1 spins from the magnetization law by
    inverse transform, then choose which positions carry +1 uniformly at
    random.  Exchangeability makes this the exact joint law.
    """
    n_spins = params.num_spins
    _, cdf = _cached_magnetization(params.beta, n_spins)
    num_plus = int(min(np.searchsorted(cdf, rng.random(), side="right"), n_spins))
    spins = np.full(n_spins, -1, dtype=np.int8)
    if num_plus:
        spins[rng.permutation(n_spins)[:num_plus]] = 1
    return spins


def curie_weiss_spin_block(
    beta: float, N: int, replicas: int, rng: np.random.Generator
) -> np.ndarray:
    """(replicas, N) array of independent exact spin samples, vectorized.

    Same law as repeated sample_curie_weiss calls: per row the +1 positions
    are the ranks of the smallest uniforms, a uniform random subset.
    """
    _, cdf = _cached_magnetization(beta, N)
    num_plus = np.minimum(np.searchsorted(cdf, rng.random(replicas), side="right"), N)
    uniforms = rng.random((replicas, N))
    ranks = np.argsort(np.argsort(uniforms, axis=1), axis=1)
    return np.where(ranks < num_plus[:, None], 1, -1).astype(np.int8)


def curie_weiss_scheme(
    beta: float, n: int, rng: np.random.Generator, seed: int | None = None
) -> SchemeSample:
    """Raw symmetric n x n array of spins from one exchangeable n^2-spin draw.

    The n^2 spins fill the grid row-major; the strictly lower triangle is
    then overwritten by the mirror of the strictly upper one.
    """
    params = CurieWeissParams(beta=beta, num_spins=n * n)
    grid = sample_curie_weiss(params, rng).reshape(n, n).astype(float)
    entries = np.triu(grid) + np.triu(grid, 1).T
    return SchemeSample(
        n=n, entries=entries, kind="curie_weiss", seed=seed, params={"beta": beta}
    )


def cw_product_moment(beta: float, N: int, m: int) -> float:
    """Exact E[Y_1 ... Y_m] for m distinct spins of the exchangeable family.

    Conditional on j spins being +1, a product of m spins drawn without
    replacement has expectation
        sum_r (-1)^(m-r) binom(j, r) binom(N-j, m-r) / binom(N, m);
    the unconditional value averages this against the magnetization law.
    Because the spins are +-1-valued, any mixed power pattern reduces to the
    product over the odd-power positions.
    """
    if m < 0 or m > N:
        raise ValueError(f"product length {m} out of range [0, {N}]")
    if m == 0:
        return 1.0
    pmf = magnetization_pmf(beta, N)
    j = np.arange(N + 1, dtype=float)
    q = N - j
    log_total = _log_binom(float(N), float(m))
    conditional = np.zeros(N + 1)
    for r in range(m + 1):
        valid = (j >= r) & (q >= m - r)
        if not np.any(valid):
            continue
        logt = (
            _log_binom(j[valid], float(r))
            + _log_binom(q[valid], float(m - r))
            - log_total
        )
        sign = -1.0 if (m - r) % 2 else 1.0
        conditional[valid] += sign * np.exp(logt)
    return math.fsum((pmf * conditional).tolist())


# --- correlated Gaussian ----------------------------------------------------


def upper_triangle_index(i: int, j: int, n: int) -> int:
    """Row-major position of the cell {i, j} in the closed upper triangle.

    1-based pair in, 0-based slot out; symmetric in (i, j).  This is the
    fixed bijection between unordered index pairs and coordinates of the
    Gaussian vector.
    """
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"pair ({i}, {j}) out of range for n={n}")
    if i > j:
        i, j = j, i
    return (i - 1) * n - (i - 1) * (i - 2) // 2 + (j - i)


def triangle_index_matrix(n: int) -> np.ndarray:
    """(n, n) array of upper_triangle_index values; symmetric by construction."""
    idx = np.zeros((n, n), dtype=np.int64)
    iu = np.triu_indices(n)
    idx[iu] = np.arange(triangle_size(n))
    idx.T[iu] = idx[iu]
    return idx


def validate_cov_spec(cov: CovSpec, dim: int, alpha: float) -> None:
    """Check a covariance choice against the admissible set for `dim`.

    Unit diagonal, off-diagonal entries bounded by dim^(-alpha) in modulus,
    and positive definiteness: closed form for the equicorrelated family,
    otherwise by attempting a Cholesky factorization (no regularization).
    """
    bound = dim ** (-alpha)
    if isinstance(cov, Equicorrelated):
        c = cov.off_diag_value
        if abs(c) > bound:
            raise ValueError(
                f"off-diagonal value {c} violates the bound {bound} at dimension {dim}"
            )
        if dim > 1 and 1.0 + (dim - 1) * c <= 0.0:
            raise ValueError("covariance not positive definite")
        return
    matrix = np.asarray(cov.matrix, dtype=float)
    if matrix.shape != (dim, dim):
        raise ValueError(f"covariance shape {matrix.shape} does not match dimension {dim}")
    if np.max(np.abs(matrix - matrix.T)) > 1e-12:
        raise ValueError("covariance must be symmetric")
    if np.max(np.abs(np.diag(matrix) - 1.0)) > 1e-12:
        raise ValueError("covariance must have unit diagonal")
    off = matrix - np.diag(np.diag(matrix))
    if off.size and np.max(np.abs(off)) > bound:
        raise ValueError(
            f"off-diagonal entries exceed the bound {bound} at dimension {dim}"
        )
    try:
        np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance not positive definite") from exc


def gaussian_scheme(
    params: GaussianSchemeParams, rng: np.random.Generator, seed: int | None = None
) -> SchemeSample:
    """Raw symmetric n x n array filled with one correlated Gaussian vector.

    The vector has one coordinate per closed upper-triangle cell.  For the
    equicorrelated covariance with off-diagonal c >= 0 the draw uses the
    O(dim) shared-factor form sqrt(1-c) Z + sqrt(c) G; any other admissible
    covariance is factorized densely, which is restricted to dimensions up
    to 4096.
    """
    n = params.n
    dim = triangle_size(n)
    validate_cov_spec(params.cov, dim, params.alpha)
    if isinstance(params.cov, Equicorrelated) and params.cov.off_diag_value >= 0.0:
        c = params.cov.off_diag_value
        y = math.sqrt(1.0 - c) * rng.standard_normal(dim)
        if c:
            y += math.sqrt(c) * rng.standard_normal()
    else:
        if dim > EXPLICIT_COV_MAX_DIM:
            raise ValueError(
                f"dense factorization limited to dimension {EXPLICIT_COV_MAX_DIM}, got {dim}"
            )
        if isinstance(params.cov, Equicorrelated):
            matrix = np.full((dim, dim), params.cov.off_diag_value)
            np.fill_diagonal(matrix, 1.0)
        else:
            matrix = np.asarray(params.cov.matrix, dtype=float)
        try:
            factor = np.linalg.cholesky(matrix)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance not positive definite") from exc
        y = factor @ rng.standard_normal(dim)
    entries = y[triangle_index_matrix(n)]
    cov_desc = (
        {"off_diag": params.cov.off_diag_value}
        if isinstance(params.cov, Equicorrelated)
        else {"off_diag": "explicit"}
    )
    return SchemeSample(
        n=n,
        entries=entries,
        kind="gaussian",
        seed=seed,
        params={"alpha": params.alpha, **cov_desc},
    )


# --- Wigner -----------------------------------------------------------------

WIGNER_DISTS = ("rademacher", "standard_normal")


def wigner_scheme(
    dist: str, n: int, rng: np.random.Generator, seed: int | None = None
) -> SchemeSample:
    """Raw symmetric n x n array with independent upper-triangle entries.

    Entries on the closed upper triangle are i.i.d. with mean 0 and variance
    1: Rademacher signs or standard normals.
    """
    if dist not in WIGNER_DISTS:
        raise ValueError(f"unknown entry distribution {dist!r}; use one of {WIGNER_DISTS}")
    if n < 1:
        raise ValueError(f"dimension must be positive, got {n}")
    dim = triangle_size(n)
    if dist == "rademacher":
        y = (2.0 * rng.integers(0, 2, size=dim) - 1.0).astype(float)
    else:
        y = rng.standard_normal(dim)
    entries = y[triangle_index_matrix(n)]
    return SchemeSample(n=n, entries=entries, kind="wigner", seed=seed, params={"dist": dist})


# --- exact mixed-moment oracles ----------------------------------------------


def _normalized_distinct_pairs(pairs: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    normalized = [(p, q) if p <= q else (q, p) for p, q in pairs]
    if len(set(normalized)) != len(normalized):
        raise ValueError(f"index pairs must be fundamentally different, got {pairs}")
    return normalized


def _wigner_marginal_moment(dist: str, power: int) -> float:
    if power % 2:
        return 0.0
    if dist == "rademacher":
        return 1.0
    return float(math.prod(range(1, power, 2)))  # (power - 1)!!


@dataclass(frozen=True)
class CurieWeissMomentOracle:
    """Exact mixed entry moments of the spin scheme at matrix dimension n.

    Entries are +-1 spins of one exchangeable n^2-spin family, so even
    powers drop out and the moment is the exchangeable product over the
    odd-power pairs.
    """

    beta: float
    name: str = "curie_weiss"

    def __call__(self, n: int, pairs: Sequence[tuple[int, int]], deltas: Sequence[int]) -> float:
        _normalized_distinct_pairs(pairs)
        odd = sum(1 for d in deltas if d % 2)
        return cw_product_moment(self.beta, n * n, odd)


@dataclass(frozen=True)
class WignerMomentOracle:
    """Exact mixed entry moments under independence: product of marginals."""

    dist: str = "standard_normal"
    name: str = "wigner"

    def __call__(self, n: int, pairs: Sequence[tuple[int, int]], deltas: Sequence[int]) -> float:
        _normalized_distinct_pairs(pairs)
        prod = 1.0
        for d in deltas:
            prod *= _wigner_marginal_moment(self.dist, int(d))
        return prod


@dataclass(frozen=True, eq=False)
class GaussianMomentOracle:
    """Exact mixed entry moments via the pair-partition sum.

    Index pairs map through the fixed triangle bijection into covariance
    coordinates.  Defaults to the worst-case equicorrelated covariance with
    off-diagonal (triangle size)^(-alpha); a fixed off-diagonal value or an
    explicit covariance matrix may be supplied instead.
    """

    alpha: float
    off_diag: float | None = None
    cov: np.ndarray | None = None
    name: str = "gaussian"

    def __call__(self, n: int, pairs: Sequence[tuple[int, int]], deltas: Sequence[int]) -> float:
        normalized = _normalized_distinct_pairs(pairs)
        slots = [upper_triangle_index(p, q, n) for p, q in normalized]
        if self.cov is not None:
            sigma = np.asarray(self.cov, dtype=float)[np.ix_(slots, slots)]
        else:
            dim = triangle_size(n)
            c = dim ** (-self.alpha) if self.off_diag is None else self.off_diag
            sigma = np.full((len(slots), len(slots)), c)
            np.fill_diagonal(sigma, 1.0)
        indices = [g for g, d in enumerate(deltas) for _ in range(int(d))]
        return wick_mixed_moment(sigma, indices)


# --- moment-decay verification ----------------------------------------------


@dataclass(frozen=True)
class AauRow:
    """One measured constant of the almost-uncorrelated moment conditions."""

    scheme: str
    alpha: float
    n: int
    l: int
    delta_pattern: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]
    moment: float
    bound_kind: str  # distinct-decay | squared-factors | fourth-power
    empirical_constant: float


@dataclass
class AauReport:
    """Empirical constants of the moment-decay conditions across dimensions.

    No numeric values are asserted: the conditions only require existence of
    constants and decay of the second/fourth-moment deviations, so the
    report records measured constants and whether the deviation rows are
    nonincreasing in n.
    """

    scheme: str
    alpha: float
    n_values: tuple[int, ...]
    rows: list[AauRow] = field(default_factory=list)
    squared_factors_nonincreasing: dict[int, bool] = field(default_factory=dict)
    fourth_power_nonincreasing: dict[int, bool] = field(default_factory=dict)

    @property
    def decays_ok(self) -> bool:
        return all(self.squared_factors_nonincreasing.values()) and all(
            self.fourth_power_nonincreasing.values()
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(
                [
                    "scheme",
                    "alpha",
                    "n",
                    "l",
                    "delta_pattern",
                    "moment",
                    "bound_kind",
                    "empirical_constant",
                ]
            )
            for row in self.rows:
                writer.writerow(
                    [
                        row.scheme,
                        repr(row.alpha),
                        row.n,
                        row.l,
                        "-".join(str(d) for d in row.delta_pattern),
                        repr(row.moment),
                        row.bound_kind,
                        repr(row.empirical_constant),
                    ]
                )


def verify_aau(
    scheme_oracle,
    alpha: float,
    n_values: Iterable[int],
    max_l: int = 3,
) -> AauReport:
    """Measure the moment-decay constants of a scheme across dimensions.

    For each dimension n, block count l <= max_l, and power pattern delta in
    {1, 2, 4}^l over the canonical fundamentally different pairs
    (1,1), (1,2), ..., (1,l), the exact mixed moment is computed and turned
    into the implied constants:

      * distinct-decay rows carry |moment| * n^(alpha * #{delta_i = 1}),
      * all-squares rows carry |moment - 1|,
      * one-fourth-power rows carry |moment - E[first entry^4]|.

    The report also records whether the deviation rows are nonincreasing
    across the given dimensions.
    """
    n_tuple = tuple(int(n) for n in n_values)
    if not n_tuple:
        raise ValueError("need at least one dimension")
    if max_l < 1:
        raise ValueError(f"max_l must be at least 1, got {max_l}")
    name = getattr(scheme_oracle, "name", "scheme")
    report = AauReport(scheme=name, alpha=alpha, n_values=n_tuple)
    squared_series: dict[int, list[float]] = {}
    fourth_series: dict[int, list[float]] = {}
    for n in n_tuple:
        if max_l > n:
            raise ValueError(f"max_l={max_l} exceeds dimension n={n}")
        for l in range(1, max_l + 1):
            pairs = tuple((1, j) for j in range(1, l + 1))
            for deltas in itertools.product((1, 2, 4), repeat=l):
                moment = float(scheme_oracle(n, pairs, deltas))
                singles = sum(1 for d in deltas if d == 1)
                report.rows.append(
                    AauRow(
                        scheme=name,
                        alpha=alpha,
                        n=n,
                        l=l,
                        delta_pattern=deltas,
                        pairs=pairs,
                        moment=moment,
                        bound_kind="distinct-decay",
                        empirical_constant=abs(moment) * n ** (alpha * singles),
                    )
                )
                if all(d == 2 for d in deltas):
                    deviation = abs(moment - 1.0)
                    report.rows.append(
                        AauRow(
                            scheme=name,
                            alpha=alpha,
                            n=n,
                            l=l,
                            delta_pattern=deltas,
                            pairs=pairs,
                            moment=moment,
                            bound_kind="squared-factors",
                            empirical_constant=deviation,
                        )
                    )
                    squared_series.setdefault(l, []).append(deviation)
                if deltas[0] == 4 and all(d == 2 for d in deltas[1:]):
                    base = float(scheme_oracle(n, pairs[:1], (4,)))
                    deviation = abs(moment - base)
                    report.rows.append(
                        AauRow(
                            scheme=name,
                            alpha=alpha,
                            n=n,
                            l=l,
                            delta_pattern=deltas,
                            pairs=pairs,
                            moment=moment,
                            bound_kind="fourth-power",
                            empirical_constant=deviation,
                        )
                    )
                    fourth_series.setdefault(l, []).append(deviation)
    report.squared_factors_nonincreasing = {
        l: all(b <= a for a, b in zip(seq, seq[1:])) for l, seq in squared_series.items()
    }
    report.fourth_power_nonincreasing = {
        l: all(b <= a for a, b in zip(seq, seq[1:])) for l, seq in fourth_series.items()
    }
    return report
