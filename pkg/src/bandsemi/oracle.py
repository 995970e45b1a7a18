"""Exact combinatorics for the moment method on periodic band matrices.

Pair partitions and Gaussian product moments, cyclic tuple graphs with their
edge-multiplicity profiles, graph superposition, standard colorings with the
Dyck-path correspondence, and exhaustive validators for the counting bounds
that drive the semicircle limit.  Everything here is deterministic and, at
the instance sizes accepted, exact.

A k-tuple t = (t_1, ..., t_k) with entries in [n] is read as the closed walk
t_1 -> t_2 -> ... -> t_k -> t_1; its multigraph has the k unordered edges
{t_i, t_{i+1}} (cyclically).  The profile kappa(t) records, for each
multiplicity m, how many distinct m-fold edges the walk uses; loops are
edges {v, v}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .bandmatrix import BandSpec, is_relevant

PairPartition = tuple[tuple[int, int], ...]

# Oracle protocol shared by exact_expected_moment and the AAU checks:
# callable(n, pairs, deltas) -> exact value of E[ prod_i a_n(p_i, q_i)^delta_i ]
# for fundamentally different 1-based index pairs.
MomentOracleFn = Callable[[int, Sequence[tuple[int, int]], Sequence[int]], float]

WICK_MAX_INDICES = 16
ENUMERATION_MAX = 16
EXHAUSTIVE_MAX_TUPLES = 10**7


def pair_partition_count(m2: int) -> int:
    """Number (m2 - 1)!! of pair partitions of {1, ..., m2} (m2 even)."""
    if m2 < 0 or m2 % 2:
        raise ValueError(f"ground set size must be even and nonnegative, got {m2}")
    return math.prod(range(1, m2, 2))


def _iter_pair_partitions(elements: tuple[int, ...]) -> Iterator[PairPartition]:
    """Canonical recursive enumeration: the least element pairs with each
    possible partner, partners in increasing position order."""
    if not elements:
        yield ()
        return
    first = elements[0]
    for pos in range(1, len(elements)):
        partner = elements[pos]
        rest = elements[1:pos] + elements[pos + 1 :]
        for tail in _iter_pair_partitions(rest):
            yield ((first, partner),) + tail


def enumerate_pair_partitions(m2: int) -> list[PairPartition]:
    """All pair partitions of {1, ..., m2}; exactly (m2 - 1)!! of them."""
    if m2 % 2:
        raise ValueError(f"cannot pair-partition an odd ground set of size {m2}")
    if m2 > WICK_MAX_INDICES:
        raise ValueError(f"ground set size {m2} beyond enumeration bound {WICK_MAX_INDICES}")
    return list(_iter_pair_partitions(tuple(range(1, m2 + 1))))


def wick_mixed_moment(cov: np.ndarray, indices: Sequence[int]) -> float:
    """E[Y_{i(1)} ... Y_{i(k)}] for (Y_1..Y_m) centered Gaussian with
    covariance `cov`: the sum over pair partitions of products of
    covariances.  Zero for odd k.

    Indices are 0-based positions into `cov`.  Each partition's product is a
    left-to-right fold over the canonical block order and the partition sum
    uses math.fsum, so the result is the correctly rounded sum of the
    per-partition products.
    """
    sigma = np.asarray(cov, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"covariance must be square, got shape {sigma.shape}")
    m = sigma.shape[0]
    idx = [int(i) for i in indices]
    for i in idx:
        if not 0 <= i < m:
            raise IndexError(f"index {i} out of covariance range [0, {m})")
    k = len(idx)
    if k % 2:
        return 0.0
    if k == 0:
        return 1.0
    if k > WICK_MAX_INDICES:
        raise ValueError(f"{k} factors beyond enumeration bound {WICK_MAX_INDICES}")
    terms = []
    for partition in _iter_pair_partitions(tuple(range(k))):
        prod = 1.0
        for r, s in partition:
            prod *= sigma[idx[r], idx[s]]
        terms.append(prod)
    return math.fsum(terms)


@dataclass
class TupleGraph:
    """Cyclic multigraph of a tuple: edge multiset, profile, loops, vertices."""

    walk: tuple[int, ...]
    edge_multiplicities: dict[tuple[int, int], int]
    profile: tuple[int, ...]  # entry m-1 counts distinct m-fold edges
    loop_count: int
    vertex_count: int


def tuple_graph(t: Sequence[int]) -> TupleGraph:
    """Build the cyclic edge multiset of `t` and derive its profile."""
    walk = tuple(int(v) for v in t)
    k = len(walk)
    if k < 1:
        raise ValueError("tuple must have at least one entry")
    counts: dict[tuple[int, int], int] = {}
    for i in range(k):
        a, b = walk[i], walk[(i + 1) % k]
        key = (a, b) if a <= b else (b, a)
        counts[key] = counts.get(key, 0) + 1
    profile = [0] * k
    loops = 0
    for (a, b), mult in counts.items():
        profile[mult - 1] += 1
        if a == b:
            loops += 1
    return TupleGraph(
        walk=walk,
        edge_multiplicities=counts,
        profile=tuple(profile),
        loop_count=loops,
        vertex_count=len(set(walk)),
    )


def profile_sum(profile: Sequence[int]) -> int:
    """Total number of distinct edges for a profile."""
    return int(sum(profile))


def profile_has_odd_edge(profile: Sequence[int]) -> bool:
    """Whether the profile contains an edge of odd multiplicity."""
    return any(count for mult_minus_1, count in enumerate(profile) if mult_minus_1 % 2 == 0)


def is_relevant_tuple(t: Sequence[int], spec: BandSpec) -> bool:
    """Whether every cyclic consecutive pair of `t` is inside the band."""
    walk = tuple(int(v) for v in t)
    for v in walk:
        if not 1 <= v <= spec.n:
            raise IndexError(f"tuple entry {v} out of range [1, {spec.n}]")
    k = len(walk)
    return all(is_relevant(walk[i], walk[(i + 1) % k], spec) for i in range(k))


def iter_relevant_tuples(n: int, k: int, spec: BandSpec | None = None) -> Iterator[tuple[int, ...]]:
    """Stream all tuples in [n]^k (odometer order), filtered to band-relevant
    ones when a spec is given.  Never materialized."""
    if spec is None:
        yield from itertools.product(range(1, n + 1), repeat=k)
        return
    for t in itertools.product(range(1, n + 1), repeat=k):
        if all(is_relevant(t[i], t[(i + 1) % k], spec) for i in range(k)):
            yield t


@dataclass
class CheckReport:
    """Outcome of an exhaustive verification: counters plus any violations."""

    description: str
    checked: int = 0
    violations: list[str] = field(default_factory=list)
    rows: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_instance_size(n: int, k: int, spec: BandSpec | None = None) -> None:
    if n**k > EXHAUSTIVE_MAX_TUPLES:
        raise ValueError(f"n^k = {n**k} exceeds exhaustive bound {EXHAUSTIVE_MAX_TUPLES}")
    if spec is not None and spec.n != n:
        raise ValueError(f"spec dimension {spec.n} does not match n={n}")


def verify_vertex_bounds(n: int, k: int, spec: BandSpec | None = None) -> CheckReport:
    """Exhaustively check the vertex-count bounds over tuples of [n]^k.

    For every tuple: #V <= 1 + (distinct edges) - (distinct loops), and when
    some edge has odd multiplicity additionally #V <= (distinct edges).
    With a spec, only band-relevant tuples are scanned (a subset).
    """
    _check_instance_size(n, k, spec)
    scope = f"b={spec.b}" if spec else "all tuples"
    report = CheckReport(description=f"vertex bounds n={n} k={k} ({scope})")
    for t in iter_relevant_tuples(n, k, spec):
        tg = tuple_graph(t)
        distinct = profile_sum(tg.profile)
        report.checked += 1
        if tg.vertex_count > 1 + distinct - tg.loop_count:
            report.violations.append(f"general vertex bound violated by {t}")
        if profile_has_odd_edge(tg.profile) and tg.vertex_count > distinct:
            report.violations.append(f"odd-edge vertex bound violated by {t}")
    return report


@dataclass
class EquivalenceClassTable:
    """Relevant tuples of [n]^k grouped by profile, with class sizes."""

    n: int
    k: int
    b: int
    class_sizes: dict[tuple[int, ...], int]
    total: int


def verify_count_bounds(n: int, k: int, spec: BandSpec) -> tuple[CheckReport, EquivalenceClassTable]:
    """Exhaustively check the counting bounds for band-relevant tuples.

    Verified against brute-force enumeration:
      * #{t : #V_t <= l}  <=  k^k * n * b^(l-1)            for l = 1..k,
      * number of profile classes  <=  (k+1)^k,
      * each class size  <=  k^k * n * b^(sum of profile),
        improved by one power of b when the profile has an odd edge.
    """
    _check_instance_size(n, k, spec)
    report = CheckReport(description=f"count bounds n={n} k={k} b={spec.b}")
    class_sizes: dict[tuple[int, ...], int] = {}
    vertex_hist = [0] * (k + 1)
    total = 0
    for t in iter_relevant_tuples(n, k, spec):
        tg = tuple_graph(t)
        class_sizes[tg.profile] = class_sizes.get(tg.profile, 0) + 1
        vertex_hist[min(tg.vertex_count, k)] += 1
        total += 1
    report.checked = total
    kk = k**k
    cumulative = 0
    for l in range(1, k + 1):
        cumulative += vertex_hist[l] if l < len(vertex_hist) else 0
        bound = kk * n * spec.b ** (l - 1)
        if cumulative > bound:
            report.violations.append(
                f"tuples with #V<={l}: {cumulative} exceeds {bound}"
            )
    if len(class_sizes) > (k + 1) ** k:
        report.violations.append(
            f"{len(class_sizes)} profile classes exceed {(k + 1) ** k}"
        )
    for profile, size in class_sizes.items():
        exponent = profile_sum(profile)
        if size > kk * n * spec.b**exponent:
            report.violations.append(f"class {profile} size {size} exceeds general bound")
        if profile_has_odd_edge(profile) and size > kk * n * spec.b ** (exponent - 1):
            report.violations.append(f"class {profile} size {size} exceeds odd-edge bound")
    if sum(class_sizes.values()) != total:
        report.violations.append("class sizes do not sum to the tuple count")
    table = EquivalenceClassTable(n=n, k=k, b=spec.b, class_sizes=class_sizes, total=total)
    return report, table


def verify_pair_bounds(n: int, k: int, spec: BandSpec) -> CheckReport:
    """Exhaustively check the paired-tuple bounds for band-relevant tuples.

    All ordered pairs (t, t') are partitioned by whether their distinct edge
    sets intersect; pairs with exactly l common edges form a further split.
    Checked per ordered pair of profile classes (s, s'):
      * partition identity: #disjoint + #common = #class(s) * #class(s'),
      * only even edges on both sides: every common pair spans at most k
        vertices, and #common <= k^2 * (2k)^(2k) * n * b^(k-1),
      * an odd edge on either side: a common pair with l shared edges spans
        at most K(s) + K(s') - l vertices (K = number of distinct edges),
        #common <= k^2 * (2k)^(2k) * n * b^(K+K'-2), and each l-slice obeys
        #common_l <= k^2 * (2k)^(2k) * n * b^(K+K'-l-1).
    """
    _check_instance_size(n, 2 * k, spec)
    report = CheckReport(description=f"paired-tuple bounds n={n} k={k} b={spec.b}")
    members: list[tuple[tuple[int, ...], frozenset, frozenset]] = []
    by_profile: dict[tuple[int, ...], list[int]] = {}
    for t in iter_relevant_tuples(n, k, spec):
        tg = tuple_graph(t)
        members.append((tg.profile, frozenset(tg.edge_multiplicities), frozenset(tg.walk)))
        by_profile.setdefault(tg.profile, []).append(len(members) - 1)

    prefactor = k**2 * (2 * k) ** (2 * k)
    for prof_a, idx_a in by_profile.items():
        k_a = profile_sum(prof_a)
        odd_a = profile_has_odd_edge(prof_a)
        for prof_b, idx_b in by_profile.items():
            k_b = profile_sum(prof_b)
            odd_b = profile_has_odd_edge(prof_b)
            any_odd = odd_a or odd_b
            disjoint = 0
            common_by_l: dict[int, int] = {}
            for ia in idx_a:
                _, edges_a, verts_a = members[ia]
                for ib in idx_b:
                    _, edges_b, verts_b = members[ib]
                    shared = len(edges_a & edges_b)
                    report.checked += 1
                    if shared == 0:
                        disjoint += 1
                        continue
                    common_by_l[shared] = common_by_l.get(shared, 0) + 1
                    union_vertices = len(verts_a | verts_b)
                    if not any_odd and union_vertices > k:
                        report.violations.append(
                            f"even-edge union bound violated: {members[ia][0]} vs {members[ib][0]}"
                        )
                    if any_odd and union_vertices > k_a + k_b - shared:
                        report.violations.append(
                            f"odd-edge union bound violated at l={shared}: "
                            f"{prof_a} vs {prof_b}"
                        )
            common = sum(common_by_l.values())
            if disjoint + common != len(idx_a) * len(idx_b):
                report.violations.append(
                    f"partition identity broken for classes {prof_a}, {prof_b}"
                )
            if not any_odd:
                if common > prefactor * n * spec.b ** (k - 1):
                    report.violations.append(
                        f"even-edge common-count bound violated for {prof_a}, {prof_b}"
                    )
            else:
                if common > prefactor * n * spec.b ** (k_a + k_b - 2):
                    report.violations.append(
                        f"odd-edge common-count bound violated for {prof_a}, {prof_b}"
                    )
                for l, count in common_by_l.items():
                    if count > prefactor * n * spec.b ** (k_a + k_b - l - 1):
                        report.violations.append(
                            f"odd-edge l-slice bound violated (l={l}) for {prof_a}, {prof_b}"
                        )
    return report


def superpose(t: Sequence[int], t_prime: Sequence[int]) -> tuple[int, ...]:
    """Concatenate cyclic rotations of two tuples into one length-2k walk.

    Both tuples are rotated to start at the smallest vertex label they share
    (earliest occurrence), so the combined walk first traverses all edges of
    `t`, then all edges of `t_prime`.  Its edge multiset is the disjoint
    union of the two edge multisets and its vertex set their union.
    """
    a = tuple(int(v) for v in t)
    b = tuple(int(v) for v in t_prime)
    if len(a) != len(b):
        raise ValueError("tuples must have equal length")
    shared = set(a) & set(b)
    if not shared:
        raise ValueError("tuples share no vertex; superposition undefined")
    pivot = min(shared)
    ia, ib = a.index(pivot), b.index(pivot)
    return a[ia:] + a[:ia] + b[ib:] + b[:ib]


def standard_coloring(t: Sequence[int]) -> tuple[int, ...]:
    """Relabel the tuple by first-occurrence order: first new label 1, then 2, ..."""
    ranks: dict[int, int] = {}
    out = []
    for v in t:
        v = int(v)
        if v not in ranks:
            ranks[v] = len(ranks) + 1
        out.append(ranks[v])
    return tuple(out)


def dyck_check(t: Sequence[int]) -> tuple[bool, tuple[int, ...] | None]:
    """Test whether `t` is a double-edge tree walk, and emit its step sequence.

    Requires even length k, only proper double edges (no loops, every distinct
    edge of multiplicity exactly 2) and k/2 + 1 distinct vertices.  In that
    case the walk visits each edge once forward (+1) and once backward (-1)
    and the resulting sequence is a Dyck path: partial sums nonnegative,
    total zero.  Returns (True, steps) or (False, None).
    """
    walk = tuple(int(v) for v in t)
    k = len(walk)
    if k % 2:
        return False, None
    tg = tuple_graph(walk)
    only_proper_doubles = (
        tg.loop_count == 0
        and tg.profile[1] == k // 2
        and profile_sum(tg.profile) == k // 2
    )
    if not only_proper_doubles or tg.vertex_count != k // 2 + 1:
        return False, None
    seen: set[tuple[int, int]] = set()
    steps = []
    height = 0
    for i in range(k):
        a, b = walk[i], walk[(i + 1) % k]
        key = (a, b) if a <= b else (b, a)
        if key in seen:
            steps.append(-1)
            height -= 1
        else:
            seen.add(key)
            steps.append(1)
            height += 1
        if height < 0:
            return False, None
    if height != 0:
        return False, None
    return True, tuple(steps)


def _iter_restricted_growth_strings(k: int, max_values: int) -> Iterator[tuple[int, ...]]:
    """All first-occurrence-ordered colorings of length k with <= max_values labels."""
    if k < 1:
        return

    def rec(prefix: list[int], used: int) -> Iterator[tuple[int, ...]]:
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for value in range(1, min(used + 1, max_values) + 1):
            prefix.append(value)
            yield from rec(prefix, max(used, value))
            prefix.pop()

    yield from rec([1], 1)


def count_standard_dyck_colorings(k: int) -> int:
    """Count length-k standard colorings whose walk has only proper double
    edges and k/2 + 1 vertices, by brute-force enumeration of colorings."""
    if k % 2 or k < 2:
        raise ValueError(f"length must be even and positive, got {k}")
    hits = 0
    for coloring in _iter_restricted_growth_strings(k, k // 2 + 1):
        ok, _ = dyck_check(coloring)
        if ok:
            hits += 1
    return hits


def band_scale(b: int, k: int) -> float:
    """b^(k/2), exact integer arithmetic for even k."""
    if k % 2 == 0:
        return float(b ** (k // 2))
    return b ** (k // 2) * math.sqrt(b)


def _edge_pattern(t: tuple[int, ...]) -> tuple[tuple[tuple[int, int], ...], tuple[int, ...]]:
    """Distinct cyclic edges of `t` in first-appearance order with multiplicities."""
    k = len(t)
    pairs: list[tuple[int, int]] = []
    deltas: list[int] = []
    position: dict[tuple[int, int], int] = {}
    for i in range(k):
        a, b = t[i], t[(i + 1) % k]
        key = (a, b) if a <= b else (b, a)
        if key in position:
            deltas[position[key]] += 1
        else:
            position[key] = len(pairs)
            pairs.append(key)
            deltas.append(1)
    return tuple(pairs), tuple(deltas)


def exact_expected_moment(
    scheme_moment_oracle: MomentOracleFn, n: int, k: int, spec: BandSpec
) -> float:
    """Exact expected k-th ESD moment via the tuple sum.

    Sums E[a(t_1,t_2) ... a(t_k,t_1)] over all band-relevant tuples, each
    expectation resolved by grouping the cyclic factors into fundamentally
    different pairs with multiplicities and querying the scheme's exact
    moment oracle; the total is divided by n * b^(k/2).
    """
    _check_instance_size(n, k)
    if spec.n != n:
        raise ValueError(f"spec dimension {spec.n} does not match n={n}")
    cache: dict[tuple, float] = {}
    terms = []
    for t in iter_relevant_tuples(n, k, spec):
        pairs, deltas = _edge_pattern(t)
        key = (pairs, deltas)
        value = cache.get(key)
        if value is None:
            value = float(scheme_moment_oracle(n, pairs, deltas))
            cache[key] = value
        terms.append(value)
    return math.fsum(terms) / (n * band_scale(spec.b, k))


def rademacher_enumeration_moment(n: int, k: int, spec: BandSpec) -> float:
    """Expected k-th ESD moment for the +-1 independent scheme by full
    enumeration of all sign assignments of the upper triangle (diagonal
    included).  Exact integer arithmetic; the independent brute-force
    counterpart to exact_expected_moment.
    """
    if spec.n != n:
        raise ValueError(f"spec dimension {spec.n} does not match n={n}")
    m = n * (n + 1) // 2
    if m > ENUMERATION_MAX:
        raise ValueError(f"{m} upper-triangle entries beyond enumeration bound {ENUMERATION_MAX}")
    iu = np.triu_indices(n)
    mask = np.zeros((n, n), dtype=np.int64)
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            mask[i - 1, j - 1] = 1 if is_relevant(i, j, spec) else 0
    total = 0
    for bits in range(2**m):
        signs = np.array([1 if (bits >> s) & 1 else -1 for s in range(m)], dtype=np.int64)
        a = np.zeros((n, n), dtype=np.int64)
        a[iu] = signs
        a = a + np.triu(a, 1).T
        banded = a * mask
        power = np.linalg.matrix_power(banded, k)
        total += int(np.trace(power))
    mean_trace = total / 2**m
    return mean_trace / (n * band_scale(spec.b, k))


DISTINCT_DECAY_PATTERNS: tuple[tuple[int, ...], ...] = (
    (1, 1),
    (2,),
    (4,),
    (2, 2),
    (1, 3),
    (1, 1, 2),
    (2, 4),
    (2, 2, 2),
    (1, 1, 1, 1),
    (1, 1, 4),
)


def _equicorrelated(dim: int, c: float) -> np.ndarray:
    sigma = np.full((dim, dim), c, dtype=float)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def verify_gaussian_lemmas(
    alpha: float,
    n_values: Iterable[int],
    z_values: Iterable[int],
    off_diag: float | None = None,
) -> CheckReport:
    """Check the Gaussian product-moment bounds at the worst-case covariance.

    For each matrix dimension n, the covariance of the triangle-filling
    Gaussian vector has dimension D = n(n+1)/2 and worst admissible
    off-diagonal value c = D^(-alpha) (overridable).  Three exact statements
    are verified with the pair-partition sum on the left side:

      * distinct-decay: |E prod Y_{g_i}^{delta_i}| for pairwise distinct
        g_i is at most  #partitions(sum delta) / (n/sqrt 2)^(alpha * #{delta_i = 1}),
      * squared factors: |E prod_{i<=z} Y_{g_i}^2 - 1|
        is at most  #partitions(2z) / (n/sqrt 2)^(4 alpha),
      * one fourth power: |E Y_{g_1}^4 prod_{2<=i<=z} Y_{g_i}^2 - 3|
        (2z+2 indices in total) is at most
        #partitions(2z+2) / (n/sqrt 2)^(4 alpha).
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    report = CheckReport(description=f"gaussian moment bounds alpha={alpha}")

    def record(lemma: str, n: int, pattern, lhs: float, bound: float) -> None:
        ok = lhs <= bound
        report.checked += 1
        report.rows.append(
            {"check": lemma, "n": n, "pattern": str(pattern), "lhs": lhs, "bound": bound, "ok": ok}
        )
        if not ok:
            report.violations.append(f"{lemma} violated at n={n}, pattern={pattern}")

    for n in n_values:
        dim = n * (n + 1) // 2
        c = dim ** (-alpha) if off_diag is None else off_diag
        denom_fourth = (n / math.sqrt(2.0)) ** (4.0 * alpha)
        for deltas in DISTINCT_DECAY_PATTERNS:
            groups = len(deltas)
            sigma = _equicorrelated(groups, c)
            indices = [g for g, d in enumerate(deltas) for _ in range(d)]
            lhs = abs(wick_mixed_moment(sigma, indices))
            singles = sum(1 for d in deltas if d == 1)
            bound = pair_partition_count(sum(deltas)) / (n / math.sqrt(2.0)) ** (alpha * singles)
            record("distinct-decay", n, deltas, lhs, bound)
        for z in z_values:
            sigma = _equicorrelated(z, c)
            indices = [g for g in range(z) for _ in range(2)]
            lhs = abs(wick_mixed_moment(sigma, indices) - 1.0)
            record("squared-factors", n, f"z={z}", lhs, pair_partition_count(2 * z) / denom_fourth)

            # one fourth power plus z-1 squared factors: 2z+2 indices in total
            sigma = _equicorrelated(max(z, 1), c)
            indices = [0] * 4 + [g for g in range(1, z) for _ in range(2)]
            lhs = abs(wick_mixed_moment(sigma, indices) - 3.0)
            record(
                "fourth-power", n, f"z={z}", lhs, pair_partition_count(2 * z + 2) / denom_fourth
            )
    return report
