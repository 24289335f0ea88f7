"""Unit-duration rhythm analysis.

Pipeline: cluster a speech-unit codebook into a few phoneme-like groups,
run-length encode unit streams at the group level, pool segment
durations per group, and compare speakers or conditions by the
Wasserstein-1 distance between their per-group duration distributions.
An alignment-label path builds the same distributions from labeled
segment tracks for side-by-side comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .corpus import LabeledSpan
from .validation import check_matrix

DEFAULT_N_GROUPS = 3
LINKAGES = ("ward", "average")

# group id -> ascending durations in ms
DurationDistribution = dict[Hashable, np.ndarray]


class Segment(NamedTuple):
    """A contiguous run of one coarse group."""

    group: int
    duration_ms: float


@dataclass(frozen=True)
class UnitSequence:
    """Discrete unit ids at a fixed frame hop."""

    unit_ids: np.ndarray
    hop_ms: float

    def __post_init__(self):
        ids = np.asarray(self.unit_ids)
        if ids.ndim != 1:
            raise ValueError(f"unit_ids must be 1-D, got shape {ids.shape}")
        if len(ids) and ids.min() < 0:
            raise ValueError("unit ids must be non-negative")
        if not math.isfinite(self.hop_ms) or self.hop_ms <= 0:
            raise ValueError(f"hop_ms must be positive, got {self.hop_ms}")
        object.__setattr__(self, "unit_ids", ids.astype(np.int64))


@dataclass(frozen=True)
class CoarsePartition:
    """A grouping of codebook units with the merge history that made it.

    ``merge_tree`` lists K - 1 merges as (left, right, distance) with
    non-decreasing distances; cluster ids follow the usual dendrogram
    convention (leaves 0..K-1, merge i creates cluster K + i).
    ``sonorant_group`` optionally designates which group counts as
    sonorant for speech-rate measurement.
    """

    group_of_unit: dict[int, int]
    merge_tree: tuple[tuple[int, int, float], ...] = ()
    sonorant_group: int | None = None

    def __post_init__(self):
        if not self.group_of_unit:
            raise ValueError("partition maps no units")
        groups = set(self.group_of_unit.values())
        if groups != set(range(len(groups))):
            raise ValueError("group ids must be exactly 0..G-1")
        if self.sonorant_group is not None and self.sonorant_group not in groups:
            raise ValueError(f"sonorant group {self.sonorant_group} is not a group id")

    @property
    def n_groups(self) -> int:
        return len(set(self.group_of_unit.values()))


class CodebookClusterer(BaseEstimator):
    """Agglomerative clustering of codebook vectors into coarse groups.

    Ward linkage (default) merges the pair giving the least increase in
    within-cluster variance; average linkage is available as an
    alternative. Merging is deterministic: distance ties pick the pair
    whose clusters contain the lowest unit indices. After cutting the
    dendrogram at ``n_groups``, groups are renumbered by their smallest
    member unit id, so group ids are reproducible too.

    Attributes after ``fit``: ``labels_`` (group per unit),
    ``merge_tree_`` (K - 1 merges of (left, right, distance)), and
    ``n_features_in_``.
    """

    def __init__(self, n_groups: int = DEFAULT_N_GROUPS, linkage: str = "ward"):
        self.n_groups = n_groups
        self.linkage = linkage

    def fit(self, X, y=None):
        X = check_matrix(X, "codebook", min_rows=2)
        if self.linkage not in LINKAGES:
            raise ValueError(f"linkage must be one of {LINKAGES}, got {self.linkage!r}")
        if not 2 <= self.n_groups <= X.shape[0]:
            raise ValueError(
                f"n_groups must lie in [2, {X.shape[0]}], got {self.n_groups}"
            )
        merge_tree = _agglomerate(X, self.linkage)
        self.merge_tree_ = merge_tree
        self.labels_ = _cut_tree(merge_tree, X.shape[0], self.n_groups)
        self.n_features_in_ = X.shape[1]
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_


def _agglomerate(X: np.ndarray, linkage: str) -> tuple[tuple[int, int, float], ...]:
    """Greedy global-minimum agglomeration with Lance-Williams updates.

    The working matrix holds squared distances for Ward and raw
    distances for average linkage. Row i always keeps unit i as its
    smallest member, so a row-major argmin breaks distance ties toward
    the lowest member indices.
    """
    n = X.shape[0]
    sq = np.sum((X[:, None, :] - X[None, :, :]) ** 2, axis=2)
    work = sq if linkage == "ward" else np.sqrt(sq)

    big = np.inf
    work = work.astype(np.float64)
    work[np.tril_indices(n)] = big

    sizes = np.ones(n)
    cluster_id = np.arange(n)
    active = np.ones(n, dtype=bool)
    merges: list[tuple[int, int, float]] = []

    for step in range(n - 1):
        flat = int(np.argmin(work))
        i, j = divmod(flat, n)
        dij = work[i, j]
        distance = math.sqrt(dij) if linkage == "ward" else dij
        left, right = sorted((int(cluster_id[i]), int(cluster_id[j])))
        merges.append((left, right, float(distance)))

        others = np.flatnonzero(active)
        others = others[(others != i) & (others != j)]
        if len(others):
            dik = np.where(others < i, work[others, i], work[i, others])
            djk = np.where(others < j, work[others, j], work[j, others])
            ni, nj, nk = sizes[i], sizes[j], sizes[others]
            if linkage == "ward":
                updated = ((ni + nk) * dik + (nj + nk) * djk - nk * dij) / (ni + nj + nk)
            else:
                updated = (ni * dik + nj * djk) / (ni + nj)
            lower = others < i
            work[others[lower], i] = updated[lower]
            work[i, others[~lower]] = updated[~lower]

        sizes[i] += sizes[j]
        cluster_id[i] = n + step
        active[j] = False
        work[j, :] = big
        work[:, j] = big
    return tuple(merges)


def _cut_tree(
    merges: tuple[tuple[int, int, float], ...], n: int, n_groups: int
) -> np.ndarray:
    """Apply the first n - n_groups merges and renumber surviving groups."""
    parent = list(range(2 * n - 1))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for step in range(n - n_groups):
        left, right, _ = merges[step]
        new = n + step
        parent[find(left)] = new
        parent[find(right)] = new

    roots = [find(u) for u in range(n)]
    # Groups numbered by their smallest member unit id.
    order: dict[int, int] = {}
    for unit, root in enumerate(roots):
        if root not in order:
            order[root] = len(order)
    return np.asarray([order[root] for root in roots], dtype=np.int64)


def cluster_codebook(
    codebook: np.ndarray,
    n_groups: int = DEFAULT_N_GROUPS,
    linkage: str = "ward",
    sonorant_group: int | None = None,
) -> CoarsePartition:
    """Cluster codebook vectors and package the result as a partition."""
    clusterer = CodebookClusterer(n_groups=n_groups, linkage=linkage).fit(codebook)
    return CoarsePartition(
        group_of_unit={unit: int(g) for unit, g in enumerate(clusterer.labels_)},
        merge_tree=clusterer.merge_tree_,
        sonorant_group=sonorant_group,
    )


def segment(
    units: UnitSequence, partition: CoarsePartition, min_dur_ms: float = 0.0
) -> list[Segment]:
    """Run-length encode a unit stream at the coarse-group level.

    Any segment shorter than ``min_dur_ms`` (shortest first; position
    breaks ties) is absorbed into whichever adjacent segment is longer
    (earlier neighbor on ties), and equal-group neighbors coalesce.
    """
    ids = units.unit_ids
    if len(ids) == 0:
        raise ValueError("cannot segment an empty unit sequence")
    if min_dur_ms < 0:
        raise ValueError(f"min_dur_ms must be non-negative, got {min_dur_ms}")
    try:
        groups = np.asarray([partition.group_of_unit[int(u)] for u in ids])
    except KeyError as exc:
        raise ValueError(f"unit id {exc.args[0]} is not mapped by the partition") from None

    boundaries = np.flatnonzero(np.diff(groups)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [len(groups)]))
    segs = [
        [int(groups[s]), float((e - s) * units.hop_ms)] for s, e in zip(starts, ends)
    ]

    def coalesce(items: list[list]) -> list[list]:
        merged = [items[0]]
        for group, dur in items[1:]:
            if group == merged[-1][0]:
                merged[-1][1] += dur
            else:
                merged.append([group, dur])
        return merged

    while len(segs) > 1:
        short = [k for k, (_, dur) in enumerate(segs) if dur < min_dur_ms]
        if not short:
            break
        k = min(short, key=lambda k: (segs[k][1], k))
        neighbors = [n for n in (k - 1, k + 1) if 0 <= n < len(segs)]
        target = max(neighbors, key=lambda n: (segs[n][1], -n))
        segs[target][1] += segs[k][1]
        del segs[k]
        segs = coalesce(segs)

    return [Segment(group, dur) for group, dur in segs]


def duration_distributions(
    segment_lists: Sequence[Sequence[Segment]],
) -> DurationDistribution:
    """Pool segment durations per group across utterances, sorted ascending."""
    pools: dict[Hashable, list[float]] = {}
    total = 0
    for segments in segment_lists:
        for seg in segments:
            pools.setdefault(seg.group, []).append(seg.duration_ms)
            total += 1
    if total == 0:
        raise ValueError("no segments to pool")
    return {group: np.sort(np.asarray(durs)) for group, durs in sorted(pools.items(), key=lambda kv: str(kv[0]))}


def distributions_from_labels(
    tracks: Sequence[Sequence[LabeledSpan]],
    label_map: dict[str, Hashable | None],
) -> DurationDistribution:
    """Build per-class duration pools from labeled segment tracks.

    ``label_map`` sends each label to its class; a None value drops the
    label. Labels absent from the map raise, so typos surface instead of
    silently skewing a class.
    """
    pools: dict[Hashable, list[float]] = {}
    total = 0
    for track in tracks:
        for span in track:
            if span.label not in label_map:
                raise ValueError(
                    f"label {span.label!r} has no class mapping and no drop rule"
                )
            cls = label_map[span.label]
            if cls is None:
                continue
            pools.setdefault(cls, []).append(span.end_ms - span.start_ms)
            total += 1
    if total == 0:
        raise ValueError("no labeled segments survived mapping")
    return {cls: np.sort(np.asarray(durs)) for cls, durs in sorted(pools.items(), key=lambda kv: str(kv[0]))}


def wasserstein1(a: np.ndarray, b: np.ndarray) -> float:
    """Exact W1 between two empirical distributions.

    Integrates |inverse-CDF difference| over the merged quantile
    breakpoints of both samples. Every breakpoint is an integer multiple
    of 1/(n*m), so segment widths are exact integers over n*m and the
    whole integral can be accumulated in rational arithmetic; the result
    is the correctly rounded transport cost, which keeps closed-form
    cases (point masses, pure translations) exact.
    """
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("wasserstein1 requires two non-empty samples")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("samples contain non-finite values")
    n, m = len(a), len(b)
    breaks_a = np.arange(1, n, dtype=np.int64) * m  # quantile i/n, scaled by n*m
    breaks_b = np.arange(1, m, dtype=np.int64) * n
    edges = np.concatenate(([0], np.union1d(breaks_a, breaks_b), [n * m]))
    widths = np.diff(edges)
    ia = np.searchsorted(breaks_a, edges[:-1], side="right")
    ib = np.searchsorted(breaks_b, edges[:-1], side="right")
    diffs = np.abs(a[ia] - b[ib])
    # Each |difference| is p/q with q a power of two; summing integer
    # numerators over the largest denominator stays exact.
    ratios = [float(d).as_integer_ratio() for d in diffs]
    q_max = max(q for _, q in ratios)
    total = sum(int(w) * p * (q_max // q) for w, (p, q) in zip(widths, ratios))
    return float(Fraction(total, q_max * n * m))


@dataclass(frozen=True)
class U3DReport:
    """Per-group Wasserstein-1 distances and their arithmetic mean.

    Groups present on only one side carry no distance; they are listed
    and excluded from the average.
    """

    per_group: dict[Hashable, float]
    average: float
    only_in_reference: tuple = ()
    only_in_candidate: tuple = ()


def u3d(reference: DurationDistribution, candidate: DurationDistribution) -> U3DReport:
    """Compare two per-group duration distributions."""
    shared = sorted(set(reference) & set(candidate), key=str)
    if not shared:
        raise ValueError("distributions share no groups")
    per_group = {g: wasserstein1(reference[g], candidate[g]) for g in shared}
    return U3DReport(
        per_group=per_group,
        average=float(np.mean(list(per_group.values()))),
        only_in_reference=tuple(sorted(set(reference) - set(candidate), key=str)),
        only_in_candidate=tuple(sorted(set(candidate) - set(reference), key=str)),
    )


def nearest_by_rate(rates: dict[str, float]) -> dict[str, str]:
    """Map each speaker to the other speaker with the closest rate.

    Ties pick the lexicographically first speaker id.
    """
    if len(rates) < 2:
        raise ValueError(f"need at least 2 speakers, got {len(rates)}")
    out: dict[str, str] = {}
    for spk in sorted(rates):
        best = None
        best_gap = math.inf
        for other in sorted(rates):
            if other == spk:
                continue
            gap = abs(rates[spk] - rates[other])
            if gap < best_gap:
                best, best_gap = other, gap
        out[spk] = best
    return out


def scenario_same(
    segments_by_speaker: dict[str, list[list[Segment]]], seed: int
) -> dict[str, U3DReport]:
    """Self-distance baseline: split each speaker's utterances in half.

    Utterance splitting reuses the corpus random-split policy, keyed by
    position in the speaker's utterance list.
    """
    reports: dict[str, U3DReport] = {}
    for spk in sorted(segments_by_speaker):
        utterances = segments_by_speaker[spk]
        if len(utterances) < 2:
            raise ValueError(f"speaker {spk!r} needs at least 2 utterances to split")
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(utterances))
        n_a = (len(utterances) + 1) // 2
        half_a = [utterances[i] for i in perm[:n_a]]
        half_b = [utterances[i] for i in perm[n_a:]]
        reports[spk] = u3d(duration_distributions(half_a), duration_distributions(half_b))
    return reports


def scenario_nearest(
    dists: dict[str, DurationDistribution], rates: dict[str, float]
) -> tuple[dict[str, U3DReport], dict[str, str]]:
    """Compare each speaker against the closest other speaker by rate."""
    pairing = nearest_by_rate(rates)
    reports = {
        spk: u3d(dists[spk], dists[pairing[spk]]) for spk in sorted(dists)
    }
    return reports, pairing


def scenario_random(
    dists: dict[str, DurationDistribution], seed: int
) -> tuple[dict[str, U3DReport], dict[str, str]]:
    """Compare each speaker against a uniformly drawn other speaker."""
    speakers = sorted(dists)
    if len(speakers) < 2:
        raise ValueError(f"need at least 2 speakers, got {len(speakers)}")
    rng = np.random.default_rng(seed)
    pairing: dict[str, str] = {}
    for spk in speakers:
        others = [s for s in speakers if s != spk]
        pairing[spk] = others[int(rng.integers(len(others)))]
    reports = {spk: u3d(dists[spk], dists[pairing[spk]]) for spk in speakers}
    return reports, pairing
