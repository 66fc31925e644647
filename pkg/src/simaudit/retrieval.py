"""Neighborhood agreement between two spaces over the same vocabulary.

The headline score asks, for each label, how many of its k nearest
neighbors in one space are also among its k nearest neighbors in the
other, averaged over all labels and normalized by k. Swapping the two
spaces cannot change the score.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .corpus import EmbeddingSet, PerfTermTable, _atomic_write
from .errors import ConfigError, DataError, NumericalError
from .simspace import (
    NeighborhoodIndex,
    check_k,
    ranked_neighbors,
    similarity_matrix,
)


def ap_at_k(u: NeighborhoodIndex, v: NeighborhoodIndex) -> float:
    """Mean fraction of shared nearest neighbors across all points."""
    if u.vocab != v.vocab:
        raise DataError("neighborhood indexes cover different vocabularies")
    if u.k != v.k:
        raise DataError(f"neighborhood sizes differ: {u.k} vs {v.k}")
    n = len(u)
    shared = 0
    for i in range(n):
        shared += np.intersect1d(u.neighbors[i], v.neighbors[i], assume_unique=True).size
    return shared / (n * u.k)


@dataclass
class ApkCurve:
    """Agreement score as a function of neighborhood size."""

    ks: list[int]
    values: list[float]
    label_u: str = ""
    label_v: str = ""
    tie_seed: int = 0

    def __post_init__(self):
        _check_series(self.ks, self.values)
        for k, val in zip(self.ks, self.values):
            if not 0.0 <= val <= 1.0:
                raise ConfigError(f"score {val} at k={k} outside [0, 1]")

    def window(self, lo: int, hi: int) -> "ApkCurve":
        """Slice the curve to lo <= k <= hi."""
        pairs = [(k, v) for k, v in zip(self.ks, self.values) if lo <= k <= hi]
        if not pairs:
            raise ConfigError(f"no curve points in window {lo}..{hi}")
        return ApkCurve(
            [k for k, _ in pairs],
            [v for _, v in pairs],
            self.label_u,
            self.label_v,
            self.tie_seed,
        )


@dataclass
class RatioCurve:
    """Pointwise ratio of two agreement curves; values are unbounded above."""

    ks: list[int]
    values: list[float]
    label_u: str = ""
    label_v: str = ""

    def __post_init__(self):
        _check_series(self.ks, self.values)
        if any(v < 0.0 for v in self.values):
            raise ConfigError("ratio values must be non-negative")


def _check_series(ks, values):
    if len(ks) != len(values):
        raise ConfigError("ks and values differ in length")
    if not ks:
        raise ConfigError("empty curve")
    if list(ks) != sorted(set(int(k) for k in ks)):
        raise ConfigError("ks must be strictly increasing integers")


@dataclass
class BaselineBand:
    """Chance level of the agreement score, with a Monte-Carlo 95% band."""

    ks: list[int]
    mean: list[float]
    ci_low: list[float]
    ci_high: list[float]
    trials: int
    seed: int
    n: int
    mc_mean: list[float] = field(default_factory=list)


def ap_curve(su, sv, k_max: int, tie_seed: int = 0) -> ApkCurve:
    """Agreement curve between two similarity matrices for k = 1..k_max.

    Neighbor rankings are computed once per space and sliced per k, which
    is equivalent to rebuilding the index at each k with the same seed.
    """
    if su.vocab != sv.vocab:
        raise DataError("similarity matrices cover different vocabularies")
    n = len(su)
    k_max = check_k(k_max, n)
    order_u = ranked_neighbors(su, tie_seed)
    order_v = ranked_neighbors(sv, tie_seed)
    values = []
    for k in range(1, k_max + 1):
        u = NeighborhoodIndex(su.vocab, order_u[:, :k], k, tie_seed)
        v = NeighborhoodIndex(sv.vocab, order_v[:, :k], k, tie_seed)
        values.append(ap_at_k(u, v))
    return ApkCurve(
        list(range(1, k_max + 1)),
        values,
        label_u=getattr(su, "tag", ""),
        label_v=getattr(sv, "tag", ""),
        tie_seed=int(tie_seed),
    )


def random_baseline(n: int, k_max: int, trials: int = 1000, seed: int = 0) -> BaselineBand:
    """Agreement expected between unrelated spaces over n points.

    For a single point, the overlap between its neighborhood and a random
    k-subset of the other n-1 points is hypergeometric (k marked among
    n-1, k drawn), so the expected score is k/(n-1) and the band comes
    from resampling per-point overlaps directly instead of materializing
    random spaces.
    """
    if n < 2:
        raise ConfigError(f"need at least 2 points, got {n}")
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    k_max = check_k(k_max, n)
    rng = np.random.default_rng(seed)
    ks = list(range(1, k_max + 1))
    mean, lo, hi, mc = [], [], [], []
    for k in ks:
        draws = rng.hypergeometric(k, n - 1 - k, k, size=(trials, n)).sum(axis=1) / (n * k)
        mean.append(k / (n - 1))
        lo.append(float(np.percentile(draws, 2.5)))
        hi.append(float(np.percentile(draws, 97.5)))
        mc.append(float(draws.mean()))
    return BaselineBand(ks, mean, lo, hi, trials=trials, seed=int(seed), n=n, mc_mean=mc)


def relative_change(curve_a: ApkCurve, curve_b: ApkCurve) -> RatioCurve:
    """Pointwise a/b, the relative change from condition b to condition a."""
    if list(curve_a.ks) != list(curve_b.ks):
        raise ConfigError("curves cover different ks")
    for k, v in zip(curve_b.ks, curve_b.values):
        if v == 0.0:
            raise NumericalError(f"denominator curve is zero at k={k}")
    ratios = [a / b for a, b in zip(curve_a.values, curve_b.values)]
    return RatioCurve(list(curve_a.ks), ratios, curve_a.label_u, curve_a.label_v)


def save_curve_csv(path, curve, band: BaselineBand | None = None, meta: str | None = None) -> None:
    """Write k,value,baseline_mean,baseline_hi,baseline_lo rows."""
    if band is not None and list(band.ks) != list(curve.ks):
        raise ConfigError("curve and baseline cover different ks")

    def body(fh):
        if meta:
            fh.write(f"# {meta}\n")
        writer = csv.writer(fh)
        writer.writerow(["k", "value", "baseline_mean", "baseline_hi", "baseline_lo"])
        for i, k in enumerate(curve.ks):
            row = [str(k), f"{curve.values[i]:.9g}"]
            if band is None:
                row += ["", "", ""]
            else:
                row += [
                    f"{band.mean[i]:.9g}",
                    f"{band.ci_high[i]:.9g}",
                    f"{band.ci_low[i]:.9g}",
                ]
            writer.writerow(row)

    _atomic_write(path, body, newline="")


def performance_text_embedding(
    emb: EmbeddingSet,
    table: PerfTermTable,
    frequency_weighted: bool = False,
) -> EmbeddingSet:
    """One vector per performance: the mean of its terms' embeddings.

    Repeated annotations of the same term count once unless
    `frequency_weighted` is set, in which case each occurrence counts.
    """
    vectors, ids = [], []
    for perf in table.performances:
        terms = table.terms_of(perf)
        if not terms:
            raise DataError(f"performance {perf!r} has no terms")
        rows = [emb.vocab.position(t) for t in terms]
        if frequency_weighted:
            w = np.array([table.counts[(perf, t)] for t in terms], dtype=np.float64)
            vec = (emb.matrix[rows] * w[:, None]).sum(axis=0) / w.sum()
        else:
            vec = emb.matrix[rows].mean(axis=0)
        ids.append(perf)
        vectors.append(vec)
    return EmbeddingSet(ids, np.vstack(vectors), tag=f"{emb.tag}-perf")


def cross_modal_curve(
    audio: EmbeddingSet,
    text_perf: EmbeddingSet,
    k_max: int,
    tie_seed: int = 0,
) -> ApkCurve:
    """Agreement between audio and text views of the same performances.

    The audio set is aligned to the text set's labels; both must cover
    exactly the same performances.
    """
    if set(audio.labels) != set(text_perf.labels):
        missing = sorted(set(text_perf.labels) ^ set(audio.labels))
        raise DataError(f"audio and text performances differ: {missing[:5]}")
    audio = audio.align_to(text_perf.vocab)
    return ap_curve(
        similarity_matrix(audio), similarity_matrix(text_perf), k_max, tie_seed
    )
