"""Hub detection and hubness reduction for embedding spaces.

A point's k-occurrence is the number of other points that list it among
their k nearest neighbors. Heavy right tails in those counts (hubs) are
summarized by moment skewness and by the Robin Hood index: the share of
neighbor-list slots that would have to move for every point to be
equally popular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .corpus import EmbeddingSet, Vocab
from .errors import ConfigError, NumericalError
from .simspace import DistMatrix, NeighborhoodIndex, SimMatrix, knn, similarity_matrix


@dataclass
class KOccurrence:
    vocab: Vocab
    k: int
    counts: np.ndarray


@dataclass
class HubnessReport:
    """Hub statistics for one space at one neighborhood size."""

    model_tag: str
    k: int
    skewness_before: float
    skewness_after: float
    robinhood_before: float
    robinhood_after: float
    method: str = "mp-gauss"

    def as_dict(self) -> dict:
        return {
            "model": self.model_tag,
            "k": self.k,
            "method": self.method,
            "skewness_before": self.skewness_before,
            "skewness_after": self.skewness_after,
            "robinhood_before": self.robinhood_before,
            "robinhood_after": self.robinhood_after,
        }


def k_occurrence(index: NeighborhoodIndex) -> KOccurrence:
    """How many neighbor lists each point appears in.

    The counts always sum to k * n: every list contributes exactly k slots.
    """
    counts = np.bincount(index.neighbors.ravel(), minlength=len(index))
    return KOccurrence(index.vocab, index.k, counts.astype(np.float64))


def _counts(x) -> np.ndarray:
    arr = x.counts if isinstance(x, KOccurrence) else x
    arr = np.asarray(arr, dtype=np.float64)
    if arr.size == 0:
        raise ConfigError("empty count vector")
    return arr


def skewness(counts) -> float:
    """Population moment skewness; zero for constant input by convention."""
    x = _counts(counts)
    centered = x - x.mean()
    m2 = np.mean(centered**2)
    if m2 == 0.0:
        return 0.0
    return float(np.mean(centered**3) / m2**1.5)


def robinhood(counts) -> float:
    """Fraction of neighbor slots that would need redistributing.

    0 when every point is equally popular, approaching 1 when one point
    holds all the slots.
    """
    x = _counts(counts)
    if np.any(x < 0.0):
        raise NumericalError("counts must be non-negative")
    total = x.sum()
    if total == 0.0:
        raise NumericalError("counts sum to zero")
    return float(0.5 * np.abs(x - x.mean()).sum() / total)


def mutual_proximity(dist: DistMatrix) -> SimMatrix:
    """Similarity from how mutual each neighbor relation is.

    Each row's off-diagonal distances are modeled as a normal
    distribution; the similarity of a pair is the product of both
    endpoints' survival probabilities at their joint distance. Entries
    lie in [0, 1], the diagonal is 1, and the construction is exactly
    symmetric.
    """
    d = dist.values
    n = len(dist)
    if n < 3:
        raise NumericalError("need at least 3 points to model row distances")
    off = d[~np.eye(n, dtype=bool)].reshape(n, n - 1)
    mu = off.mean(axis=1)
    sd = off.std(axis=1)
    if np.any(sd == 0.0):
        i = int(np.argmin(sd))
        raise NumericalError(
            f"all distances from {dist.labels[i]!r} are identical; "
            "row distribution is degenerate"
        )
    z = (d - mu[:, None]) / sd[:, None]
    sf = ndtr(-z)  # survival function of the standard normal
    mp = sf * sf.T
    np.fill_diagonal(mp, 1.0)
    return SimMatrix(dist.vocab, mp, kind="secondary", tag="mp")


def nicdm(dist: DistMatrix, k: int) -> DistMatrix:
    """Local scaling: divide d(i,j) by the geometric mean of the two
    points' average distances to their own k nearest neighbors."""
    d = dist.values
    n = len(dist)
    if not 1 <= k <= n - 1:
        raise ConfigError(f"k must be in 1..{n - 1}, got {k}")
    off = np.sort(d + np.where(np.eye(n, dtype=bool), np.inf, 0.0), axis=1)
    r = off[:, :k].mean(axis=1)
    if np.any(r == 0.0):
        i = int(np.argmin(r))
        raise NumericalError(
            f"{dist.labels[i]!r} coincides with its {k} nearest neighbors"
        )
    out = d / np.sqrt(np.outer(r, r))
    np.fill_diagonal(out, 0.0)
    return DistMatrix(dist.vocab, out)


def reduce_hubness(sim: SimMatrix, method: str = "mp-gauss", k: int | None = None):
    """Transform a similarity space to suppress hubs.

    Returns a matrix usable wherever the original similarity was: a
    secondary SimMatrix for "mp-gauss", a rescaled DistMatrix for "nicdm"
    (which needs a neighborhood size).
    """
    if method == "mp-gauss":
        return mutual_proximity(sim.to_dissimilarity())
    if method == "nicdm":
        if k is None:
            raise ConfigError("nicdm needs a neighborhood size k")
        return nicdm(sim.to_dissimilarity(), k)
    raise ConfigError(f"unknown hubness reduction method {method!r}")


def hubness_report(
    emb: EmbeddingSet,
    ks=(4, 8, 16),
    tie_seed: int = 0,
    method: str = "mp-gauss",
) -> list[HubnessReport]:
    """Hub statistics before and after reduction, one row per k.

    "Before" is measured on cosine dissimilarities of the raw vectors,
    "after" on the reduced space at the same k and tie seed.
    """
    sim = similarity_matrix(emb)
    reduced = reduce_hubness(sim, method) if method == "mp-gauss" else None
    rows = []
    for k in sorted(set(int(k) for k in ks)):
        if method == "nicdm":
            reduced = reduce_hubness(sim, method, k=k)
        before = k_occurrence(knn(sim, k, tie_seed))
        after = k_occurrence(knn(reduced, k, tie_seed))
        rows.append(
            HubnessReport(
                model_tag=emb.tag,
                k=k,
                skewness_before=skewness(before),
                skewness_after=skewness(after),
                robinhood_before=robinhood(before),
                robinhood_after=robinhood(after),
                method=method,
            )
        )
    return rows
