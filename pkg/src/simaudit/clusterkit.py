"""Clustering of labeled vectors and overlap scoring between partitions.

The overlap score is directional: for each cluster of the first
partition it finds the best-matching cluster of the second, counting
shared members against the *smaller* of the two clusters. Swapping the
arguments generally changes the score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import EmbeddingSet, PileSorting, Vocab
from .errors import ConfigError, DataError, NumericalError
from .simspace import SimMatrix


@dataclass
class Clustering:
    """Named, disjoint member sets over one vocabulary."""

    vocab: Vocab
    clusters: list[tuple[str, set[str]]]
    source_tag: str = ""
    # k-means diagnostics; None when the clustering came from annotations
    inertia: float | None = None
    history: list[float] = field(default_factory=list)
    seed: int | None = None
    restart: int | None = None

    def __post_init__(self):
        if not self.clusters:
            raise ConfigError("clustering has no clusters")
        seen = set()
        for name, members in self.clusters:
            if not members:
                raise ConfigError(f"cluster {name!r} is empty")
            overlap = seen & members
            if overlap:
                raise DataError(f"label {sorted(overlap)[0]!r} appears in two clusters")
            for lab in members:
                if lab not in self.vocab.index:
                    raise DataError(f"cluster member {lab!r} not in vocabulary")
            seen |= members

    def __len__(self):
        return len(self.clusters)

    def member_sets(self) -> list[set[str]]:
        return [members for _, members in self.clusters]

    @classmethod
    def from_pile_sorting(cls, sorting: PileSorting, vocab: Vocab) -> "Clustering":
        return cls(
            vocab,
            [(p.name, set(p.terms)) for p in sorting.piles],
            source_tag=sorting.group_id,
        )


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        raise NumericalError("cannot unit-normalize a zero row")
    return matrix / norms[:, None]


def _plusplus_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Spread initial centers by sampling proportional to squared distance."""
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]), dtype=np.float64)
    centers[0] = x[rng.integers(n)]
    closest = np.sum((x - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total == 0.0:
            # every remaining point coincides with a chosen center
            centers[c] = x[rng.integers(n)]
            continue
        centers[c] = x[rng.choice(n, p=closest / total)]
        closest = np.minimum(closest, np.sum((x - centers[c]) ** 2, axis=1))
    return centers


def _lloyd(x, k, rng, max_iter, tol):
    centers = _plusplus_init(x, k, rng)
    labels = np.zeros(x.shape[0], dtype=np.intp)
    history = []
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        point_cost = d2[np.arange(x.shape[0]), labels]
        # revive empty clusters with the currently worst-fit points
        for c in range(k):
            if not np.any(labels == c):
                far = int(point_cost.argmax())
                centers[c] = x[far]
                labels[far] = c
                point_cost[far] = 0.0
        inertia = float(point_cost.sum())
        history.append(inertia)
        centers = np.vstack([x[labels == c].mean(axis=0) for c in range(k)])
        if len(history) > 1 and history[-2] - inertia <= tol * max(history[-2], 1e-300):
            break
    return labels, centers, history


def kmeans(
    data,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    *,
    max_iter: int = 300,
    tol: float = 1e-6,
    normalize: bool = True,
    tag: str | None = None,
) -> Clustering:
    """Cluster rows into k groups, keeping the best of `restarts` runs.

    Accepts an EmbeddingSet or a SimMatrix (whose similarity-profile rows
    act as feature vectors). Rows are unit-normalized by default so that
    similarity is directional rather than magnitude-driven. Iteration
    stops when the relative inertia improvement drops below `tol`; ties
    between restarts go to the lower restart number, so a fixed seed
    always reproduces the same clustering.
    """
    if isinstance(data, EmbeddingSet):
        matrix, vocab = data.matrix, data.vocab
        tag = data.tag if tag is None else tag
    elif isinstance(data, SimMatrix):
        matrix, vocab = data.values, data.vocab
        tag = data.tag if tag is None else tag
    else:
        raise ConfigError(f"expected EmbeddingSet or SimMatrix, got {type(data).__name__}")
    n = matrix.shape[0]
    if not 2 <= k <= n:
        raise ConfigError(f"k must be in 2..{n}, got {k}")
    if restarts < 1:
        raise ConfigError(f"restarts must be positive, got {restarts}")
    x = _unit_rows(matrix) if normalize else matrix.astype(np.float64)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([int(seed), r])
        labels, centers, history = _lloyd(x, k, rng, max_iter, tol)
        inertia = history[-1]
        if best is None or inertia < best[0]:
            best = (inertia, r, labels, history)
    inertia, restart, labels, history = best
    width = len(str(k - 1))
    clusters = []
    for c in range(k):
        members = {vocab.labels[i] for i in np.flatnonzero(labels == c)}
        if members:
            clusters.append((f"c{c:0{width}d}", members))
    return Clustering(
        vocab,
        clusters,
        source_tag=tag or "",
        inertia=inertia,
        history=history,
        seed=int(seed),
        restart=restart,
    )


def _member_sets(clustering) -> list[set[str]]:
    if isinstance(clustering, Clustering):
        return clustering.member_sets()
    sets = [set(c) for c in clustering]
    if not sets:
        raise ConfigError("clustering has no clusters")
    if any(not c for c in sets):
        raise ConfigError("clusters must be non-empty")
    return sets


def av_max_overlap(first, second) -> float:
    """Average over `first`'s clusters of their best match in `second`.

    A match is |A & B| / min(|A|, |B|), so a small cluster fully
    contained in a large one counts as a perfect match. Not symmetric.
    """
    a_sets = _member_sets(first)
    b_sets = _member_sets(second)
    total = 0.0
    for a in a_sets:
        total += max(len(a & b) / min(len(a), len(b)) for b in b_sets)
    return total / len(a_sets)


def random_baseline_embedding(vocab: Vocab, dim: int = 100, seed: int = 0) -> EmbeddingSet:
    """I.i.d. standard Gaussian vectors, one per label."""
    rng = np.random.default_rng([int(seed), 100, dim])
    return EmbeddingSet(vocab, rng.standard_normal((len(vocab), dim)), tag="rb")


def clustering_report(
    spaces: list,
    piles: list[PileSorting],
    k: int = 22,
    seed: int = 0,
    restarts: int = 10,
) -> dict:
    """Overlap of each space's k-means clustering against each pile group.

    `spaces` mixes EmbeddingSets and SimMatrixes; each is clustered with
    the same (k, seed, restarts) and compared in both directions against
    every pile group, on the vocabulary shared by that space and the
    piles. Returns {space_tag: {group_id: {"piles_in_clusters": x,
    "clusters_in_piles": y}}}.
    """
    if not spaces:
        raise ConfigError("no spaces to cluster")
    if not piles:
        raise ConfigError("no pile groups to compare against")
    out = {}
    for space in spaces:
        clustering = kmeans(space, k, seed=seed, restarts=restarts)
        tag = clustering.source_tag or f"space{len(out)}"
        row = {}
        for sorting in piles:
            reference = [set(p.terms) for p in sorting.piles]
            row[sorting.group_id] = {
                "piles_in_clusters": av_max_overlap(reference, clustering),
                "clusters_in_piles": av_max_overlap(clustering, reference),
            }
        out[tag] = row
    return out
