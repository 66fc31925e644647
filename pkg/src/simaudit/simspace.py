"""Similarity and distance matrices over a labeled vocabulary, plus kNN.

Neighbor lists are ranked by similarity perturbed with a tiny seeded
jitter, so exact ties are broken reproducibly instead of falling back to
index order: the same tie seed always yields the same lists, while pairs
separated by more than the jitter amplitude can never be reordered by it.
"""

from __future__ import annotations

import csv
import os

import numpy as np

from .corpus import EmbeddingSet, Vocab, _atomic_write
from .errors import ConfigError, DataError, NumericalError

#: jitter amplitude used to break ranking ties; any similarity gap larger
#: than this is ordered purely by similarity
TIE_NOISE = 1e-9

_SYM_TOL = 1e-12

#: similarity kinds and the maximum value each can attain
_KIND_MAX = {
    "cosine": 1.0,
    "ground_truth": 1.0,
    "binary_cooccurrence": 1.0,
    "secondary": 1.0,
}


def cosine_similarity(x, y) -> float:
    """Cosine similarity of two equal-dimension non-zero vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"dimension mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 or ny == 0.0:
        raise NumericalError("cosine similarity undefined for zero vectors")
    return float(np.dot(x, y) / (nx * ny))


class _LabeledMatrix:
    """Square float64 matrix with one label per row/column."""

    def __init__(self, labels, values):
        self.vocab = labels if isinstance(labels, Vocab) else Vocab(labels)
        m = np.asarray(values, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DataError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] != len(self.vocab):
            raise DataError(f"{len(self.vocab)} labels but matrix of shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DataError("matrix contains NaN or infinite entries")
        if not np.allclose(m, m.T, atol=_SYM_TOL, rtol=0.0):
            raise DataError("matrix is not symmetric")
        # exact symmetry keeps downstream row/column logic honest
        self.values = (m + m.T) / 2.0

    @property
    def labels(self):
        return self.vocab.labels

    def __len__(self):
        return len(self.vocab)

    def save_csv(self, path, meta: str | None = None) -> None:
        """Write a header row of labels, then one labeled row per line.

        Values carry 9 significant digits. `meta` becomes a leading
        comment line; loaders skip lines starting with '#'.
        """

        def body(fh):
            if meta:
                fh.write(f"# {meta}\n")
            writer = csv.writer(fh)
            writer.writerow(["label"] + self.labels)
            for i, lab in enumerate(self.labels):
                writer.writerow([lab] + [f"{v:.9g}" for v in self.values[i]])

        _atomic_write(path, body, newline="")

    @classmethod
    def load_csv(cls, path, **kwargs):
        try:
            fh = open(path, encoding="utf-8", newline="")
        except OSError as exc:
            raise DataError(f"cannot read matrix: {exc}") from None
        with fh:
            reader = csv.reader(row for row in fh if not row.startswith("#"))
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if not header or header[0] != "label":
                raise DataError(f"{path}: expected first header cell 'label'")
            labels = header[1:]
            rows = []
            for row in reader:
                if len(row) != len(labels) + 1:
                    raise DataError(
                        f"{path}: expected {len(labels) + 1} cells, got {len(row)}"
                    )
                try:
                    rows.append([float(v) for v in row[1:]])
                except ValueError as exc:
                    raise DataError(f"{path}: {exc}") from None
        if len(rows) != len(labels):
            raise DataError(f"{path}: {len(labels)} columns but {len(rows)} rows")
        return cls(labels, rows, **kwargs)


class SimMatrix(_LabeledMatrix):
    """Symmetric similarity matrix whose diagonal sits at its kind's maximum."""

    def __init__(self, labels, values, kind: str = "cosine", tag: str = ""):
        super().__init__(labels, values)
        if kind not in _KIND_MAX:
            raise ConfigError(f"unknown similarity kind {kind!r}")
        self.kind = kind
        self.tag = tag
        top = _KIND_MAX[kind]
        if not np.all(np.diag(self.values) == top):
            raise DataError(f"{kind} similarity diagonal must equal {top}")
        if kind == "cosine" and (np.any(self.values < -1.0) or np.any(self.values > 1.0)):
            raise DataError("cosine similarities must lie in [-1, 1]")

    @property
    def max_value(self) -> float:
        return _KIND_MAX[self.kind]

    def to_dissimilarity(self) -> "DistMatrix":
        """Flip similarities into dissimilarities: d = kind max - s."""
        d = self.max_value - self.values
        np.fill_diagonal(d, 0.0)
        return DistMatrix(self.vocab, d)

    def restrict(self, labels) -> "SimMatrix":
        """Submatrix over the given labels, in the given order."""
        idx = [self.vocab.position(lab) for lab in labels]
        if not idx:
            raise DataError("cannot restrict to an empty vocabulary")
        sub = self.values[np.ix_(idx, idx)]
        return SimMatrix([self.labels[i] for i in idx], sub, kind=self.kind, tag=self.tag)


class DistMatrix(_LabeledMatrix):
    """Symmetric dissimilarity matrix with zero diagonal."""

    def __init__(self, labels, values):
        super().__init__(labels, values)
        if np.any(self.values < 0.0):
            raise DataError("dissimilarities must be non-negative")
        if np.any(np.diag(self.values) != 0.0):
            raise DataError("dissimilarity diagonal must be zero")


def similarity_matrix(emb: EmbeddingSet) -> SimMatrix:
    """Pairwise cosine similarities of an embedding set."""
    norms = np.linalg.norm(emb.matrix, axis=1)
    if np.any(norms == 0.0):
        i = int(np.argmin(norms))
        raise NumericalError(f"zero vector for label {emb.labels[i]!r}")
    unit = emb.matrix / norms[:, None]
    s = unit @ unit.T
    np.clip(s, -1.0, 1.0, out=s)
    np.fill_diagonal(s, 1.0)
    return SimMatrix(emb.vocab, s, kind="cosine", tag=emb.tag)


def _similarity_scores(matrix) -> np.ndarray:
    """Higher-is-closer scores for either matrix flavor."""
    if isinstance(matrix, SimMatrix):
        return matrix.values
    if isinstance(matrix, DistMatrix):
        return -matrix.values
    raise ConfigError(f"expected SimMatrix or DistMatrix, got {type(matrix).__name__}")


def ranked_neighbors(matrix, tie_seed: int = 0) -> np.ndarray:
    """(n, n-1) neighbor ranking per query row, closest first.

    Row i ranks all points except i by similarity plus a uniform jitter
    in [0, TIE_NOISE) drawn from a generator seeded by (tie_seed, i).
    """
    scores = _similarity_scores(matrix)
    n = scores.shape[0]
    perturbed = np.empty_like(scores)
    for i in range(n):
        rng = np.random.default_rng([int(tie_seed), i])
        perturbed[i] = scores[i] + rng.uniform(0.0, TIE_NOISE, n)
    np.fill_diagonal(perturbed, -np.inf)  # a point is never its own neighbor
    order = np.argsort(-perturbed, axis=1, kind="stable")
    return order[:, : n - 1]


def check_k(k, n: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise ConfigError(f"k must be an integer, got {k!r}")
    if not 1 <= k <= n - 1:
        raise ConfigError(f"k must be in 1..{n - 1}, got {k}")
    return int(k)


class NeighborhoodIndex:
    """The k nearest neighbors of every point, as index rows and labels."""

    def __init__(self, vocab: Vocab, neighbors: np.ndarray, k: int, tie_seed: int):
        self.vocab = vocab
        self.neighbors = neighbors  # (n, k) integer rows
        self.k = k
        self.tie_seed = tie_seed

    def __len__(self):
        return len(self.vocab)

    @property
    def labels(self):
        return self.vocab.labels

    def lists(self) -> dict[str, list[str]]:
        """Neighbor labels per query label, nearest first."""
        labs = self.vocab.labels
        return {
            labs[i]: [labs[j] for j in row] for i, row in enumerate(self.neighbors)
        }


def knn(matrix, k: int, tie_seed: int = 0) -> NeighborhoodIndex:
    """Neighborhood index of a similarity or dissimilarity matrix."""
    n = len(matrix)
    k = check_k(k, n)
    order = ranked_neighbors(matrix, tie_seed)
    return NeighborhoodIndex(matrix.vocab, order[:, :k].copy(), k, int(tie_seed))
