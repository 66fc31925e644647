"""Expert ground-truth similarity built from piles and performance tags.

Each source yields a binary similarity over the vocabulary; the combined
ground truth is their weighted mean, so with three equally weighted
sources the off-diagonal values land on {0, 1/3, 2/3, 1}.
"""

from __future__ import annotations

import numpy as np

from .corpus import PerfTermTable, PileSorting, Vocab
from .errors import ConfigError, DataError
from .simspace import SimMatrix


def pile_similarity_matrix(sorting: PileSorting, vocab: Vocab) -> SimMatrix:
    """Binary similarity: 1 iff two terms were sorted into the same pile.

    Terms the sorter left out of every pile are similar only to themselves.
    """
    n = len(vocab)
    s = np.zeros((n, n), dtype=np.float64)
    for members in sorting.memberships():
        idx = []
        for term in members:
            if term not in vocab.index:
                raise DataError(
                    f"pile group {sorting.group_id!r}: term {term!r} not in vocabulary"
                )
            idx.append(vocab.index[term])
        idx = np.array(sorted(idx), dtype=np.intp)
        s[np.ix_(idx, idx)] = 1.0
    np.fill_diagonal(s, 1.0)
    return SimMatrix(vocab, s, kind="binary_cooccurrence", tag=sorting.group_id)


def performance_cooccurrence_matrix(table: PerfTermTable, vocab: Vocab) -> SimMatrix:
    """Binary similarity: 1 iff two terms both describe some performance."""
    n = len(vocab)
    s = np.zeros((n, n), dtype=np.float64)
    for perf in table.performances:
        idx = []
        for term in table.terms_of(perf):
            if term not in vocab.index:
                raise DataError(f"performance term {term!r} not in vocabulary")
            idx.append(vocab.index[term])
        idx = np.array(sorted(set(idx)), dtype=np.intp)
        s[np.ix_(idx, idx)] = 1.0
    np.fill_diagonal(s, 1.0)
    return SimMatrix(vocab, s, kind="binary_cooccurrence", tag="cooccurrence")


def combine(matrices: list[SimMatrix], weights=None, tag: str = "gt") -> SimMatrix:
    """Weighted mean of binary sources over one vocabulary.

    Weights default to equal; they must be non-negative, not all zero,
    and are normalized to sum to one.
    """
    if not matrices:
        raise ConfigError("no matrices to combine")
    vocab = matrices[0].vocab
    for m in matrices[1:]:
        if m.vocab != vocab:
            raise DataError("cannot combine matrices over different vocabularies")
    if weights is None:
        weights = [1.0] * len(matrices)
    if len(weights) != len(matrices):
        raise ConfigError(f"{len(matrices)} matrices but {len(weights)} weights")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ConfigError("weights must be non-negative and finite")
    if w.sum() == 0.0:
        raise ConfigError("weights must not all be zero")
    w = w / w.sum()
    out = np.zeros_like(matrices[0].values)
    for wi, m in zip(w, matrices):
        out += wi * m.values
    np.fill_diagonal(out, 1.0)  # guards against float drift in the sum
    return SimMatrix(vocab, out, kind="ground_truth", tag=tag)


def build_ground_truth(
    pile_sortings: list[PileSorting],
    table: PerfTermTable,
    weights=None,
    vocab: Vocab | None = None,
) -> SimMatrix:
    """Assemble the combined matrix from raw sources.

    When no vocabulary is given, it is the union of all pile terms and
    table terms in first-seen order, which makes the result independent
    of anything but the input files.
    """
    if vocab is None:
        seen = []
        have = set()
        for sorting in pile_sortings:
            for term in sorting.terms:
                if term not in have:
                    have.add(term)
                    seen.append(term)
        for term in table.terms:
            if term not in have:
                have.add(term)
                seen.append(term)
        vocab = Vocab(seen)
    sources = [pile_similarity_matrix(s, vocab) for s in pile_sortings]
    sources.append(performance_cooccurrence_matrix(table, vocab))
    return combine(sources, weights=weights)
