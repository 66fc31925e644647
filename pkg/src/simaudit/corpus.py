"""Corpus containers: vocabulary, embeddings, pile sortings, performance tags.

All label handling goes through :func:`normalize_label` so that the same
surface form always maps to the same key regardless of case, surrounding
whitespace, or unicode composition. Files are written atomically (temp
file, then rename) and in vocabulary order, so save/load round-trips
reproduce a structure exactly.
"""

from __future__ import annotations

import csv
import json
import os
import unicodedata
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


def normalize_label(label: str) -> str:
    """Strip, casefold, and NFC-normalize a label."""
    return unicodedata.normalize("NFC", label.strip().casefold())


def _atomic_write(path, write_body, newline=None):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline=newline) as fh:
        write_body(fh)
    os.replace(tmp, path)


class Vocab:
    """Ordered set of normalized labels with stable integer indices."""

    def __init__(self, labels):
        self.labels: list[str] = []
        self.index: dict[str, int] = {}
        for raw in labels:
            lab = normalize_label(raw)
            if not lab:
                raise DataError("empty label after normalization")
            if lab in self.index:
                raise DataError(f"duplicate label after normalization: {lab!r}")
            self.index[lab] = len(self.labels)
            self.labels.append(lab)

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return normalize_label(label) in self.index

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.labels == other.labels

    def position(self, label: str) -> int:
        lab = normalize_label(label)
        try:
            return self.index[lab]
        except KeyError:
            raise DataError(f"label not in vocabulary: {lab!r}") from None


class EmbeddingSet:
    """Labels plus a float64 matrix, one row per label.

    `tag` identifies where the vectors came from (model, modality,
    context variant); it travels into derived matrices and reports.
    """

    def __init__(self, labels, vectors, tag: str = ""):
        self.vocab = labels if isinstance(labels, Vocab) else Vocab(labels)
        self.tag = tag
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2:
            raise DataError(f"expected a 2-d array of vectors, got ndim={matrix.ndim}")
        if matrix.shape[0] != len(self.vocab):
            raise DataError(f"{len(self.vocab)} labels but {matrix.shape[0]} vectors")
        if matrix.shape[1] == 0:
            raise DataError("vectors have zero dimensions")
        if not np.all(np.isfinite(matrix)):
            raise DataError("vectors contain NaN or infinite entries")
        zero = ~np.any(matrix != 0.0, axis=1)
        if np.any(zero):
            i = int(np.flatnonzero(zero)[0])
            raise DataError(f"all-zero vector for label {self.vocab.labels[i]!r}")
        self.matrix = matrix

    @property
    def labels(self):
        return self.vocab.labels

    @property
    def dim(self):
        return self.matrix.shape[1]

    def __len__(self):
        return len(self.vocab)

    def vector(self, label: str) -> np.ndarray:
        return self.matrix[self.vocab.position(label)]

    def align_to(self, vocab: Vocab) -> "EmbeddingSet":
        """Restrict and reorder rows to match `vocab` exactly."""
        rows = []
        for lab in vocab:
            if lab not in self.vocab.index:
                raise DataError(f"embedding set {self.tag!r} is missing label {lab!r}")
            rows.append(self.vocab.index[lab])
        return EmbeddingSet(Vocab(list(vocab)), self.matrix[rows], tag=self.tag)


def load_embeddings(path, fmt: str = "jsonl", tag: str | None = None) -> EmbeddingSet:
    """Read an embedding file; `fmt` is "jsonl" or "csv".

    JSONL carries one {"label": ..., "vector": [...]} object per line;
    CSV has the header label,v0,...,v{d-1}. The tag defaults to the file's
    base name without extension.
    """
    if fmt not in ("jsonl", "csv"):
        raise DataError(f"unknown embedding format {fmt!r}")
    if tag is None:
        tag = os.path.splitext(os.path.basename(str(path)))[0]
    labels, vectors = [], []
    try:
        fh = open(path, encoding="utf-8", newline="" if fmt == "csv" else None)
    except OSError as exc:
        raise DataError(f"cannot read embeddings: {exc}") from None
    with fh:
        if fmt == "jsonl":
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: bad JSON: {exc}") from None
                if not isinstance(rec, dict) or "label" not in rec or "vector" not in rec:
                    raise DataError(f"{path}:{lineno}: each record needs 'label' and 'vector'")
                if not isinstance(rec["vector"], list):
                    raise DataError(f"{path}:{lineno}: 'vector' must be a list")
                labels.append(rec["label"])
                vectors.append(rec["vector"])
        else:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if not header or header[0] != "label":
                raise DataError(f"{path}: expected header label,v0,...")
            width = len(header) - 1
            for lineno, row in enumerate(reader, start=2):
                if len(row) != width + 1:
                    raise DataError(f"{path}:{lineno}: expected {width + 1} cells, got {len(row)}")
                labels.append(row[0])
                try:
                    vectors.append([float(v) for v in row[1:]])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
    if not labels:
        raise DataError(f"{path}: no records")
    dims = {len(v) for v in vectors}
    if len(dims) != 1:
        raise DataError(f"{path}: inconsistent vector dimensions {sorted(dims)}")
    return EmbeddingSet(labels, vectors, tag=tag)


def save_embeddings(emb: EmbeddingSet, path, fmt: str = "jsonl") -> None:
    """Write an embedding set in vocabulary order."""
    if fmt == "jsonl":
        def body(fh):
            for lab, row in zip(emb.labels, emb.matrix):
                rec = {"label": lab, "vector": row.tolist()}
                fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
        _atomic_write(path, body)
    elif fmt == "csv":
        def body(fh):
            writer = csv.writer(fh)
            writer.writerow(["label"] + [f"v{i}" for i in range(emb.dim)])
            for lab, row in zip(emb.labels, emb.matrix):
                writer.writerow([lab] + [repr(float(v)) for v in row])
        _atomic_write(path, body, newline="")
    else:
        raise DataError(f"unknown embedding format {fmt!r}")


def align(sets: list[EmbeddingSet]) -> list[EmbeddingSet]:
    """Restrict all sets to their common labels, in the first set's order."""
    if not sets:
        raise DataError("nothing to align")
    common = set(sets[0].vocab.labels)
    for other in sets[1:]:
        common &= set(other.vocab.labels)
    if not common:
        raise DataError("no common vocabulary across embedding sets")
    vocab = Vocab([lab for lab in sets[0].labels if lab in common])
    return [s.align_to(vocab) for s in sets]


@dataclass
class Pile:
    name: str
    terms: list[str] = field(default_factory=list)


class PileSorting:
    """One sorting of vocabulary terms into named, disjoint piles."""

    def __init__(self, group_id: str, piles: list[Pile], vocab: Vocab | None = None):
        self.group_id = group_id
        self.piles = []
        seen_names = set()
        seen_terms = {}
        for pile in piles:
            if pile.name in seen_names:
                raise DataError(f"pile group {group_id!r}: duplicate pile name {pile.name!r}")
            seen_names.add(pile.name)
            terms = []
            for raw in pile.terms:
                term = normalize_label(raw)
                if term in seen_terms:
                    raise DataError(
                        f"pile group {group_id!r}: term {term!r} appears in piles "
                        f"{seen_terms[term]!r} and {pile.name!r}"
                    )
                if vocab is not None and term not in vocab.index:
                    raise DataError(f"pile group {group_id!r}: term {term!r} not in vocabulary")
                seen_terms[term] = pile.name
                terms.append(term)
            if not terms:
                raise DataError(f"pile group {group_id!r}: pile {pile.name!r} is empty")
            self.piles.append(Pile(pile.name, terms))
        if not self.piles:
            raise DataError(f"pile group {group_id!r}: no piles")

    def __len__(self):
        return len(self.piles)

    @property
    def terms(self) -> list[str]:
        return [t for p in self.piles for t in p.terms]

    def memberships(self) -> list[set[str]]:
        return [set(p.terms) for p in self.piles]


def load_piles(path, vocab: Vocab | None = None) -> PileSorting:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read pile sorting: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: bad JSON: {exc}") from None
    if not isinstance(doc, dict) or "group" not in doc or "piles" not in doc:
        raise DataError(f"{path}: expected object with 'group' and 'piles'")
    piles = []
    for entry in doc["piles"]:
        if not isinstance(entry, dict) or "name" not in entry or "terms" not in entry:
            raise DataError(f"{path}: each pile needs 'name' and 'terms'")
        piles.append(Pile(str(entry["name"]), list(entry["terms"])))
    return PileSorting(str(doc["group"]), piles, vocab=vocab)


def save_piles(sorting: PileSorting, path) -> None:
    doc = {
        "group": sorting.group_id,
        "piles": [{"name": p.name, "terms": p.terms} for p in sorting.piles],
    }

    def body(fh):
        json.dump(doc, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")

    _atomic_write(path, body)


class PerfTermTable:
    """Rows of (performance_id, term): which terms describe which performance.

    Repeated (performance, term) pairs collapse to one row; how often each
    pair occurred is kept in `counts` for the optional frequency-weighted
    averaging mode.
    """

    def __init__(self, rows, vocab: Vocab | None = None):
        self.rows: list[tuple[str, str]] = []
        self.counts: dict[tuple[str, str], int] = {}
        for perf_id, raw_term in rows:
            perf = str(perf_id).strip()
            term = normalize_label(raw_term)
            if not perf:
                raise DataError("empty performance id")
            if not term:
                raise DataError(f"performance {perf!r}: empty term")
            if vocab is not None and term not in vocab.index:
                raise DataError(f"performance {perf!r}: term {term!r} not in vocabulary")
            key = (perf, term)
            if key in self.counts:
                self.counts[key] += 1
                continue
            self.counts[key] = 1
            self.rows.append(key)
        if not self.rows:
            raise DataError("no performance-term rows")

    def __len__(self):
        return len(self.rows)

    @property
    def performances(self) -> list[str]:
        out, seen = [], set()
        for perf, _ in self.rows:
            if perf not in seen:
                seen.add(perf)
                out.append(perf)
        return out

    @property
    def terms(self) -> list[str]:
        out, seen = [], set()
        for _, term in self.rows:
            if term not in seen:
                seen.add(term)
                out.append(term)
        return out

    def terms_of(self, perf_id: str) -> list[str]:
        return [t for p, t in self.rows if p == perf_id]


def load_perf_table(path, vocab: Vocab | None = None) -> PerfTermTable:
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read performance table: {exc}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if [h.strip().lower() for h in header] != ["performance_id", "term"]:
            raise DataError(f"{path}: expected header 'performance_id,term', got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            rows.append((row[0], row[1]))
    return PerfTermTable(rows, vocab=vocab)


def save_perf_table(table: PerfTermTable, path) -> None:
    def body(fh):
        writer = csv.writer(fh)
        writer.writerow(["performance_id", "term"])
        for (perf, term), count in ((k, table.counts[k]) for k in table.rows):
            for _ in range(count):
                writer.writerow([perf, term])

    _atomic_write(path, body, newline="")
