"""Shared builders for the test suite.

Everything here is synthetic and seeded so tests are reproducible;
fixture data sizes are kept small enough that the whole suite runs in
well under a minute.
"""

import configparser
import json
import os

import numpy as np
import pytest

from simaudit.corpus import EmbeddingSet, Vocab
from simaudit.simspace import SimMatrix, similarity_matrix


def gaussian_embeddings(n, d, seed, tag="emb"):
    rng = np.random.default_rng(seed)
    labels = [f"t{i:03d}" for i in range(n)]
    return EmbeddingSet(labels, rng.standard_normal((n, d)), tag=tag)


def random_sim(n, seed, tag="sim"):
    """Cosine matrix of random Gaussian vectors; ties have measure zero."""
    return similarity_matrix(gaussian_embeddings(n, max(8, n), seed, tag=tag))


def sim_from_values(labels, values, kind="cosine", tag=""):
    return SimMatrix(Vocab(labels), np.asarray(values, dtype=float), kind=kind, tag=tag)


def write_jsonl(path, labels, matrix):
    with open(path, "w", encoding="utf-8") as fh:
        for lab, row in zip(labels, matrix):
            fh.write(json.dumps({"label": lab, "vector": [float(x) for x in row]}) + "\n")


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """A miniature data directory every pipeline test shares.

    12 terms sorted into two pile groups, 6 performances, two term-space
    models plus a context variant of the first, and one audio set keyed
    by performance id. Dimensions and counts are small on purpose.
    """
    root = tmp_path_factory.mktemp("data")
    terms = [f"term{i:02d}" for i in range(12)]
    g1 = {"group": "p1", "piles": [
        {"name": "a", "terms": terms[0:4]},
        {"name": "b", "terms": terms[4:8]},
        {"name": "c", "terms": terms[8:12]},
    ]}
    g2 = {"group": "p2", "piles": [
        {"name": "x", "terms": terms[0:6]},
        {"name": "y", "terms": terms[6:12]},
    ]}
    (root / "p1.json").write_text(json.dumps(g1))
    (root / "p2.json").write_text(json.dumps(g2))

    rng = np.random.default_rng(20240601)
    perf_rows = ["performance_id,term"]
    for p in range(6):
        picked = rng.choice(12, size=3, replace=False)
        for t in picked:
            perf_rows.append(f"P{p:02d},{terms[t]}")
    (root / "perf.csv").write_text("\n".join(perf_rows) + "\n")

    for name, seed in [("modela", 1), ("modelb", 2), ("modela_ctx", 3)]:
        m = np.random.default_rng(seed).standard_normal((12, 8))
        write_jsonl(root / f"{name}.jsonl", terms, m)
    audio = np.random.default_rng(9).standard_normal((6, 8))
    write_jsonl(root / "audio.jsonl", [f"P{p:02d}" for p in range(6)], audio)

    ini = configparser.ConfigParser()
    ini["data"] = {
        "piles": "p1.json, p2.json",
        "perf_table": "perf.csv",
        "audio": "audio.jsonl",
    }
    ini["models"] = {"modela": "modela.jsonl", "modelb": "modelb.jsonl"}
    ini["context_models"] = {"modela": "modela_ctx.jsonl"}
    ini["cross_modal"] = {"model": "modela"}
    ini["eval"] = {"k_max": "6", "trials": "60", "trust_lo": "2", "trust_hi": "4"}
    ini["hubness"] = {"ks": "2, 4"}
    ini["cluster"] = {"k": "3"}
    ini["mds"] = {"dims": "2", "eval_dims": "2, 4"}
    with open(root / "audit.ini", "w", encoding="utf-8") as fh:
        ini.write(fh)
    return root


@pytest.fixture()
def config_path(data_dir):
    return os.path.join(str(data_dir), "audit.ini")
