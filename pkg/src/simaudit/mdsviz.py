"""Low-dimensional layouts of dissimilarity data, plus figure rendering.

Figures are rendered with a pinned hash salt, un-embedded fonts, and no
date metadata, so rerunning the same configuration yields byte-identical
SVG files. Every figure gets a CSV companion carrying the plotted
numbers.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import matplotlib
import numpy as np

matplotlib.use("Agg")  # file output only, never a display
import matplotlib.pyplot as plt
from scipy.spatial import ConvexHull, QhullError

from .corpus import Vocab, _atomic_write
from .errors import ConfigError, NumericalError
from .retrieval import BaselineBand
from .simspace import DistMatrix

_RC = {
    "svg.hashsalt": "simaudit",
    "svg.fonttype": "none",
}

_POWER_TOL = 1e-10
_POWER_CAP = 10000


@dataclass
class MdsSolution:
    """A layout of the vocabulary in m dimensions."""

    vocab: Vocab
    coordinates: np.ndarray
    m: int
    stress: float
    iterations: int
    seed: int = 0
    history: list[float] = field(default_factory=list)
    eigenvalues: np.ndarray | None = None

    @property
    def labels(self):
        return self.vocab.labels


def _top_eigenpairs(b: np.ndarray, count: int, tol=_POWER_TOL, cap=_POWER_CAP):
    """Largest-eigenvalue pairs of a symmetric matrix by power iteration.

    A diagonal shift from the Gershgorin bound makes the matrix positive
    semidefinite first, so the dominant eigenvector of the shifted matrix
    belongs to the largest algebraic eigenvalue of the original. Found
    directions are deflated by re-orthogonalizing every iterate. A pair
    that has not met `tol` by `cap` iterations is accepted as-is: slow
    convergence means a near-degenerate pair, and any vector of that
    eigenspace serves the layout equally well.
    """
    n = b.shape[0]
    radius = np.abs(b).sum(axis=1) - np.abs(np.diag(b))
    shift = max(0.0, float(-(np.diag(b) - radius).min()))
    a = b + shift * np.eye(n)
    values, vectors = [], []
    for comp in range(count):
        rng = np.random.default_rng([20240601, comp])
        v = rng.standard_normal(n)
        for prev in vectors:
            v -= (v @ prev) * prev
        norm = np.linalg.norm(v)
        v = v / norm if norm > 0.0 else np.ones(n) / np.sqrt(n)
        for _ in range(cap):
            w = a @ v
            for prev in vectors:
                w -= (w @ prev) * prev
            norm = np.linalg.norm(w)
            if norm == 0.0:
                break  # the remaining spectrum is zero after the shift
            w /= norm
            done = np.abs(w - v).max() <= tol
            v = w
            if done:
                break
        peak = int(np.abs(v).argmax())
        if v[peak] < 0:
            v = -v  # canonical sign keeps layouts reproducible
        values.append(float(v @ a @ v) - shift)
        vectors.append(v)
    return np.array(values), np.column_stack(vectors)


def raw_stress(coords: np.ndarray, dist: DistMatrix) -> float:
    """Sum over pairs of squared (layout distance - target distance)."""
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    iu = np.triu_indices(len(dist), k=1)
    return float(((d - dist.values)[iu] ** 2).sum())


def classical_mds(dist: DistMatrix, m: int = 2) -> MdsSolution:
    """Embed points so Euclidean distances approximate the input.

    Double-centers the squared distances and keeps the top-m eigenpairs;
    directions with non-positive eigenvalues contribute zero columns, as
    the data has no variance to place there.
    """
    n = len(dist)
    if not 1 <= m < n:
        raise ConfigError(f"target dimension must be in 1..{n - 1}, got {m}")
    d2 = dist.values**2
    j = np.eye(n) - np.full((n, n), 1.0 / n)
    b = -0.5 * j @ d2 @ j
    b = (b + b.T) / 2.0
    values, vectors = _top_eigenpairs(b, m)
    coords = np.zeros((n, m), dtype=np.float64)
    for c in range(m):
        if values[c] > 0.0:
            coords[:, c] = vectors[:, c] * np.sqrt(values[c])
    stress = raw_stress(coords, dist)
    return MdsSolution(
        dist.vocab, coords, m, stress, iterations=0, history=[stress], eigenvalues=values
    )


def smacof(
    dist: DistMatrix,
    m: int = 2,
    init: str = "classical",
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> MdsSolution:
    """Refine a layout by stress majorization.

    Starts from the classical solution (default) or a seeded random
    cloud; each iteration applies the majorizing transform, which cannot
    increase raw stress. Stops when the relative stress improvement
    drops below `tol` or at `max_iter`.
    """
    n = len(dist)
    if not 1 <= m < n:
        raise ConfigError(f"target dimension must be in 1..{n - 1}, got {m}")
    if init == "classical":
        coords = classical_mds(dist, m).coordinates.copy()
        if not np.any(coords):
            raise NumericalError("degenerate initial layout: all coordinates zero")
    elif init == "random":
        rng = np.random.default_rng([int(seed), n, m])
        coords = rng.standard_normal((n, m))
    else:
        raise ConfigError(f"init must be 'classical' or 'random', got {init!r}")
    delta = dist.values
    # below this, layout distances already match the targets to ~9 digits
    # (an exact solution up to solver noise); without the floor the
    # relative rule churns at the noise level instead of stopping
    floor = 1e-18 * float((delta**2).sum())
    history = [raw_stress(coords, dist)]
    for _ in range(max_iter):
        diff = coords[:, None, :] - coords[None, :, :]
        d = np.sqrt((diff**2).sum(axis=2))
        ratio = np.divide(delta, d, out=np.zeros_like(delta), where=d > 0.0)
        bmat = -ratio
        np.fill_diagonal(bmat, 0.0)
        np.fill_diagonal(bmat, -bmat.sum(axis=1))
        coords = (bmat @ coords) / n
        stress = raw_stress(coords, dist)
        history.append(stress)
        if stress <= floor or history[-2] - stress <= tol * max(history[-2], 1e-300):
            break
    return MdsSolution(
        dist.vocab,
        coords,
        m,
        history[-1],
        iterations=len(history) - 1,
        seed=int(seed),
        history=history,
    )


def save_coords_csv(path, labels, coords, meta: str | None = None) -> None:
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape[0] != len(labels):
        raise ConfigError(f"{len(labels)} labels but {coords.shape[0]} coordinate rows")

    def body(fh):
        if meta:
            fh.write(f"# {meta}\n")
        writer = csv.writer(fh)
        writer.writerow(["label"] + [f"dim{c}" for c in range(coords.shape[1])])
        for lab, row in zip(labels, coords):
            writer.writerow([lab] + [f"{v:.9g}" for v in row])

    _atomic_write(path, body, newline="")


def _save_fig(fig, path, meta: str | None) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    metadata = {"Date": None}
    if meta:
        metadata["Title"] = meta
    fig.savefig(tmp, format="svg", metadata=metadata)
    plt.close(fig)
    os.replace(tmp, path)


def _color(i: int):
    return plt.get_cmap("tab20")(i % 20)


def emit_scatter_svg(
    sol: MdsSolution,
    colorings=(),
    hulls: bool = False,
    path=None,
    csv_path=None,
    meta: str | None = None,
) -> None:
    """Render a 2-d layout: one dot per label, colored by cluster.

    With two colorings the first sets large outer dots and the second
    small inner dots. With `hulls`, each cluster of the first coloring
    gets its convex hull polygon (clusters that don't span an area are
    drawn without one). A CSV companion is written when `csv_path` is
    given.
    """
    if sol.m != 2:
        raise ConfigError(f"scatter needs a 2-d solution, got m={sol.m}")
    if path is None:
        raise ConfigError("no output path")
    colorings = list(colorings)
    if len(colorings) > 2:
        raise ConfigError("at most two colorings are supported")
    coords = sol.coordinates
    pos = {lab: coords[i, :2] for i, lab in enumerate(sol.labels)}
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(9.0, 7.0))
        sizes = (52, 14)
        if not colorings:
            ax.scatter(coords[:, 0], coords[:, 1], s=sizes[1], color="#1f77b4")
        for layer, clustering in enumerate(colorings):
            covered = set()
            for ci, (name, members) in enumerate(clustering.clusters):
                pts = np.array([pos[lab] for lab in sorted(members) if lab in pos])
                if pts.size == 0:
                    continue
                covered |= members
                color = _color(ci)
                prefix = clustering.source_tag or f"g{layer + 1}"
                ax.scatter(
                    pts[:, 0], pts[:, 1], s=sizes[layer], color=color,
                    label=f"{prefix}: {name}", zorder=2 + layer,
                )
                if hulls and layer == 0 and len(pts) >= 3:
                    try:
                        hull = ConvexHull(pts)
                    except QhullError:
                        continue  # collinear cluster spans no area
                    poly = pts[hull.vertices]
                    ax.fill(poly[:, 0], poly[:, 1], color=color, alpha=0.15, zorder=1)
            rest = np.array([pos[lab] for lab in sol.labels if lab not in covered])
            if rest.size:
                ax.scatter(rest[:, 0], rest[:, 1], s=sizes[layer], color="#bbbbbb",
                           zorder=2 + layer)
        ax.set_xlabel("dim 0")
        ax.set_ylabel("dim 1")
        ax.set_aspect("equal")
        if colorings:
            ax.legend(loc="center left", bbox_to_anchor=(1.02, 0.5), fontsize=5,
                      markerscale=0.7, frameon=False)
        fig.tight_layout()
        _save_fig(fig, path, meta)
    if csv_path is not None:
        save_coords_csv(csv_path, sol.labels, coords, meta=meta)


def _curve_name(curve, taken) -> str:
    base = curve.label_v or curve.label_u or "curve"
    name = base
    i = 2
    while name in taken:
        name = f"{base}{i}"
        i += 1
    return name


def emit_curve_svg(
    curves,
    band: BaselineBand | None,
    path,
    csv_path=None,
    meta: str | None = None,
    ylabel: str = "aP@k",
    shade_window: tuple[int, int] | None = None,
    segments=(),
) -> None:
    """Render score-vs-k curves with an optional chance band.

    The CSV companion is always written (next to `path` unless given
    explicitly): columns k, one per curve, then the band. An empty curve
    list produces the CSV header only and no SVG. `segments` are short
    curves overlaid as-is (they may cover fewer ks and are not part of
    the companion CSV; callers persist them separately).
    """
    if csv_path is None:
        csv_path = os.path.splitext(str(path))[0] + ".csv"
    names = []
    for c in curves:
        names.append(_curve_name(c, names))
    # curves may cover different ks (ratio curves lose unsupported points);
    # the CSV carries the union with blank cells where a curve has no value
    ks = sorted(set().union(*[c.ks for c in curves], band.ks if band else []))
    by_k = [dict(zip(c.ks, c.values)) for c in curves]
    band_at = {}
    if band is not None:
        for i, k in enumerate(band.ks):
            band_at[k] = (band.mean[i], band.ci_high[i], band.ci_low[i])

    def body(fh):
        if meta:
            fh.write(f"# {meta}\n")
        writer = csv.writer(fh)
        writer.writerow(["k"] + names + ["baseline_mean", "baseline_hi", "baseline_lo"])
        for k in ks:
            row = [str(k)]
            row += [f"{vals[k]:.9g}" if k in vals else "" for vals in by_k]
            if k in band_at:
                row += [f"{v:.9g}" for v in band_at[k]]
            else:
                row += ["", "", ""]
            writer.writerow(row)

    _atomic_write(csv_path, body, newline="")
    if not curves:
        return
    with matplotlib.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for i, (c, name) in enumerate(zip(curves, names)):
            ax.plot(c.ks, c.values, marker="o", markersize=2.5, linewidth=1.2,
                    color=_color(i), label=name)
        if band is not None:
            ax.plot(band.ks, band.mean, linestyle="--", color="#999999",
                    linewidth=1.0, label="chance")
            ax.fill_between(band.ks, band.ci_low, band.ci_high,
                            color="#999999", alpha=0.3, linewidth=0)
        for j, seg in enumerate(segments):
            name = seg.label_v or seg.label_u or f"segment{j}"
            ax.plot(seg.ks, seg.values, linewidth=2.2, color="#17becf",
                    label=f"{name} (window)")
        if shade_window is not None:
            ax.axvspan(shade_window[0], shade_window[1], color="#2ca02c", alpha=0.08)
        ax.set_xlabel("k")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        fig.tight_layout()
        _save_fig(fig, path, meta)
