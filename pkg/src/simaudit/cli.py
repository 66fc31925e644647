"""Command-line orchestration: configuration, experiment recipes, reports.

Every artifact a recipe writes carries the same metadata line: a hash of
the effective configuration (output locations excluded, so moving the
output directory never changes bytes), the seed set, and the package
version. Identical configuration and inputs therefore produce
byte-identical reports.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import click
import numpy as np

from . import __version__
from .corpus import (
    EmbeddingSet,
    _atomic_write,
    load_embeddings,
    load_perf_table,
    load_piles,
)
from .clusterkit import (
    Clustering,
    av_max_overlap,
    clustering_report,
    random_baseline_embedding,
)
from .errors import AuditError, ConfigError, DataError
from .groundtruth import build_ground_truth, pile_similarity_matrix
from .hubness import hubness_report, reduce_hubness
from .mdsviz import classical_mds, emit_curve_svg, emit_scatter_svg, smacof
from .retrieval import (
    ApkCurve,
    ap_curve,
    cross_modal_curve,
    performance_text_embedding,
    random_baseline,
    relative_change,
    save_curve_csv,
)
from .simspace import DistMatrix, SimMatrix, similarity_matrix


# ---------------------------------------------------------------------------
# configuration

_DEFAULTS = {
    "k_max": 49,
    "tie_seed": 0,
    "trials": 1000,
    "baseline_seed": 0,
    "trust_lo": 5,
    "trust_hi": 10,
    "hubness_ks": (4, 8, 16),
    "hubness_method": "mp-gauss",
    "cluster_k": 22,
    "cluster_seed": 0,
    "cluster_restarts": 10,
    "rb_dim": 100,
    "rb_seed": 0,
    "mds_dims": 2,
    "mds_eval_dims": (2, 4, 8),
    "mds_seed": 0,
    "mds_max_iter": 500,
    "mds_tol": 1e-6,
}


@dataclass
class ExperimentConfig:
    """Resolved experiment parameters plus input file locations.

    Paths are kept as written in the config file; `resolve` joins them to
    the data directory at use time, so the configuration hash does not
    depend on where the data happens to live.
    """

    data_dir: str = "."
    piles: list[str] = field(default_factory=list)
    perf_table: str | None = None
    audio: str | None = None
    models: dict[str, str] = field(default_factory=dict)
    context_models: dict[str, str] = field(default_factory=dict)
    cross_modal_model: str | None = None
    k_max: int = _DEFAULTS["k_max"]
    tie_seed: int = _DEFAULTS["tie_seed"]
    trials: int = _DEFAULTS["trials"]
    baseline_seed: int = _DEFAULTS["baseline_seed"]
    trust_lo: int = _DEFAULTS["trust_lo"]
    trust_hi: int = _DEFAULTS["trust_hi"]
    hubness_ks: tuple = _DEFAULTS["hubness_ks"]
    hubness_method: str = _DEFAULTS["hubness_method"]
    cluster_k: int = _DEFAULTS["cluster_k"]
    cluster_seed: int = _DEFAULTS["cluster_seed"]
    cluster_restarts: int = _DEFAULTS["cluster_restarts"]
    rb_dim: int = _DEFAULTS["rb_dim"]
    rb_seed: int = _DEFAULTS["rb_seed"]
    mds_dims: int = _DEFAULTS["mds_dims"]
    mds_eval_dims: tuple = _DEFAULTS["mds_eval_dims"]
    mds_seed: int = _DEFAULTS["mds_seed"]
    mds_max_iter: int = _DEFAULTS["mds_max_iter"]
    mds_tol: float = _DEFAULTS["mds_tol"]

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.data_dir, path)

    def seeds(self) -> dict:
        return {
            "tie": self.tie_seed,
            "baseline": self.baseline_seed,
            "cluster": self.cluster_seed,
            "rb": self.rb_seed,
            "mds": self.mds_seed,
        }

    def hash(self) -> str:
        body = {
            "piles": self.piles,
            "perf_table": self.perf_table,
            "audio": self.audio,
            "models": self.models,
            "context_models": self.context_models,
            "cross_modal_model": self.cross_modal_model,
            "k_max": self.k_max,
            "trials": self.trials,
            "trust": [self.trust_lo, self.trust_hi],
            "hubness": [list(self.hubness_ks), self.hubness_method],
            "cluster": [self.cluster_k, self.cluster_restarts, self.rb_dim],
            "mds": [
                self.mds_dims,
                list(self.mds_eval_dims),
                self.mds_max_iter,
                self.mds_tol,
            ],
            "seeds": self.seeds(),
            "version": __version__,
        }
        blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def meta(self) -> str:
        seeds = ",".join(f"{k}:{v}" for k, v in sorted(self.seeds().items()))
        return f"config={self.hash()} seeds={seeds} version={__version__}"

    def validate(self, need_models: bool = True) -> None:
        """Check the referenced input files exist before any work starts."""
        wanted = [self.resolve(p) for p in self.piles]
        if self.perf_table:
            wanted.append(self.resolve(self.perf_table))
        if self.audio:
            wanted.append(self.resolve(self.audio))
        wanted += [self.resolve(p) for p in self.models.values()]
        wanted += [self.resolve(p) for p in self.context_models.values()]
        for path in wanted:
            if not os.path.exists(path):
                raise ConfigError(f"input file not found: {path}")
        if need_models and not self.models:
            raise ConfigError("no model embedding files configured")
        if len(self.piles) < 1 or not self.perf_table:
            raise ConfigError("ground truth needs pile files and a performance table")


def _parse_ints(text: str) -> tuple:
    try:
        values = tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None
    if not values:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")
    return values


def load_config(path: str, data_dir: str | None = None) -> ExperimentConfig:
    """Read the INI-style experiment file; see README for the format."""
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = ExperimentConfig()
    # relative paths inside the file resolve against its own directory
    # unless a [data] dir, the flag, or the environment overrides that
    cfg.data_dir = os.path.dirname(os.path.abspath(path)) or "."
    try:
        if parser.has_section("data"):
            data = parser["data"]
            cfg.data_dir = data.get("dir", cfg.data_dir)
            if "piles" in data:
                cfg.piles = [p.strip() for p in data["piles"].split(",") if p.strip()]
            cfg.perf_table = data.get("perf_table", cfg.perf_table)
            cfg.audio = data.get("audio", cfg.audio)
        if parser.has_section("models"):
            cfg.models = dict(parser.items("models"))
        if parser.has_section("context_models"):
            cfg.context_models = dict(parser.items("context_models"))
        if parser.has_section("eval"):
            sec = parser["eval"]
            cfg.k_max = sec.getint("k_max", cfg.k_max)
            cfg.tie_seed = sec.getint("tie_seed", cfg.tie_seed)
            cfg.trials = sec.getint("trials", cfg.trials)
            cfg.baseline_seed = sec.getint("baseline_seed", cfg.baseline_seed)
            cfg.trust_lo = sec.getint("trust_lo", cfg.trust_lo)
            cfg.trust_hi = sec.getint("trust_hi", cfg.trust_hi)
        if parser.has_section("hubness"):
            sec = parser["hubness"]
            if "ks" in sec:
                cfg.hubness_ks = _parse_ints(sec["ks"])
            cfg.hubness_method = sec.get("method", cfg.hubness_method)
        if parser.has_section("cluster"):
            sec = parser["cluster"]
            cfg.cluster_k = sec.getint("k", cfg.cluster_k)
            cfg.cluster_seed = sec.getint("seed", cfg.cluster_seed)
            cfg.cluster_restarts = sec.getint("restarts", cfg.cluster_restarts)
            cfg.rb_dim = sec.getint("rb_dim", cfg.rb_dim)
            cfg.rb_seed = sec.getint("rb_seed", cfg.rb_seed)
        if parser.has_section("mds"):
            sec = parser["mds"]
            cfg.mds_dims = sec.getint("dims", cfg.mds_dims)
            if "eval_dims" in sec:
                cfg.mds_eval_dims = _parse_ints(sec["eval_dims"])
            cfg.mds_seed = sec.getint("seed", cfg.mds_seed)
            cfg.mds_max_iter = sec.getint("max_iter", cfg.mds_max_iter)
            cfg.mds_tol = sec.getfloat("tol", cfg.mds_tol)
        if parser.has_section("cross_modal"):
            cfg.cross_modal_model = parser["cross_modal"].get("model", None)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data_dir:
        cfg.data_dir = data_dir
    return cfg


# ---------------------------------------------------------------------------
# shared loading helpers

def _load_gt(cfg: ExperimentConfig):
    sortings = [load_piles(cfg.resolve(p)) for p in cfg.piles]
    table = load_perf_table(cfg.resolve(cfg.perf_table))
    return build_ground_truth(sortings, table), sortings, table


def _load_model(cfg: ExperimentConfig, name: str, path: str) -> EmbeddingSet:
    return load_embeddings(cfg.resolve(path), tag=name)


def _pair_with_gt(gt: SimMatrix, emb: EmbeddingSet):
    """Restrict GT and the model space to their shared labels, GT order."""
    shared = [lab for lab in gt.labels if lab in emb.vocab.index]
    if not shared:
        raise DataError(f"model {emb.tag!r} shares no labels with the ground truth")
    gt_sub = gt.restrict(shared) if len(shared) != len(gt) else gt
    emb_sub = emb.align_to(gt_sub.vocab)
    return gt_sub, similarity_matrix(emb_sub), emb_sub


def _write_json(path, payload: dict) -> None:
    def body(fh):
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")

    _atomic_write(path, body)


def _json_meta(cfg: ExperimentConfig) -> dict:
    return {"config": cfg.hash(), "seeds": cfg.seeds(), "version": __version__}


def _euclidean_dist(vocab, coords) -> DistMatrix:
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return DistMatrix(vocab, d)


def _ratio_on_support(numer: ApkCurve, denom: ApkCurve):
    """Relative change restricted to ks where the denominator is positive.

    A zero denominator means the baseline condition found no shared
    neighbors at that k; the ratio is undefined there, so those points
    are dropped rather than reported.
    """
    keep = [i for i, v in enumerate(denom.values) if v > 0.0]
    if not keep:
        raise DataError(
            f"curve {denom.label_v or denom.label_u!r} is zero everywhere; "
            "no relative change is defined"
        )
    sub = lambda c: ApkCurve(
        [c.ks[i] for i in keep], [c.values[i] for i in keep],
        c.label_u, c.label_v, c.tie_seed,
    )
    return relative_change(sub(numer), sub(denom))


# ---------------------------------------------------------------------------
# experiment recipes

def run_gt_build(cfg: ExperimentConfig, out_path: str) -> SimMatrix:
    gt, _, _ = _load_gt(cfg)
    gt.save_csv(out_path, meta=cfg.meta())
    return gt


def run_main_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Agreement curve of every model space against the ground truth."""
    if not cfg.models:
        raise ConfigError("no model embedding files configured")
    gt, sortings, _ = _load_gt(cfg)
    os.makedirs(out_dir, exist_ok=True)
    meta = cfg.meta()
    written = []
    curves = []
    bands = {}
    for name, path in cfg.models.items():
        emb = _load_model(cfg, name, path)
        gt_sub, model_sim, _ = _pair_with_gt(gt, emb)
        k_max = min(cfg.k_max, len(gt_sub) - 1)
        curve = ap_curve(gt_sub, model_sim, k_max, cfg.tie_seed)
        n = len(gt_sub)
        if (n, k_max) not in bands:
            bands[(n, k_max)] = random_baseline(n, k_max, cfg.trials, cfg.baseline_seed)
        out = os.path.join(out_dir, f"eval_{name}.csv")
        save_curve_csv(out, curve, bands[(n, k_max)], meta=meta)
        written.append(out)
        curves.append(curve)
    segments = []
    if len(sortings) >= 2:
        p1 = pile_similarity_matrix(sortings[0], gt.vocab)
        p2 = pile_similarity_matrix(sortings[1], gt.vocab)
        k_max = min(cfg.k_max, len(gt) - 1)
        agreement = ap_curve(p1, p2, k_max, cfg.tie_seed)
        window = agreement.window(cfg.trust_lo, min(cfg.trust_hi, k_max))
        out = os.path.join(out_dir, "pile_agreement.csv")
        save_curve_csv(out, window, meta=meta)
        written.append(out)
        segments.append(window)
    if curves:
        shared_ks = curves[0].ks
        figure_curves = [c for c in curves if list(c.ks) == list(shared_ks)]
        band = bands.get((len(gt), len(shared_ks)))
        svg = os.path.join(out_dir, "eval_models.svg")
        emit_curve_svg(
            figure_curves,
            band,
            svg,
            meta=meta,
            segments=segments,
            shade_window=(cfg.trust_lo, cfg.trust_hi),
        )
        written += [svg, os.path.splitext(svg)[0] + ".csv"]
    return written


def run_hubness_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Table of hub statistics before/after reduction, plus change curves."""
    if not cfg.models:
        raise ConfigError("no model embedding files configured")
    gt, _, _ = _load_gt(cfg)
    os.makedirs(out_dir, exist_ok=True)
    meta = cfg.meta()
    rows = []
    ratio_curves = []
    for name, path in cfg.models.items():
        emb = _load_model(cfg, name, path)
        gt_sub, model_sim, emb_sub = _pair_with_gt(gt, emb)
        rows += [r.as_dict() for r in hubness_report(
            emb_sub, cfg.hubness_ks, cfg.tie_seed, cfg.hubness_method
        )]
        k_max = min(cfg.k_max, len(gt_sub) - 1)
        plain = ap_curve(gt_sub, model_sim, k_max, cfg.tie_seed)
        reduced = reduce_hubness(model_sim, cfg.hubness_method, k=max(cfg.hubness_ks))
        after = ap_curve(gt_sub, reduced, k_max, cfg.tie_seed)
        ratio = _ratio_on_support(after, plain)
        ratio.label_v = name
        ratio_curves.append(ratio)
    rb = random_baseline_embedding(gt.vocab, cfg.rb_dim, cfg.rb_seed)
    rows += [r.as_dict() for r in hubness_report(
        rb, cfg.hubness_ks, cfg.tie_seed, cfg.hubness_method
    )]
    report_path = os.path.join(out_dir, "hubness.json")
    _write_json(report_path, {"meta": _json_meta(cfg), "rows": rows})
    svg = os.path.join(out_dir, "hubness_change.svg")
    emit_curve_svg(ratio_curves, None, svg, meta=meta, ylabel="aP@k ratio (reduced/raw)")
    return [report_path, svg, os.path.splitext(svg)[0] + ".csv"]


def run_context_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Relative aP@k change from swapping plain terms for prompted ones."""
    shared = [m for m in cfg.models if m in cfg.context_models]
    if not shared:
        raise ConfigError("no models with both plain and context embedding files")
    gt, _, _ = _load_gt(cfg)
    os.makedirs(out_dir, exist_ok=True)
    meta = cfg.meta()
    ratio_curves = []
    for name in shared:
        plain_emb = _load_model(cfg, name, cfg.models[name])
        ctx_emb = _load_model(cfg, name, cfg.context_models[name])
        gt_sub, plain_sim, _ = _pair_with_gt(gt, plain_emb)
        gt_ctx, ctx_sim, _ = _pair_with_gt(gt, ctx_emb)
        if gt_sub.labels != gt_ctx.labels:
            raise DataError(f"model {name!r}: plain and context files cover different labels")
        k_max = min(cfg.k_max, len(gt_sub) - 1)
        plain_curve = ap_curve(gt_sub, plain_sim, k_max, cfg.tie_seed)
        ctx_curve = ap_curve(gt_sub, ctx_sim, k_max, cfg.tie_seed)
        ratio = _ratio_on_support(ctx_curve, plain_curve)
        ratio.label_v = name
        ratio_curves.append(ratio)
    svg = os.path.join(out_dir, "context_change.svg")
    emit_curve_svg(ratio_curves, None, svg, meta=meta, ylabel="aP@k ratio (context/plain)")
    return [svg, os.path.splitext(svg)[0] + ".csv"]


def run_cross_modal_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Audio vs text views of the performances, per configured model."""
    if not cfg.audio:
        raise ConfigError("no audio embedding file configured")
    model = cfg.cross_modal_model or next(iter(cfg.models), None)
    if model is None or model not in cfg.models:
        raise ConfigError(f"cross-modal model {model!r} not among configured models")
    gt, _, table = _load_gt(cfg)
    os.makedirs(out_dir, exist_ok=True)
    meta = cfg.meta()
    audio = load_embeddings(cfg.resolve(cfg.audio), tag="audio")
    curves = []
    for name, path in ((model, cfg.models[model]),) + (
        ((model, cfg.context_models[model]),) if model in cfg.context_models else ()
    ):
        emb = _load_model(cfg, name, path)
        text_perf = performance_text_embedding(emb, table)
        k_max = min(cfg.k_max, len(text_perf) - 1)
        curve = cross_modal_curve(audio, text_perf, k_max, cfg.tie_seed)
        curves.append(curve)
    curves[0].label_v = f"{model}-text"
    if len(curves) > 1:
        curves[1].label_v = f"{model}-text-context"
    n = len(audio)
    band = random_baseline(n, curves[0].ks[-1], cfg.trials, cfg.baseline_seed)
    out = os.path.join(out_dir, "cross_modal.csv")
    save_curve_csv(out, curves[0], band, meta=meta)
    svg = os.path.join(out_dir, "cross_modal.svg")
    emit_curve_svg(curves, band, svg, meta=meta)
    return [out, svg, os.path.splitext(svg)[0] + ".csv"]


def run_clustering_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Cluster-overlap table: models, ground truth, and a random baseline."""
    if not cfg.models:
        raise ConfigError("no model embedding files configured")
    gt, sortings, _ = _load_gt(cfg)
    os.makedirs(out_dir, exist_ok=True)
    spaces = []
    for name, path in cfg.models.items():
        emb = _load_model(cfg, name, path)
        _, _, emb_sub = _pair_with_gt(gt, emb)
        spaces.append(emb_sub)
    spaces.append(gt)
    spaces.append(random_baseline_embedding(gt.vocab, cfg.rb_dim, cfg.rb_seed))
    table = clustering_report(
        spaces, sortings, cfg.cluster_k, cfg.cluster_seed, cfg.cluster_restarts
    )
    payload = {"meta": _json_meta(cfg), "spaces": table}
    if len(sortings) >= 2:
        p1 = [set(p.terms) for p in sortings[0].piles]
        p2 = [set(p.terms) for p in sortings[1].piles]
        payload["pile_groups"] = {
            f"{sortings[0].group_id}_in_{sortings[1].group_id}": av_max_overlap(p1, p2),
            f"{sortings[1].group_id}_in_{sortings[0].group_id}": av_max_overlap(p2, p1),
        }
    report_path = os.path.join(out_dir, "cluster.json")
    _write_json(report_path, payload)
    return [report_path]


def run_mds_experiment(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Layout of the ground-truth space plus a dimensionality-fidelity sweep."""
    gt, sortings, _ = _load_gt(cfg)
    os.makedirs(out_dir, exist_ok=True)
    meta = cfg.meta()
    dist = gt.to_dissimilarity()
    written = []
    sol = smacof(
        dist, cfg.mds_dims, init="classical", seed=cfg.mds_seed,
        max_iter=cfg.mds_max_iter, tol=cfg.mds_tol,
    )
    if cfg.mds_dims == 2:
        colorings = [
            Clustering.from_pile_sorting(s, gt.vocab) for s in sortings[:2]
        ]
        svg = os.path.join(out_dir, "mds_scatter.svg")
        csv_path = os.path.join(out_dir, "mds_coords.csv")
        emit_scatter_svg(sol, colorings, hulls=True, path=svg, csv_path=csv_path, meta=meta)
        written += [svg, csv_path]
    fidelity_curves = []
    k_max = min(cfg.k_max, len(gt) - 1)
    for m in cfg.mds_eval_dims:
        sol_m = smacof(
            dist, m, init="classical", seed=cfg.mds_seed,
            max_iter=cfg.mds_max_iter, tol=cfg.mds_tol,
        )
        layout_dist = _euclidean_dist(gt.vocab, sol_m.coordinates)
        curve = ap_curve(dist, layout_dist, k_max, cfg.tie_seed)
        curve = ApkCurve(curve.ks, curve.values, label_u="gt", label_v=f"m{m}",
                         tie_seed=cfg.tie_seed)
        fidelity_curves.append(curve)
    svg = os.path.join(out_dir, "mds_fidelity.svg")
    emit_curve_svg(fidelity_curves, None, svg, meta=meta,
                   ylabel="aP@k vs original", shade_window=(cfg.trust_lo, cfg.trust_hi))
    written += [svg, os.path.splitext(svg)[0] + ".csv"]
    return written


def run_report_all(cfg: ExperimentConfig, out_dir: str) -> list[str]:
    """Run every recipe the configuration has inputs for."""
    cfg.validate()
    os.makedirs(out_dir, exist_ok=True)
    written = []
    skipped = {}
    gt_path = os.path.join(out_dir, "gt.csv")
    run_gt_build(cfg, gt_path)
    written.append(gt_path)
    written += run_main_experiment(cfg, out_dir)
    written += run_hubness_experiment(cfg, out_dir)
    written += run_clustering_experiment(cfg, out_dir)
    written += run_mds_experiment(cfg, out_dir)
    if any(m in cfg.context_models for m in cfg.models):
        written += run_context_experiment(cfg, out_dir)
    else:
        skipped["context"] = "no context embedding files configured"
    if cfg.audio:
        written += run_cross_modal_experiment(cfg, out_dir)
    else:
        skipped["cross_modal"] = "no audio embedding file configured"
    manifest = {
        "meta": _json_meta(cfg),
        "files": sorted(os.path.relpath(p, out_dir) for p in written),
        "skipped": skipped,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    _write_json(manifest_path, manifest)
    return written + [manifest_path]


# ---------------------------------------------------------------------------
# command surface

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="audit")
def cli():
    """Audit embedding spaces against expert similarity annotations."""


@cli.group()
def gt():
    """Ground-truth matrix commands."""


@gt.command("build")
@click.option("--piles", "pile_paths", multiple=True, required=True,
              help="Pile sorting JSON; repeat per group.")
@click.option("--perf-table", required=True, help="performance_id,term CSV.")
@click.option("--weights", default=None,
              help="Comma-separated source weights, piles first, co-occurrence last.")
@click.option("--out", required=True, help="Output matrix CSV.")
def gt_build(pile_paths, perf_table, weights, out):
    """Combine pile sortings and co-occurrence into one similarity matrix."""
    for path in list(pile_paths) + [perf_table]:
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")
    sortings = [load_piles(p) for p in pile_paths]
    table = load_perf_table(perf_table)
    w = None
    if weights is not None:
        try:
            w = [float(v) for v in weights.split(",")]
        except ValueError:
            raise ConfigError(f"bad weights {weights!r}") from None
        if len(w) != len(sortings) + 1:
            raise ConfigError(f"need {len(sortings) + 1} weights, got {len(w)}")
    gt_matrix = build_ground_truth(sortings, table, weights=w)
    cfg = ExperimentConfig(piles=list(pile_paths), perf_table=perf_table)
    gt_matrix.save_csv(out, meta=cfg.meta())
    click.echo(f"wrote {out} ({len(gt_matrix)} labels)")


@cli.command("eval")
@click.option("--gt", "gt_path", required=True, help="Ground-truth matrix CSV.")
@click.option("--emb", required=True, help="Model embedding JSONL.")
@click.option("--kmax", default=_DEFAULTS["k_max"], show_default=True)
@click.option("--tie-seed", default=_DEFAULTS["tie_seed"], show_default=True)
@click.option("--trials", default=_DEFAULTS["trials"], show_default=True)
@click.option("--baseline-seed", default=_DEFAULTS["baseline_seed"], show_default=True)
@click.option("--out", required=True, help="Curve CSV output.")
@click.option("--svg", default=None, help="Optional curve figure.")
def eval_cmd(gt_path, emb, kmax, tie_seed, trials, baseline_seed, out, svg):
    """Agreement curve of one embedding space against the ground truth."""
    for path in (gt_path, emb):
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")
    gt_matrix = SimMatrix.load_csv(gt_path, kind="ground_truth")
    emb_set = load_embeddings(emb)
    gt_sub, model_sim, _ = _pair_with_gt(gt_matrix, emb_set)
    k_max = min(kmax, len(gt_sub) - 1)
    curve = ap_curve(gt_sub, model_sim, k_max, tie_seed)
    band = random_baseline(len(gt_sub), k_max, trials, baseline_seed)
    cfg = ExperimentConfig(models={emb_set.tag: emb}, k_max=kmax,
                           tie_seed=tie_seed, trials=trials, baseline_seed=baseline_seed)
    if svg:
        emit_curve_svg([curve], band, svg, meta=cfg.meta())
    # written after the figure so --out keeps the canonical single-curve
    # columns even when it collides with the figure's companion CSV
    save_curve_csv(out, curve, band, meta=cfg.meta())
    click.echo(f"wrote {out} (aP@{curve.ks[-1]} = {curve.values[-1]:.4f})")


@cli.command("hubness")
@click.option("--emb", required=True, help="Model embedding JSONL.")
@click.option("--ks", default="4,8,16", show_default=True)
@click.option("--method", default="mp-gauss", show_default=True,
              type=click.Choice(["mp-gauss", "nicdm"]))
@click.option("--tie-seed", default=_DEFAULTS["tie_seed"], show_default=True)
@click.option("--out", required=True, help="Report JSON output.")
def hubness_cmd(emb, ks, method, tie_seed, out):
    """Hub statistics before and after hubness reduction."""
    if not os.path.exists(emb):
        raise ConfigError(f"input file not found: {emb}")
    emb_set = load_embeddings(emb)
    rows = hubness_report(emb_set, _parse_ints(ks), tie_seed, method)
    cfg = ExperimentConfig(models={emb_set.tag: emb}, hubness_ks=_parse_ints(ks),
                           hubness_method=method, tie_seed=tie_seed)
    _write_json(out, {"meta": _json_meta(cfg), "rows": [r.as_dict() for r in rows]})
    click.echo(f"wrote {out} ({len(rows)} rows)")


@cli.command("cluster")
@click.option("--emb", required=True, help="Model embedding JSONL.")
@click.option("--k", default=_DEFAULTS["cluster_k"], show_default=True)
@click.option("--seed", default=_DEFAULTS["cluster_seed"], show_default=True)
@click.option("--restarts", default=_DEFAULTS["cluster_restarts"], show_default=True)
@click.option("--piles", "pile_paths", multiple=True, required=True)
@click.option("--out", required=True, help="Overlap JSON output.")
def cluster_cmd(emb, k, seed, restarts, pile_paths, out):
    """k-means the space and score overlap against each pile group."""
    for path in list(pile_paths) + [emb]:
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")
    emb_set = load_embeddings(emb)
    sortings = [load_piles(p) for p in pile_paths]
    table = clustering_report([emb_set], sortings, k, seed, restarts)
    cfg = ExperimentConfig(models={emb_set.tag: emb}, piles=list(pile_paths),
                           cluster_k=k, cluster_seed=seed, cluster_restarts=restarts)
    _write_json(out, {"meta": _json_meta(cfg), "spaces": table})
    click.echo(f"wrote {out}")


@cli.command("mds")
@click.option("--matrix", "matrix_path", required=True,
              help="Similarity matrix CSV (e.g. from gt build).")
@click.option("--dims", default=2, show_default=True)
@click.option("--piles", "pile_paths", multiple=True,
              help="Optional pile groups for coloring (max 2).")
@click.option("--method", default="smacof", show_default=True,
              type=click.Choice(["smacof", "classical"]))
@click.option("--seed", default=_DEFAULTS["mds_seed"], show_default=True)
@click.option("--hulls/--no-hulls", default=True, show_default=True)
@click.option("--svg", required=True, help="Scatter SVG output.")
@click.option("--csv", "csv_path", required=True, help="Coordinates CSV output.")
def mds_cmd(matrix_path, dims, pile_paths, method, seed, hulls, svg, csv_path):
    """Lay out a similarity matrix in few dimensions and render it."""
    for path in list(pile_paths) + [matrix_path]:
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")
    sim = SimMatrix.load_csv(matrix_path, kind="ground_truth")
    dist = sim.to_dissimilarity()
    if method == "classical":
        sol = classical_mds(dist, dims)
    else:
        sol = smacof(dist, dims, init="classical", seed=seed)
    cfg = ExperimentConfig(mds_dims=dims, mds_seed=seed)
    if dims == 2:
        colorings = [
            Clustering.from_pile_sorting(load_piles(p), sim.vocab)
            for p in pile_paths[:2]
        ]
        emit_scatter_svg(sol, colorings, hulls=hulls, path=svg,
                         csv_path=csv_path, meta=cfg.meta())
    else:
        from .mdsviz import save_coords_csv

        save_coords_csv(csv_path, sol.labels, sol.coordinates, meta=cfg.meta())
    click.echo(f"wrote {csv_path} (stress {sol.stress:.6g}, {sol.iterations} iterations)")


@cli.command("cross-modal")
@click.option("--audio", required=True, help="Audio embedding JSONL (per performance).")
@click.option("--emb", required=True, help="Term embedding JSONL for the text side.")
@click.option("--perf-table", required=True, help="performance_id,term CSV.")
@click.option("--kmax", default=None, type=int,
              help="Defaults to the largest usable k.")
@click.option("--tie-seed", default=_DEFAULTS["tie_seed"], show_default=True)
@click.option("--trials", default=_DEFAULTS["trials"], show_default=True)
@click.option("--baseline-seed", default=_DEFAULTS["baseline_seed"], show_default=True)
@click.option("--out", required=True, help="Curve CSV output.")
@click.option("--svg", default=None, help="Optional curve figure.")
def cross_modal_cmd(audio, emb, perf_table, kmax, tie_seed, trials,
                    baseline_seed, out, svg):
    """Compare audio embeddings with text-derived performance embeddings."""
    for path in (audio, emb, perf_table):
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")
    audio_set = load_embeddings(audio, tag="audio")
    emb_set = load_embeddings(emb)
    table = load_perf_table(perf_table)
    text_perf = performance_text_embedding(emb_set, table)
    k_max = kmax if kmax is not None else len(text_perf) - 1
    k_max = min(k_max, len(text_perf) - 1)
    curve = cross_modal_curve(audio_set, text_perf, k_max, tie_seed)
    band = random_baseline(len(text_perf), k_max, trials, baseline_seed)
    cfg = ExperimentConfig(models={emb_set.tag: emb}, audio=audio,
                           perf_table=perf_table, tie_seed=tie_seed,
                           trials=trials, baseline_seed=baseline_seed)
    if svg:
        emit_curve_svg([curve], band, svg, meta=cfg.meta())
    save_curve_csv(out, curve, band, meta=cfg.meta())
    click.echo(f"wrote {out}")


@cli.command("context")
@click.option("--gt", "gt_path", required=True, help="Ground-truth matrix CSV.")
@click.option("--emb", required=True, help="Plain term embeddings.")
@click.option("--context-emb", required=True, help="Context-prompted embeddings.")
@click.option("--kmax", default=_DEFAULTS["k_max"], show_default=True)
@click.option("--tie-seed", default=_DEFAULTS["tie_seed"], show_default=True)
@click.option("--out", required=True, help="Ratio curve CSV output.")
@click.option("--svg", default=None, help="Optional ratio figure.")
def context_cmd(gt_path, emb, context_emb, kmax, tie_seed, out, svg):
    """Relative aP@k change from contextualizing the terms."""
    for path in (gt_path, emb, context_emb):
        if not os.path.exists(path):
            raise ConfigError(f"input file not found: {path}")
    gt_matrix = SimMatrix.load_csv(gt_path, kind="ground_truth")
    plain = load_embeddings(emb)
    ctx = load_embeddings(context_emb)
    gt_sub, plain_sim, _ = _pair_with_gt(gt_matrix, plain)
    gt_ctx, ctx_sim, _ = _pair_with_gt(gt_matrix, ctx)
    if gt_sub.labels != gt_ctx.labels:
        raise DataError("plain and context files cover different labels")
    k_max = min(kmax, len(gt_sub) - 1)
    ratio = _ratio_on_support(
        ap_curve(gt_sub, ctx_sim, k_max, tie_seed),
        ap_curve(gt_sub, plain_sim, k_max, tie_seed),
    )
    cfg = ExperimentConfig(models={plain.tag: emb},
                           context_models={plain.tag: context_emb},
                           k_max=kmax, tie_seed=tie_seed)
    if svg:
        emit_curve_svg([ratio], None, svg, meta=cfg.meta(),
                       ylabel="aP@k ratio (context/plain)")
    save_curve_csv(out, ratio, meta=cfg.meta())
    click.echo(f"wrote {out}")


@cli.group()
def report():
    """Bundle experiment reports."""


@report.command("all")
@click.option("--config", "config_path", required=True, help="Experiment INI file.")
@click.option("--data-dir", default=None, envvar="AUDIT_DATA_DIR",
              help="Base directory for the config's relative paths "
                   "[env: AUDIT_DATA_DIR].")
@click.option("--out-dir", default="audit-out", show_default=True)
@click.option("--tie-seed", default=None, type=int, help="Override the config value.")
@click.option("--kmax", default=None, type=int, help="Override the config value.")
@click.option("--trials", default=None, type=int, help="Override the config value.")
def report_all(config_path, data_dir, out_dir, tie_seed, kmax, trials):
    """Run every configured experiment and write one output bundle."""
    if not os.path.exists(config_path):
        raise ConfigError(f"config file not found: {config_path}")
    cfg = load_config(config_path, data_dir=data_dir)
    if tie_seed is not None:
        cfg.tie_seed = tie_seed
    if kmax is not None:
        cfg.k_max = kmax
    if trials is not None:
        cfg.trials = trials
    files = run_report_all(cfg, out_dir)
    click.echo(f"wrote {len(files)} files to {out_dir} (config {cfg.hash()})")


def main(argv=None):
    """Console entry point translating library errors into exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except AuditError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(2)
    except click.exceptions.Abort:
        sys.exit(130)
    return 0


if __name__ == "__main__":
    main()
