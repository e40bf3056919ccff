"""End-to-end orchestration: the full clustering pipeline, ablation grid
runs, benchmark trials over sampled partitions, and report emission."""

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from subclust import baselines
from subclust.autoencoder import (
    TrainConfig,
    default_layer_dims,
    init_params,
    pretrain,
)
from subclust.data import (
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    load_idx,
    normalize,
    sample_partition,
)
from subclust.metrics import score
from subclust.selfexpr import (
    OracleWeights,
    finetune_stage1,
    finetune_stage2,
    ipd_postprocess,
    oracle_train,
    subspace_preserving_rate,
)
from subclust.spectral import affinity_from_c, spectral_cluster

REPORT_SCHEMA_VERSION = 1

# A-priori subspace dimensions per dataset family.
FAMILY_SUBSPACE_DIM = {"faces": 9, "digits": 12, "objects": 9}


class PipelineError(Exception):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunConfig:
    """Everything needed to reproduce one pipeline run."""

    csv_path: Optional[str] = None
    csv_has_labels: bool = True
    idx_images: Optional[str] = None
    idx_labels: Optional[str] = None
    synth: Optional[SyntheticSpec] = None
    normalization: str = "none"
    dataset_family: Optional[str] = None

    pretrain_loss: str = "re"
    dp_variant: str = "stress"
    se_joint: bool = True
    se_last: bool = False
    q_loss: bool = True
    ipd_dim: Optional[int] = None
    num_clusters: Optional[int] = None
    train: TrainConfig = field(default_factory=TrainConfig)
    oracle: Optional[OracleWeights] = None
    seed: int = 0

    def __post_init__(self):
        if self.se_joint and self.se_last:
            raise ValueError("se_joint and se_last are mutually exclusive")
        if self.pretrain_loss not in ("re", "dp"):
            raise ValueError(f"unknown pretrain loss {self.pretrain_loss!r}")

    def as_dict(self):
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("synth") is not None:
            d["synth"] = SyntheticSpec(**d["synth"])
        if d.get("train") is not None:
            d["train"] = TrainConfig(**d["train"])
        if d.get("oracle") is not None:
            d["oracle"] = OracleWeights(**d["oracle"])
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


@dataclass
class RunReport:
    """Serializable record of one pipeline run."""

    schema_version: int
    config: dict
    metrics: Optional[dict]
    epsilon_history: dict
    epochs: dict
    wall_time: float
    subspace_preserving: Optional[float] = None
    error: Optional[str] = None
    failed_stage: Optional[str] = None
    algorithm: str = "pipeline"

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def resolve_ipd_dim(cfg, n_points):
    """Explicit ipd_dim wins; otherwise the dataset-family prior, if any."""
    if cfg.ipd_dim is not None:
        d = cfg.ipd_dim
    elif cfg.dataset_family is not None:
        d = FAMILY_SUBSPACE_DIM[cfg.dataset_family]
    else:
        return None
    if not 1 <= d < n_points:
        raise ValueError(f"ipd_dim {d} out of range for N={n_points}")
    return d


def load_dataset(cfg):
    if cfg.synth is not None:
        ds = generate_synthetic(cfg.synth)
    elif cfg.csv_path is not None:
        ds = load_csv(cfg.csv_path, has_labels=cfg.csv_has_labels)
    elif cfg.idx_images is not None:
        ds = load_idx(cfg.idx_images, cfg.idx_labels)
    else:
        raise ValueError("config does not specify a dataset")
    if cfg.num_clusters:
        ds.num_clusters = cfg.num_clusters
    return normalize(ds, cfg.normalization)


def _stage(name):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, exc) from exc
            return False

    return _Ctx()


def run_pipeline(cfg, ds=None):
    """Execute the full pipeline described by cfg and return a RunReport.

    pretrain -> self-expression fine-tune -> clustering-quality fine-tune
    -> optional leading-coefficient post-processing -> affinity ->
    shifted-Laplacian spectral clustering -> metrics.
    """
    start = time.time()
    with _stage("load"):
        if ds is None:
            ds = load_dataset(cfg)
        k = cfg.num_clusters or ds.num_clusters
        if not k or k < 2:
            raise ValueError("num_clusters must be at least 2")
        x = ds.x
        n = x.shape[1]
        ipd_dim = resolve_ipd_dim(cfg, n)

    logs = {}
    with _stage("pretrain"):
        dims = default_layer_dims(x.shape[0], k)
        params = init_params(dims, seed=cfg.seed)
        params = pretrain(params, x, cfg.pretrain_loss, cfg.train)
        logs["pretrain"] = {"epochs": cfg.train.pretrain_epochs}

    c = np.zeros((n, n))
    if cfg.oracle is not None:
        with _stage("oracle"):
            log = {}
            c = oracle_train(
                params, c, x, cfg.oracle, cfg.pretrain_loss, cfg.train,
                num_clusters=k, log=log,
            )
            logs["oracle"] = log
    else:
        if cfg.se_joint or cfg.se_last:
            with _stage("finetune_se"):
                log = {}
                variant = "joint" if cfg.se_joint else "last"
                params, c = finetune_stage1(params, c, x, cfg.train, variant=variant, log=log)
                logs["finetune_se"] = log
        if cfg.q_loss:
            with _stage("finetune_q"):
                log = {}
                c = finetune_stage2(params, c, x, k, cfg.train, log=log)
                logs["finetune_q"] = log

    with _stage("postprocess"):
        if ipd_dim is not None:
            c = ipd_postprocess(c, ipd_dim)

    with _stage("spectral"):
        w = affinity_from_c(c)
        indicator = spectral_cluster(w, k, seed=cfg.seed)

    with _stage("metrics"):
        metrics = None
        spr = None
        if ds.labels is not None:
            metrics = score(ds.labels, indicator.labels).as_dict()
            spr = subspace_preserving_rate(c, ds.labels) if np.any(c) else 0.0

    return RunReport(
        schema_version=REPORT_SCHEMA_VERSION,
        config=cfg.as_dict(),
        metrics=metrics,
        epsilon_history={k_: v.get("epsilon_history", []) for k_, v in logs.items()},
        epochs={k_: v.get("epochs", 0) for k_, v in logs.items()},
        wall_time=time.time() - start,
        subspace_preserving=spr,
    )


def run_ablation(base, grid):
    """One pipeline run per toggle combination; failures isolate per row."""
    from dataclasses import replace

    reports = []
    for overrides in grid:
        cfg = replace(base, **overrides)
        try:
            report = run_pipeline(cfg)
        except PipelineError as exc:
            report = RunReport(
                schema_version=REPORT_SCHEMA_VERSION,
                config=cfg.as_dict(),
                metrics=None,
                epsilon_history={},
                epochs={},
                wall_time=0.0,
                error=str(exc.cause),
                failed_stage=exc.stage,
            )
        report.algorithm = _ablation_row_name(cfg)
        reports.append(report)
    return reports


def _ablation_row_name(cfg):
    parts = [cfg.pretrain_loss.upper()]
    if cfg.se_last:
        parts.append("SE-last")
    if cfg.se_joint:
        parts.append("SE")
    if cfg.q_loss:
        parts.append("Q")
    if cfg.ipd_dim is not None or cfg.dataset_family is not None:
        parts.append("IPD")
    return "+".join(parts)


def run_benchmark(ds, algorithms, trials, per_cluster, seed=0, admm_lambda=20.0, base_cfg=None):
    """Mean +/- std of ACC/NMI/F1 per algorithm over sampled partitions."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rows = {name: {"acc": [], "nmi": [], "f1": []} for name in algorithms}
    for t in range(trials):
        part = sample_partition(ds, per_cluster, seed=seed + t)
        for name in algorithms:
            if name in ("ssc", "lrr"):
                cfg = baselines.AdmmConfig(lam=admm_lambda)
                _, report = baselines.run_baseline(name, part, cfg, seed=seed + t)
            elif name == "rtsc":
                _, report = baselines.run_baseline(name, part, seed=seed + t)
            elif name == "pipeline":
                cfg = base_cfg or RunConfig()
                cfg = _replace_seed(cfg, seed + t)
                report = run_pipeline(cfg, ds=part)
                report = _metrics_report_from_run(report)
            else:
                raise ValueError(f"unknown algorithm {name!r}")
            rows[name]["acc"].append(report.acc)
            rows[name]["nmi"].append(report.nmi)
            rows[name]["f1"].append(report.f1)
    out = {"schema_version": REPORT_SCHEMA_VERSION, "trials": trials, "algorithms": {}}
    for name, vals in rows.items():
        out["algorithms"][name] = {
            metric: {
                "mean": float(np.mean(vals[metric])),
                "std": float(np.std(vals[metric])),
            }
            for metric in ("acc", "nmi", "f1")
        }
    return out


def _replace_seed(cfg, seed):
    from dataclasses import replace

    train = TrainConfig(**{**asdict(cfg.train), "seed": seed})
    return replace(cfg, seed=seed, train=train)


def _metrics_report_from_run(report):
    from subclust.metrics import MetricsReport

    m = report.metrics or {"acc": 0.0, "nmi": 0.0, "f1": 0.0}
    return MetricsReport(**m)


def _metric_rows(reports):
    rows = []
    for r in reports:
        m = r.metrics or {}
        rows.append(
            {
                "algorithm": r.algorithm,
                "acc": m.get("acc"),
                "nmi": m.get("nmi"),
                "f1": m.get("f1"),
                "error": r.error,
            }
        )
    return rows


def emit_report(report, fmt="json", path=None):
    """Serialize a RunReport (or sequence of them) as json, csv or markdown."""
    reports = report if isinstance(report, (list, tuple)) else [report]
    if fmt == "json":
        payload = [r.as_dict() for r in reports]
        text = json.dumps(payload[0] if len(payload) == 1 else payload, indent=2)
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["algorithm", "acc", "nmi", "f1", "error"])
        writer.writeheader()
        for row in _metric_rows(reports):
            writer.writerow(row)
        text = buf.getvalue()
    elif fmt == "markdown":
        lines = ["| Algorithm | ACC | NMI | F1 |", "| --- | --- | --- | --- |"]
        for row in _metric_rows(reports):
            if row["error"] is not None:
                lines.append(f"| {row['algorithm']} | failed: {row['error']} | | |")
            else:
                cells = [
                    f"{100.0 * row[k]:.2f}" if row[k] is not None else "-"
                    for k in ("acc", "nmi", "f1")
                ]
                lines.append(f"| {row['algorithm']} | {cells[0]} | {cells[1]} | {cells[2]} |")
        text = "\n".join(lines) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
