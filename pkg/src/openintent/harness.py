"""Experiment orchestration: seeded runs, ablations, and result tables."""

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .datasets import (
    DEFAULT_OPEN_LABEL,
    infer_corpus_format,
    load_corpus,
    make_open_world_split,
    select_known_classes,
)
from .detector import METHODS, OpenIntentDetector
from .encoder import load_embeddings
from .inference import classify_batch, scale_radii
from .metrics import aggregate_runs, evaluate
from .model_io import save_model
from .synthetic import SyntheticConfig, make_synthetic_data, subsample_labeled

SYNTHETIC_DATASET = "synthetic"


@dataclass
class ExperimentConfig:
    """Everything one experiment run depends on; hashable for the manifest."""

    dataset: str = SYNTHETIC_DATASET
    data_dir: str = "data"
    method: str = "da_adb"
    known_ratio: float = 0.25
    labeled_ratio: float = 1.0
    seeds: tuple = (0,)
    encoder: str = "bow"  # bow | emb; ignored for the synthetic dataset
    hash_dim: int = 2048
    hash_seed: int = 0
    feature_dim: int = 64
    alpha: float = 4.0
    rep_lr: float = 0.05
    batch_size: int = 128
    max_epochs: int = 100
    patience: int = 10
    boundary_lr: float = 0.05
    boundary_max_epochs: int = 200
    boundary_tol: float = 1e-4
    msp_threshold: float = 0.5
    open_label: str = DEFAULT_OPEN_LABEL
    output_dir: str = None
    dump_radii: bool = False
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.encoder not in ("bow", "emb"):
            raise ValueError(f"encoder must be 'bow' or 'emb', got {self.encoder!r}")
        if not self.seeds:
            raise ValueError("seeds must be non-empty")
        self.seeds = tuple(int(s) for s in self.seeds)
        if isinstance(self.synthetic, dict):
            self.synthetic = SyntheticConfig(**self.synthetic)

    def to_dict(self):
        out = dataclasses.asdict(self)
        out["seeds"] = list(self.seeds)
        return out

    def hash(self):
        """Identity hash over everything except output locations."""
        payload = self.to_dict()
        payload.pop("output_dir", None)
        payload.pop("dump_radii", None)
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class SeedRun:
    seed: int
    report: object
    detector: OpenIntentDetector
    x_test: np.ndarray
    y_test: np.ndarray


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    runs: list
    aggregate: dict
    errors: dict

    @property
    def reports(self):
        return [run.report for run in self.runs]


def _find_partition_file(root, names):
    for name in names:
        for suffix in (".tsv", ".jsonl"):
            candidate = root / f"{name}{suffix}"
            if candidate.exists():
                return candidate
    raise FileNotFoundError(
        f"no {'/'.join(names)} file with .tsv or .jsonl suffix under {root}"
    )


def load_dataset_partitions(data_dir, dataset):
    """Load train/valid/test corpus files for a named dataset directory."""
    root = Path(data_dir) / dataset
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory {root} does not exist")
    out = []
    for names in (("train",), ("valid", "dev"), ("test",)):
        path = _find_partition_file(root, names)
        out.append(load_corpus(path, format=infer_corpus_format(path)))
    return tuple(out)


def _load_split_embeddings(data_dir, dataset, partition_sizes):
    root = Path(data_dir) / dataset
    matrices = []
    for name, expected in zip(("train", "valid", "test"), partition_sizes):
        path = root / f"{name}.emb1"
        if not path.exists():
            raise FileNotFoundError(
                f"encoder='emb' needs {path} (EMB1 rows aligned to {name} corpus)"
            )
        x = load_embeddings(path)
        if x.shape[0] != expected:
            raise ValueError(
                f"{path} has {x.shape[0]} rows but the {name} corpus has {expected}"
            )
        matrices.append(x)
    return tuple(matrices)


@dataclass
class _SeedData:
    X_train: object
    y_train: object          # label values for the detector
    X_valid: object
    y_valid: object
    X_test: object
    y_test: np.ndarray       # class indices in [0, num_known]
    known_labels: tuple
    detector_encoder: str


def _prepare_seed_data(config, seed):
    if config.dataset == SYNTHETIC_DATASET:
        data = make_synthetic_data(config.synthetic, seed,
                                   open_label=config.open_label)
        data = subsample_labeled(data, config.labeled_ratio, seed)
        names = np.array(data.label_space.known_labels, dtype=object)
        return _SeedData(
            X_train=data.x_train, y_train=names[data.y_train],
            X_valid=data.x_valid, y_valid=names[data.y_valid],
            X_test=data.x_test, y_test=data.y_test,
            known_labels=data.label_space.known_labels,
            detector_encoder="passthrough",
        )

    train, valid, test = load_dataset_partitions(config.data_dir, config.dataset)
    train_labels = {u.label for u in train}
    space = select_known_classes(train_labels, config.known_ratio, seed,
                                 open_label=config.open_label)
    split = make_open_world_split(train, valid, test, space,
                                  config.labeled_ratio, seed,
                                  known_ratio=config.known_ratio)
    y_train = [u.label for u in split.train]
    y_valid = [u.label for u in split.valid]
    y_test = split.labels_as_indices("test")

    if config.encoder == "bow":
        return _SeedData(
            X_train=[u.text for u in split.train], y_train=y_train,
            X_valid=[u.text for u in split.valid], y_valid=y_valid,
            X_test=[u.text for u in split.test], y_test=y_test,
            known_labels=space.known_labels,
            detector_encoder="bow",
        )
    sizes = (len(train), len(valid), len(test))
    x_train, x_valid, x_test = _load_split_embeddings(
        config.data_dir, config.dataset, sizes
    )
    return _SeedData(
        X_train=x_train[list(split.train_indices)], y_train=y_train,
        X_valid=x_valid[list(split.valid_indices)], y_valid=y_valid,
        X_test=x_test[list(split.test_indices)], y_test=y_test,
        known_labels=space.known_labels,
        detector_encoder="passthrough",
    )


def _make_detector(config, seed, encoder):
    return OpenIntentDetector(
        method=config.method,
        encoder=encoder,
        feature_dim=config.feature_dim,
        hash_dim=config.hash_dim,
        hash_seed=config.hash_seed,
        alpha=config.alpha,
        rep_lr=config.rep_lr,
        batch_size=config.batch_size,
        max_epochs=config.max_epochs,
        patience=config.patience,
        boundary_lr=config.boundary_lr,
        boundary_max_epochs=config.boundary_max_epochs,
        boundary_tol=config.boundary_tol,
        msp_threshold=config.msp_threshold,
        open_label=config.open_label,
        seed=seed,
    )


def _run_seed(config, seed):
    data = _prepare_seed_data(config, seed)
    detector = _make_detector(config, seed, data.detector_encoder)
    detector.fit(data.X_train, data.y_train, data.X_valid, data.y_valid)
    fitted = tuple(detector.classes_.tolist())
    if fitted != tuple(data.known_labels):
        raise RuntimeError(
            f"label order mismatch: split {data.known_labels} vs fitted {fitted}"
        )
    y_pred = detector.predict_index(data.X_test)
    report = evaluate(data.y_test, y_pred, detector.num_known_)
    return SeedRun(seed=seed, report=report, detector=detector,
                   x_test=data.X_test, y_test=data.y_test)


def _dump_radii(detector, path):
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["class", "raw", "radius"])
        radius = detector.boundaries_.radius
        for name, raw, r in zip(detector.classes_, detector.boundaries_.raw, radius):
            writer.writerow([name, repr(float(raw)), repr(float(r))])


def run_experiment(config):
    """Run one experiment over all seeds and aggregate the reports.

    A failing seed is recorded and skipped; the run fails only when every
    seed fails. When ``output_dir`` is set, per-seed models, reports, and a
    manifest are written there.
    """
    out_dir = Path(config.output_dir) if config.output_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    runs, errors = [], {}
    for seed in config.seeds:
        try:
            run = _run_seed(config, seed)
        except Exception as exc:
            errors[seed] = f"{type(exc).__name__}: {exc}"
            continue
        runs.append(run)
        if out_dir:
            save_model(run.detector, out_dir / f"model_seed{seed}.daadb")
            report_path = out_dir / f"report_seed{seed}.json"
            report_path.write_text(run.report.to_json(), encoding="utf-8")
            if config.dump_radii and run.detector.boundaries_ is not None:
                _dump_radii(run.detector, out_dir / f"radii_seed{seed}.csv")
    if not runs:
        raise RuntimeError(f"all seeds failed: {errors}")

    aggregate = aggregate_runs([run.report for run in runs])
    result = ExperimentResult(config=config, runs=runs, aggregate=aggregate,
                              errors=errors)
    if out_dir:
        (out_dir / "manifest.json").write_text(
            json.dumps(build_manifest(result), indent=2, sort_keys=True),
            encoding="utf-8",
        )
    return result


def build_manifest(result):
    return {
        "config": result.config.to_dict(),
        "config_hash": result.config.hash(),
        "seeds": list(result.config.seeds),
        "completed_seeds": [run.seed for run in result.runs],
        "errors": {str(k): v for k, v in result.errors.items()},
        "aggregate": result.aggregate,
        "reports": {str(run.seed): run.report.scalars() for run in result.runs},
    }


def run_radius_ablation(config, factors):
    """Re-score each seed's model with globally scaled radii.

    Returns one row per factor with the mean test accuracy across seeds;
    factor 1.0 is flagged as the learned boundary.
    """
    if config.method not in ("da_adb", "adb"):
        raise ValueError("radius ablation needs a boundary-based method")
    factors = [float(f) for f in factors]
    accs = {f: [] for f in factors}
    result = run_experiment(replace(config, output_dir=None, dump_radii=False))
    for run in result.runs:
        detector = run.detector
        z_test = detector.transform(run.x_test)
        for factor in factors:
            scaled = scale_radii(detector.boundaries_, factor)
            y_pred = classify_batch(z_test, detector.centroids_, scaled)
            accs[factor].append(evaluate(run.y_test, y_pred,
                                         detector.num_known_).acc)
    rows = [
        {"factor": f, "acc": float(np.mean(accs[f])), "learned": f == 1.0}
        for f in factors
    ]
    if config.output_dir:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(out_dir / "radius_ablation.csv",
                   ["factor", "acc", "learned"], rows)
    return rows


def run_labeled_ratio_study(config, ratios, methods=None):
    """One full experiment per (labeled ratio, method), sharing seeds."""
    methods = list(methods) if methods else [config.method]
    rows = []
    for ratio in ratios:
        for method in methods:
            sub = replace(config, labeled_ratio=float(ratio), method=method,
                          output_dir=None, dump_radii=False)
            result = run_experiment(sub)
            rows.append({
                "ratio": float(ratio),
                "method": method,
                "acc": result.aggregate["acc"]["mean"],
            })
    if config.output_dir:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_csv(out_dir / "labeled_ratio_study.csv",
                   ["ratio", "method", "acc"], rows)
    return rows


def _write_csv(path, fieldnames, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def collect_manifests(paths):
    """Load manifest.json files from the given files or directories."""
    manifests = []
    for path in paths:
        path = Path(path)
        if path.is_dir():
            manifests.extend(
                json.loads(p.read_text(encoding="utf-8"))
                for p in sorted(path.rglob("manifest.json"))
            )
        else:
            manifests.append(json.loads(path.read_text(encoding="utf-8")))
    if not manifests:
        raise FileNotFoundError(f"no manifest.json found under {list(paths)}")
    return manifests


def format_results_table(manifests):
    """Aligned results table: ACC / F1 / F1_open / F1_known per known ratio."""
    header = (
        f"{'dataset':<16}{'method':<10}{'encoder':<9}{'known%':>8}"
        f"{'labeled%':>10}{'ACC':>9}{'F1':>9}{'F1_open':>9}{'F1_known':>10}"
    )
    lines = [header, "-" * len(header)]
    rows = []
    for manifest in manifests:
        cfg = manifest["config"]
        agg = manifest["aggregate"]
        encoder = "-" if cfg["dataset"] == SYNTHETIC_DATASET else cfg["encoder"]
        rows.append((
            cfg["dataset"], cfg["method"], encoder, cfg["known_ratio"],
            cfg["labeled_ratio"], agg["acc"]["mean"], agg["f1_all"]["mean"],
            agg["f1_open"]["mean"], agg["f1_known"]["mean"],
        ))
    for row in sorted(rows):
        dataset, method, encoder, known, labeled, acc, f1, f1_open, f1_known = row
        lines.append(
            f"{dataset:<16}{method:<10}{encoder:<9}{100 * known:>8.0f}"
            f"{100 * labeled:>10.0f}{acc:>9.4f}{f1:>9.4f}{f1_open:>9.4f}"
            f"{f1_known:>10.4f}"
        )
    return "\n".join(lines)
