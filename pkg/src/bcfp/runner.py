"""Grid execution: features -> forest -> metrics for every (config, split).

Records are appended to ``records.csv`` as jobs finish, so an interrupted
run resumes where it stopped.  On completion the file is rewritten sorted by
``(config, split)``, making it byte-identical across reruns and worker counts.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from bcfp import __version__
from bcfp.config import ExperimentConfig
from bcfp.evaluation.metrics import auroc, average_precision, f1_at_threshold
from bcfp.featurize import FeatureScheme, build_features
from bcfp.fingerprint import KeyTable
from bcfp.model import predict_proba, train_forest
from bcfp.smiles import SmilesError, parse_smiles, read_dataset_csv

log = logging.getLogger(__name__)

RECORD_FIELDS = ("config", "split", "auroc", "auprc", "f1")


class DataError(RuntimeError):
    """Dataset missing, unreadable, or not parseable."""


class ManifestMismatchError(RuntimeError):
    """Output directory holds records of a different configuration."""


@dataclass(frozen=True)
class MetricRecord:
    config: str
    split: str
    auroc: float
    auprc: float
    f1: float

    @property
    def failed(self) -> bool:
        return any(math.isnan(v) for v in (self.auroc, self.auprc, self.f1))

    def row(self) -> list[str]:
        return [self.config, self.split, repr(self.auroc), repr(self.auprc), repr(self.f1)]


@dataclass
class RunResult:
    records: list[MetricRecord]
    errors: list[tuple[str, str, str]] = field(default_factory=list)
    skipped: int = 0
    manifest: dict = field(default_factory=dict)


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_records(path) -> list[MetricRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            out.append(MetricRecord(row["config"], row["split"], float(row["auroc"]),
                                    float(row["auprc"]), float(row["f1"])))
    return out


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for rec in sorted(records, key=lambda r: (r.config, r.split)):
            w.writerow(rec.row())


def load_molecules(cfg: ExperimentConfig):
    path = Path(cfg.dataset)
    if not path.exists():
        raise DataError(f"dataset not found: {path}")
    try:
        records, bad = read_dataset_csv(path, cfg.smiles_col, cfg.label_col)
    except (KeyError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    if bad:
        raise DataError(f"{path}: {len(bad)} rows with unreadable labels (run `bcfp clean` first)")
    mols = []
    for rec in records:
        try:
            mols.append(parse_smiles(rec.smiles, normalize_aromaticity=cfg.aromaticity == "normalize"))
        except SmilesError as exc:
            raise DataError(f"row {rec.row_id}: {exc} (run `bcfp clean` first)") from exc
    return records, mols


# Worker state; set before the pool forks so children inherit it.
_STATE: dict = {}


def _features_for(scheme: FeatureScheme, train):
    table, labels = _STATE["table"], _STATE["labels"]
    if scheme.pooling == "folded":
        cache = _STATE.setdefault("folded", {})
        if scheme.config_id not in cache:
            cache[scheme.config_id] = build_features(table, labels, scheme).X
        return cache[scheme.config_id]
    fm = build_features(table, labels, scheme, train_indices=train)
    return fm.X


def evaluate_split(scheme: FeatureScheme, split_id: str, train, test) -> MetricRecord:
    cfg: ExperimentConfig = _STATE["cfg"]
    labels = _STATE["labels"]
    X = _features_for(scheme, train)
    forest = train_forest(X[train], labels[train], cfg.forest)
    scores = predict_proba(forest, X[test])
    y = labels[test]
    return MetricRecord(scheme.config_id, split_id, auroc(scores, y), average_precision(scores, y),
                        f1_at_threshold(scores, y, 0.5))


def _job(args):
    scheme, split_id, train, test = args
    try:
        return evaluate_split(scheme, split_id, train, test), None
    except Exception as exc:  # recorded, the rest of the grid proceeds
        return MetricRecord(scheme.config_id, split_id, math.nan, math.nan, math.nan), f"{type(exc).__name__}: {exc}"


def run_experiment(cfg: ExperimentConfig, progress: Optional[Callable[[str], None]] = None) -> RunResult:
    progress = progress or (lambda msg: log.info(msg))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    records_path = out / "records.csv"
    manifest_path = out / "manifest.json"
    errors_path = out / "errors.csv"
    timings = {}

    t0 = time.perf_counter()
    records, mols = load_molecules(cfg)
    digest = file_digest(cfg.dataset)
    labels = np.array([r.label for r in records], dtype=np.int64)
    timings["load"] = time.perf_counter() - t0

    config_hash = cfg.config_hash()
    done: dict[tuple[str, str], MetricRecord] = {}
    if manifest_path.exists() and records_path.exists():
        old = json.loads(manifest_path.read_text())
        if old.get("config_hash") != config_hash or old.get("input_digest") != digest:
            raise ManifestMismatchError(
                f"{out} holds results of another config/dataset; choose a different --out")
        for rec in read_records(records_path):
            if not rec.failed:
                done[(rec.config, rec.split)] = rec
    manifest = {
        "config_hash": config_hash,
        "artifact_version": __version__,
        "input_digest": digest,
        "dataset": str(cfg.dataset),
        "n_molecules": len(mols),
        "configs": [s.config_id for s in cfg.schemes()],
        "timings": timings,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2))
    write_records(done.values(), records_path)

    t0 = time.perf_counter()
    schemes = cfg.schemes()
    max_r = max(s.radius for s in schemes)
    table = KeyTable(mols, max_radius=max_r)
    timings["fingerprints"] = time.perf_counter() - t0

    splits = cfg.split.splits(labels)
    jobs = [(s, sid, tr, te) for s in schemes for sid, tr, te in splits if (s.config_id, sid) not in done]
    skipped = len(schemes) * len(splits) - len(jobs)
    progress(f"{len(mols)} molecules, {len(schemes)} configs x {len(splits)} splits; "
             f"{len(jobs)} jobs to run, {skipped} already done")

    _STATE.clear()
    _STATE.update(cfg=cfg, table=table, labels=labels)
    t0 = time.perf_counter()
    results = list(done.values())
    errors = []
    with open(records_path, "a", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")

        def consume(rec, err, i):
            writer.writerow(rec.row())
            fh.flush()
            results.append(rec)
            if err:
                errors.append((rec.config, rec.split, err))
                log.error("%s/%s failed: %s", rec.config, rec.split, err)
            progress(f"[{i}/{len(jobs)}] {rec.config} {rec.split} auroc={rec.auroc:.4f}")

        if cfg.jobs > 1 and len(jobs) > 1 and hasattr(os, "fork"):
            import multiprocessing as mp
            with ProcessPoolExecutor(cfg.jobs, mp_context=mp.get_context("fork")) as pool:
                for i, (rec, err) in enumerate(pool.map(_job, jobs, chunksize=1), 1):
                    consume(rec, err, i)
        else:
            for i, job in enumerate(jobs, 1):
                rec, err = _job(job)
                consume(rec, err, i)
    timings["jobs"] = time.perf_counter() - t0
    _STATE.clear()

    write_records(results, records_path)
    if errors:
        with open(errors_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("config", "split", "error"))
            w.writerows(errors)
    elif errors_path.exists():
        errors_path.unlink()
    manifest["n_records"] = len(results)
    manifest["n_errors"] = len(errors)
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return RunResult(results, errors, skipped, manifest)
