"""Aggregate metric records: mean±std table, Tukey HSD CSV, SVG box plots."""
from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from bcfp.evaluation.stats import TukeyResult, tukey_hsd
from bcfp.featurize import KINDS
from bcfp.runner import MetricRecord
from bcfp.svgplot import KIND_COLORS, box_plot_svg

log = logging.getLogger(__name__)

METRICS = ("auroc", "auprc", "f1")
METRIC_LABELS = {"auroc": "AUROC", "auprc": "AUPRC", "f1": "F1"}
_CONFIG_RE = re.compile(r"^(?P<kind>[a-z]+)_r(?P<radius>\d+)_(?P<tag>.+)$")


def parse_config_id(config: str) -> tuple[str, int, str]:
    m = _CONFIG_RE.match(config)
    if not m:
        return config, -1, ""
    return m.group("kind"), int(m.group("radius")), m.group("tag")


def config_sort_key(config: str):
    kind, radius, tag = parse_config_id(config)
    kind_rank = KINDS.index(kind) if kind in KINDS else len(KINDS)
    return (tag, radius, kind_rank, config)


def mean_std(values) -> str:
    v = np.asarray(values, dtype=float)
    std = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return f"{v.mean():.3f}±{std:.3f}"


@dataclass
class ConfigSummary:
    config: str
    n: int
    values: dict[str, np.ndarray]

    def mean(self, metric: str) -> float:
        return float(self.values[metric].mean())


@dataclass
class Report:
    summaries: list[ConfigSummary]
    tukey: dict[str, TukeyResult] = field(default_factory=dict)
    best: dict[str, str] = field(default_factory=dict)
    worst: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def table(self) -> str:
        head = f"{'config':<22}{'n':>4}  " + "  ".join(f"{METRIC_LABELS[m]:>13}" for m in METRICS)
        lines = [head, "-" * len(head)]
        for s in self.summaries:
            cells = []
            for m in METRICS:
                mark = " *" if self.best.get(m) == s.config else (" !" if self.worst.get(m) == s.config else "  ")
                cells.append(f"{mean_std(s.values[m]):>11}{mark}")
            lines.append(f"{s.config:<22}{s.n:>4}  " + "  ".join(cells))
        lines.append("(* best, ! worst per metric)")
        return "\n".join(lines)


def summarize(records: list[MetricRecord], expected: Optional[list[str]] = None,
              alpha: float = 0.05) -> Report:
    by_config: dict[str, list[MetricRecord]] = {}
    for rec in records:
        if not rec.failed:
            by_config.setdefault(rec.config, []).append(rec)
    warnings = []
    n_failed = sum(1 for r in records if r.failed)
    if n_failed:
        warnings.append(f"{n_failed} failed records ignored")
    if expected:
        missing = [c for c in expected if c not in by_config]
        if missing:
            warnings.append(f"MissingConfig: no records for {', '.join(missing)}")
    counts = {c: len(v) for c, v in by_config.items()}
    if counts and len(set(counts.values())) > 1:
        full = max(counts.values())
        short = [c for c, n in counts.items() if n < full]
        warnings.append(f"MissingConfig: incomplete splits for {', '.join(sorted(short))}")

    summaries = []
    for config in sorted(by_config, key=config_sort_key):
        recs = sorted(by_config[config], key=lambda r: r.split)
        summaries.append(ConfigSummary(config, len(recs), {
            m: np.array([getattr(r, m) for r in recs]) for m in METRICS}))
    report = Report(summaries, warnings=warnings)
    if summaries:
        for m in METRICS:
            means = [s.mean(m) for s in summaries]
            report.best[m] = summaries[int(np.argmax(means))].config
            report.worst[m] = summaries[int(np.argmin(means))].config
    usable = [s for s in summaries if s.n >= 2]
    if len(usable) >= 2:
        for m in METRICS:
            report.tukey[m] = tukey_hsd([s.values[m] for s in usable], alpha=alpha,
                                        names=[s.config for s in usable])
    else:
        report.warnings.append("Tukey HSD skipped: needs at least two configs with two or more records")
    for w in report.warnings:
        log.warning(w)
    return report


def write_report(report: Report, out_dir, title_prefix: str = "") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "summary.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "n", *(f"{m}_{s}" for m in METRICS for s in ("mean", "std")),
                    *(f"{m}_mark" for m in METRICS)])
        for s in report.summaries:
            row = [s.config, s.n]
            for m in METRICS:
                v = s.values[m]
                row += [f"{v.mean():.6f}", f"{(v.std(ddof=1) if v.size > 1 else 0.0):.6f}"]
            for m in METRICS:
                row.append("best" if report.best.get(m) == s.config else
                           "worst" if report.worst.get(m) == s.config else "")
            w.writerow(row)
    written.append(path)
    path = out / "summary.txt"
    path.write_text(report.table() + "\n")
    written.append(path)

    if report.tukey:
        path = out / "tukey.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["metric", "config_a", "config_b", "diff", "q", "p", "significant"])
            for m, res in report.tukey.items():
                for pc in res.pairs:
                    w.writerow([m, pc.a, pc.b, f"{pc.diff:.6f}", f"{pc.q:.6f}", f"{pc.p:.6g}",
                                str(pc.significant).lower()])
        written.append(path)

    configs = [s.config for s in report.summaries]
    sections = [f"r = {parse_config_id(c)[1]}" + (f" ({parse_config_id(c)[2]})" if parse_config_id(c)[2] != "fold" else "")
                for c in configs]
    colors = [KIND_COLORS.get(parse_config_id(c)[0], "#8da0cb") for c in configs]
    for m in METRICS:
        if not report.summaries:
            break
        svg = box_plot_svg([(s.config, s.values[m]) for s in report.summaries],
                           title=f"{title_prefix}{METRIC_LABELS[m]} per configuration",
                           ylabel=METRIC_LABELS[m], sections=sections, colors=colors,
                           best=report.best.get(m), worst=report.worst.get(m))
        path = out / f"boxplot_{m}.svg"
        path.write_text(svg)
        written.append(path)
    return written


def expected_configs(records_path) -> Optional[list[str]]:
    manifest = Path(records_path).with_name("manifest.json")
    if manifest.exists():
        try:
            return json.loads(manifest.read_text()).get("configs")
        except json.JSONDecodeError:
            return None
    return None
