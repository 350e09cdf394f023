"""``bcfp`` command line: clean, run, report, dump-keys, export-features.

Exit codes: 0 success, 1 usage error, 2 data error, 3 partial failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from bcfp import __version__

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PARTIAL = 0, 1, 2, 3

log = logging.getLogger("bcfp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_clean(args) -> int:
    from bcfp.smiles import EmptyDatasetError, clean_dataset, read_dataset_csv

    if not args.dataset:
        raise UsageError("clean needs --dataset")
    src = Path(args.dataset)
    if not src.exists():
        print(f"error: dataset not found: {src}", file=sys.stderr)
        return EXIT_DATA
    try:
        records, bad_labels = read_dataset_csv(src, args.smiles_col, args.label_col)
        cleaned = clean_dataset(records, normalize_aromaticity=args.aromaticity == "normalize")
    except (KeyError, EmptyDatasetError, UnicodeDecodeError, csv.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    rep = cleaned.report
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "cleaned.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["smiles", "label"])
        for rec in cleaned.records:
            w.writerow([rec.smiles, rec.label])
    with open(out / "clean_report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "reason"])
        w.writerows(sorted(bad_labels + rep.dropped))
    n_input = rep.n_input + len(bad_labels)
    print(f"input:      {n_input}")
    print(f"invalid:    {rep.n_invalid + len(bad_labels)}")
    print(f"duplicates: {rep.n_duplicates} ({len(rep.label_conflicts)} with conflicting labels)")
    print(f"kept:       {rep.n_kept}")
    print(f"wrote {out / 'cleaned.csv'} and {out / 'clean_report.csv'}")
    return EXIT_OK


def _load_cfg(args):
    from bcfp.config import ConfigError, load_config

    if not args.config:
        raise UsageError("run needs --config (a TOML file or a preset name)")
    try:
        cfg = load_config(args.config)
        return cfg.with_overrides(dataset=args.dataset, smiles_col=args.smiles_col,
                                  label_col=args.label_col, out=args.out, jobs=args.jobs)
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_run(args) -> int:
    from bcfp.runner import DataError, ManifestMismatchError, run_experiment

    cfg = _load_cfg(args)
    progress = (lambda msg: None) if args.quiet else (lambda msg: print(msg, flush=True))
    try:
        result = run_experiment(cfg, progress=progress)
    except (DataError, ManifestMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(f"{len(result.records)} records in {Path(cfg.out) / 'records.csv'}"
          f" ({result.skipped} resumed, {len(result.errors)} failed)")
    if result.errors:
        print(f"failures listed in {Path(cfg.out) / 'errors.csv'}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_report(args) -> int:
    from bcfp.report import expected_configs, summarize, write_report
    from bcfp.runner import DataError, read_records

    path = Path(args.records) if args.records else (Path(args.out) / "records.csv" if args.out else None)
    if path is None:
        raise UsageError("report needs a records CSV (positional) or --out holding records.csv")
    if path.is_dir():
        path = path / "records.csv"
    if not path.exists():
        print(f"error: records not found: {path}", file=sys.stderr)
        return EXIT_DATA
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    try:
        records = read_records(path)
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not any(not r.failed for r in records):
        print(f"error: {path} holds no successful records", file=sys.stderr)
        return EXIT_DATA
    report = summarize(records, expected=expected_configs(path), alpha=args.alpha)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(report.table())
    out_dir = Path(args.out) if args.out and args.records else path.parent
    written = write_report(report, out_dir)
    print("wrote " + ", ".join(str(p) for p in written))
    return EXIT_OK


def _iter_smiles(args):
    from bcfp.smiles import read_dataset_csv

    if args.smiles:
        for s in args.smiles:
            yield s
        return
    records, _ = read_dataset_csv(args.dataset, args.smiles_col, args.label_col)
    for rec in records:
        yield rec.smiles


def _cmd_dump_keys(args) -> int:
    from bcfp.fingerprint import dump_keys
    from bcfp.smiles import SmilesError, parse_smiles

    if not args.smiles and not args.dataset:
        raise UsageError("dump-keys needs --smiles or --dataset")
    items, failed = [], 0
    try:
        for s in _iter_smiles(args):
            try:
                items.append((s, parse_smiles(s, normalize_aromaticity=args.aromaticity == "normalize")))
            except SmilesError as exc:
                failed += 1
                print(f"skip {s!r}: {exc}", file=sys.stderr)
    except (OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.out:
        with open(args.out, "w") as fh:
            dump_keys(items, args.scheme, args.radius, fh)
    else:
        dump_keys(items, args.scheme, args.radius, sys.stdout)
    if failed:
        return EXIT_PARTIAL if items else EXIT_DATA
    return EXIT_OK


def _cmd_export(args) -> int:
    import numpy as np

    from bcfp.featurize import FeatureScheme, write_binary, write_csv, build_features
    from bcfp.fingerprint import KeyTable
    from bcfp.smiles import SmilesError, parse_smiles, read_dataset_csv

    if not args.dataset or not args.out:
        raise UsageError("export-features needs --dataset and --out")
    try:
        scheme = FeatureScheme(args.kind, args.radius, args.pooling, args.dim, args.k, args.oov)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        records, bad = read_dataset_csv(args.dataset, args.smiles_col, args.label_col)
        mols = [parse_smiles(r.smiles, normalize_aromaticity=args.aromaticity == "normalize") for r in records]
    except (OSError, KeyError, SmilesError) as exc:
        print(f"error: {exc} (run `bcfp clean` first)", file=sys.stderr)
        return EXIT_DATA
    if bad:
        print(f"error: {len(bad)} rows with unreadable labels", file=sys.stderr)
        return EXIT_DATA
    table = KeyTable(mols, max_radius=scheme.radius)
    labels = [r.label for r in records]
    fm = build_features(table, labels, scheme, train_indices=np.arange(len(mols)))
    if args.format == "csv":
        write_csv(fm, args.out)
    else:
        write_binary(fm.X, args.out)
    print(f"{fm.X.shape[0]} x {fm.X.shape[1]} {scheme.config_id} -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", help="input CSV")
    common.add_argument("--smiles-col", default=None, help="SMILES column name")
    common.add_argument("--label-col", default=None, help="binary label column name")
    common.add_argument("--out", help="output directory (file for dump-keys/export-features)")
    common.add_argument("--aromaticity", choices=("normalize", "trust"), default="normalize",
                        help="re-perceive Kekulé benzenoid rings as aromatic (default) or keep input")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="bcfp", description="Bond-centered fingerprint benchmark toolkit.")
    p.add_argument("--version", action="version", version=f"bcfp {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("clean", parents=[common], help="drop invalid SMILES and duplicates")
    c.set_defaults(func=_cmd_clean, default_label="p_np")

    r = sub.add_parser("run", parents=[common], help="run an experiment grid")
    r.add_argument("--config", help="TOML config path or preset name")
    r.add_argument("--jobs", type=int, default=None, help="worker processes")
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(func=_cmd_run, default_label=None)

    rp = sub.add_parser("report", parents=[common], help="summarize records: table, Tukey HSD, SVG")
    rp.add_argument("records", nargs="?", help="records.csv or the run directory")
    rp.add_argument("--alpha", type=float, default=0.05, help="family-wise significance level")
    rp.set_defaults(func=_cmd_report, default_label=None)

    d = sub.add_parser("dump-keys", parents=[common], help="print fingerprint keys as JSON lines")
    d.add_argument("--smiles", action="append", help="SMILES to fingerprint (repeatable)")
    d.add_argument("--scheme", choices=("ecfp", "bcfp"), default="bcfp")
    d.add_argument("--radius", type=int, choices=range(4), default=1)
    d.set_defaults(func=_cmd_dump_keys, default_label="label")

    e = sub.add_parser("export-features", parents=[common], help="write a feature matrix")
    e.add_argument("--kind", choices=("ecfp", "bcfp", "concat", "hybrid"), default="ecfp")
    e.add_argument("--radius", type=int, choices=range(4), default=1)
    e.add_argument("--pooling", choices=("folded", "sortslice"), default="folded")
    e.add_argument("--dim", type=int, default=2048)
    e.add_argument("--k", type=int, default=1024)
    e.add_argument("--oov", action="store_true")
    e.add_argument("--format", choices=("csv", "bin"), default="csv")
    e.set_defaults(func=_cmd_export, default_label="label")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    # run/report take column names from the config unless overridden
    if args.default_label is not None:
        args.smiles_col = args.smiles_col or "smiles"
        args.label_col = args.label_col or args.default_label
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"bcfp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
