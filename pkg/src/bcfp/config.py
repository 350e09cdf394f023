"""Experiment configuration (TOML).

Schema::

    [dataset]
    path = "bbbp_clean.csv"      # cleaned CSV written by `bcfp clean`
    smiles_col = "smiles"
    label_col = "label"
    aromaticity = "normalize"    # or "trust"

    [features]
    kinds = ["ecfp", "bcfp", "concat", "hybrid"]
    radii = [0, 1, 2, 3]
    pooling = ["folded"]         # and/or "sortslice"
    oov = [false]                # sortslice only
    fold_dim = 2048
    slice_k = 1024

    [split]
    kind = "holdout"             # or "kfold"
    seeds = 29                   # count (0..n-1) or explicit list
    test_fraction = 0.2          # holdout
    k = 5                        # kfold; one repeat per seed

    [forest]
    n_trees = 100
    max_features = "sqrt"
    min_samples_leaf = 1
    min_samples_split = 2
    max_depth = -1               # -1: unlimited
    seed = 0

    [run]
    out = "runs/bbbp29seed"
    jobs = 1
"""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from bcfp.evaluation.splits import SplitPlan
from bcfp.featurize import KINDS, POOLINGS, FeatureScheme
from bcfp.model import ForestParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PRESET_DIR = Path(__file__).parent / "presets"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    smiles_col: str = "smiles"
    label_col: str = "label"
    aromaticity: str = "normalize"
    kinds: tuple[str, ...] = KINDS
    radii: tuple[int, ...] = (0, 1, 2, 3)
    pooling: tuple[str, ...] = ("folded",)
    oov: tuple[bool, ...] = (False,)
    fold_dim: int = 2048
    slice_k: int = 1024
    split: SplitPlan = field(default_factory=lambda: SplitPlan("holdout", tuple(range(29))))
    forest: ForestParams = field(default_factory=ForestParams)
    out: str = "runs/default"
    jobs: int = 1

    def __post_init__(self):
        if not set(self.radii) <= {0, 1, 2, 3}:
            raise ConfigError(f"radii must be a subset of 0..3, got {self.radii}")
        if not set(self.kinds) <= set(KINDS):
            raise ConfigError(f"unknown kinds in {self.kinds}")
        if not set(self.pooling) <= set(POOLINGS):
            raise ConfigError(f"unknown pooling in {self.pooling}")
        if self.aromaticity not in ("normalize", "trust"):
            raise ConfigError("aromaticity must be 'normalize' or 'trust'")
        ids = [s.config_id for s in self.schemes()]
        if len(ids) != len(set(ids)):
            raise ConfigError("duplicate config ids in grid")

    def schemes(self) -> list[FeatureScheme]:
        out = []
        for pooling in self.pooling:
            oovs = sorted(set(self.oov)) if pooling == "sortslice" else [False]
            for oov in oovs:
                for r in sorted(self.radii):
                    for kind in self.kinds:
                        out.append(FeatureScheme(kind, r, pooling, self.fold_dim, self.slice_k, oov))
        return out

    def config_hash(self) -> str:
        """Digest of everything that influences the metric records."""
        payload = asdict(self)
        for volatile in ("out", "jobs"):
            payload.pop(volatile)
        blob = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _seeds(value) -> tuple[int, ...]:
    if isinstance(value, int):
        return tuple(range(value))
    return tuple(int(v) for v in value)


def config_from_dict(doc: dict) -> ExperimentConfig:
    try:
        ds = doc["dataset"]
        feats = doc.get("features", {})
        sp = doc.get("split", {})
        fo = doc.get("forest", {})
        run = doc.get("run", {})
        plan = SplitPlan(
            kind=sp.get("kind", "holdout"),
            seeds=_seeds(sp.get("seeds", 29)),
            test_fraction=float(sp.get("test_fraction", 0.2)),
            k=int(sp.get("k", 5)),
        )
        max_depth = fo.get("max_depth", -1)
        params = ForestParams(
            n_trees=int(fo.get("n_trees", 100)),
            max_features=fo.get("max_features", "sqrt"),
            min_samples_leaf=int(fo.get("min_samples_leaf", 1)),
            min_samples_split=int(fo.get("min_samples_split", 2)),
            max_depth=None if max_depth is None or max_depth < 0 else int(max_depth),
            seed=int(fo.get("seed", 0)),
        )
        return ExperimentConfig(
            dataset=str(ds["path"]),
            smiles_col=ds.get("smiles_col", "smiles"),
            label_col=ds.get("label_col", "label"),
            aromaticity=ds.get("aromaticity", "normalize"),
            kinds=tuple(feats.get("kinds", KINDS)),
            radii=tuple(int(r) for r in feats.get("radii", (0, 1, 2, 3))),
            pooling=tuple(feats.get("pooling", ("folded",))),
            oov=tuple(bool(v) for v in feats.get("oov", (False,))),
            fold_dim=int(feats.get("fold_dim", 2048)),
            slice_k=int(feats.get("slice_k", 1024)),
            split=plan,
            forest=params,
            out=str(run.get("out", "runs/default")),
            jobs=int(run.get("jobs", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    """Load a TOML config; a bare preset name (``bbbp29seed``) resolves to the bundled file."""
    p = Path(path)
    if not p.exists() and (PRESET_DIR / f"{p.stem}.toml").exists():
        p = PRESET_DIR / f"{p.stem}.toml"
    try:
        with open(p, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(doc)


def list_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.toml"))
