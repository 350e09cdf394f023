import random
import warnings
from collections import Counter

import numpy as np
import pytest

import molgen
from bcfp.featurize import (
    FeatureScheme, SchemeMismatchWarning, ZeroDimensionError, build_features, fit_sortslice,
    fold_counts, hybrid_scheme, read_binary, transform_sortslice, write_binary, write_csv,
)
from bcfp.fingerprint import KeyTable, bcfp_keys, ecfp_keys
from bcfp.smiles import parse_smiles


@pytest.fixture(scope="module")
def table():
    rng = random.Random(17)
    mols = [parse_smiles(molgen.write_smiles(molgen.random_molecule(rng), rng)) for _ in range(60)]
    return KeyTable(mols, max_radius=3)


@pytest.fixture(scope="module")
def labels(table):
    return np.arange(table.n) % 2


class TestFold:
    def test_conservation(self):
        assert fold_counts({11: 2, 5: 1}, 8).sum() == 3

    def test_empty(self):
        v = fold_counts({}, 2048)
        assert v.shape == (2048,) and not v.any()

    def test_collision_accumulates(self):
        v = fold_counts({3: 2, 3 + 8 * 1000: 5}, 8)
        assert v[3] == 7 and v.sum() == 7

    def test_zero_dim(self):
        with pytest.raises(ZeroDimensionError):
            fold_counts({1: 1}, 0)

    def test_conservation_on_real_keys(self, table):
        for r in range(4):
            for keys in table.multisets("bcfp", r):
                assert fold_counts(keys, 64).sum() == sum(keys.values())


class TestSortSlice:
    a, b, c, z = 101, 202, 303, 999

    def test_frequency_ranking(self):
        vocab = fit_sortslice([{self.a: 5}, {self.a: 1, self.b: 1}, {self.b: 2, self.c: 1}], 2)
        assert vocab.retained == (self.a, self.b)

    def test_ties_go_to_smaller_key(self):
        vocab = fit_sortslice([{7: 1, 3: 1, 5: 1}], 2)
        assert vocab.retained == (3, 5)

    def test_large_k_keeps_everything(self):
        vocab = fit_sortslice([{1: 1}, {2: 3}], 50)
        assert set(vocab.retained) == {1, 2}

    def test_refit_is_identical(self):
        train = [{1: 1, 2: 2}, {2: 1, 3: 1}]
        assert fit_sortslice(train, 2) == fit_sortslice(train, 2)

    def test_transform_with_oov(self):
        vocab = fit_sortslice([{self.a: 1, self.b: 1}], 2, oov=True)
        assert transform_sortslice({self.a: 3, self.z: 4}, vocab).tolist() == [3, 0, 4]

    def test_transform_without_oov_drops(self):
        vocab = fit_sortslice([{self.a: 1, self.b: 1}], 2)
        assert transform_sortslice({self.a: 3, self.z: 4}, vocab).tolist() == [3, 0]

    def test_oov_conservation(self, table):
        train = table.multisets("ecfp", 2)[:40]
        vocab = fit_sortslice(train, 10, oov=True)
        for keys in table.multisets("ecfp", 2):
            assert transform_sortslice(keys, vocab).sum() == sum(keys.values())

    def test_brute_force_frequency(self, table):
        train = table.multisets("bcfp", 1)[:30]
        vocab = fit_sortslice(train, 15)
        presence = Counter()
        for keys in train:
            for key in keys:
                presence[key] += 1
        expected = sorted(presence, key=lambda k: (-presence[k], k))[:15]
        assert list(vocab.retained) == expected


class TestScheme:
    def test_config_ids(self):
        assert FeatureScheme("ecfp", 1).config_id == "ecfp_r1_fold"
        assert FeatureScheme("hybrid", 2, "sortslice").config_id == "hybrid_r2_ss"
        assert FeatureScheme("concat", 3, "sortslice", oov=True).config_id == "concat_r3_ss_oov"

    @pytest.mark.parametrize("kw", [dict(kind="x", radius=1), dict(kind="ecfp", radius=4),
                                    dict(kind="ecfp", radius=1, oov=True),
                                    dict(kind="ecfp", radius=1, pooling="bits")])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            FeatureScheme(**kw)

    def test_blocks(self):
        assert FeatureScheme("hybrid", 2).blocks() == [("ecfp", 2), ("bcfp", 1)]
        assert FeatureScheme("hybrid", 0).blocks() == [("ecfp", 0), ("bcfp", 0)]
        assert FeatureScheme("concat", 2).blocks() == [("ecfp", 2), ("bcfp", 2)]

    def test_hybrid_minus_one_warns(self):
        with pytest.warns(SchemeMismatchWarning):
            s = hybrid_scheme(0, -1)
        assert s.blocks() == FeatureScheme("concat", 0).blocks()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            hybrid_scheme(2, 1)
        with pytest.raises(ValueError):
            hybrid_scheme(2, 2)


class TestBuild:
    def test_concat_width(self, table, labels):
        fm = build_features(table, labels, FeatureScheme("concat", 1, dim=2048))
        assert fm.X.shape == (table.n, 4096)

    def test_hybrid0_equals_concat0(self, table, labels):
        for pooling in ("folded", "sortslice"):
            train = np.arange(0, table.n, 2)
            h = build_features(table, labels, FeatureScheme("hybrid", 0, pooling, dim=512, k=32), train)
            c = build_features(table, labels, FeatureScheme("concat", 0, pooling, dim=512, k=32), train)
            assert np.array_equal(h.X, c.X)

    def test_folded_blocks_match_direct_keys(self, table, labels):
        fm = build_features(table, labels, FeatureScheme("hybrid", 2, dim=128))
        mols_keys_e = table.multisets("ecfp", 2)
        mols_keys_b = table.multisets("bcfp", 1)
        for i in range(table.n):
            assert np.array_equal(fm.X[i, :128], fold_counts(mols_keys_e[i], 128))
            assert np.array_equal(fm.X[i, 128:], fold_counts(mols_keys_b[i], 128))

    def test_sortslice_oov_width_and_conservation(self, table, labels):
        train = np.arange(40)
        fm = build_features(table, labels, FeatureScheme("concat", 1, "sortslice", k=16, oov=True), train)
        assert fm.X.shape == (table.n, 2 * (16 + 1))
        e = table.multisets("ecfp", 1)
        b = table.multisets("bcfp", 1)
        assert np.array_equal(fm.X[:, :17].sum(1), [sum(k.values()) for k in e])
        assert np.array_equal(fm.X[:, 17:].sum(1), [sum(k.values()) for k in b])
        # separate vocabularies per block
        assert fm.vocabularies[0].retained != fm.vocabularies[1].retained

    def test_vocabulary_uses_training_rows_only(self, table, labels):
        train = np.arange(10)
        fm = build_features(table, labels, FeatureScheme("ecfp", 2, "sortslice", k=8), train)
        expected = fit_sortslice([table.multisets("ecfp", 2)[i] for i in train], 8)
        assert fm.vocabularies[0].retained == expected.retained
        assert fm.vocabularies[0].fit_indices == frozenset(range(10))

    def test_sortslice_requires_train(self, table, labels):
        with pytest.raises(ValueError):
            build_features(table, labels, FeatureScheme("ecfp", 1, "sortslice"))

    def test_column_names(self, table, labels):
        fm = build_features(table, labels, FeatureScheme("concat", 0, "sortslice", k=4, oov=True), np.arange(20))
        names = fm.column_names()
        assert len(names) == fm.X.shape[1]
        assert names[4].endswith(":oov") and names[-1].endswith(":oov")


def test_binary_roundtrip(tmp_path, table, labels):
    fm = build_features(table, labels, FeatureScheme("ecfp", 2, dim=64))
    p = tmp_path / "x.bin"
    write_binary(fm.X, p)
    raw = p.read_bytes()
    assert raw[:8] == b"BCFPMAT1"
    assert int.from_bytes(raw[8:16], "little") == table.n
    assert int.from_bytes(raw[16:24], "little") == 64
    assert np.array_equal(read_binary(p), fm.X)


def test_csv_export(tmp_path, table, labels):
    fm = build_features(table, labels, FeatureScheme("bcfp", 1, dim=16))
    p = tmp_path / "x.csv"
    write_csv(fm, p)
    lines = p.read_text().splitlines()
    assert lines[0].split(",")[0] == "label" and len(lines) == table.n + 1
