"""Compare the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--rows 1566 --cols 4096 --trees 10]

Each kernel runs once for JIT warm-up, then is timed over ``--repeat`` runs;
the table reports the best time and checks both paths agree.  With
scikit-learn installed its forest is timed too, for scale only.
"""
import argparse
import time

import numpy as np

from bcfp import _tree
from bcfp._jit import HAVE_NUMBA
from bcfp.hashing import hash_rows
from bcfp.model import ForestParams, predict_proba, train_forest


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def hashing_case(n_rows, rng):
    lengths = rng.integers(2, 14, size=n_rows)
    offsets = np.r_[0, np.cumsum(lengths)].astype(np.int64)
    tags = rng.integers(1, 7, size=offsets[-1]).astype(np.uint8)
    values = rng.integers(0, 2**63, size=offsets[-1], dtype=np.uint64)
    return tags, values, offsets


def count_matrix(rows, cols, rng):
    X = rng.poisson(0.05, size=(rows, cols)).astype(np.float64)
    y = (X[:, :64].sum(1) + rng.normal(scale=0.7, size=rows) > 3.2).astype(np.int64)
    return X, y


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--rows", type=int, default=1566, help="training rows (80%% of 1957)")
    ap.add_argument("--cols", type=int, default=4096, help="feature columns (concat, D=2048)")
    ap.add_argument("--trees", type=int, default=10)
    ap.add_argument("--hash-rows", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    results = []

    tags, values, offsets = hashing_case(args.hash_rows, rng)
    hash_rows(tags[:10], values[:10], offsets[:2], jit=True)
    t_jit, h1 = best_of(lambda: hash_rows(tags, values, offsets, jit=True), args.repeat)
    t_np, h2 = best_of(lambda: hash_rows(tags, values, offsets, jit=False), args.repeat)
    results.append((f"hash_rows ({args.hash_rows} rows)", t_jit, t_np, np.array_equal(h1, h2)))

    X, y = count_matrix(args.rows, args.cols, rng)
    params = ForestParams(n_trees=args.trees, seed=1)
    train_forest(X[:50], y[:50], ForestParams(n_trees=1), jit=True)
    t_jit, f1 = best_of(lambda: train_forest(X, y, params, jit=True), args.repeat)
    t_np, f2 = best_of(lambda: train_forest(X, y, params, jit=False), 1)
    results.append((f"train_forest ({args.rows}x{args.cols}, {args.trees} trees)", t_jit, t_np, f1.trees == f2.trees))

    Xt = count_matrix(4 * args.rows, args.cols, rng)[0]
    _tree.predict_tree(Xt[:5], f1.trees[0].arrays, jit=True)
    t_jit, p1 = best_of(lambda: predict_proba(f1, Xt, jit=True), args.repeat)
    t_np, p2 = best_of(lambda: predict_proba(f1, Xt, jit=False), args.repeat)
    results.append((f"predict_proba ({Xt.shape[0]} rows)", t_jit, t_np, np.array_equal(p1, p2)))

    width = max(len(r[0]) for r in results)
    print(f"{'kernel':<{width}}  {'numba s':>9}  {'numpy s':>9}  {'speedup':>8}  identical")
    for name, tj, tn, same in results:
        print(f"{name:<{width}}  {tj:9.4f}  {tn:9.4f}  {tn / tj:7.1f}x  {same}")

    try:
        from sklearn.ensemble import RandomForestClassifier
    except ImportError:
        return
    rf = RandomForestClassifier(n_estimators=args.trees, max_features="sqrt", random_state=0, n_jobs=1)
    t_sk, _ = best_of(lambda: rf.fit(X, y), args.repeat)
    print(f"\nreference: scikit-learn RandomForestClassifier fit {t_sk:.4f} s "
          f"(numba path {results[1][1]:.4f} s)")


if __name__ == "__main__":
    main()
