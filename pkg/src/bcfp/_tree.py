"""CART tree-growing kernels for binary Gini classification.

Two implementations of the same algorithm are kept in lockstep:
``_grow_numba`` (compiled) and ``_grow_numpy`` (vectorized split search,
Python node loop).  Given the same inputs they return identical trees; the
test-suite checks this node for node.

Tree layout (parallel arrays, node 0 is the root, ``feature == -1`` marks a leaf):
``feature, threshold, left, right, value (positive fraction), n_samples``.
"""
import numpy as np

from bcfp._jit import JIT_ENABLED, njit
from bcfp.rng import Pcg32, pcg32_bounded, pcg32_init

MIN_GAIN = 1e-9
HIST_MAX = 256  # integer columns spanning fewer values skip the argsort


@njit
def _grow_numba(XT, y, mtry, min_split, min_leaf, max_depth, seed, stream):
    d, n = XT.shape
    st = pcg32_init(seed, stream)
    idx = np.empty(n, dtype=np.int64)
    for i in range(n):
        idx[i] = pcg32_bounded(st, n)

    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    count = np.zeros(cap, dtype=np.int64)
    perm = np.arange(d)
    vals = np.empty(n, dtype=np.float64)
    labs = np.empty(n, dtype=np.int64)
    tmp = np.empty(n, dtype=np.int64)
    h_tot = np.empty(HIST_MAX, dtype=np.int64)
    h_pos = np.empty(HIST_MAX, dtype=np.int64)

    stack = np.empty((cap, 4), dtype=np.int64)  # node, start, end, depth
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        m = end - start
        pos = 0
        for i in range(start, end):
            pos += y[idx[i]]
        count[node] = m
        value[node] = pos / m
        if pos == 0 or pos == m or m < min_split or (max_depth >= 0 and depth >= max_depth):
            continue
        neg = m - pos
        parent = (pos * pos + neg * neg) / m

        best_f = -1
        best_thr = 0.0
        best = -1.0
        visited = 0
        found = 0
        while found < mtry and visited < d:
            j = visited + pcg32_bounded(st, d - visited)
            f = perm[j]
            perm[j] = perm[visited]
            perm[visited] = f
            visited += 1
            col = XT[f]
            lo = col[idx[start]]
            hi = lo
            integral = True
            for i in range(m):
                v = col[idx[start + i]]
                vals[i] = v
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
                if integral and v != np.floor(v):
                    integral = False
            if lo == hi:
                continue
            found += 1
            if integral and hi - lo < HIST_MAX:
                # small integer range: per-value histograms replace the sort
                nb = int(hi - lo) + 1
                for b in range(nb):
                    h_tot[b] = 0
                    h_pos[b] = 0
                for i in range(m):
                    b = int(vals[i] - lo)
                    h_tot[b] += 1
                    h_pos[b] += y[idx[start + i]]
                nl = 0
                lp = 0
                prev = -1
                for b in range(nb):
                    if h_tot[b] == 0:
                        continue
                    if prev >= 0 and nl >= min_leaf and m - nl >= min_leaf:
                        nr = m - nl
                        ln = nl - lp
                        rp = pos - lp
                        rn = nr - rp
                        proxy = (lp * lp + ln * ln) / nl + (rp * rp + rn * rn) / nr
                        thr = ((lo + prev) + (lo + b)) / 2.0
                        if proxy > best or (proxy == best and (f < best_f or (f == best_f and thr < best_thr))):
                            best = proxy
                            best_f = f
                            best_thr = thr
                    nl += h_tot[b]
                    lp += h_pos[b]
                    prev = b
                continue
            order = np.argsort(vals[:m])
            for i in range(m):
                labs[i] = y[idx[start + order[i]]]
            lp = 0
            for i in range(m - 1):
                lp += labs[i]
                a = vals[order[i]]
                b = vals[order[i + 1]]
                if a < b:
                    nl = i + 1
                    nr = m - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    ln = nl - lp
                    rp = pos - lp
                    rn = nr - rp
                    proxy = (lp * lp + ln * ln) / nl + (rp * rp + rn * rn) / nr
                    thr = (a + b) / 2.0
                    if proxy > best or (proxy == best and (f < best_f or (f == best_f and thr < best_thr))):
                        best = proxy
                        best_f = f
                        best_thr = thr
        if best_f < 0 or best - parent <= MIN_GAIN:
            continue

        nl = 0
        col = XT[best_f]
        for i in range(start, end):
            if col[idx[i]] <= best_thr:
                idx[start + nl] = idx[i]
                nl += 1
            else:
                tmp[i - start - nl] = idx[i]
        for i in range(m - nl):
            idx[start + nl + i] = tmp[i]
        feature[node] = best_f
        threshold[node] = best_thr
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        stack[top, 0] = rc
        stack[top, 1] = start + nl
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = lc
        stack[top + 1, 1] = start
        stack[top + 1, 2] = start + nl
        stack[top + 1, 3] = depth + 1
        top += 2
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), count[:n_nodes].copy())


def _best_split_numpy(xv, yv, pos, min_leaf):
    """Best ``(proxy, threshold)`` for one feature column, or ``None``."""
    m = xv.shape[0]
    order = np.argsort(xv, kind="stable")
    sv = xv[order]
    lp = np.cumsum(yv[order])[:-1]
    nl = np.arange(1, m, dtype=np.int64)
    ok = (sv[:-1] < sv[1:]) & (nl >= min_leaf) & (m - nl >= min_leaf)
    if not ok.any():
        return None
    lp, nl = lp[ok], nl[ok]
    thr = (sv[:-1][ok] + sv[1:][ok]) / 2.0
    ln = nl - lp
    nr = m - nl
    rp = pos - lp
    rn = nr - rp
    proxy = (lp * lp + ln * ln) / nl + (rp * rp + rn * rn) / nr
    k = int(np.argmax(proxy))
    return float(proxy[k]), float(thr[k])


def _grow_numpy(XT, y, mtry, min_split, min_leaf, max_depth, seed, stream):
    d, n = XT.shape
    rng = Pcg32(seed, stream)
    idx = np.array([rng.bounded(n) for _ in range(n)], dtype=np.int64)
    perm = list(range(d))
    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node():
        for arr, fill in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0), (count, 0)):
            arr.append(fill)
        return len(feature) - 1

    new_node()
    stack = [(0, idx, 0)]
    while stack:
        node, rows, depth = stack.pop()
        m = rows.shape[0]
        yv = y[rows].astype(np.int64)
        pos = int(yv.sum())
        count[node] = m
        value[node] = pos / m
        if pos == 0 or pos == m or m < min_split or (max_depth >= 0 and depth >= max_depth):
            continue
        neg = m - pos
        parent = (pos * pos + neg * neg) / m
        best, best_f, best_thr = -1.0, -1, 0.0
        visited = found = 0
        while found < mtry and visited < d:
            j = visited + rng.bounded(d - visited)
            perm[visited], perm[j] = perm[j], perm[visited]
            f = perm[visited]
            visited += 1
            xv = XT[f, rows]
            if xv.min() == xv.max():
                continue
            found += 1
            res = _best_split_numpy(xv, yv, pos, min_leaf)
            if res is None:
                continue
            proxy, thr = res
            if proxy > best or (proxy == best and (f < best_f or (f == best_f and thr < best_thr))):
                best, best_f, best_thr = proxy, f, thr
        if best_f < 0 or best - parent <= MIN_GAIN:
            continue
        go_left = XT[best_f, rows] <= best_thr
        feature[node] = best_f
        threshold[node] = best_thr
        lc = new_node()
        rc = new_node()
        left[node], right[node] = lc, rc
        stack.append((rc, rows[~go_left], depth + 1))
        stack.append((lc, rows[go_left], depth + 1))
    return (np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
            np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
            np.array(value, dtype=np.float64), np.array(count, dtype=np.int64))


def grow_tree(XT, y, mtry, min_split=2, min_leaf=1, max_depth=-1, seed=0, stream=0, *, jit=None):
    """Grow one tree on a bootstrap sample drawn from PCG32 ``(seed, stream)``.

    ``XT`` is the feature-major (transposed) float64 matrix, shape
    ``(n_features, n_rows)``; ``max_depth < 0`` means unlimited.
    """
    XT = np.ascontiguousarray(XT, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    use_jit = JIT_ENABLED if jit is None else jit
    fn = _grow_numba if use_jit else _grow_numpy
    return fn(XT, y, int(mtry), int(min_split), int(min_leaf), int(max_depth),
              np.uint64(seed), np.uint64(stream))


@njit
def _predict_numba(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def _predict_numpy(X, feature, threshold, left, right, value):
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    rows = np.arange(n)
    active = feature[node] >= 0
    while active.any():
        r = rows[active]
        nd = node[r]
        go_left = X[r, feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return value[node]


def predict_tree(X, tree, *, jit=None) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    feature, threshold, left, right, value, _ = tree
    use_jit = JIT_ENABLED if jit is None else jit
    fn = _predict_numba if use_jit else _predict_numpy
    return fn(X, feature, threshold, left, right, value)


@njit
def _predict_forest_numba(X, feature, threshold, left, right, value, roots):
    # All rows descend one level per sweep: the loads of one sweep are
    # independent, so cache misses on a large X overlap instead of chaining.
    # Trees are added in order, matching the per-tree path bit for bit.
    n = X.shape[0]
    n_trees = roots.shape[0]
    total = np.zeros(n, dtype=np.float64)
    node = np.empty(n, dtype=np.int64)
    for t in range(n_trees):
        for i in range(n):
            node[i] = roots[t]
        active = True
        while active:
            active = False
            for i in range(n):
                nd = node[i]
                f = feature[nd]
                if f >= 0:
                    node[i] = left[nd] if X[i, f] <= threshold[nd] else right[nd]
                    active = True
        for i in range(n):
            total[i] += value[node[i]]
    return total / n_trees


def pack_trees(trees):
    """Concatenate tree arrays; child indices are shifted to global node ids."""
    feature, threshold, left, right, value, roots = [], [], [], [], [], []
    offset = 0
    for f, thr, lc, rc, v, _ in trees:
        roots.append(offset)
        feature.append(f)
        threshold.append(thr)
        left.append(np.where(lc >= 0, lc + offset, -1))
        right.append(np.where(rc >= 0, rc + offset, -1))
        value.append(v)
        offset += f.shape[0]
    return (np.concatenate(feature), np.concatenate(threshold), np.concatenate(left),
            np.concatenate(right), np.concatenate(value), np.array(roots, dtype=np.int64))


def predict_forest(X, trees, packed=None, *, jit=None) -> np.ndarray:
    """Mean leaf value over ``trees`` (sequences of tree arrays)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    use_jit = JIT_ENABLED if jit is None else jit
    if use_jit:
        return _predict_forest_numba(X, *(packed or pack_trees(trees)))
    total = np.zeros(X.shape[0], dtype=np.float64)
    for tree in trees:
        total += _predict_numpy(X, *tree[:5])
    return total / len(trees)
