"""One-way ANOVA and Tukey HSD with a quadrature studentized-range CDF.

The CDF of the studentized range ``Q = range(Z_1..Z_k) / S`` with
``S = sqrt(chi2_df / df)`` is

    P(Q <= q) = int_0^inf f_S(s) W(q s) ds,
    W(w)      = k int phi(z) [Phi(z) - Phi(z - w)]^(k-1) dz,

both integrals evaluated by composite Gauss-Legendre on truncated ranges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import fdtrc, ndtr

_Z_LO, _Z_HI = -8.5, 8.5
_GL_NODES = 8


def _composite_gl(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges)[:, None] / 2.0
    mid = (edges[:-1] + edges[1:])[:, None] / 2.0
    return (mid + half * x).ravel(), (half * w).ravel()


_Z, _WZ = _composite_gl(_Z_LO, _Z_HI, 40)
_PHI_Z = np.exp(-0.5 * _Z ** 2) / math.sqrt(2.0 * math.pi)
_CDF_Z = ndtr(_Z)


def _range_cdf(w: np.ndarray, k: int) -> np.ndarray:
    """``W(w)`` for an array of ranges ``w >= 0`` (studentized range with infinite df)."""
    inner = np.clip(_CDF_Z[None, :] - ndtr(_Z[None, :] - w[:, None]), 0.0, 1.0)
    return k * (inner ** (k - 1) * _PHI_Z[None, :]) @ _WZ


def _scale_nodes(df: float) -> tuple[np.ndarray, np.ndarray]:
    spread = 10.0 / math.sqrt(2.0 * df)
    lo, hi = max(0.0, 1.0 - spread), 1.0 + spread
    s, ws = _composite_gl(lo, hi, 64)
    log_f = (0.5 * df * math.log(df) - math.lgamma(0.5 * df) - (0.5 * df - 1.0) * math.log(2.0)
             + (df - 1.0) * np.log(s) - 0.5 * df * s ** 2)
    return s, ws * np.exp(log_f)


def studentized_range_cdf(q: float, k: int, df: float) -> float:
    """``P(Q <= q)`` for ``k`` groups and ``df`` error degrees of freedom (``inf`` allowed)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if df < 1:
        raise ValueError("df must be >= 1")
    if q <= 0:
        return 0.0
    if math.isinf(q):
        return 1.0
    if math.isinf(df):
        val = float(_range_cdf(np.array([q]), k)[0])
    else:
        s, ws = _scale_nodes(float(df))
        val = float(_range_cdf(q * s, k) @ ws)
    return min(1.0, max(0.0, val))


def studentized_range_ppf(p: float, k: int, df: float, tol: float = 1e-7) -> float:
    """Quantile by bisection on :func:`studentized_range_cdf`."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    lo, hi = 0.0, 10.0
    while studentized_range_cdf(hi, k, df) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if studentized_range_cdf(mid, k, df) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PairComparison:
    a: str
    b: str
    diff: float  # mean(a) - mean(b)
    q: float
    p: float
    significant: bool


@dataclass
class TukeyResult:
    names: list[str]
    means: np.ndarray
    sizes: np.ndarray
    mse: float
    df: int
    f_stat: float
    f_pvalue: float
    alpha: float
    q_crit: float
    pairs: list[PairComparison] = field(default_factory=list)
    degenerate: bool = False

    def pair(self, a: str, b: str) -> PairComparison:
        for pc in self.pairs:
            if pc.a == a and pc.b == b:
                return pc
            if pc.a == b and pc.b == a:
                return PairComparison(a, b, -pc.diff, pc.q, pc.p, pc.significant)
        raise KeyError((a, b))


def tukey_hsd(groups: Sequence[Sequence[float]], alpha: float = 0.05,
              names: Optional[Sequence[str]] = None) -> TukeyResult:
    """All-pairs Tukey HSD (Tukey-Kramer for unequal sizes) after a one-way ANOVA."""
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    k = len(arrays)
    if k < 2:
        raise ValueError("Tukey HSD needs at least two groups")
    if any(a.size < 2 for a in arrays):
        raise ValueError("every group needs at least two values")
    names = [str(i) for i in range(k)] if names is None else [str(n) for n in names]
    sizes = np.array([a.size for a in arrays])
    means = np.array([a.mean() for a in arrays])
    df = int(sizes.sum() - k)
    sse = float(sum(((a - m) ** 2).sum() for a, m in zip(arrays, means)))
    mse = sse / df
    grand = np.concatenate(arrays).mean()
    ssb = float((sizes * (means - grand) ** 2).sum())
    degenerate = mse <= 0.0
    if degenerate:
        f_stat = 0.0 if ssb == 0 else math.inf
        f_p = 1.0 if ssb == 0 else 0.0
    else:
        f_stat = (ssb / (k - 1)) / mse
        f_p = float(fdtrc(k - 1, df, f_stat))
    q_crit = studentized_range_ppf(1.0 - alpha, k, df)

    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = float(means[i] - means[j])
            if degenerate:
                q = 0.0 if diff == 0 else math.inf
                p = 1.0 if diff == 0 else 0.0
            else:
                se = math.sqrt(mse / 2.0 * (1.0 / sizes[i] + 1.0 / sizes[j]))
                q = abs(diff) / se
                p = 1.0 - studentized_range_cdf(q, k, df)
            pairs.append(PairComparison(names[i], names[j], diff, q, p, p < alpha))
    return TukeyResult(names, means, sizes, mse, df, f_stat, f_p, alpha, q_crit, pairs, degenerate)
