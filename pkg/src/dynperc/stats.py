"""Small statistics helpers: batch-means errors and least-squares fits."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MIN_BATCHES = 20


def mean_se(x) -> tuple[float, float]:
    """Sample mean and its naive standard error (nan when fewer than 2 values)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    if x.size < 2:
        return float(x.mean()), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(x.size))


def batch_se(values, n_batches: int = MIN_BATCHES) -> float:
    """Standard error of the mean from ``n_batches`` contiguous equal batches.

    Trailing samples that do not fill a batch are left out of the error
    estimate (the mean itself always uses every sample).
    """
    x = np.asarray(values, dtype=float)
    n_batches = max(n_batches, MIN_BATCHES)
    size = x.size // n_batches
    if size < 1:
        return mean_se(x)[1]
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def batch_variance(x, n_batches: int = MIN_BATCHES) -> tuple[float, float]:
    """Unbiased variance and a batch-means error for it."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float("nan"), float("nan")
    m = x.mean()
    v = x.var(ddof=1)
    return float(v), batch_se((x - m) ** 2 * x.size / (x.size - 1), n_batches)


def batch_covariance(x, y, n_batches: int = MIN_BATCHES) -> tuple[float, float]:
    """Unbiased covariance (same formula as :func:`batch_variance` when x is y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return float("nan"), float("nan")
    prod = (x - x.mean()) * (y - y.mean()) * x.size / (x.size - 1)
    return float(prod.mean()), batch_se(prod, n_batches)


def ratio_se(num, den, n_batches: int = MIN_BATCHES) -> tuple[float, float]:
    """Ratio of means with a delta-method batch error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    r = num.mean() / den.mean()
    lin = (num - r * den) / den.mean()
    return float(r), batch_se(lin, n_batches)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float
    n: int


def linear_fit(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        return LinearFit(float("nan"), float("nan"), float("nan"), int(x.size))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2, int(x.size))
