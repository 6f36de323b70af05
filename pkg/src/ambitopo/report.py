"""Numeric distribution exports: histograms and Gaussian KDE curves.

The KDE uses Scott's rule with a bandwidth floor so single-value or
zero-variance samples yield a narrow but well-defined curve instead of a
singular one.
"""

from __future__ import annotations

import numpy as np

BANDWIDTH_FLOOR = 1e-3


def scott_bandwidth(values: np.ndarray, floor: float = BANDWIDTH_FLOOR) -> float:
    """Scott's rule sigma * n^(-1/5), floored."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot pick a bandwidth for an empty sample")
    sigma = float(np.std(values))
    return max(sigma * values.size ** (-0.2), floor)


def gaussian_kde_curve(
    values, n_points: int = 256, bandwidth: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """(xs, density) samples of a Gaussian kernel density estimate.

    The grid spans the data range padded by three bandwidths.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot estimate a density from an empty sample")
    h = bandwidth if bandwidth is not None else scott_bandwidth(values)
    lo = float(values.min()) - 3.0 * h
    hi = float(values.max()) + 3.0 * h
    xs = np.linspace(lo, hi, n_points)
    z = (xs[:, None] - values[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (values.size * h * np.sqrt(2.0 * np.pi))
    return xs, density


def histogram(values, bins: int = 30) -> dict:
    """Counts and normalized density over equal-width bins."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    counts, edges = np.histogram(values, bins=bins)
    widths = np.diff(edges)
    density = counts / (values.size * np.where(widths > 0, widths, 1.0))
    return {"edges": edges, "counts": counts, "density": density}
