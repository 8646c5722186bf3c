"""Reconstruction quality: relative L2 error and SSIM."""

from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DegenerateInputError, IncompatibleGridError
from .grid import grid_norm

__all__ = ["MetricReport", "relative_error", "ssim", "metric_report"]

SSIM_SIGMA = 1.5
SSIM_WIN = 11
K1, K2 = 0.01, 0.03


@dataclass(frozen=True)
class MetricReport:
    rel_err: float
    ssim: float
    data_misfit: float = 0.0
    data_range: float = 0.0

    def to_dict(self):
        return asdict(self)


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise IncompatibleGridError("reconstruction and truth live on different grids")


def relative_error(q_rec, q_true):
    """``||q_rec - q_true|| / ||q_true||`` in the grid L2 norm."""
    _check_same_grid(q_rec, q_true)
    denom = grid_norm(q_true)
    if denom == 0:
        raise DegenerateInputError("relative error undefined for a zero truth")
    return float(grid_norm(q_rec.with_values(q_rec.values - q_true.values)) / denom)


def ssim(q_rec, q_true, data_range=None):
    """Mean structural similarity with an 11-point Gaussian window (sigma 1.5).

    ``data_range`` defaults to ``max(q_true) - min(q_true)``.  Filtering uses
    reflected borders and the mean is taken over pixels at least half a
    window away from the edge; covariances are population (not sample)
    estimates.
    """
    _check_same_grid(q_rec, q_true)
    x = np.asarray(q_rec.values, dtype=float)
    y = np.asarray(q_true.values, dtype=float)
    if data_range is None:
        data_range = float(y.max() - y.min())
    if data_range <= 0:
        raise DegenerateInputError("SSIM needs a non-constant truth (dynamic range is zero)")
    c1 = (K1 * data_range) ** 2
    c2 = (K2 * data_range) ** 2
    truncate = ((SSIM_WIN - 1) // 2 - 0.5) / SSIM_SIGMA  # radius exactly (WIN-1)/2

    def blur(a):
        return gaussian_filter(a, sigma=SSIM_SIGMA, truncate=truncate, mode="reflect")

    mx, my = blur(x), blur(y)
    vx = blur(x * x) - mx * mx
    vy = blur(y * y) - my * my
    cxy = blur(x * y) - mx * my
    smap = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
    pad = (SSIM_WIN - 1) // 2
    if min(smap.shape) > 2 * pad:
        smap = smap[pad:-pad, pad:-pad]
    return float(np.mean(smap))


def metric_report(q_rec, q_true, data_misfit=0.0):
    rng = float(np.max(q_true.values) - np.min(q_true.values))
    return MetricReport(
        rel_err=relative_error(q_rec, q_true),
        ssim=ssim(q_rec, q_true, data_range=rng),
        data_misfit=float(data_misfit),
        data_range=rng,
    )
