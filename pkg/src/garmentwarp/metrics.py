"""Image-quality metrics: windowed SSIM and masked mean absolute error."""

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ._validation import check_mask, check_same_shape
from .exceptions import DimensionMismatchError


@dataclass(frozen=True)
class SsimParams:
    window: int = 8
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be > 0")


def to_luma(img):
    """BT.601 luma of an RGB(A) image as float64; 2-D input passes through."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] >= 3:
        return arr[..., 0] * 0.299 + arr[..., 1] * 0.587 + arr[..., 2] * 0.114
    raise ValueError(f"cannot take luma of shape {arr.shape}")


def ssim_map(a, b, params=None):
    """Local SSIM for every fully-contained ``window x window`` block (stride 1)."""
    params = params or SsimParams()
    if np.shape(a)[:2] != np.shape(b)[:2]:
        raise DimensionMismatchError(f"ssim inputs differ: {np.shape(a)} vs {np.shape(b)}")
    x = to_luma(a)
    y = to_luma(b)
    win = min(params.window, *x.shape)
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2

    def local_mean(z):
        return sliding_window_view(z, (win, win)).mean(axis=(-2, -1))

    mx, my = local_mean(x), local_mean(y)
    sxx = local_mean(x * x) - mx * mx
    syy = local_mean(y * y) - my * my
    sxy = local_mean(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(a, b, params=None):
    """Mean structural similarity over all windows of the luma images."""
    return float(np.mean(ssim_map(a, b, params)))


def mean_abs_error(a, b, region=None):
    """Mean |a - b| over ``region`` pixels and colour channels.

    RGBA inputs are compared on RGB.  An empty region returns 0.0 and emits a
    ``RuntimeWarning``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"mean_abs_error inputs differ: {a.shape} vs {b.shape}")
    if a.ndim == 3 and a.shape[2] == 4:
        a, b = a[..., :3], b[..., :3]
    if region is None:
        region = np.ones(a.shape[:2], dtype=bool)
    region = check_mask(region)
    check_same_shape(a, region, names=("images", "region"))
    if not region.any():
        warnings.warn("mean_abs_error over an empty region", RuntimeWarning, stacklevel=2)
        return 0.0
    return float(np.abs(a[region] - b[region]).mean())
