"""Thin-plate-spline fitting for landmark-driven torso warps.

The spline is fitted from target coordinates to source coordinates so a
target pixel can be pulled from the source image (backward mapping).
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .exceptions import TpsFitError


def tps_kernel(r):
    """U(r) = r^2 log r^2, with U(0) = 0."""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r2 > 0, r2 * np.log(np.where(r2 > 0, r2, 1.0)), 0.0)
    return out


@dataclass(frozen=True)
class TpsModel:
    control_points: np.ndarray  # (n, 2), target frame
    radial_weights: np.ndarray  # (n, 2)
    affine: np.ndarray  # (2, 3): [linear | translation]
    regularization_lambda: float = 0.0

    def side_condition_residual(self):
        """Largest violation of sum(w) = 0 and sum(w * x) = 0."""
        w = self.radial_weights
        c = self.control_points
        return float(max(np.abs(w.sum(axis=0)).max(), np.abs(c.T @ w).max()))


def fit_tps(target_pts, source_pts, lam=0.0):
    """Fit a spline that maps ``target_pts`` onto ``source_pts``."""
    tgt = check_points(target_pts, "target_pts")
    src = check_points(source_pts, "source_pts")
    if len(tgt) != len(src):
        raise TpsFitError(f"need equal point counts, got {len(tgt)} and {len(src)}")
    n = len(tgt)
    if n < 3:
        raise TpsFitError(f"need at least 3 correspondences, got {n}")
    if lam < 0:
        raise TpsFitError("regularization must be >= 0")
    centered = tgt - tgt.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, np.abs(centered).max())) < 2:
        raise TpsFitError("target control points are collinear")
    if len(np.unique(tgt, axis=0)) < n:
        raise TpsFitError("duplicate target control points")

    K = tps_kernel(cdist(tgt, tgt))
    P = np.hstack([np.ones((n, 1)), tgt])
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = K + lam * np.eye(n)
    L[:n, n:] = P
    L[n:, :n] = P.T
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = src
    try:
        sol = np.linalg.solve(L, rhs)
    except np.linalg.LinAlgError as exc:
        raise TpsFitError(f"singular TPS system: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise TpsFitError("TPS solution is not finite")
    w = sol[:n]
    t, lin = sol[n], sol[n + 1 :]
    affine = np.hstack([lin.T, t[:, None]])
    return TpsModel(tgt.copy(), w, affine, float(lam))


def evaluate_tps(model, points):
    """Evaluate the spline at (N, 2) points, or a single (2,) point."""
    single = np.ndim(points) == 1
    pts = check_points(points)
    A = model.affine
    # elementwise accumulation keeps each row independent of the batch size
    out = np.column_stack(
        [
            A[0, 0] * pts[:, 0] + A[0, 1] * pts[:, 1] + A[0, 2],
            A[1, 0] * pts[:, 0] + A[1, 1] * pts[:, 1] + A[1, 2],
        ]
    )
    if len(pts):
        U = tps_kernel(cdist(pts, model.control_points))
        for j, wj in enumerate(model.radial_weights):
            out += U[:, j : j + 1] * wj
    return out[0] if single else out


class ThinPlateSpline(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit(target_pts, source_pts)``, ``transform(points)``."""

    def __init__(self, regularization=0.0):
        self.regularization = regularization

    def fit(self, X, y):
        self.model_ = fit_tps(X, y, self.regularization)
        return self

    def transform(self, X):
        check_is_fitted(self, "model_")
        pts = check_points(X)
        return evaluate_tps(self.model_, pts)

    def fit_residual(self, y):
        """Distances between the fitted spline at the control points and ``y``."""
        check_is_fitted(self, "model_")
        pred = evaluate_tps(self.model_, self.model_.control_points)
        return np.hypot(*(pred - check_points(y)).T)
