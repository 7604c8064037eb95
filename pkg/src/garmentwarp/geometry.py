"""Bone-relative polar warping of sleeve pixels.

Every pixel ``X`` of a target sleeve is described in polar coordinates
``(r, phi1)`` relative to the upper-arm bone ``B -> A`` of the target arm
(A = shoulder, B = elbow, C = wrist).  The matching source location ``X'``
is reconstructed around the source arm ``A', B', C'`` by blending two
hypotheses: "the angle to the upper bone is kept" and "the angle to the
forearm bone is kept".  The blend weight ``h`` combines a smooth weight
``f`` with its rounded version, switched by a logistic ``g`` on the elbow
angle that contains ``X``.

Angle convention
----------------
``phi1`` and ``phi2`` are measured through ``X``: inside the wedge spanned by
BA and BC they sum to the interior elbow angle; outside it they sum to the
reflex angle ``2*pi - interior``.  The source position is placed on the
matching side of ``B'A'`` (toward ``C'`` for wedge pixels, away from it
otherwise).  Coordinates are image pixels, origin top-left, y downward.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .exceptions import DegenerateGeometryError

TWO_PI = 2.0 * np.pi
_MODES = ("hard", "smooth")
_TIE_RULES = ("up", "down")


class Point2(NamedTuple):
    x: float
    y: float


class PolarCoord(NamedTuple):
    r: float
    phi1: float


class AngleDecomposition(NamedTuple):
    """Angles of a pixel relative to an arm.

    ``side`` is the side of line BA that X lies on, relative to C's side
    (+1 same side, -1 opposite, 0 when X or C is on the line).  ``inner`` tells whether X is
    inside the elbow wedge, which decides whether ``phi`` is the interior or
    the reflex elbow angle.
    """

    phi1: float
    phi2: float
    phi: float
    side: int
    inner: bool


def _as_point(p):
    p = Point2(float(p[0]), float(p[1]))
    if not (np.isfinite(p.x) and np.isfinite(p.y)):
        raise ValueError(f"non-finite point {p}")
    return p


@dataclass(frozen=True)
class ArmChain:
    """Shoulder, elbow and wrist of one arm (A, B, C)."""

    shoulder: Point2
    elbow: Point2
    wrist: Point2

    def __post_init__(self):
        for name in ("shoulder", "elbow", "wrist"):
            object.__setattr__(self, name, _as_point(getattr(self, name)))
        a, b, c = self.as_array()
        if np.hypot(*(a - b)) == 0.0:
            raise DegenerateGeometryError("upper-arm bone has zero length")
        if np.hypot(*(c - b)) == 0.0:
            raise DegenerateGeometryError("forearm bone has zero length")

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (3, 2):
            raise ValueError(f"arm landmarks must have shape (3, 2), got {arr.shape}")
        return cls(Point2(*arr[0]), Point2(*arr[1]), Point2(*arr[2]))

    def as_array(self):
        return np.array([self.shoulder, self.elbow, self.wrist], dtype=float)

    @property
    def upper_length(self):
        return float(np.hypot(self.shoulder.x - self.elbow.x, self.shoulder.y - self.elbow.y))

    @property
    def lower_length(self):
        return float(np.hypot(self.wrist.x - self.elbow.x, self.wrist.y - self.elbow.y))

    @property
    def interior_angle(self):
        """Unsigned elbow angle ABC in [0, pi]."""
        a, b, c = self.as_array()
        return unsigned_angle(a - b, c - b)

    @property
    def flexion(self):
        return np.pi - self.interior_angle


@dataclass(frozen=True)
class SleeveWarpParams:
    """Weighting parameters.

    ``inner_mode`` / ``outer_mode`` select whether the blend weight uses the
    rounded (``hard``) or the raw (``smooth``) ``f`` inside and outside the
    elbow wedge.  ``tie_rule`` decides how ``f == 0.5`` rounds.
    """

    steepness_a: float = 12.0
    inner_mode: str = "hard"
    outer_mode: str = "smooth"
    tie_rule: str = "up"

    def __post_init__(self):
        if not (np.isfinite(self.steepness_a) and self.steepness_a > 0):
            raise ValueError(f"steepness_a must be > 0, got {self.steepness_a}")
        if self.inner_mode not in _MODES:
            raise ValueError(f"inner_mode must be one of {_MODES}")
        if self.outer_mode not in _MODES:
            raise ValueError(f"outer_mode must be one of {_MODES}")
        if self.tie_rule not in _TIE_RULES:
            raise ValueError(f"tie_rule must be one of {_TIE_RULES}")


def _cross(u, v):
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _dot(u, v):
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]


def unsigned_angle(u, v):
    """Non-reflex angle between two vectors, in [0, pi]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.hypot(u[..., 0], u[..., 1]) == 0) or np.any(np.hypot(v[..., 0], v[..., 1]) == 0):
        raise DegenerateGeometryError("angle with a zero-length vector is undefined")
    ang = np.arctan2(np.abs(_cross(u, v)), _dot(u, v))
    return float(ang) if ang.ndim == 0 else ang


def _orientation(arm_arr):
    """Sign of the turn from BA to BC; straight (or fully folded) arms count as +1."""
    a, b, c = arm_arr
    s = np.sign(_cross(a - b, c - b))
    return 1.0 if s == 0 else float(s)


def polar_angles(points, arm):
    """Vectorised decomposition of pixels relative to ``arm``.

    Returns ``(r, phi1, phi2, inner)`` arrays.  ``phi1 + phi2`` equals the
    interior elbow angle where ``inner`` is true and the reflex angle
    elsewhere.
    """
    pts = check_points(points)
    arr = arm.as_array()
    a, b, _ = arr
    alpha = arm.interior_angle
    sigma = _orientation(arr)
    ua = (a - b) / np.hypot(*(a - b))
    d = pts - b
    r = np.hypot(d[:, 0], d[:, 1])
    # signed angle from BA, positive toward the wrist side
    theta = np.arctan2(sigma * _cross(ua, d), _dot(ua, d))
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    inner = theta <= alpha
    phi1 = np.where(inner, theta, TWO_PI - theta)
    phi2 = np.where(inner, alpha - theta, theta - alpha)
    return r, phi1, phi2, inner


def decompose_angles(x, arm):
    """Angles (phi1, phi2, phi) of pixel ``x`` relative to ``arm``."""
    x = _as_point(x)
    _, phi1, phi2, inner = polar_angles([x], arm)
    arr = arm.as_array()
    a, b, c = arr
    side = int(np.sign(_cross(a - b, np.asarray(x) - b)) * np.sign(_cross(a - b, c - b)))
    p1, p2 = float(phi1[0]), float(phi2[0])
    return AngleDecomposition(p1, p2, p1 + p2, side, bool(inner[0]))


def f_weight(phi1, phi2):
    """``phi1**2 / (phi1**2 + phi2**2)``; 0.5 where both angles vanish."""
    p1 = np.asarray(phi1, dtype=float)
    p2 = np.asarray(phi2, dtype=float)
    if np.any(p1 < 0) or np.any(p2 < 0):
        raise ValueError("f_weight needs non-negative angles")
    num = p1 * p1
    den = num + p2 * p2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.5)
    return float(out) if out.ndim == 0 else out


def g_weight(phi, steepness_a=12.0):
    """Logistic switch centred at pi: ~1 inside the elbow wedge, ~0 outside."""
    if not steepness_a > 0:
        raise ValueError("steepness_a must be > 0")
    out = expit(steepness_a * (np.pi - np.asarray(phi, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def round_weight(f, tie_rule="up"):
    f = np.asarray(f, dtype=float)
    out = (f >= 0.5) if tie_rule == "up" else (f > 0.5)
    out = out.astype(float)
    return float(out) if out.ndim == 0 else out


def h_weight(phi1, phi2, params=None):
    """Blend weight between the upper-bone and forearm hypotheses."""
    params = params or SleeveWarpParams()
    p1 = np.asarray(phi1, dtype=float)
    p2 = np.asarray(phi2, dtype=float)
    f = np.asarray(f_weight(p1, p2))
    rf = np.asarray(round_weight(f, params.tie_rule))
    g = np.asarray(g_weight(p1 + p2, params.steepness_a))
    w_in = rf if params.inner_mode == "hard" else f
    w_out = rf if params.outer_mode == "hard" else f
    out = g * w_in + (1.0 - g) * w_out
    return float(out) if out.ndim == 0 else out


def map_sleeve_points(points, target_arm, source_arm, params=None):
    """Map target-frame pixels to source-frame locations (vectorised).

    Pixels coinciding with the target elbow map to the source elbow.
    """
    params = params or SleeveWarpParams()
    r, phi1, phi2, inner = polar_angles(points, target_arm)
    h = h_weight(phi1, phi2, params)

    src = source_arm.as_array()
    a_s, b_s, _ = src
    alpha_s = source_arm.interior_angle
    phi_src = np.where(inner, alpha_s, TWO_PI - alpha_s)
    phi1_src = phi1 * (1.0 - h) + (phi_src - phi2) * h

    ratio_upper = source_arm.upper_length / target_arm.upper_length
    ratio_lower = source_arm.lower_length / target_arm.lower_length
    r_src = r * ((1.0 - h) * ratio_upper + h * ratio_lower)

    sigma = _orientation(src)
    psi = sigma * np.where(inner, phi1_src, -phi1_src)
    ua = (a_s - b_s) / np.hypot(*(a_s - b_s))
    perp = np.array([-ua[1], ua[0]])
    c, s = np.cos(psi), np.sin(psi)
    out = b_s + r_src[:, None] * (c[:, None] * ua + s[:, None] * perp)
    return out


def map_sleeve_point(x, target_arm, source_arm, params=None):
    """Source pixel X' for a single target pixel X."""
    out = map_sleeve_points([_as_point(x)], target_arm, source_arm, params)[0]
    return Point2(float(out[0]), float(out[1]))


def capsule_distance(points, arm):
    """Distance from each point to the shoulder-elbow-wrist polyline."""
    pts = check_points(points)
    a, b, c = arm.as_array()
    return np.minimum(_segment_distance(pts, b, a), _segment_distance(pts, b, c))


def _segment_distance(pts, p0, p1):
    d = p1 - p0
    t = np.clip(_dot(pts - p0, d) / _dot(d, d), 0.0, 1.0)
    proj = p0 + t[:, None] * d
    diff = pts - proj
    return np.hypot(diff[:, 0], diff[:, 1])


def _arm_from_input(value):
    if isinstance(value, ArmChain):
        return value
    return ArmChain.from_array(value)


class SleeveWarp(TransformerMixin, BaseEstimator):
    """Backward sleeve map as an estimator.

    ``fit(X, y)`` takes the target arm landmarks ``X`` and source arm
    landmarks ``y`` (each an :class:`ArmChain` or a (3, 2) array of
    shoulder, elbow, wrist).  ``transform(points)`` maps target pixel
    coordinates to source coordinates.

    Examples
    --------
    >>> warp = SleeveWarp().fit([[0, 0], [0, 10], [0, 20]], [[0, 0], [0, 5], [0, 10]])
    >>> warp.transform([[0, 4]]).round(6).tolist()
    [[0.0, 2.0]]
    """

    def __init__(self, steepness_a=12.0, inner_mode="hard", outer_mode="smooth", tie_rule="up"):
        self.steepness_a = steepness_a
        self.inner_mode = inner_mode
        self.outer_mode = outer_mode
        self.tie_rule = tie_rule

    def fit(self, X, y):
        self.params_ = SleeveWarpParams(self.steepness_a, self.inner_mode, self.outer_mode, self.tie_rule)
        self.target_arm_ = _arm_from_input(X)
        self.source_arm_ = _arm_from_input(y)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        pts = check_points(X)
        if len(pts) == 0:
            return np.empty((0, 2))
        return map_sleeve_points(pts, self.target_arm_, self.source_arm_, self.params_)

    def decompose(self, X):
        """Per-point ``(r, phi1, phi2, inner)`` relative to the target arm."""
        check_is_fitted(self, "params_")
        return polar_angles(X, self.target_arm_)

    def inverse(self):
        """Estimator mapping source pixels to the target frame (roles swapped)."""
        check_is_fitted(self, "params_")
        return SleeveWarp(**self.get_params()).fit(self.source_arm_, self.target_arm_)
