"""Part-based garment transfer from a model image onto a person image.

Stages: split the model garment into torso and sleeves, build the target
clothing mask ``S`` (a deterministic forward-warp surrogate unless an
override is given), backward-warp each part restricted to ``S``, paint the
parts in z-order, and paste the result onto the person image with the
old garment removed.  Pixels of ``S`` that receive no garment content form
the hole mask.
"""

import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image, check_mask, check_same_shape
from .exceptions import DimensionMismatchError
from .geometry import SleeveWarp, capsule_distance
from .imaging import (
    ARM_SKIN_LABELS,
    GARMENT_LABELS,
    Label,
    dilate,
    mask_lookup,
    morph_close,
    overlay,
    pixel_grid,
    rasterize_points,
    sample_bilinear,
    sample_nearest,
)
from .pose import DEFAULT_MIN_CONF, DEFAULT_TORSO_SUBSET, arm_chain, torso_landmarks
from .tps import ThinPlateSpline

PART_NAMES = ("torso", "left_sleeve", "right_sleeve")
DEFAULT_Z_ORDER = PART_NAMES
TILE_SIZE = 32768
JOBS_ENV = "GARMENTWARP_JOBS"
_SAMPLERS = {"bilinear": sample_bilinear, "nearest": sample_nearest}


def default_jobs():
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


@dataclass
class GarmentParts:
    torso: np.ndarray
    left_sleeve: np.ndarray
    right_sleeve: np.ndarray

    def __post_init__(self):
        self.torso = check_mask(self.torso, "torso")
        self.left_sleeve = check_mask(self.left_sleeve, "left_sleeve")
        self.right_sleeve = check_mask(self.right_sleeve, "right_sleeve")
        check_same_shape(self.torso, self.left_sleeve, self.right_sleeve, names=PART_NAMES)
        if (self.torso & self.left_sleeve).any() or (self.torso & self.right_sleeve).any() or (
            self.left_sleeve & self.right_sleeve
        ).any():
            raise ValueError("garment parts must be pairwise disjoint")

    def items(self):
        return [(name, getattr(self, name)) for name in PART_NAMES]

    @property
    def union(self):
        return self.torso | self.left_sleeve | self.right_sleeve


@dataclass
class WarpOutput:
    warped_garment: np.ndarray
    coverage: np.ndarray
    target_mask: np.ndarray
    hole_mask: np.ndarray
    composite: np.ndarray
    part_warps: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)


class CountingMap:
    """Wraps a point map and counts how many points it has evaluated."""

    def __init__(self, fn):
        self.fn = fn
        self.count = 0
        self._lock = threading.Lock()

    def __call__(self, points):
        with self._lock:
            self.count += len(points)
        return self.fn(points)


def garment_mask_from_labels(labels):
    return np.isin(np.asarray(labels), [int(v) for v in GARMENT_LABELS])


def segment_parts(garment_mask, labels):
    """Split a garment mask into torso and sleeves using arm-region labels.

    Garment pixels that fall on neither arm region count as torso.
    """
    garment = check_mask(garment_mask, "garment_mask")
    labels = np.asarray(labels)
    check_same_shape(garment, labels, names=("garment_mask", "labels"))
    left = garment & np.isin(labels, [Label.LEFT_SLEEVE, Label.LEFT_ARM_SKIN])
    right = garment & np.isin(labels, [Label.RIGHT_SLEEVE, Label.RIGHT_ARM_SKIN])
    torso = garment & ~(left | right)
    return GarmentParts(torso, left, right)


def map_tiles(mapping, points, n_jobs=1):
    """Apply ``mapping`` to fixed-size tiles of ``points``, optionally in threads.

    Tile boundaries do not depend on ``n_jobs`` so results are identical for
    any degree of parallelism.
    """
    if len(points) == 0:
        return np.empty((0, 2))
    tiles = [points[i : i + TILE_SIZE] for i in range(0, len(points), TILE_SIZE)]
    if n_jobs <= 1 or len(tiles) == 1:
        out = [mapping(t) for t in tiles]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            out = list(pool.map(mapping, tiles))
    return np.concatenate(out, axis=0)


def warp_part(source_img, part, mapping, target_mask, sampling="bilinear", n_jobs=1):
    """Backward-warp one garment part into the target frame.

    ``mapping`` takes (N, 2) target pixel coordinates and returns source
    coordinates.  It is only evaluated on pixels of ``target_mask``.  A
    target pixel is covered when its source location lands on ``part``.
    Returns ``(image, coverage)``.
    """
    source_img = check_image(source_img, "source_img")
    part = check_mask(part, "part")
    target_mask = check_mask(target_mask, "target_mask")
    check_same_shape(source_img, part, names=("source_img", "part"))
    sampler = _SAMPLERS[sampling]

    h, w = target_mask.shape
    out = np.zeros((h, w, 4), dtype=np.uint8)
    coverage = np.zeros((h, w), dtype=bool)
    pts = pixel_grid(target_mask)
    if len(pts) == 0 or not part.any():
        return out, coverage
    src = map_tiles(mapping, pts, n_jobs)
    hit = mask_lookup(part, src)
    if hit.any():
        values = sampler(source_img, src[hit], valid=part)
        ok = values[:, 3] > 0
        xs = pts[hit, 0].astype(int)[ok]
        ys = pts[hit, 1].astype(int)[ok]
        out[ys, xs] = values[ok]
        coverage[ys, xs] = True
    return out, coverage


def compose(parts_warped, z_order=None):
    """Paint warped parts back to front; later parts win on overlap.

    ``parts_warped`` is a list of ``(image, coverage)`` pairs or a dict of
    them keyed by part name.  ``z_order`` lists keys (or indices) from
    bottom to top; by default the given order is used.
    """
    if isinstance(parts_warped, dict):
        keys = list(z_order) if z_order is not None else list(parts_warped)
        layers = [parts_warped[k] for k in keys if k in parts_warped]
    else:
        keys = list(z_order) if z_order is not None else range(len(parts_warped))
        layers = [parts_warped[k] for k in keys]
    if not layers:
        raise ValueError("compose needs at least one part")
    shape = layers[0][0].shape
    out = np.zeros(shape, dtype=np.uint8)
    coverage = np.zeros(shape[:2], dtype=bool)
    for img, cov in layers:
        img = check_image(img)
        cov = check_mask(cov)
        if img.shape != shape or cov.shape != shape[:2]:
            raise DimensionMismatchError("compose: parts have mismatched dimensions")
        out[cov] = img[cov]
        coverage |= cov
    return out, coverage


def neutral_fill_color(person_img, removed):
    """Median colour of the one-pixel ring just outside the removed region."""
    ring = dilate(removed, 1) & ~removed
    if not ring.any():
        return np.array([128, 128, 128, 255], dtype=np.uint8)
    rgb = np.median(person_img[ring][:, :3], axis=0)
    return np.concatenate([np.rint(rgb), [255]]).astype(np.uint8)


def try_on(person_img, person_labels, warped, target_mask, inpaint_fill=False):
    """Remove the old garment and arm skin, then overlay the warped garment.

    Holes (``S`` minus coverage) are exported untouched unless
    ``inpaint_fill`` is set, in which case each hole pixel copies the nearest
    covered garment pixel.  This fill is a stand-in, not a learned inpainter.
    """
    person_img = check_image(person_img, "person_img")
    labels = np.asarray(person_labels)
    garment, coverage = warped
    garment = check_image(garment, "warped garment")
    coverage = check_mask(coverage, "coverage")
    S = check_mask(target_mask, "target_mask")
    check_same_shape(person_img, labels, garment, coverage, S, names=("person", "labels", "garment", "coverage", "S"))

    removed = np.isin(labels, [int(v) for v in GARMENT_LABELS + ARM_SKIN_LABELS])
    base = person_img.copy()
    base[removed] = neutral_fill_color(person_img, removed)

    coverage = coverage & S
    garment = garment.copy()
    garment[~coverage] = 0
    hole = S & ~coverage
    composite = overlay(base, garment, coverage)
    if inpaint_fill and hole.any() and coverage.any():
        _, (iy, ix) = ndimage.distance_transform_edt(~coverage, return_indices=True)
        composite[hole] = garment[iy[hole], ix[hole]]
    return WarpOutput(garment, coverage, S, hole, composite)


def _supersample_offsets(k):
    off = (np.arange(k) + 0.5) / k - 0.5
    ox, oy = np.meshgrid(off, off)
    return np.column_stack([ox.ravel(), oy.ravel()])


def forward_rasterize(part, mapping, scale=1.0):
    """Push the pixels of ``part`` through ``mapping`` and rasterise them.

    Each pixel is split into ``k x k`` sub-samples with ``k`` growing with the
    expected magnification so enlarged parts do not come out speckled.
    """
    part = check_mask(part)
    if not part.any():
        return np.zeros_like(part)
    k = int(min(6, max(1, np.ceil(1.5 * scale))))
    pts = pixel_grid(part)
    sub = (pts[:, None, :] + _supersample_offsets(k)[None]).reshape(-1, 2)
    return rasterize_points(mapping(sub), part.shape)


def _tps_scale(src_pts, dst_pts):
    s = np.asarray(src_pts, float)
    d = np.asarray(dst_pts, float)
    ss = np.sqrt(((s - s.mean(0)) ** 2).sum(1).mean())
    ds = np.sqrt(((d - d.mean(0)) ** 2).sum(1).mean())
    return ds / ss if ss > 0 else 1.0


def _bone_scale(source_arm, target_arm):
    return max(
        target_arm.upper_length / source_arm.upper_length,
        target_arm.lower_length / source_arm.lower_length,
    )


def synthesize_target_mask(
    parts,
    model_pose,
    person_pose,
    sleeve_params=None,
    torso_subset=DEFAULT_TORSO_SUBSET,
    torso_midpoints=False,
    tps_lambda=0.0,
    min_conf=DEFAULT_MIN_CONF,
    close_radius=2,
):
    """Deterministic stand-in for a learned target-mask predictor.

    Sleeves are pushed forward with the sleeve map fitted source -> target,
    the torso with a spline fitted source -> target; each part is closed
    with a disc of ``close_radius`` and the parts are united.
    """
    sleeve_params = sleeve_params or {}
    S = np.zeros_like(parts.torso)
    for side in ("left", "right"):
        part = getattr(parts, f"{side}_sleeve")
        if not part.any():
            continue
        src_arm = arm_chain(model_pose, side, min_conf)
        dst_arm = arm_chain(person_pose, side, min_conf)
        fwd = SleeveWarp(**sleeve_params).fit(src_arm, dst_arm)
        S |= morph_close(forward_rasterize(part, fwd.transform, _bone_scale(src_arm, dst_arm)), close_radius)
    if parts.torso.any():
        src = torso_landmarks(model_pose, torso_subset, torso_midpoints, min_conf)
        dst = torso_landmarks(person_pose, torso_subset, torso_midpoints, min_conf)
        fwd = ThinPlateSpline(tps_lambda).fit(src, dst)
        S |= morph_close(forward_rasterize(parts.torso, fwd.transform, _tps_scale(src, dst)), close_radius)
    return S


class GarmentTransfer(BaseEstimator):
    """Transfer the garment worn in a model image onto a person.

    ``fit`` takes the model image, its part label map and its keypoints;
    ``transform`` takes the same for the person and returns a
    :class:`WarpOutput`.

    Parameters
    ----------
    steepness_a, inner_mode, outer_mode, tie_rule
        Sleeve-map weighting, see :class:`garmentwarp.geometry.SleeveWarpParams`.
    sampling : {'bilinear', 'nearest'}
    z_order : sequence of part names, bottom to top.
    capsule_scale : float
        Sleeve domain radius as a multiple of the source sleeve half-width
        (times the bone magnification when the person's bones are longer).
    close_radius : int
        Closing radius applied to each forward-warped part of the mask surrogate.
    torso_landmarks, torso_midpoints, tps_lambda
        Control points and smoothing of the torso spline.
    min_conf : float
        Keypoint confidence threshold.
    inpaint_fill : bool
        Fill holes with the nearest covered garment colour.
    n_jobs : int or None
        Threads used for per-pixel mapping; ``None`` reads ``GARMENTWARP_JOBS``.
    """

    def __init__(
        self,
        steepness_a=12.0,
        inner_mode="hard",
        outer_mode="smooth",
        tie_rule="up",
        sampling="bilinear",
        z_order=DEFAULT_Z_ORDER,
        capsule_scale=1.5,
        close_radius=2,
        torso_landmarks=DEFAULT_TORSO_SUBSET,
        torso_midpoints=False,
        tps_lambda=0.0,
        min_conf=DEFAULT_MIN_CONF,
        inpaint_fill=False,
        n_jobs=None,
    ):
        self.steepness_a = steepness_a
        self.inner_mode = inner_mode
        self.outer_mode = outer_mode
        self.tie_rule = tie_rule
        self.sampling = sampling
        self.z_order = z_order
        self.capsule_scale = capsule_scale
        self.close_radius = close_radius
        self.torso_landmarks = torso_landmarks
        self.torso_midpoints = torso_midpoints
        self.tps_lambda = tps_lambda
        self.min_conf = min_conf
        self.inpaint_fill = inpaint_fill
        self.n_jobs = n_jobs

    def _sleeve_params(self):
        return dict(
            steepness_a=self.steepness_a,
            inner_mode=self.inner_mode,
            outer_mode=self.outer_mode,
            tie_rule=self.tie_rule,
        )

    def _validate(self):
        if self.sampling not in _SAMPLERS:
            raise ValueError(f"sampling must be one of {sorted(_SAMPLERS)}")
        unknown = set(self.z_order) - set(PART_NAMES)
        if unknown:
            raise ValueError(f"unknown parts in z_order: {sorted(unknown)}")
        if self.capsule_scale <= 0:
            raise ValueError("capsule_scale must be > 0")
        if not 0 <= self.min_conf <= 1:
            raise ValueError("min_conf must lie in [0, 1]")

    def fit(self, image, labels, keypoints, garment_mask=None):
        self._validate()
        self.model_image_ = check_image(image, "model image")
        labels = np.asarray(labels)
        check_same_shape(self.model_image_, labels, names=("model image", "model labels"))
        if garment_mask is None:
            garment_mask = garment_mask_from_labels(labels)
        self.parts_ = segment_parts(garment_mask, labels)
        self.model_pose_ = keypoints
        return self

    def target_mask(self, person_pose):
        check_is_fitted(self, "parts_")
        return synthesize_target_mask(
            self.parts_,
            self.model_pose_,
            person_pose,
            self._sleeve_params(),
            tuple(self.torso_landmarks),
            self.torso_midpoints,
            self.tps_lambda,
            self.min_conf,
            self.close_radius,
        )

    def part_maps(self, person_pose):
        """Backward maps and their target-frame domains, keyed by part name."""
        check_is_fitted(self, "parts_")
        maps = {}
        shape = self.parts_.torso.shape
        yy, xx = np.mgrid[0 : shape[0], 0 : shape[1]]
        grid = np.column_stack([xx.ravel(), yy.ravel()]).astype(float)
        for side in ("left", "right"):
            part = getattr(self.parts_, f"{side}_sleeve")
            if not part.any():
                continue
            src_arm = arm_chain(self.model_pose_, side, self.min_conf)
            dst_arm = arm_chain(person_pose, side, self.min_conf)
            warp = SleeveWarp(**self._sleeve_params()).fit(dst_arm, src_arm)
            half_width = capsule_distance(pixel_grid(part), src_arm).max()
            radius = self.capsule_scale * max(half_width, 1.0) * max(1.0, _bone_scale(src_arm, dst_arm))
            domain = (capsule_distance(grid, dst_arm) <= radius).reshape(shape)
            maps[f"{side}_sleeve"] = (warp, domain)
        if self.parts_.torso.any():
            src = torso_landmarks(self.model_pose_, tuple(self.torso_landmarks), self.torso_midpoints, self.min_conf)
            dst = torso_landmarks(person_pose, tuple(self.torso_landmarks), self.torso_midpoints, self.min_conf)
            tps = ThinPlateSpline(self.tps_lambda).fit(dst, src)
            maps["torso"] = (tps, np.ones(shape, dtype=bool))
        return maps

    def transform(self, image, labels, keypoints, target_mask=None):
        check_is_fitted(self, "parts_")
        person = check_image(image, "person image")
        labels = np.asarray(labels)
        check_same_shape(person, labels, self.model_image_, names=("person image", "person labels", "model image"))
        n_jobs = default_jobs() if self.n_jobs is None else int(self.n_jobs)

        S = self.target_mask(keypoints) if target_mask is None else check_mask(target_mask, "target_mask").copy()
        check_same_shape(person, S, names=("person image", "target mask"))

        warped = {}
        evaluations = {}
        for name, (estimator, domain) in self.part_maps(keypoints).items():
            counter = CountingMap(estimator.transform)
            warped[name] = warp_part(
                self.model_image_, getattr(self.parts_, name), counter, S & domain, self.sampling, n_jobs
            )
            evaluations[name] = counter.count
        if warped:
            garment, coverage = compose(warped, self.z_order)
        else:
            garment, coverage = np.zeros_like(person), np.zeros(S.shape, dtype=bool)

        out = try_on(person, labels, (garment, coverage), S, self.inpaint_fill)
        out.part_warps = warped
        out.stats = {
            "map_evaluations": evaluations,
            "target_area": int(S.sum()),
            "covered_area": int(out.coverage.sum()),
            "hole_area": int(out.hole_mask.sum()),
        }
        return out
