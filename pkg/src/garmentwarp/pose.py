"""Pose keypoint ingestion and landmark selection.

Keypoint files follow the usual pose-estimator JSON layout::

    {"people": [{"pose_keypoints_2d": [x0, y0, c0, x1, y1, c1, ...]}]}

with 18 body points (COCO order).  25-point files (BODY_25 order) are
accepted and remapped.  Only the first person is used.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import KeypointParseError, KeypointSchemaError, MissingLandmarkError
from .geometry import ArmChain, Point2

COCO18_NAMES = (
    "nose", "neck",
    "right_shoulder", "right_elbow", "right_wrist",
    "left_shoulder", "left_elbow", "left_wrist",
    "right_hip", "right_knee", "right_ankle",
    "left_hip", "left_knee", "left_ankle",
    "right_eye", "left_eye", "right_ear", "left_ear",
)  # fmt: skip

# BODY_25 index for each COCO-18 name.
_BODY25_INDEX = {
    "nose": 0, "neck": 1,
    "right_shoulder": 2, "right_elbow": 3, "right_wrist": 4,
    "left_shoulder": 5, "left_elbow": 6, "left_wrist": 7,
    "right_hip": 9, "right_knee": 10, "right_ankle": 11,
    "left_hip": 12, "left_knee": 13, "left_ankle": 14,
    "right_eye": 15, "left_eye": 16, "right_ear": 17, "left_ear": 18,
}  # fmt: skip

DEFAULT_MIN_CONF = 0.3
DEFAULT_TORSO_SUBSET = ("neck", "right_shoulder", "left_shoulder", "right_hip", "left_hip")


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float

    @property
    def point(self):
        return Point2(self.x, self.y)


@dataclass
class PoseKeypoints:
    landmarks: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.landmarks.get(name, Keypoint(0.0, 0.0, 0.0))

    def present(self, name, min_conf=DEFAULT_MIN_CONF):
        return self[name].confidence >= min_conf and self[name].confidence > 0

    def require(self, name, min_conf=DEFAULT_MIN_CONF):
        kp = self[name]
        if kp.confidence <= 0 or kp.confidence < min_conf:
            raise MissingLandmarkError(name, kp.confidence, min_conf)
        return kp.point

    def to_flat(self):
        out = []
        for name in COCO18_NAMES:
            kp = self[name]
            out.extend([kp.x, kp.y, kp.confidence])
        return out

    def to_json(self):
        return json.dumps({"version": 1.3, "people": [{"pose_keypoints_2d": self.to_flat()}]}, indent=1)

    @classmethod
    def from_points(cls, points, confidence=1.0):
        """Build from ``{name: (x, y)}``; unlisted landmarks are absent."""
        marks = {}
        for name, (x, y) in points.items():
            if name not in COCO18_NAMES:
                raise KeypointSchemaError(f"unknown landmark name '{name}'")
            marks[name] = Keypoint(float(x), float(y), float(confidence))
        return cls(marks)


def parse_keypoints(data):
    """Parse keypoint JSON given as bytes or str."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise KeypointParseError(f"not UTF-8 text at byte {exc.start}") from exc
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise KeypointParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc

    if not isinstance(doc, dict) or "people" not in doc:
        raise KeypointSchemaError("expected an object with a 'people' array")
    people = doc["people"]
    if not isinstance(people, list) or not people:
        raise KeypointSchemaError("'people' must be a non-empty array")
    person = people[0]
    if not isinstance(person, dict) or "pose_keypoints_2d" not in person:
        raise KeypointSchemaError("people[0] has no 'pose_keypoints_2d'")
    flat = person["pose_keypoints_2d"]
    if not isinstance(flat, list):
        raise KeypointSchemaError("people[0].pose_keypoints_2d must be an array")
    for i, v in enumerate(flat):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise KeypointParseError(f"people[0].pose_keypoints_2d[{i}] is not a number: {v!r}")
    if len(flat) % 3:
        raise KeypointSchemaError(f"pose_keypoints_2d length {len(flat)} is not a multiple of 3")

    n = len(flat) // 3
    if n == 18:
        index = {name: i for i, name in enumerate(COCO18_NAMES)}
    elif n == 25:
        index = _BODY25_INDEX
    else:
        raise KeypointSchemaError(f"expected 18 or 25 body points, got {n}")

    marks = {}
    for name, i in index.items():
        x, y, c = (float(v) for v in flat[3 * i : 3 * i + 3])
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(c)):
            raise KeypointParseError(f"point {i} ({name}) has non-finite values")
        if not 0.0 <= c <= 1.0:
            raise KeypointSchemaError(f"point {i} ({name}) confidence {c} outside [0, 1]")
        marks[name] = Keypoint(x, y, c)
    return PoseKeypoints(marks)


def read_keypoints(path):
    with open(path, "rb") as fh:
        return parse_keypoints(fh.read())


def write_keypoints(path, kp):
    with open(path, "w") as fh:
        fh.write(kp.to_json())


def arm_chain(kp, side, min_conf=DEFAULT_MIN_CONF):
    """Shoulder/elbow/wrist chain for ``side`` ('left' or 'right')."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    pts = [kp.require(f"{side}_{joint}", min_conf) for joint in ("shoulder", "elbow", "wrist")]
    return ArmChain(*pts)


def torso_landmarks(kp, subset=DEFAULT_TORSO_SUBSET, midpoints=False, min_conf=DEFAULT_MIN_CONF):
    """Ordered torso control points.

    With ``midpoints`` the shoulder-hip midpoints of the right then left side
    are appended, so model and person lists always align by index.
    """
    pts = [kp.require(name, min_conf) for name in subset]
    if midpoints:
        for side in ("right", "left"):
            s = kp.require(f"{side}_shoulder", min_conf)
            h = kp.require(f"{side}_hip", min_conf)
            pts.append(Point2((s.x + h.x) / 2.0, (s.y + h.y) / 2.0))
    return pts
