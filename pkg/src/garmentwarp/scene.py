"""Synthetic model/person scenes with exactly known keypoints and labels.

Figures are flat cartoons: a head disc, a torso garment quad, lower-body
block and two arms drawn as capsules with sleeves over them.  Everything is
analytic, so the emitted keypoints are the ground truth the images were
drawn from.  Right-side body parts appear on the image left (frontal view).
"""

import copy
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .exceptions import SceneSpecError
from .imaging import Label, write_image, write_label_map
from .pose import PoseKeypoints, write_keypoints

MAX_FLEXION_DEG = 145.0
TEXTURES = ("solid", "stripes", "checker", "parts")
PRESETS = ("identity", "bent", "straight", "scale2", "crossed")


@dataclass
class ArmPose:
    upper_len: float = 60.0
    lower_len: float = 55.0
    abduction_deg: float = 20.0  # 0 = upper arm hangs straight down
    flexion_deg: float = 0.0  # 0 = straight elbow
    bend: str = "in"  # forearm swings toward the body midline ("in") or away ("out")

    def validate(self, label):
        if not 0.0 <= self.flexion_deg <= MAX_FLEXION_DEG:
            raise SceneSpecError(f"{label}: flexion {self.flexion_deg} deg outside [0, {MAX_FLEXION_DEG}]")
        if not -90.0 <= self.abduction_deg <= 180.0:
            raise SceneSpecError(f"{label}: abduction {self.abduction_deg} deg outside [-90, 180]")
        if self.upper_len <= 0 or self.lower_len <= 0:
            raise SceneSpecError(f"{label}: bone lengths must be positive")
        if self.bend not in ("in", "out"):
            raise SceneSpecError(f"{label}: bend must be 'in' or 'out'")


@dataclass
class FigureSpec:
    neck_y: float = 80.0
    shoulder_width: float = 80.0
    hip_width: float = 64.0
    torso_height: float = 100.0
    head_radius: float = 20.0
    sleeve_half_width: float = 11.0
    skin_half_width: float = 7.0
    sleeve_forearm_frac: float = 1.0  # fraction of the forearm covered by the sleeve
    right_arm: ArmPose = field(default_factory=ArmPose)
    left_arm: ArmPose = field(default_factory=ArmPose)

    def validate(self, label):
        for name in ("shoulder_width", "hip_width", "torso_height", "head_radius", "sleeve_half_width"):
            if getattr(self, name) <= 0:
                raise SceneSpecError(f"{label}: {name} must be positive")
        if self.skin_half_width < 0:
            raise SceneSpecError(f"{label}: skin_half_width must be >= 0")
        if not 0.0 <= self.sleeve_forearm_frac <= 1.0:
            raise SceneSpecError(f"{label}: sleeve_forearm_frac must lie in [0, 1]")
        self.right_arm.validate(f"{label}.right_arm")
        self.left_arm.validate(f"{label}.left_arm")


@dataclass
class SceneSpec:
    width: int = 256
    height: int = 256
    texture: str = "checker"
    cell: int = 8
    model: FigureSpec = field(default_factory=FigureSpec)
    person: FigureSpec = field(default_factory=FigureSpec)
    person_wears_model_garment: bool = False
    garment_colors: tuple = ((200, 40, 40), (245, 230, 90))
    sleeve_colors: tuple = ((40, 90, 210), (40, 190, 110))  # upper / lower bone for "parts"
    person_garment_color: tuple = (90, 90, 140)
    skin_color: tuple = (225, 180, 150)
    background_color: tuple = (235, 235, 235)
    lower_body_color: tuple = (50, 50, 70)
    head_color: tuple = (200, 150, 120)

    def validate(self):
        if self.width < 16 or self.height < 16:
            raise SceneSpecError("scene must be at least 16x16")
        if self.texture not in TEXTURES:
            raise SceneSpecError(f"texture must be one of {TEXTURES}")
        if self.cell < 1:
            raise SceneSpecError("cell must be >= 1")
        self.model.validate("model")
        self.person.validate("person")

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("model", "person"):
            if key in d:
                fig = dict(d[key])
                for arm in ("right_arm", "left_arm"):
                    if arm in fig:
                        fig[arm] = ArmPose(**fig[arm])
                d[key] = FigureSpec(**fig)
        for key in ("garment_colors", "sleeve_colors"):
            if key in d:
                d[key] = tuple(tuple(c) for c in d[key])
        for key in ("person_garment_color", "skin_color", "background_color", "lower_body_color", "head_color"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise SceneSpecError(str(exc)) from exc


def _rot(v, deg):
    t = np.deg2rad(deg)
    c, s = np.cos(t), np.sin(t)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def figure_keypoints(fig, width):
    """Landmark positions (x, y) for a figure centred horizontally."""
    cx = width / 2.0
    pts = {
        "neck": (cx, fig.neck_y),
        "nose": (cx, fig.neck_y - fig.head_radius - 2.0),
        "right_shoulder": (cx - fig.shoulder_width / 2.0, fig.neck_y),
        "left_shoulder": (cx + fig.shoulder_width / 2.0, fig.neck_y),
        "right_hip": (cx - fig.hip_width / 2.0, fig.neck_y + fig.torso_height),
        "left_hip": (cx + fig.hip_width / 2.0, fig.neck_y + fig.torso_height),
    }
    for side, arm, out in (("right", fig.right_arm, -1.0), ("left", fig.left_arm, 1.0)):
        a = np.array(pts[f"{side}_shoulder"])
        # rotating "down" by +t swings it toward -x in image coordinates
        upper_dir = _rot(np.array([0.0, 1.0]), -out * arm.abduction_deg)
        b = a + arm.upper_len * upper_dir
        # bending "in" turns the forearm toward the midline
        turn = out * arm.flexion_deg if arm.bend == "in" else -out * arm.flexion_deg
        c = b + arm.lower_len * _rot(upper_dir, turn)
        pts[f"{side}_elbow"] = tuple(b)
        pts[f"{side}_wrist"] = tuple(c)
    return {k: (float(x), float(y)) for k, (x, y) in pts.items()}


def _segment_dist(px, py, p0, p1):
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    L2 = dx * dx + dy * dy
    t = np.clip(((px - p0[0]) * dx + (py - p0[1]) * dy) / L2, 0.0, 1.0)
    return np.hypot(px - (p0[0] + t * dx), py - (p0[1] + t * dy))


def _convex_fill(px, py, poly):
    poly = np.asarray(poly, float)
    inside = np.ones(px.shape, bool)
    n = len(poly)
    area = sum(poly[i, 0] * poly[(i + 1) % n, 1] - poly[(i + 1) % n, 0] * poly[i, 1] for i in range(n))
    sgn = 1.0 if area > 0 else -1.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        inside &= sgn * ((x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)) >= 0
    return inside


def _texture(spec, px, py):
    c0 = np.array(spec.garment_colors[0], np.uint8)
    c1 = np.array(spec.garment_colors[1], np.uint8)
    if spec.texture == "checker":
        sel = ((px // spec.cell) + (py // spec.cell)) % 2 == 1
    elif spec.texture == "stripes":
        sel = (py // spec.cell) % 2 == 1
    else:
        sel = np.zeros(px.shape, bool)
    return np.where(sel[..., None], c1, c0)


def render_figure(spec, fig, wears_model_garment):
    """Render one figure; returns (rgba image, label map, keypoints dict)."""
    h, w = spec.height, spec.width
    py, px = np.mgrid[0:h, 0:w].astype(np.int64)
    kp = figure_keypoints(fig, w)
    img = np.empty((h, w, 4), np.uint8)
    img[..., :3] = spec.background_color
    img[..., 3] = 255
    labels = np.full((h, w), Label.BACKGROUND, np.uint8)

    def paint(sel, label, color):
        labels[sel] = label
        img[sel, :3] = color[sel] if np.ndim(color) == 3 else color

    garment_color = _texture(spec, px, py) if wears_model_garment else np.broadcast_to(
        np.array(spec.person_garment_color, np.uint8), (h, w, 3)
    )

    rh, lh = kp["right_hip"], kp["left_hip"]
    lower = (px >= rh[0] - 4) & (px <= lh[0] + 4) & (py >= rh[1])
    paint(lower, Label.LOWER_BODY, spec.lower_body_color)

    neck = kp["neck"]
    head_c = (neck[0], neck[1] - fig.head_radius - 2.0)
    head = np.hypot(px - head_c[0], py - head_c[1]) <= fig.head_radius
    paint(head, Label.HEAD, spec.head_color)

    rs, ls = kp["right_shoulder"], kp["left_shoulder"]
    m = 4.0
    torso_poly = [(rs[0] - m, rs[1] - m), (ls[0] + m, ls[1] - m), (lh[0] + m, lh[1]), (rh[0] - m, rh[1])]
    torso = _convex_fill(px, py, torso_poly)
    if spec.texture == "parts" and wears_model_garment:
        torso_color = np.broadcast_to(np.array(spec.garment_colors[0], np.uint8), (h, w, 3))
    else:
        torso_color = garment_color
    paint(torso, Label.TORSO_GARMENT, torso_color)

    for side, skin_label, sleeve_label in (
        ("right", Label.RIGHT_ARM_SKIN, Label.RIGHT_SLEEVE),
        ("left", Label.LEFT_ARM_SKIN, Label.LEFT_SLEEVE),
    ):
        a, b, c = kp[f"{side}_shoulder"], kp[f"{side}_elbow"], kp[f"{side}_wrist"]
        d_up = _segment_dist(px, py, a, b)
        d_low = _segment_dist(px, py, b, c)
        skin = np.minimum(d_up, d_low) <= fig.skin_half_width
        paint(skin, skin_label, spec.skin_color)
        frac = fig.sleeve_forearm_frac
        if frac > 0:
            c_cut = (b[0] + frac * (c[0] - b[0]), b[1] + frac * (c[1] - b[1]))
            d_sleeve_low = _segment_dist(px, py, b, c_cut)
        else:
            d_sleeve_low = np.full(px.shape, np.inf)
        sleeve = np.minimum(d_up, d_sleeve_low) <= fig.sleeve_half_width
        if spec.texture == "parts" and wears_model_garment:
            upper = d_up <= d_sleeve_low
            color = np.where(
                upper[..., None],
                np.array(spec.sleeve_colors[0], np.uint8),
                np.array(spec.sleeve_colors[1], np.uint8),
            )
        else:
            color = garment_color
        paint(sleeve, sleeve_label, color)
    return img, labels, kp


def generate_scene(spec):
    """Render model and person; returns a dict of arrays and PoseKeypoints."""
    spec.validate()
    m_img, m_lab, m_kp = render_figure(spec, spec.model, True)
    p_img, p_lab, p_kp = render_figure(spec, spec.person, spec.person_wears_model_garment)
    return {
        "model_image": m_img,
        "model_labels": m_lab,
        "model_keypoints": PoseKeypoints.from_points(m_kp),
        "person_image": p_img,
        "person_labels": p_lab,
        "person_keypoints": PoseKeypoints.from_points(p_kp),
    }


SCENE_FILES = {
    "model_image": "model.png",
    "model_labels": "model_parse.png",
    "model_keypoints": "model_keypoints.json",
    "person_image": "person.png",
    "person_labels": "person_parse.png",
    "person_keypoints": "person_keypoints.json",
}


def write_scene(out_dir, spec):
    """Generate ``spec`` and write the six fixture files plus ``scene.json``."""
    scene = generate_scene(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_image(out / SCENE_FILES["model_image"], scene["model_image"])
    write_image(out / SCENE_FILES["person_image"], scene["person_image"])
    write_label_map(out / SCENE_FILES["model_labels"], scene["model_labels"])
    write_label_map(out / SCENE_FILES["person_labels"], scene["person_labels"])
    write_keypoints(out / SCENE_FILES["model_keypoints"], scene["model_keypoints"])
    write_keypoints(out / SCENE_FILES["person_keypoints"], scene["person_keypoints"])
    (out / "scene.json").write_text(spec.to_json())
    return {k: out / v for k, v in SCENE_FILES.items()}


def _scaled_figure(s, **arms):
    fig = FigureSpec(
        neck_y=80.0 * s,
        shoulder_width=80.0 * s,
        hip_width=64.0 * s,
        torso_height=100.0 * s,
        head_radius=20.0 * s,
        sleeve_half_width=11.0 * s,
        skin_half_width=7.0 * s,
    )
    for side in ("right_arm", "left_arm"):
        pose = arms.get(side, ArmPose())
        fig = replace(
            fig,
            **{side: replace(pose, upper_len=pose.upper_len * s, lower_len=pose.lower_len * s)},
        )
    return fig


def preset(name, size=256, texture=None, cell=None):
    """Named scenes used by the CLI and the test-suite.

    identity  model and person identical (person wears the model garment)
    bent      model arms nearly straight, person elbows bent 90 and 45 deg
    straight  both arms straight in both figures, person bones 1.25x longer
    scale2    straight arms, person upper bones twice the model's ("parts" texture)
    crossed   person right forearm flexed 130 deg across the torso
    """
    s = size / 256.0
    if name == "identity":
        fig = _scaled_figure(
            s,
            right_arm=ArmPose(abduction_deg=25, flexion_deg=30),
            left_arm=ArmPose(abduction_deg=20, flexion_deg=50, bend="out"),
        )
        spec = SceneSpec(model=fig, person=copy.deepcopy(fig), person_wears_model_garment=True)
    elif name == "bent":
        spec = SceneSpec(
            model=_scaled_figure(
                s, right_arm=ArmPose(abduction_deg=20, flexion_deg=10), left_arm=ArmPose(abduction_deg=20, flexion_deg=10)
            ),
            person=_scaled_figure(
                s,
                right_arm=ArmPose(abduction_deg=30, flexion_deg=90, bend="out"),
                left_arm=ArmPose(abduction_deg=25, flexion_deg=45),
            ),
        )
    elif name == "straight":
        spec = SceneSpec(
            model=_scaled_figure(s, right_arm=ArmPose(abduction_deg=25), left_arm=ArmPose(abduction_deg=25)),
            person=_scaled_figure(
                s,
                right_arm=ArmPose(upper_len=75, lower_len=68.75, abduction_deg=35),
                left_arm=ArmPose(upper_len=75, lower_len=68.75, abduction_deg=35),
            ),
        )
    elif name == "scale2":
        spec = SceneSpec(
            texture="parts",
            model=_scaled_figure(
                s,
                right_arm=ArmPose(upper_len=35, lower_len=40, abduction_deg=40),
                left_arm=ArmPose(upper_len=35, lower_len=40, abduction_deg=40),
            ),
            person=_scaled_figure(
                s,
                right_arm=ArmPose(upper_len=70, lower_len=40, abduction_deg=40),
                left_arm=ArmPose(upper_len=70, lower_len=40, abduction_deg=40),
            ),
        )
    elif name == "crossed":
        spec = SceneSpec(
            model=_scaled_figure(
                s, right_arm=ArmPose(abduction_deg=20, flexion_deg=15), left_arm=ArmPose(abduction_deg=20, flexion_deg=15)
            ),
            person=_scaled_figure(
                s,
                right_arm=ArmPose(abduction_deg=10, flexion_deg=130),
                left_arm=ArmPose(abduction_deg=20, flexion_deg=20),
            ),
        )
    else:
        raise SceneSpecError(f"unknown preset '{name}', expected one of {PRESETS}")
    spec.width = spec.height = int(size)
    spec.cell = int(cell) if cell is not None else max(1, int(round(8 * s)))
    if texture is not None:
        spec.texture = texture
    return spec
