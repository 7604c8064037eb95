"""Debug renders: landmark overlays and warped checkerboards."""

import numpy as np
from PIL import Image, ImageDraw

from ._validation import check_image
from .geometry import SleeveWarp, capsule_distance
from .imaging import pixel_grid, sample_nearest

_BONES = (
    ("neck", "right_shoulder"), ("right_shoulder", "right_elbow"), ("right_elbow", "right_wrist"),
    ("neck", "left_shoulder"), ("left_shoulder", "left_elbow"), ("left_elbow", "left_wrist"),
    ("right_shoulder", "right_hip"), ("left_shoulder", "left_hip"), ("right_hip", "left_hip"),
)  # fmt: skip


def landmark_overlay(img, kp, min_conf=0.3):
    im = Image.fromarray(check_image(img))
    draw = ImageDraw.Draw(im)
    for a, b in _BONES:
        if kp.present(a, min_conf) and kp.present(b, min_conf):
            draw.line([kp[a].point, kp[b].point], fill=(0, 200, 0, 255), width=2)
    for name, k in kp.landmarks.items():
        if k.confidence >= min_conf and k.confidence > 0:
            draw.ellipse([k.x - 3, k.y - 3, k.x + 3, k.y + 3], fill=(255, 0, 0, 255))
    return np.array(im)


def checkerboard(shape, cell=8, colors=((30, 30, 30), (230, 230, 230))):
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    sel = ((xx // cell) + (yy // cell)) % 2 == 1
    img = np.empty((h, w, 4), np.uint8)
    img[..., :3] = np.where(sel[..., None], colors[1], colors[0])
    img[..., 3] = 255
    return img


def warp_grid(target_arm, source_arm, shape, cell=8, radius=None, **sleeve_params):
    """Checkerboard around the source arm, pulled into the target frame.

    The board is clipped to a capsule of ``radius`` around the source arm
    (default: a quarter of the mean bone length); the target side uses the
    same capsule scaled by the bone magnification.  Returns
    ``(source_board, warped_board)``.
    """
    if radius is None:
        radius = 0.25 * (source_arm.upper_length + source_arm.lower_length) / 2.0
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    grid = np.column_stack([xx.ravel(), yy.ravel()]).astype(float)
    src_region = (capsule_distance(grid, source_arm) <= radius).reshape(shape)
    board = checkerboard(shape, cell)
    board[~src_region] = 0

    scale = max(
        target_arm.upper_length / source_arm.upper_length,
        target_arm.lower_length / source_arm.lower_length,
        1.0,
    )
    tgt_region = (capsule_distance(grid, target_arm) <= radius * scale).reshape(shape)
    warp = SleeveWarp(**sleeve_params).fit(target_arm, source_arm)
    pts = pixel_grid(tgt_region)
    out = np.zeros((h, w, 4), np.uint8)
    if len(pts):
        vals = sample_nearest(board, warp.transform(pts), valid=src_region)
        out[pts[:, 1].astype(int), pts[:, 0].astype(int)] = vals
    return board, out
