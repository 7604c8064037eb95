"""Image buffers, masks, label maps and the sampling/compositing primitives.

Images are ``(H, W, 4)`` uint8 RGBA arrays where alpha 0 means "no content".
Masks are ``(H, W)`` bool arrays and label maps ``(H, W)`` uint8 arrays.
Pixel ``(x, y)`` is column ``x``, row ``y`` with the pixel centre on the
integer grid.
"""

from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from ._validation import check_image, check_mask, check_points, check_same_shape


class Label(IntEnum):
    BACKGROUND = 0
    TORSO_GARMENT = 1
    LEFT_SLEEVE = 2
    RIGHT_SLEEVE = 3
    LEFT_ARM_SKIN = 4
    RIGHT_ARM_SKIN = 5
    HEAD = 6
    LOWER_BODY = 7
    OTHER = 8


GARMENT_LABELS = (Label.TORSO_GARMENT, Label.LEFT_SLEEVE, Label.RIGHT_SLEEVE)
ARM_SKIN_LABELS = (Label.LEFT_ARM_SKIN, Label.RIGHT_ARM_SKIN)

# Display colours for palette PNGs; index == label value.
LABEL_COLORS = {
    Label.BACKGROUND: (0, 0, 0),
    Label.TORSO_GARMENT: (255, 85, 0),
    Label.LEFT_SLEEVE: (0, 128, 255),
    Label.RIGHT_SLEEVE: (255, 0, 170),
    Label.LEFT_ARM_SKIN: (120, 200, 255),
    Label.RIGHT_ARM_SKIN: (255, 150, 210),
    Label.HEAD: (255, 220, 120),
    Label.LOWER_BODY: (60, 60, 200),
    Label.OTHER: (128, 128, 128),
}


def new_image(height, width, color=(0, 0, 0, 0)):
    img = np.empty((height, width, 4), dtype=np.uint8)
    img[...] = np.asarray(color, dtype=np.uint8)
    return img


def pixel_grid(mask):
    """(x, y) coordinates of the true pixels of ``mask``, in row-major order."""
    ys, xs = np.nonzero(check_mask(mask))
    return np.column_stack([xs, ys]).astype(float)


def sample_bilinear(img, points, valid=None):
    """Bilinear samples of ``img`` at sub-pixel ``points``.

    Neighbours outside the image, or outside ``valid`` when given, get zero
    weight and the remaining weights are renormalised.  Points with no usable
    neighbour come back fully transparent.  Returns (N, 4) uint8, or (4,) for
    a single point.
    """
    single = np.ndim(points) == 1
    img = check_image(img)
    pts = check_points(points)
    h, w = img.shape[:2]
    ok_map = np.ones((h, w), bool) if valid is None else check_mask(valid)
    check_same_shape(img, ok_map, names=("img", "valid"))

    x0 = np.floor(pts[:, 0])
    y0 = np.floor(pts[:, 1])
    fx = pts[:, 0] - x0
    fy = pts[:, 1] - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    acc = np.zeros((len(pts), 4))
    wsum = np.zeros(len(pts))
    for dx, dy, wt in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        xi = x0 + dx
        yi = y0 + dy
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h) & (wt > 0)
        xc = np.clip(xi, 0, w - 1)
        yc = np.clip(yi, 0, h - 1)
        inside &= ok_map[yc, xc]
        wt = np.where(inside, wt, 0.0)
        acc += wt[:, None] * img[yc, xc]
        wsum += wt
    out = np.zeros((len(pts), 4), dtype=np.uint8)
    hit = wsum > 0
    out[hit] = np.clip(np.rint(acc[hit] / wsum[hit, None]), 0, 255).astype(np.uint8)
    return out[0] if single else out


def sample_nearest(img, points, valid=None):
    single = np.ndim(points) == 1
    img = check_image(img)
    pts = check_points(points)
    h, w = img.shape[:2]
    xi = np.rint(pts[:, 0]).astype(np.int64)
    yi = np.rint(pts[:, 1]).astype(np.int64)
    inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    xc, yc = np.clip(xi, 0, w - 1), np.clip(yi, 0, h - 1)
    if valid is not None:
        inside &= check_mask(valid)[yc, xc]
    out = np.zeros((len(pts), 4), dtype=np.uint8)
    out[inside] = img[yc[inside], xc[inside]]
    return out[0] if single else out


def mask_lookup(mask, points):
    """Value of ``mask`` at the pixel nearest each point; False off-image."""
    mask = check_mask(mask)
    pts = check_points(points)
    h, w = mask.shape
    xi = np.rint(pts[:, 0]).astype(np.int64)
    yi = np.rint(pts[:, 1]).astype(np.int64)
    inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    out = np.zeros(len(pts), dtype=bool)
    out[inside] = mask[yi[inside], xi[inside]]
    return out


def rasterize_points(points, shape):
    """Boolean mask with the pixels nearest ``points`` set."""
    pts = check_points(points)
    h, w = shape
    out = np.zeros((h, w), dtype=bool)
    if len(pts) == 0:
        return out
    xi = np.rint(pts[:, 0]).astype(np.int64)
    yi = np.rint(pts[:, 1]).astype(np.int64)
    keep = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    out[yi[keep], xi[keep]] = True
    return out


def invert(mask):
    return ~check_mask(mask)


def mask_product(a, b):
    a = check_mask(a, "a")
    b = check_mask(b, "b")
    check_same_shape(a, b, names=("a", "b"))
    return a & b


def disk(radius):
    r = int(radius)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return xx * xx + yy * yy <= r * r


def morph_close(mask, radius):
    """Closing (dilate, then erode) with a disc; radius 0 returns a copy."""
    m = check_mask(mask)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0 or not m.any():
        return m.copy()
    pad = 2 * int(radius) + 1
    padded = np.pad(m, pad)
    closed = ndimage.binary_closing(padded, structure=disk(radius))
    return closed[pad:-pad, pad:-pad]


def dilate(mask, radius):
    m = check_mask(mask)
    if radius <= 0:
        return m.copy()
    return ndimage.binary_dilation(m, structure=disk(radius))


def overlay(base, top, region):
    """``top`` where ``region`` is set and ``top`` has content, ``base`` elsewhere."""
    base = check_image(base, "base")
    top = check_image(top, "top")
    region = check_mask(region, "region")
    check_same_shape(base, top, region, names=("base", "top", "region"))
    out = base.copy()
    sel = region & (top[:, :, 3] > 0)
    out[sel] = top[sel]
    return out


# PNG I/O -----------------------------------------------------------------


def read_image(path):
    with Image.open(path) as im:
        return np.array(im.convert("RGBA"))


def write_image(path, img):
    Image.fromarray(check_image(img)).save(Path(path), format="PNG")


def read_mask(path):
    with Image.open(path) as im:
        arr = np.array(im.convert("L"))
    return arr > 0


def write_mask(path, mask):
    arr = check_mask(mask).astype(np.uint8) * 255
    Image.fromarray(arr).save(Path(path), format="PNG")


def read_label_map(path):
    """Label map from a palette PNG (indices are labels) or a grey PNG (values are labels)."""
    with Image.open(path) as im:
        if im.mode == "P":
            arr = np.array(im)
        else:
            arr = np.array(im.convert("L"))
    if arr.max(initial=0) > max(Label):
        raise ValueError(f"{path}: label value {arr.max()} outside the palette 0..{int(max(Label))}")
    return arr.astype(np.uint8)


def write_label_map(path, labels):
    arr = np.asarray(labels, dtype=np.uint8)
    im = Image.fromarray(arr)
    palette = []
    for lab in Label:
        palette.extend(LABEL_COLORS[lab])
    palette.extend([0, 0, 0] * (256 - len(Label)))
    im.putpalette(palette)
    im.save(Path(path), format="PNG")
