import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from garmentwarp.exceptions import DimensionMismatchError, MissingLandmarkError
from garmentwarp.geometry import SleeveWarp
from garmentwarp.imaging import Label, read_image, read_mask
from garmentwarp.pipeline import (
    TILE_SIZE,
    CountingMap,
    GarmentParts,
    GarmentTransfer,
    compose,
    garment_mask_from_labels,
    map_tiles,
    segment_parts,
    synthesize_target_mask,
    try_on,
    warp_part,
)
from garmentwarp.pose import Keypoint, PoseKeypoints
from garmentwarp.scene import generate_scene, preset

GOLDEN = Path(__file__).parent / "golden" / "warp_part"


def identity(points):
    return np.asarray(points, float).copy()


def solid(h, w, color):
    img = np.zeros((h, w, 4), np.uint8)
    img[...] = color
    return img


@pytest.fixture(scope="module")
def identity_scene():
    return generate_scene(preset("identity", 128))


def fitted(scene, **params):
    return GarmentTransfer(n_jobs=1, **params).fit(scene["model_image"], scene["model_labels"], scene["model_keypoints"])


# --- segment_parts ---------------------------------------------------------


def test_sleeveless_garment():
    labels = np.full((6, 6), Label.TORSO_GARMENT, np.uint8)
    parts = segment_parts(np.ones((6, 6), bool), labels)
    assert parts.torso.all() and not parts.left_sleeve.any() and not parts.right_sleeve.any()


def test_three_bands():
    labels = np.zeros((9, 4), np.uint8)
    labels[0:3] = Label.RIGHT_SLEEVE
    labels[3:6] = Label.TORSO_GARMENT
    labels[6:9] = Label.LEFT_SLEEVE
    parts = segment_parts(np.ones((9, 4), bool), labels)
    assert parts.right_sleeve[0:3].all() and parts.right_sleeve.sum() == 12
    assert parts.torso[3:6].all() and parts.torso.sum() == 12
    assert parts.left_sleeve[6:9].all() and parts.left_sleeve.sum() == 12


def test_empty_garment_and_unlabelled_pixels():
    labels = np.full((4, 4), Label.HEAD, np.uint8)
    parts = segment_parts(np.zeros((4, 4), bool), labels)
    assert not parts.union.any()
    parts = segment_parts(np.ones((4, 4), bool), labels)
    assert parts.torso.all()
    with pytest.raises(DimensionMismatchError):
        segment_parts(np.ones((4, 4), bool), labels[:3])


def test_parts_must_be_disjoint():
    m = np.ones((2, 2), bool)
    with pytest.raises(ValueError):
        GarmentParts(m, m, np.zeros((2, 2), bool))


@settings(max_examples=30)
@given(arrays(np.uint8, (6, 7), elements=st.integers(0, 8)), arrays(bool, (6, 7)))
def test_segment_parts_partition(labels, garment):
    parts = segment_parts(garment, labels)
    assert (parts.union == garment).all()
    total = parts.torso.astype(int) + parts.left_sleeve + parts.right_sleeve
    assert total.max(initial=0) <= 1


# --- warp_part -------------------------------------------------------------


def test_warp_identity_mapping():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, (10, 12, 4), dtype=np.uint8)
    img[..., 3] = 255
    part = np.zeros((10, 12), bool)
    part[2:8, 3:9] = True
    out, cov = warp_part(img, part, identity, part)
    np.testing.assert_array_equal(cov, part)
    np.testing.assert_array_equal(out[part], img[part])
    assert (out[~part] == 0).all()


def test_warp_empty_S_evaluates_nothing():
    img = solid(8, 8, (9, 9, 9, 255))
    counter = CountingMap(identity)
    out, cov = warp_part(img, np.ones((8, 8), bool), counter, np.zeros((8, 8), bool))
    assert counter.count == 0
    assert not cov.any() and not out.any()


def test_warp_evaluates_only_S():
    img = solid(20, 20, (9, 9, 9, 255))
    S = np.zeros((20, 20), bool)
    S[3:9, 4:15] = True
    counter = CountingMap(identity)
    _, cov = warp_part(img, np.ones((20, 20), bool), counter, S)
    assert counter.count == S.sum()
    assert not (cov & ~S).any()


def test_warp_nearest_sampling():
    img = solid(5, 5, (1, 2, 3, 255))
    out, cov = warp_part(img, np.ones((5, 5), bool), lambda p: p + 0.3, np.ones((5, 5), bool), "nearest")
    assert cov[:4, :4].all()
    assert (out[cov] == (1, 2, 3, 255)).all()


@pytest.mark.parametrize("case", ["bent90", "bent135"])
def test_warp_part_matches_oracle_golden(case):
    meta = json.loads((GOLDEN / "cases.json").read_text())
    src = read_image(GOLDEN / "source.png")
    part = read_mask(GOLDEN / "part.png")
    S = read_mask(GOLDEN / f"{case}_S.png")
    warp = SleeveWarp().fit(meta["cases"][case]["target_arm"], meta["source_arm"])
    out, cov = warp_part(src, part, warp.transform, S)
    np.testing.assert_array_equal(cov, read_mask(GOLDEN / f"{case}_coverage.png"))
    np.testing.assert_array_equal(out, read_image(GOLDEN / f"{case}_warped.png"))


def test_map_tiles_parallel_identical():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 100, (TILE_SIZE * 2 + 17, 2))
    warp = SleeveWarp().fit([[10, 10], [30, 40], [60, 30]], [[12, 8], [28, 44], [40, 70]])
    a = map_tiles(warp.transform, pts, 1)
    b = map_tiles(warp.transform, pts, 4)
    assert np.array_equal(a, b)
    assert map_tiles(warp.transform, np.empty((0, 2)), 3).shape == (0, 2)


# --- compose ---------------------------------------------------------------


def test_compose_single_part_unchanged():
    img = solid(4, 4, (5, 6, 7, 255))
    cov = np.zeros((4, 4), bool)
    cov[1, 2] = True
    img[~cov] = 0
    out, c = compose([(img, cov)])
    np.testing.assert_array_equal(out, img)
    np.testing.assert_array_equal(c, cov)


def test_compose_overlap_sleeve_wins():
    torso = solid(8, 8, (200, 0, 0, 255))
    sleeve = solid(8, 8, (0, 0, 200, 255))
    t_cov = np.zeros((8, 8), bool)
    t_cov[1:6, 1:6] = True
    s_cov = np.zeros((8, 8), bool)
    s_cov[4:8, 4:8] = True
    overlap = t_cov & s_cov
    assert overlap.sum() == 4
    out, cov = compose({"torso": (torso, t_cov), "left_sleeve": (sleeve, s_cov)}, ("torso", "left_sleeve"))
    assert (out[overlap] == (0, 0, 200, 255)).all()
    assert cov.sum() == t_cov.sum() + s_cov.sum() - overlap.sum()
    out2, _ = compose({"torso": (torso, t_cov), "left_sleeve": (sleeve, s_cov)}, ("left_sleeve", "torso"))
    assert (out2[overlap] == (200, 0, 0, 255)).all()


def test_compose_disjoint_commutes():
    a = solid(6, 6, (1, 1, 1, 255))
    b = solid(6, 6, (2, 2, 2, 255))
    ca = np.zeros((6, 6), bool)
    ca[:3] = True
    cb = ~ca
    x = compose([(a, ca), (b, cb)])
    y = compose([(b, cb), (a, ca)])
    np.testing.assert_array_equal(x[0], y[0])
    np.testing.assert_array_equal(x[1], y[1])


def test_compose_errors():
    with pytest.raises(ValueError):
        compose([])
    with pytest.raises(DimensionMismatchError):
        compose([(solid(2, 2, 1), np.ones((2, 2), bool)), (solid(3, 2, 1), np.ones((3, 2), bool))])


# --- try_on ----------------------------------------------------------------


def tryon_case():
    person = solid(10, 10, (50, 60, 70, 255))
    labels = np.zeros((10, 10), np.uint8)
    labels[2:8, 2:8] = Label.TORSO_GARMENT
    person[2:8, 2:8, :3] = 180
    S = np.zeros((10, 10), bool)
    S[3:9, 2:8] = True
    garment = solid(10, 10, (0, 120, 0, 255))
    return person, labels, garment, S


def test_tryon_full_coverage_has_no_holes():
    person, labels, garment, S = tryon_case()
    out = try_on(person, labels, (garment, S.copy()), S)
    assert not out.hole_mask.any()
    assert (out.composite[S] == (0, 120, 0, 255)).all()


def test_tryon_missing_strip():
    person, labels, garment, S = tryon_case()
    cov = S.copy()
    strip = np.zeros_like(S)
    strip[5, 2:7] = True
    cov[strip] = False
    out = try_on(person, labels, (garment, cov), S)
    np.testing.assert_array_equal(out.hole_mask, strip)
    assert (out.hole_mask <= S).all() and not (out.hole_mask & out.coverage).any()
    assert (out.warped_garment[..., 3] > 0).tolist() == out.coverage.tolist()


def test_tryon_is_local():
    person, labels, garment, S = tryon_case()
    out = try_on(person, labels, (garment, S.copy()), S)
    keep = ~S & (labels == 0)
    np.testing.assert_array_equal(out.composite[keep], person[keep])
    # removed garment pixels outside S carry the neutral fill (ring median)
    removed_only = (labels == Label.TORSO_GARMENT) & ~S
    assert (out.composite[removed_only] == (50, 60, 70, 255)).all()


def test_tryon_inpaint_fill():
    person, labels, garment, S = tryon_case()
    cov = S.copy()
    cov[5, 2:7] = False
    out = try_on(person, labels, (garment, cov), S, inpaint_fill=True)
    assert (out.composite[S] == (0, 120, 0, 255)).all()
    assert out.hole_mask.sum() == 5  # holes are still exported


def test_tryon_coverage_clipped_to_S():
    person, labels, garment, S = tryon_case()
    out = try_on(person, labels, (garment, np.ones_like(S)), S)
    np.testing.assert_array_equal(out.coverage, S)
    with pytest.raises(DimensionMismatchError):
        try_on(person, labels[:5], (garment, S), S)


# --- target mask surrogate -------------------------------------------------


def test_identity_target_mask_close_to_garment(identity_scene):
    est = fitted(identity_scene)
    garment = garment_mask_from_labels(identity_scene["model_labels"])
    S = est.target_mask(identity_scene["person_keypoints"])
    sym = (S ^ garment).sum()
    assert sym <= 0.01 * garment.sum()


def test_scaled_person_target_mask_area():
    scene = generate_scene(preset("identity", 128))
    # person landmarks are the model's magnified 2x about the origin
    model = scene["model_keypoints"]
    person = PoseKeypoints({k: Keypoint(2 * v.x, 2 * v.y, v.confidence) for k, v in model.landmarks.items()})
    parts = segment_parts(garment_mask_from_labels(scene["model_labels"]), scene["model_labels"])
    # widen the canvas so the magnified garment fits
    pad = lambda m: np.pad(m, ((0, 128), (0, 128)))  # noqa: E731
    parts = GarmentParts(pad(parts.torso), pad(parts.left_sleeve), pad(parts.right_sleeve))
    S = synthesize_target_mask(parts, model, person)
    src_area = parts.union.sum()
    assert abs(S.sum() / (4 * src_area) - 1) <= 0.10


def test_target_mask_override(identity_scene):
    est = fitted(identity_scene)
    S = np.zeros((128, 128), bool)
    S[40:60, 50:70] = True
    out = est.transform(
        identity_scene["person_image"], identity_scene["person_labels"], identity_scene["person_keypoints"], S
    )
    np.testing.assert_array_equal(out.target_mask, S)
    assert out.stats["target_area"] == 400


def test_missing_wrist_is_reported(identity_scene):
    est = fitted(identity_scene)
    kp = identity_scene["person_keypoints"]
    broken = PoseKeypoints(dict(kp.landmarks))
    broken.landmarks["left_wrist"] = Keypoint(0.0, 0.0, 0.0)
    with pytest.raises(MissingLandmarkError) as info:
        est.transform(identity_scene["person_image"], identity_scene["person_labels"], broken)
    assert info.value.landmark == "left_wrist"


# --- end to end ------------------------------------------------------------


def test_identity_end_to_end(identity_scene):
    est = fitted(identity_scene)
    out = est.transform(
        identity_scene["person_image"], identity_scene["person_labels"], identity_scene["person_keypoints"]
    )
    garment = garment_mask_from_labels(identity_scene["person_labels"])
    diff = np.abs(out.composite[garment][:, :3].astype(int) - identity_scene["person_image"][garment][:, :3])
    assert diff.mean() <= 1.0
    assert out.hole_mask.sum() <= 0.01 * out.target_mask.sum()
    assert (out.hole_mask <= out.target_mask).all()
    assert (out.coverage <= out.target_mask).all()
    assert not (out.hole_mask & out.coverage).any()
    assert ((out.warped_garment[..., 3] > 0) == out.coverage).all()


def test_sleeve_evaluations_bounded_by_domain(identity_scene):
    est = fitted(identity_scene)
    kp = identity_scene["person_keypoints"]
    out = est.transform(identity_scene["person_image"], identity_scene["person_labels"], kp)
    maps = est.part_maps(kp)
    for name in ("left_sleeve", "right_sleeve"):
        domain = maps[name][1]
        assert out.stats["map_evaluations"][name] == (out.target_mask & domain).sum()
    assert out.stats["map_evaluations"]["torso"] == out.target_mask.sum()


def test_transform_is_repeatable(identity_scene):
    est = fitted(identity_scene)
    args = (identity_scene["person_image"], identity_scene["person_labels"], identity_scene["person_keypoints"])
    a, b = est.transform(*args), est.transform(*args)
    for field in ("warped_garment", "coverage", "target_mask", "hole_mask", "composite"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_estimator_params_and_validation(identity_scene):
    est = GarmentTransfer(steepness_a=5.0, z_order=("left_sleeve", "torso"))
    assert est.get_params()["steepness_a"] == 5.0
    with pytest.raises(ValueError):
        GarmentTransfer(sampling="cubic").fit(
            identity_scene["model_image"], identity_scene["model_labels"], identity_scene["model_keypoints"]
        )
    with pytest.raises(ValueError):
        GarmentTransfer(z_order=("torso", "hat")).fit(
            identity_scene["model_image"], identity_scene["model_labels"], identity_scene["model_keypoints"]
        )


def test_jobs_environment(monkeypatch):
    from garmentwarp.pipeline import default_jobs

    monkeypatch.setenv("GARMENTWARP_JOBS", "3")
    assert default_jobs() == 3
    monkeypatch.setenv("GARMENTWARP_JOBS", "zero")
    assert default_jobs() == 1

