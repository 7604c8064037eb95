import numpy as np

from garmentwarp.debug import checkerboard, landmark_overlay, warp_grid
from garmentwarp.geometry import ArmChain
from garmentwarp.pose import Keypoint, PoseKeypoints


def test_checkerboard_cells():
    board = checkerboard((16, 16), cell=4)
    assert board.shape == (16, 16, 4)
    assert (board[0, 0] == board[0, 3]).all() and (board[0, 0] != board[0, 4]).any()
    assert (board[..., 3] == 255).all()


def test_landmark_overlay_draws_only_confident_points():
    img = np.zeros((40, 40, 4), np.uint8)
    kp = PoseKeypoints({"neck": Keypoint(10.0, 10.0, 0.9), "right_wrist": Keypoint(30.0, 30.0, 0.1)})
    out = landmark_overlay(img, kp)
    assert out[10, 10, 0] == 255
    assert (out[30, 30] == 0).all()
    assert (img == 0).all()


def test_warp_grid_identity_is_faithful():
    arm = ArmChain.from_array([(30, 20), (30, 50), (55, 60)])
    board, warped = warp_grid(arm, arm, (80, 80), cell=5)
    drawn = warped[..., 3] > 0
    assert drawn.sum() > 0
    np.testing.assert_array_equal(warped[drawn], board[drawn])
