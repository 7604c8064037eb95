"""Skeleton-guided, part-based garment warping for 2D virtual try-on."""

__version__ = "0.1.0"

from .exceptions import (
    DegenerateGeometryError,
    DimensionMismatchError,
    GarmentWarpError,
    KeypointParseError,
    KeypointSchemaError,
    MissingLandmarkError,
    TpsFitError,
)
from .geometry import ArmChain, Point2, SleeveWarp, SleeveWarpParams, map_sleeve_point, map_sleeve_points
from .metrics import SsimParams, mean_abs_error, ssim
from .pipeline import GarmentParts, GarmentTransfer, WarpOutput
from .pose import PoseKeypoints, arm_chain, parse_keypoints, torso_landmarks
from .tps import ThinPlateSpline, TpsModel, evaluate_tps, fit_tps

__all__ = [
    "ArmChain",
    "DegenerateGeometryError",
    "DimensionMismatchError",
    "GarmentParts",
    "GarmentTransfer",
    "GarmentWarpError",
    "KeypointParseError",
    "KeypointSchemaError",
    "MissingLandmarkError",
    "Point2",
    "PoseKeypoints",
    "SleeveWarp",
    "SleeveWarpParams",
    "SsimParams",
    "ThinPlateSpline",
    "TpsFitError",
    "TpsModel",
    "WarpOutput",
    "arm_chain",
    "evaluate_tps",
    "fit_tps",
    "map_sleeve_point",
    "map_sleeve_points",
    "mean_abs_error",
    "parse_keypoints",
    "ssim",
    "torso_landmarks",
]
