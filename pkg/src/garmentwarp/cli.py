"""Command-line interface.

Subcommands::

    garmentwarp tryon      warp a model garment onto a person
    garmentwarp gen-scene  write a synthetic model/person fixture
    garmentwarp eval       SSIM / MAE for a manifest of image pairs
    garmentwarp warp-grid  render a checkerboard through the sleeve map
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, WarpSettings, read_config_file
from .debug import landmark_overlay, warp_grid
from .exceptions import GarmentWarpError
from .imaging import (
    read_image,
    read_label_map,
    read_mask,
    write_image,
    write_mask,
)
from .metrics import SsimParams, mean_abs_error, ssim
from .pipeline import GarmentTransfer
from .pose import arm_chain, read_keypoints
from .scene import PRESETS, SCENE_FILES, TEXTURES, SceneSpec, preset, write_scene

log = logging.getLogger("garmentwarp")

OUTPUT_FILES = {
    "warped_garment": "warped.png",
    "coverage": "coverage.png",
    "target_mask": "target_mask.png",
    "hole_mask": "holes.png",
    "composite": "composite.png",
}

_SETTING_FLAGS = (
    ("--steepness-a", float, "logistic steepness of the inner/outer switch (1/rad)"),
    ("--inner-mode", str, "hard|smooth weighting inside the elbow wedge"),
    ("--outer-mode", str, "hard|smooth weighting outside the elbow wedge"),
    ("--tie-rule", str, "up|down rounding of f = 0.5"),
    ("--sampling", str, "bilinear|nearest"),
    ("--z-order", str, "comma-separated parts, bottom to top"),
    ("--capsule-scale", float, "sleeve domain radius / source sleeve half-width"),
    ("--close-radius", int, "closing radius of the mask surrogate"),
    ("--torso-landmarks", str, "comma-separated torso control landmarks"),
    ("--torso-midpoints", str, "add shoulder-hip midpoints (true/false)"),
    ("--tps-lambda", float, "spline smoothing"),
    ("--min-conf", float, "keypoint confidence threshold"),
    ("--inpaint-fill", str, "nearest-colour hole fill (true/false)"),
)


class StageError(Exception):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (GarmentWarpError, ValueError, KeyError, OSError) as exc:
        raise StageError(name, exc) from exc


def build_run_config(args):
    settings = WarpSettings()
    if args.config:
        settings.update(read_config_file(args.config))
    overrides = {flag.lstrip("-").replace("-", "_"): getattr(args, flag.lstrip("-").replace("-", "_")) for flag, _, _ in _SETTING_FLAGS}
    overrides["n_jobs"] = args.jobs
    settings.update(overrides)

    paths = {}
    scene_dir = Path(args.scene_dir) if args.scene_dir else None
    for key, default in (
        ("model_image", "model_image"),
        ("model_keypoints", "model_keypoints"),
        ("model_parse", "model_labels"),
        ("person_image", "person_image"),
        ("person_keypoints", "person_keypoints"),
        ("person_parse", "person_labels"),
    ):
        value = getattr(args, key)
        if value is None and scene_dir is not None:
            value = scene_dir / SCENE_FILES[default]
        paths[key] = Path(value) if value is not None else None
    cfg = RunConfig(
        out_dir=Path(args.out),
        target_mask=Path(args.target_mask) if args.target_mask else None,
        debug=args.debug,
        settings=settings,
        **paths,
    )
    cfg.check_paths()
    return cfg


def run_tryon(cfg):
    """Run the whole pipeline for ``cfg`` and write its outputs; returns the WarpOutput."""
    model_img = _stage("load", read_image, cfg.model_image)
    model_lab = _stage("load", read_label_map, cfg.model_parse)
    model_kp = _stage("load", read_keypoints, cfg.model_keypoints)
    person_img = _stage("load", read_image, cfg.person_image)
    person_lab = _stage("load", read_label_map, cfg.person_parse)
    person_kp = _stage("load", read_keypoints, cfg.person_keypoints)
    override = _stage("load", read_mask, cfg.target_mask) if cfg.target_mask else None

    est = GarmentTransfer(**cfg.settings.estimator_params())
    _stage("segment", est.fit, model_img, model_lab, model_kp)
    S = override if override is not None else _stage("mask", est.target_mask, person_kp)
    result = _stage("warp", est.transform, person_img, person_lab, person_kp, target_mask=S)

    out = cfg.out_dir
    _stage("write", out.mkdir, parents=True, exist_ok=True)
    _stage("write", write_image, out / OUTPUT_FILES["warped_garment"], result.warped_garment)
    _stage("write", write_mask, out / OUTPUT_FILES["coverage"], result.coverage)
    _stage("write", write_mask, out / OUTPUT_FILES["target_mask"], result.target_mask)
    _stage("write", write_mask, out / OUTPUT_FILES["hole_mask"], result.hole_mask)
    _stage("write", write_image, out / OUTPUT_FILES["composite"], result.composite)
    if cfg.debug:
        _stage("write", write_image, out / "debug_person_landmarks.png", landmark_overlay(person_img, person_kp))
        _stage("write", write_image, out / "debug_model_landmarks.png", landmark_overlay(model_img, model_kp))
    stats = dict(result.stats)
    (out / "stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True))
    return result


def cmd_tryon(args):
    try:
        cfg = _stage("config", build_run_config, args)
        result = run_tryon(cfg)
    except StageError as exc:
        print(f"garmentwarp tryon: error in stage '{exc.stage}': {exc.cause}", file=sys.stderr)
        return 2
    s = result.stats
    log.info("covered %d of %d target pixels, %d holes", s["covered_area"], s["target_area"], s["hole_area"])
    return 0


def _pair(text, name):
    vals = [float(v) for v in str(text).split(",")]
    if len(vals) == 1:
        vals = vals * 2
    if len(vals) != 2:
        raise ValueError(f"{name} takes one value or 'right,left'")
    return vals


def scene_spec_from_args(args):
    if args.spec:
        spec = SceneSpec.from_dict(json.loads(Path(args.spec).read_text()))
    else:
        spec = preset(args.preset, args.size, args.texture, args.cell)
    if args.spec and args.texture:
        spec.texture = args.texture
    if args.spec and args.cell:
        spec.cell = args.cell
    for who in ("model", "person"):
        fig = getattr(spec, who)
        flex = getattr(args, f"{who}_flexion")
        if flex is not None:
            r, l = _pair(flex, f"--{who}-flexion")
            fig.right_arm.flexion_deg, fig.left_arm.flexion_deg = r, l
    if args.person_upper_scale is not None:
        for arm in (spec.person.right_arm, spec.person.left_arm):
            arm.upper_len *= args.person_upper_scale
    if args.person_lower_scale is not None:
        for arm in (spec.person.right_arm, spec.person.left_arm):
            arm.lower_len *= args.person_lower_scale
    if args.sleeve_frac is not None:
        spec.model.sleeve_forearm_frac = spec.person.sleeve_forearm_frac = args.sleeve_frac
    spec.validate()
    return spec


def cmd_gen_scene(args):
    try:
        spec = scene_spec_from_args(args)
        files = write_scene(args.out, spec)
    except (GarmentWarpError, ValueError, OSError) as exc:
        print(f"garmentwarp gen-scene: error: {exc}", file=sys.stderr)
        return 2
    for key, path in files.items():
        log.info("%s -> %s", key, path)
    return 0


EVAL_FIELDS = ("reference", "candidate", "ssim", "mae", "status")


def read_manifest(path):
    """Rows of ``reference,candidate[,region_mask]``; paths relative to the manifest."""
    base = Path(path).parent
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or not rec[0].strip() or rec[0].lstrip().startswith("#"):
                continue
            rec = [r.strip() for r in rec]
            if rec[:2] == ["reference", "candidate"]:
                continue
            rows.append([(base / r) if r else None for r in rec[:3]] + [None] * (3 - len(rec[:3])))
    return rows


def evaluate_pair(ref, cand, region=None, params=None):
    a = read_image(ref)
    b = read_image(cand)
    m = read_mask(region) if region is not None else None
    return ssim(a, b, params), mean_abs_error(a, b, m)


def cmd_eval(args):
    params = SsimParams(window=args.window)
    try:
        rows = read_manifest(args.manifest)
    except (OSError, csv.Error) as exc:
        print(f"garmentwarp eval: cannot read manifest: {exc}", file=sys.stderr)
        return 2
    if not rows:
        print("garmentwarp eval: warning: manifest is empty", file=sys.stderr)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    failures = 0
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(EVAL_FIELDS)
        for ref, cand, region in rows:
            if cand is None:
                writer.writerow([ref, "", "", "", "error: missing candidate"])
                failures += 1
                continue
            try:
                s, mae = evaluate_pair(ref, cand, region, params)
            except (GarmentWarpError, ValueError, OSError) as exc:
                writer.writerow([ref, cand, "", "", f"error: {exc}"])
                failures += 1
                continue
            writer.writerow([ref, cand, repr(s), repr(mae), "ok"])
    finally:
        if args.out:
            out.close()
    if rows and failures == len(rows):
        print("garmentwarp eval: every entry failed", file=sys.stderr)
        return 1
    return 0


def cmd_warp_grid(args):
    try:
        scene_dir = Path(args.scene_dir) if args.scene_dir else None
        tgt = args.target_keypoints or (scene_dir / SCENE_FILES["person_keypoints"] if scene_dir else None)
        src = args.source_keypoints or (scene_dir / SCENE_FILES["model_keypoints"] if scene_dir else None)
        if tgt is None or src is None:
            raise ValueError("need --scene-dir or both --target-keypoints and --source-keypoints")
        t_arm = arm_chain(read_keypoints(tgt), args.side, args.min_conf)
        s_arm = arm_chain(read_keypoints(src), args.side, args.min_conf)
        if args.size:
            w, h = (int(v) for v in args.size.lower().split("x"))
        elif scene_dir is not None:
            h, w = read_image(scene_dir / SCENE_FILES["person_image"]).shape[:2]
        else:
            raise ValueError("need --size WxH without --scene-dir")
        board, warped = warp_grid(t_arm, s_arm, (h, w), args.cell, args.radius, steepness_a=args.steepness_a)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_image(out, warped)
        if args.source_out:
            write_image(args.source_out, board)
    except (GarmentWarpError, ValueError, OSError) as exc:
        print(f"garmentwarp warp-grid: error: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="garmentwarp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tryon", help="warp the model's garment onto the person")
    t.add_argument("--scene-dir", help="directory written by gen-scene (fills any unset input)")
    for name in ("model-image", "model-keypoints", "model-parse", "person-image", "person-keypoints", "person-parse"):
        t.add_argument(f"--{name}")
    t.add_argument("--target-mask", help="PNG that replaces the synthesized target mask")
    t.add_argument("--config", help="key = value settings file; flags override it")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--jobs", type=int, default=None, help="threads (default: $GARMENTWARP_JOBS or 1)")
    t.add_argument("--debug", action="store_true", help="also write landmark overlays")
    for flag, typ, help_ in _SETTING_FLAGS:
        t.add_argument(flag, type=typ, default=None, help=help_)
    t.set_defaults(func=cmd_tryon)

    g = sub.add_parser("gen-scene", help="write a synthetic model/person fixture")
    g.add_argument("out", help="output directory")
    g.add_argument("--preset", choices=PRESETS, default="bent")
    g.add_argument("--spec", help="JSON scene description (overrides --preset)")
    g.add_argument("--size", type=int, default=256)
    g.add_argument("--texture", choices=TEXTURES)
    g.add_argument("--cell", type=int)
    g.add_argument("--model-flexion", help="degrees, one value or 'right,left'")
    g.add_argument("--person-flexion", help="degrees, one value or 'right,left'")
    g.add_argument("--person-upper-scale", type=float)
    g.add_argument("--person-lower-scale", type=float)
    g.add_argument("--sleeve-frac", type=float, help="fraction of the forearm covered by sleeves")
    g.set_defaults(func=cmd_gen_scene)

    e = sub.add_parser("eval", help="SSIM / MAE over a manifest of image pairs")
    e.add_argument("manifest", help="CSV lines: reference,candidate[,region_mask]")
    e.add_argument("--out", help="CSV output path (default: stdout)")
    e.add_argument("--window", type=int, default=8)
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("warp-grid", help="render a checkerboard through the sleeve map")
    w.add_argument("--scene-dir")
    w.add_argument("--target-keypoints")
    w.add_argument("--source-keypoints")
    w.add_argument("--side", choices=("left", "right"), default="right")
    w.add_argument("--size", help="WxH when no scene directory is given")
    w.add_argument("--cell", type=int, default=8)
    w.add_argument("--radius", type=float, default=None)
    w.add_argument("--steepness-a", type=float, default=12.0)
    w.add_argument("--min-conf", type=float, default=0.3)
    w.add_argument("--out", required=True)
    w.add_argument("--source-out", help="also write the unwarped board")
    w.set_defaults(func=cmd_warp_grid)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
