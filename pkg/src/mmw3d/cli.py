"""Command-line interface.

Subcommands: simulate | reconstruct | evaluate | sweep | synth-scene.
Exit codes: 0 success, 2 config error, 3 I/O error, 4 partial sweep failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import aoa, dsp
from .config import (ConfigError, experiment_from_config, chirp_from_config,
                     load_config, noise_from_config, pipeline_from_config,
                     scene_from_config)
from .experiment import build_scene, run_experiment
from .metrics import metrics
from .pgm import write_pgm16
from .pipeline import run_pipeline, _dpc1_aoa
from .pointcloud import PointCloud, load_ply_cloud
from .radar import layout_names, layout_preset
from .scene import positions_at
from .simulate import read_cube, simulate_frame, write_cube

_ALGO_ALIASES = {"fft": "fft", "conv": "conventional", "mvdr": "mvdr", "music": "music"}


def _common_flags(p):
    p.add_argument("--config", type=Path, default=None, help="JSON run config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, default=None, help="output directory")


def _pipeline_flags(p):
    p.add_argument("--dpc", type=int, choices=(1, 2), default=None)
    p.add_argument("--algo", choices=sorted(_ALGO_ALIASES), default=None)
    p.add_argument("--search", choices=("1d", "2d", "subgrid"), default=None)
    p.add_argument("--srpc", action="store_true", help="enable super-resolution resampling")
    p.add_argument("--alpha", type=float, default=None, help="SRPC aggressiveness")


def _flag_overrides(args) -> dict:
    over: dict = {}
    if getattr(args, "seed", None) is not None:
        over["seed"] = args.seed
    if getattr(args, "snr", None) is not None:
        over.setdefault("noise", {})["snr_db"] = args.snr
    pipe = {}
    if getattr(args, "dpc", None) is not None:
        pipe["dpc"] = args.dpc
    if getattr(args, "algo", None) is not None:
        pipe["estimator"] = _ALGO_ALIASES[args.algo]
    if getattr(args, "search", None) is not None:
        pipe["search"] = args.search
    if getattr(args, "srpc", False):
        srpc = {"alpha": 2.0, "upsample_factor": 8, "neighborhood": 1}
        if getattr(args, "alpha", None) is not None:
            srpc["alpha"] = args.alpha
        pipe["srpc"] = srpc
    elif getattr(args, "alpha", None) is not None:
        raise ConfigError("--alpha requires --srpc")
    if pipe:
        over["pipeline"] = pipe
    if getattr(args, "out", None) is not None:
        over.setdefault("output", {})["dir"] = str(args.out)
    return over


def _outdir(cfg) -> Path:
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, _flag_overrides(args))
    chirp = chirp_from_config(cfg)
    layout = layout_preset(cfg["radar"]["layout"])
    spec = scene_from_config(cfg["scene"])
    seed = cfg.get("seed", 0)
    scene = build_scene(spec, seed)
    cube = simulate_frame(scene, chirp, layout, noise_from_config(cfg), seed=seed)
    out = _outdir(cfg)
    cube_path = out / "cube.mmwcube"
    write_cube(cube, cube_path)
    truth = PointCloud(points=positions_at(scene, chirp.frame_duration / 2.0))
    truth.save_ply(out / "truth.ply")
    print(f"wrote {cube_path} ({'x'.join(str(s) for s in cube.shape)} complex64) "
          f"and {out / 'truth.ply'} ({len(truth)} points)")
    return 0


def _emit_heatmaps(cube, opts, out: Path) -> None:
    rc = dsp.range_fft(cube, opts.range_nfft)
    rd = dsp.doppler_fft(rc, opts.doppler_nfft)
    heat = dsp.rd_heatmap(rd)
    write_pgm16(out / "heatmap_rd.pgm", heat)
    np.savetxt(out / "heatmap_rd.csv", heat, delimiter=",")
    det = dsp.cfar_2d(heat, opts.cfar)
    if len(det) == 0:
        return
    strongest = int(np.argmax(det.powers))
    rb = int(det.range_bins[strongest])
    db = int(det.doppler_bins[strongest])
    snapshot = rd.data[:, db, rb]
    if opts.estimator == "fft":
        nbins = opts.angle_bins
        az = cube.layout.az_indices.astype(int)
        el = cube.layout.el_indices.astype(int)
        grid = np.zeros((nbins, nbins), dtype=complex)
        grid[az, el] = snapshot
        power = np.abs(np.fft.fftshift(np.fft.fft2(grid))) ** 2
    else:
        _, ev = _dpc1_aoa(snapshot, opts, cube.layout)
        bins = aoa.phase_bins(opts.angle_bins)
        ga, ge = np.meshgrid(bins, bins, indexing="ij")
        power = ev(ga.ravel(), ge.ravel()).reshape(len(bins), len(bins))
    write_pgm16(out / "spectrum_angle.pgm", power)
    np.savetxt(out / "spectrum_angle.csv", power, delimiter=",")


def cmd_reconstruct(args) -> int:
    cfg = load_config(args.config, _flag_overrides(args))
    layout_name = args.layout or cfg["radar"]["layout"]
    if layout_name not in layout_names():
        raise ConfigError(f"unknown layout preset {layout_name!r}")
    layout = layout_preset(layout_name)
    cube = read_cube(args.cube, layout)
    opts = pipeline_from_config(cfg)
    cloud = run_pipeline(cube, opts)
    out = _outdir(cfg)
    formats = cfg["output"]["formats"]
    if "ply" in formats:
        cloud.save_ply(out / "cloud.ply")
    if "csv" in formats:
        cloud.save_csv(out / "cloud.csv")
    if args.emit_heatmaps:
        _emit_heatmaps(cube, opts, out)
    print(f"reconstructed {len(cloud)} points -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, _flag_overrides(args))
    detected = load_ply_cloud(args.detected)
    truth = load_ply_cloud(args.truth)
    d = cfg["eval"]["d_close_m"] if args.d_close is None else args.d_close
    voxel = cfg["eval"]["voxel_m"] if args.voxel is None else args.voxel
    rep = metrics(detected, truth, d=d, voxel=voxel)
    out = _outdir(cfg)
    payload = json.dumps(rep.as_dict(), indent=2)
    (out / "metrics.json").write_text(payload + "\n")
    print(payload)
    return 0


def _report_csv(report, path):
    keys = ("fmi", "iou", "precision", "sensitivity", "k", "runtime_s")
    with open(path, "w") as fh:
        fh.write("cell,n," + ",".join(f"{k}_mean,{k}_sd" for k in keys) + ",errors\n")
        for cell in report.cells:
            row = [cell.label, str(cell.n)]
            for k in keys:
                row.append(f"{cell.mean.get(k, float('nan')):.6g}")
                row.append(f"{cell.sd.get(k, float('nan')):.6g}")
            row.append(str(len(cell.errors)))
            fh.write(",".join(row) + "\n")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, _flag_overrides(args))
    exp = experiment_from_config(cfg)
    report = run_experiment(exp, jobs=args.jobs)
    out = _outdir(cfg)
    (out / "report.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    _report_csv(report, out / "report.csv")
    width = max(len(c.label) for c in report.cells)
    print(f"{'cell':<{width}}  {'n':>3}  {'FMI%':>12}  {'IoU%':>12}  {'K':>7}  err")
    for c in report.cells:
        fmi = f"{100 * c.mean.get('fmi', float('nan')):.1f} ({100 * c.sd.get('fmi', 0.0):.1f})"
        iou = f"{100 * c.mean.get('iou', float('nan')):.1f} ({100 * c.sd.get('iou', 0.0):.1f})"
        print(f"{c.label:<{width}}  {c.n:>3}  {fmi:>12}  {iou:>12}  "
              f"{c.mean.get('k', float('nan')):>7.1f}  {len(c.errors)}")
    return 4 if report.had_errors else 0


def cmd_synth_scene(args) -> int:
    cfg = load_config(args.config, _flag_overrides(args))
    spec = scene_from_config(cfg["scene"])
    scene = build_scene(spec, cfg.get("seed", 0))
    out = _outdir(cfg)
    PointCloud(points=scene.points).save_ply(out / "scene.ply")
    print(f"wrote {out / 'scene.ply'} ({scene.n_points} points, kind={spec.kind})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmw3d",
        description="FMCW mmWave radar 3D-imaging toolkit: simulate raw IF "
                    "frames, reconstruct point clouds, evaluate them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a raw IF frame into a cube file")
    _common_flags(p)
    p.add_argument("--snr", type=float, default=None, help="SNR in dB")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="build a point cloud from a cube file")
    p.add_argument("cube", type=Path, help="cube file from `simulate`")
    _common_flags(p)
    _pipeline_flags(p)
    p.add_argument("--layout", choices=layout_names(), default=None,
                   help="receiver layout of the cube (default: config)")
    p.add_argument("--emit-heatmaps", action="store_true")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score a detected cloud against ground truth")
    p.add_argument("detected", type=Path)
    p.add_argument("truth", type=Path)
    _common_flags(p)
    p.add_argument("--d-close", type=float, default=None, help="closeness radius (m)")
    p.add_argument("--voxel", type=float, default=None, help="IoU voxel edge (m)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="run a factor sweep with seeded repeats")
    _common_flags(p)
    p.add_argument("--snr", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth-scene", help="generate a synthetic ground-truth cloud")
    _common_flags(p)
    p.set_defaults(func=cmd_synth_scene)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
