"""Command-line entry point.

Exit codes: 0 success, 1 verification/runtime math failure, 2 usage
error, 3 I/O or file-format error. All randomness flows through --seed,
so identical invocations on identical inputs produce byte-identical
artifacts. LATENT_DOLLY_THREADS, when set, caps internal parallelism
(the reference implementation is single-threaded, so any positive value
is accepted and honored trivially).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__, fileio, pipeline
from .ddim import LinearDenoiser, OracleDenoiser, ZeroDenoiser, invert
from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    LatentDollyError,
    ParameterError,
    TimestepIndexError,
    TruncationError,
    UnsupportedFormatError,
)
from .geometry import Intrinsics, Pose, TrajectorySpec, render_sequence
from .krnr import adaptive_krnr, krnr_closed_continuous, krnr_closed_discrete, krnr_recursive
from .rng import Rng
from .schedule import make_schedule, rescale_zero_terminal_snr, snr, strength_to_index
from .slm import ModulationInputs, modulate
from .tensor import LatentTensor, cosine, gaussian, norm_deviation, stats

_USAGE_ERRORS = (ParameterError, ConfigError, DimensionError, TimestepIndexError)
_IO_ERRORS = (FormatError, TruncationError, UnsupportedFormatError, OSError)


def _parse_range(text: str) -> list:
    """'1:8' -> [1..8]; '3' -> [3]; '1,4,7' -> [1, 4, 7]."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    if "," in text:
        return [int(v) for v in text.split(",")]
    return [int(text)]


def _parse_dims(text: str) -> tuple:
    dims = tuple(int(v) for v in text.split(","))
    if len(dims) != 5:
        raise ParameterError(f"--dims wants B,F,C,H,W, got {text!r}")
    return dims


def _schedule_from_args(args):
    s = make_schedule(args.T, args.beta_start, args.beta_end, args.kind)
    if getattr(args, "zero_terminal", False):
        s = rescale_zero_terminal_snr(s)
    return s


def _add_schedule_args(p, zero_default=False):
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--beta-start", type=float, default=0.00085)
    p.add_argument("--beta-end", type=float, default=0.012)
    p.add_argument("--kind", choices=("linear", "scaled_linear"), default="scaled_linear")
    if zero_default:
        p.add_argument("--zero-terminal", action=argparse.BooleanOptionalAction, default=True)
    else:
        p.add_argument("--zero-terminal", action="store_true")


def _out_stream(path):
    return open(path, "w", newline="") if path else sys.stdout


def cmd_schedule(args) -> int:
    s = _schedule_from_args(args)
    rows = [(t, s.beta(t), s.alpha_bar(t), snr(s, t)) for t in range(1, s.T + 1)]
    f = _out_stream(args.out)
    try:
        fileio.write_csv(f, rows, ["t", "beta", "alpha_bar", "snr"])
    finally:
        if f is not sys.stdout:
            f.close()
    return 0


def cmd_krnr_verify(args) -> int:
    gen = Rng(args.seed).split("krnr-verify").generator()
    dims = (1, 1, 1, 64, 64)
    x0 = gaussian(dims, Rng(args.seed).split("x0"), dtype=np.float64)
    eps = gaussian(dims, Rng(args.seed).split("eps"), dtype=np.float64)
    worst_rec = worst_cont = 0.0
    for _ in range(args.trials):
        alpha = float(gen.uniform(1e-4, 0.9999))
        k = int(gen.integers(1, args.k_max + 1))
        closed = krnr_closed_discrete(x0, eps, alpha, k)
        rec = krnr_recursive(x0, eps, alpha, k)
        cont = krnr_closed_continuous(x0, eps, alpha, float(k))
        scale = float(np.max(np.abs(closed.data)))
        worst_rec = max(worst_rec, float(np.max(np.abs(rec.data - closed.data))) / scale)
        worst_cont = max(worst_cont, float(np.max(np.abs(cont.data - closed.data))) / scale)
    print(f"recursion-vs-closed max relative error: {worst_rec:.3e} (tol {args.tol:g})")
    print(f"continuous-vs-discrete max relative error: {worst_cont:.3e} (tol {args.tol_continuous:g})")
    ok = worst_rec <= args.tol and worst_cont <= args.tol_continuous
    print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_analyze(args) -> int:
    ks = _parse_range(args.k)
    dims = _parse_dims(args.dims)
    if args.alpha_bar is not None:
        alpha = args.alpha_bar
    else:
        s = _schedule_from_args(args)
        alpha = s.alpha_bar(strength_to_index(args.strength, s.T))
    x0 = gaussian(dims, Rng(args.seed).split("x0"), dtype=np.float64)
    if args.eps_source == "gaussian":
        eps = gaussian(dims, Rng(args.seed).split("eps"), dtype=np.float64)
    else:
        sched = make_schedule(args.T, args.beta_start, args.beta_end, args.kind)
        t_idx = strength_to_index(args.strength, sched.T)
        eps = invert(x0, sched, 30, OracleDenoiser(x0, schedule=sched, mode="v"), t_idx)
    if args.orthogonalize:
        e = eps.data - (np.vdot(eps.data, x0.data) / np.vdot(x0.data, x0.data)) * x0.data
        e *= np.linalg.norm(x0.data) / np.linalg.norm(e)
        eps = LatentTensor(e)
    if args.scale_eps != 1.0:
        eps = LatentTensor(eps.data * args.scale_eps)
    rows = []
    for k in ks:
        ek = krnr_closed_discrete(x0, eps, alpha, k)
        st = stats(ek)
        rows.append((k, cosine(ek, x0), st.mean, st.variance, norm_deviation(ek)))
    f = _out_stream(args.out)
    try:
        fileio.write_csv(f, rows, ["k", "cosine", "mean", "variance", "norm_deviation"])
    finally:
        if f is not sys.stdout:
            f.close()
    return 0


def cmd_invert(args) -> int:
    x0 = fileio.read_latent(args.input)
    sched = _schedule_from_args(args)
    t_stop = strength_to_index(args.strength, sched.T)
    if args.denoiser == "oracle":
        den = OracleDenoiser(x0, schedule=sched, mode=args.mode)
    elif args.denoiser == "zero":
        den = ZeroDenoiser()
    else:
        den = LinearDenoiser()
    fileio.write_latent(args.output, invert(x0, sched, args.steps, den, t_stop))
    return 0


def cmd_krnr(args) -> int:
    x0 = fileio.read_latent(args.latent)
    eps_inv = fileio.read_latent(args.noise)
    if args.delta == 0:
        if float(args.k).is_integer():
            out = krnr_closed_discrete(x0, eps_inv, args.alpha_bar, int(args.k))
        else:
            out = krnr_closed_continuous(x0, eps_inv, args.alpha_bar, args.k)
    else:
        out = adaptive_krnr(x0, eps_inv, args.alpha_bar, args.k, args.delta)
    fileio.write_latent(args.out, out)
    return 0


def cmd_render(args) -> int:
    rgb_files = sorted(
        os.path.join(args.rgb, n) for n in os.listdir(args.rgb) if n.lower().endswith(".ppm")
    )
    depth_files = sorted(
        os.path.join(args.depth, n)
        for n in os.listdir(args.depth)
        if n.lower().endswith((".pgm", ".f32r", ".raw"))
    )
    if not rgb_files or len(rgb_files) != len(depth_files):
        raise ParameterError(
            f"need equal nonzero frame/depth counts, got {len(rgb_files)}/{len(depth_files)}"
        )
    frames = np.stack([fileio.read_image_ppm(p).astype(np.float64) / 255.0 for p in rgb_files])
    depths = np.stack([fileio.read_depth(p, scale=args.depth_scale) for p in depth_files])
    fx, fy, cx, cy = (float(v) for v in args.intrinsics.split(","))
    intr = Intrinsics(fx, fy, cx, cy)
    n = frames.shape[0]
    if args.traj == "identity":
        poses = [Pose.identity() for _ in range(n)]
    elif os.path.exists(args.traj):
        spec = fileio.load_strict_json(args.traj, ("kind", "magnitude", "curve"))
        poses = TrajectorySpec(**spec).poses(n)
    else:
        poses = TrajectorySpec(args.traj, args.magnitude).poses(n)
    rendered, masks, _ = render_sequence(frames, depths, intr, poses)
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    for i in range(n):
        img = os.path.join(args.out, f"render_{i:03d}.ppm")
        msk = os.path.join(args.out, f"mask_{i:03d}.pgm")
        fileio.write_image_ppm(img, np.clip(rendered[i], 0, 1))
        fileio.write_mask_pgm(msk, masks[i])
        outputs.append({"frame": i, "image": os.path.basename(img), "mask": os.path.basename(msk)})
    manifest = {
        "trajectory": args.traj,
        "intrinsics": {"fx": fx, "fy": fy, "cx": cx, "cy": cy},
        "depth_scale": args.depth_scale,
        "frames": outputs,
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return 0


def cmd_slm(args) -> int:
    inputs = ModulationInputs(
        fileio.read_latent(args.latent),
        fileio.read_latent(args.noise),
        fileio.read_mask(args.mask),
        fileio.read_mask(args.depthmask),
    )
    x_m, e_m = modulate(inputs, Rng(args.seed).split("slm"), per_channel=args.per_channel)
    fileio.write_latent(args.out_latent, x_m)
    fileio.write_latent(args.out_noise, e_m)
    return 0


def cmd_pipeline(args) -> int:
    config = pipeline.read_config(args.config) if args.config else pipeline.PipelineConfig()
    if args.pipeline_cmd == "run":
        if args.output_dir:
            config = dataclasses.replace(config, output_dir=args.output_dir)
        report = pipeline.run_dvs(config)
        print(json.dumps(report, indent=2, sort_keys=True))
        return 0
    values = _parse_range(args.values)
    rows = pipeline.ablation_sweep(config, args.axis, values, csv_path=args.out or sys.stdout)
    return 0 if rows else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latentdolly", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("schedule", help="dump (t, beta, alpha_bar, snr) as CSV")
    _add_schedule_args(sp, zero_default=True)
    sp.add_argument("--out", default="")
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("krnr-verify", help="closed form vs literal recursion sweep")
    sp.add_argument("--k-max", type=int, default=64)
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("--tol-continuous", type=float, default=1e-12)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_krnr_verify)

    sp = sub.add_parser("analyze", help="per-k similarity/moments/norm-deviation CSV")
    sp.add_argument("metric", choices=("similarity", "moments", "norms"))
    sp.add_argument("--k", default="1:20")
    sp.add_argument("--dims", default="1,4,16,60,90")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--alpha-bar", type=float, default=None)
    sp.add_argument("--strength", type=float, default=0.95)
    sp.add_argument("--eps-source", choices=("gaussian", "inverted"), default="gaussian")
    sp.add_argument("--orthogonalize", action="store_true")
    sp.add_argument("--scale-eps", type=float, default=1.0)
    sp.add_argument("--out", default="")
    _add_schedule_args(sp, zero_default=True)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("invert", help="DDIM-invert a latent archive")
    sp.add_argument("--input", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--steps", type=int, default=30)
    sp.add_argument("--strength", type=float, default=0.95)
    sp.add_argument("--mode", choices=("v", "eps"), default="v")
    sp.add_argument("--denoiser", choices=("oracle", "zero", "linear"), default="oracle")
    _add_schedule_args(sp)
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("krnr", help="apply the (adaptive) closed form to latent archives")
    sp.add_argument("--latent", required=True)
    sp.add_argument("--noise", required=True)
    sp.add_argument("--alpha-bar", type=float, required=True)
    sp.add_argument("--k", type=float, required=True)
    sp.add_argument("--delta", type=int, default=0, help="0 = plain closed form, no AdaIN")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_krnr)

    sp = sub.add_parser("render", help="depth-reproject an image sequence to a new trajectory")
    sp.add_argument("--rgb", required=True)
    sp.add_argument("--depth", required=True)
    sp.add_argument("--traj", required=True)
    sp.add_argument("--magnitude", type=float, default=0.25)
    sp.add_argument("--intrinsics", required=True, help="fx,fy,cx,cy")
    sp.add_argument("--depth-scale", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("slm", help="stochastic latent modulation over archives")
    sp.add_argument("--latent", required=True)
    sp.add_argument("--noise", required=True)
    sp.add_argument("--mask", required=True)
    sp.add_argument("--depthmask", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--per-channel", action="store_true")
    sp.add_argument("--out-latent", required=True)
    sp.add_argument("--out-noise", required=True)
    sp.set_defaults(func=cmd_slm)

    sp = sub.add_parser("pipeline", help="toy end-to-end run / ablation sweep")
    psub = sp.add_subparsers(dest="pipeline_cmd", required=True)
    pr = psub.add_parser("run")
    pr.add_argument("--config", default="")
    pr.add_argument("--output-dir", default="")
    pr.set_defaults(func=cmd_pipeline, pipeline_cmd="run")
    pa = psub.add_parser("ablate")
    pa.add_argument("--config", default="")
    pa.add_argument("--axis", choices=("k", "delta"), required=True)
    pa.add_argument("--values", required=True)
    pa.add_argument("--out", default="")
    pa.set_defaults(func=cmd_pipeline, pipeline_cmd="ablate")

    return p


def main(argv=None) -> int:
    threads = os.environ.get("LATENT_DOLLY_THREADS")
    if threads is not None and (not threads.isdigit() or int(threads) < 1):
        print(f"LATENT_DOLLY_THREADS must be a positive integer, got {threads!r}", file=sys.stderr)
        return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except _USAGE_ERRORS as exc:
        print(f"error ({exc.category}): {exc}", file=sys.stderr)
        return 2
    except _IO_ERRORS as exc:
        cat = getattr(exc, "category", "io")
        print(f"error ({cat}): {exc}", file=sys.stderr)
        return 3
    except LatentDollyError as exc:
        print(f"error ({exc.category}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
