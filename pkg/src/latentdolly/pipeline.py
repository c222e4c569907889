"""End-to-end toy dynamic-view-synthesis runs.

Chain: synthetic scene -> novel-view render + visibility masks -> toy
encode -> DDIM inversion (oracle denoiser) -> adaptive recursive noise
initialization -> stochastic latent modulation -> sampling -> decode ->
metrics. Everything is deterministic per config, and the oracle denoiser
stands in for the video model so acceptance stays algebraic.

The toy codec honors the latent shape contract (4x temporal, 8x spatial
compression, 16 channels) with a fixed seeded orthonormal patch basis:
encode(decode(z)) = z exactly, and decode(encode(v)) = v for any video in
the basis range. A 48:1-compressing codec cannot invert arbitrary video,
so toy scenes emit range-projected frames by construction.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, asdict, fields as dc_fields

import numpy as np

from . import fileio
from .ddim import OracleDenoiser, invert, sample
from .errors import DimensionError, ParameterError
from .geometry import Intrinsics, TrajectorySpec, downsample_mask_to_latent, near_depth_mask, render_sequence
from .krnr import adaptive_krnr, krnr_coefficients
from .rng import Rng
from .schedule import make_schedule, rescale_zero_terminal_snr, strength_to_index
from .slm import ModulationInputs, modulate
from .tensor import LatentTensor, stats

SPATIAL_FACTOR = 8
TEMPORAL_FACTOR = 4
LATENT_CHANNELS = 16
_PATCH = TEMPORAL_FACTOR * SPATIAL_FACTOR * SPATIAL_FACTOR * 3  # 768


@dataclass(frozen=True)
class ToyCodec:
    """Fixed orthonormal patch projection with the production shape contract."""

    basis: np.ndarray  # (768, 16), orthonormal columns

    @classmethod
    def from_seed(cls, seed: int) -> "ToyCodec":
        gen = Rng(seed).split("toy-codec").generator()
        a = gen.standard_normal((_PATCH, LATENT_CHANNELS))
        q, _ = np.linalg.qr(a)
        q.flags.writeable = False
        return cls(q)

    @staticmethod
    def latent_shape(f: int, h: int, w: int) -> tuple:
        if f % TEMPORAL_FACTOR or h % SPATIAL_FACTOR or w % SPATIAL_FACTOR:
            raise DimensionError(
                f"video dims ({f}, {h}, {w}) not divisible by ({TEMPORAL_FACTOR}, {SPATIAL_FACTOR}, {SPATIAL_FACTOR})"
            )
        return (f // TEMPORAL_FACTOR, LATENT_CHANNELS, h // SPATIAL_FACTOR, w // SPATIAL_FACTOR)

    def _blocks(self, video: np.ndarray) -> np.ndarray:
        f, h, w, _ = video.shape
        ft, hs, ws = f // TEMPORAL_FACTOR, h // SPATIAL_FACTOR, w // SPATIAL_FACTOR
        b = video.reshape(ft, TEMPORAL_FACTOR, hs, SPATIAL_FACTOR, ws, SPATIAL_FACTOR, 3)
        return b.transpose(0, 2, 4, 1, 3, 5, 6).reshape(ft, hs, ws, _PATCH)

    def encode(self, video: np.ndarray) -> LatentTensor:
        """(F, H, W, 3) video -> (1, F/4, 16, H/8, W/8) latent."""
        video = np.asarray(video, dtype=np.float64)
        if video.ndim != 4 or video.shape[3] != 3:
            raise DimensionError(f"video must be (F, H, W, 3), got {video.shape}")
        self.latent_shape(*video.shape[:3])
        z = self._blocks(video) @ self.basis  # (F/4, H/8, W/8, 16)
        return LatentTensor(z.transpose(0, 3, 1, 2)[None].astype(np.float32))

    def decode(self, latent: LatentTensor) -> np.ndarray:
        """Inverse of encode on the basis range."""
        b, ft, c, hs, ws = latent.dims
        if b != 1 or c != LATENT_CHANNELS:
            raise DimensionError(f"latent must be (1, F/4, {LATENT_CHANNELS}, h, w), got {latent.dims}")
        z = latent.data.astype(np.float64)[0].transpose(0, 2, 3, 1)  # (F/4, h, w, 16)
        blocks = z @ self.basis.T  # (F/4, h, w, 768)
        v = blocks.reshape(ft, hs, ws, TEMPORAL_FACTOR, SPATIAL_FACTOR, SPATIAL_FACTOR, 3)
        return v.transpose(0, 3, 1, 4, 2, 5, 6).reshape(
            ft * TEMPORAL_FACTOR, hs * SPATIAL_FACTOR, ws * SPATIAL_FACTOR, 3
        )

    def project_to_range(self, video: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(video))


@dataclass(frozen=True)
class ToyScene:
    kind: str
    frames: np.ndarray  # (F, H, W, 3), codec-range colors
    depth: np.ndarray  # (F, H, W), strictly positive
    intrinsics: Intrinsics
    seed: int


def _smooth_texture(gen, h: int, w: int, n_waves: int = 6) -> np.ndarray:
    """Bounded smooth color field from a few random plane waves."""
    u, v = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    tex = np.zeros((h, w, 3))
    for _ in range(n_waves):
        kx, ky = gen.uniform(-0.25, 0.25, size=2)
        phase = gen.uniform(0, 2 * np.pi, size=3)
        amp = gen.uniform(0.05, 0.2, size=3)
        for ch in range(3):
            tex[:, :, ch] += amp[ch] * np.sin(kx * u + ky * v + phase[ch])
    return 0.5 + tex / max(1.0, 2.0 * np.abs(tex).max())


def make_toy_scene(kind: str, dims: tuple, seed: int, codec: ToyCodec | None = None) -> ToyScene:
    """Deterministic synthetic scene with analytic depth.

    textured_plane: one plane at constant depth. two_layer_parallax: a
    foreground occluder in front of a background plane, so novel views
    expose genuinely unseen background.
    """
    f, h, w = (int(d) for d in dims)
    ToyCodec.latent_shape(f, h, w)  # divisibility check
    if codec is None:
        codec = ToyCodec.from_seed(seed)
    gen = Rng(seed).split(f"toy-scene-{kind}").generator()
    frames = np.zeros((f, h, w, 3))
    depth = np.zeros((f, h, w))
    if kind == "textured_plane":
        tex = _smooth_texture(gen, h, w)
        for i in range(f):
            # Mild temporal brightness drift keeps frames distinct.
            frames[i] = tex * (0.85 + 0.15 * np.sin(2 * np.pi * i / max(f, 1)))
        depth[:] = 2.0
    elif kind == "two_layer_parallax":
        bg = _smooth_texture(gen, h, w)
        fg = _smooth_texture(gen, h, w)
        r0, r1 = h // 4, h // 4 + h // 3
        c0, c1 = w // 3, w // 3 + w // 4
        for i in range(f):
            frames[i] = bg * (0.9 + 0.1 * np.cos(2 * np.pi * i / max(f, 1)))
            frames[i, r0:r1, c0:c1] = fg[r0:r1, c0:c1]
            depth[i] = 4.0
            depth[i, r0:r1, c0:c1] = 1.5
    else:
        raise ParameterError(f"unknown toy scene kind {kind!r}")
    frames = codec.project_to_range(frames)
    intr = Intrinsics(fx=0.8 * w, fy=0.8 * w, cx=(w - 1) / 2.0, cy=(h - 1) / 2.0)
    return ToyScene(kind, frames, depth, intr, seed)


@dataclass(frozen=True)
class PipelineConfig:
    scene_kind: str = "two_layer_parallax"
    frames: int = 8
    height: int = 64
    width: int = 64
    seed: int = 0
    schedule_T: int = 1000
    beta_start: float = 0.00085
    beta_end: float = 0.012
    schedule_kind: str = "scaled_linear"
    k: float = 10
    delta: int = 3
    strength: float = 0.95
    invert_steps: int = 30
    sample_steps: int = 50
    trajectory: str = "identity"
    trajectory_magnitude: float = 0.25
    slm_seed: int = 0
    mask_mode: str = "background"
    mask_quantile: float = 0.5
    mask_threshold: float = 0.5
    apply_slm: bool = True
    denoiser_mode: str = "v"
    output_dir: str = ""


CONFIG_KEYS = tuple(f.name for f in dc_fields(PipelineConfig))


def read_config(path) -> PipelineConfig:
    """JSON config with strict key checking: unknown keys are rejected."""
    obj = fileio.load_strict_json(path, CONFIG_KEYS)
    return PipelineConfig(**obj)


def _poses_for(config: PipelineConfig, n_frames: int):
    if config.trajectory == "identity":
        from .geometry import Pose

        return [Pose.identity() for _ in range(n_frames)]
    return TrajectorySpec(config.trajectory, config.trajectory_magnitude).poses(n_frames)


def _psnr(a: np.ndarray, b: np.ndarray, where: np.ndarray, peak: float = 1.0, cap: float = 99.0) -> float:
    diff = (a - b)[where]
    if diff.size == 0:
        return cap
    mse = float(np.mean(diff * diff))
    if mse <= peak * peak * 10.0 ** (-cap / 10.0):
        return cap
    return 10.0 * math.log10(peak * peak / mse)


def run_dvs(config: PipelineConfig) -> dict:
    """One full toy dynamic-view-synthesis pass; returns the metrics report."""
    out_dir = config.output_dir or None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    try:
        report = _run_dvs_inner(config, out_dir)
    except Exception as exc:
        if out_dir:
            with open(os.path.join(out_dir, "FAILED"), "w") as f:
                f.write(f"{type(exc).__name__}: {exc}\n")
        raise
    if out_dir:
        with open(os.path.join(out_dir, "metrics.json"), "w") as f:
            json.dump(report, f, indent=2, sort_keys=True)
    return report


def _run_dvs_inner(config: PipelineConfig, out_dir) -> dict:
    codec = ToyCodec.from_seed(config.seed)
    scene = make_toy_scene(config.scene_kind, (config.frames, config.height, config.width), config.seed, codec)
    poses = _poses_for(config, config.frames)
    rendered, vis_masks, zbufs = render_sequence(scene.frames, scene.depth, scene.intrinsics, poses)

    depth_masks = np.zeros_like(vis_masks)
    for i in range(config.frames):
        valid = vis_masks[i] == 0
        depth_masks[i], _ = near_depth_mask(zbufs[i], config.mask_mode, config.mask_quantile, valid=valid)

    m_latent = downsample_mask_to_latent(vis_masks, SPATIAL_FACTOR, TEMPORAL_FACTOR, config.mask_threshold)
    d_latent = downsample_mask_to_latent(depth_masks, SPATIAL_FACTOR, TEMPORAL_FACTOR, config.mask_threshold)

    x0 = codec.encode(rendered)

    schedule_pos = make_schedule(config.schedule_T, config.beta_start, config.beta_end, config.schedule_kind)
    schedule_zero = rescale_zero_terminal_snr(schedule_pos)
    t_idx = strength_to_index(config.strength, config.schedule_T)

    inv_denoiser = OracleDenoiser(x0, schedule=schedule_pos, mode=config.denoiser_mode)
    eps_inv = invert(x0, schedule_pos, config.invert_steps, inv_denoiser, t_idx)

    occluded_cells = int(m_latent.data.max(axis=2).sum())
    total_cells = int(np.prod(m_latent.dims) // m_latent.dims[2])
    overwritten = 0
    if config.apply_slm and occluded_cells:
        slm_rng = Rng(config.slm_seed).split("slm")
        x0_m, eps_m = modulate(ModulationInputs(x0, eps_inv, m_latent, d_latent), slm_rng)
        # Provenance trace on a position-encoded twin (same draws).
        pos = np.broadcast_to(
            np.arange(total_cells, dtype=np.float64).reshape(
                m_latent.dims[0], m_latent.dims[1], 1, m_latent.dims[3], m_latent.dims[4]
            ),
            m_latent.dims,
        )
        pos_t = LatentTensor(pos.copy())
        pos_m, _ = modulate(ModulationInputs(pos_t, pos_t, m_latent, d_latent), slm_rng)
        overwritten = int(np.sum((pos_m.data != pos.data).max(axis=2)))
    else:
        x0_m, eps_m = x0, eps_inv

    alpha_bar_t = schedule_zero.alpha_bar(t_idx)
    x_init = adaptive_krnr(x0_m, eps_m, alpha_bar_t, config.k, config.delta)

    sample_denoiser = OracleDenoiser(x0_m, schedule=schedule_zero, mode=config.denoiser_mode)
    x_out = sample(x_init, schedule_zero, config.sample_steps, sample_denoiser, t_idx)
    out_frames = codec.decode(x_out)

    visible = vis_masks == 0
    psnr_visible = _psnr(out_frames, rendered, np.broadcast_to(visible[..., None], out_frames.shape))

    coeff_trace = []
    for ki in range(1, int(math.ceil(config.k)) + 1):
        c = krnr_coefficients(alpha_bar_t, ki)
        coeff_trace.append({"k": ki, "c_x0": c.c_x0, "c_eps": c.c_eps})

    init_stats = stats(x_init)
    config_dict = asdict(config)
    config_dict.pop("output_dir")  # not an input to the math; keeps reports byte-stable
    report = {
        "config": config_dict,
        "alpha_bar_t": alpha_bar_t,
        "t_index": t_idx,
        "latent_shape": list(x0.dims),
        "psnr_visible_db": psnr_visible,
        "mask_coverage_fraction": occluded_cells / total_cells,
        "slm_overwritten_cells": overwritten,
        "slm_occluded_cells": occluded_cells,
        "init_mean": init_stats.mean,
        "init_variance": init_stats.variance,
        "coefficient_trace": coeff_trace,
    }

    if out_dir:
        fileio.write_latent(os.path.join(out_dir, "x0.krnr"), x0)
        fileio.write_latent(os.path.join(out_dir, "eps_inv.krnr"), eps_inv)
        fileio.write_latent(os.path.join(out_dir, "x_init.krnr"), x_init)
        fileio.write_latent(os.path.join(out_dir, "x_out.krnr"), x_out)
        fileio.write_mask(os.path.join(out_dir, "mask_occlusion.krnr"), m_latent)
        fileio.write_mask(os.path.join(out_dir, "mask_depth.krnr"), d_latent)
        for i in range(config.frames):
            fileio.write_image_ppm(os.path.join(out_dir, f"render_{i:03d}.ppm"), rendered[i])
            fileio.write_mask_pgm(os.path.join(out_dir, f"visibility_{i:03d}.pgm"), vis_masks[i])
            fileio.write_image_ppm(os.path.join(out_dir, f"output_{i:03d}.ppm"), np.clip(out_frames[i], 0, 1))
    return report


def ablation_sweep(config: PipelineConfig, axis: str, values, csv_path=None) -> list:
    """run_dvs once per value of k or delta; returns (and optionally
    writes) per-value metric rows."""
    if axis not in ("k", "delta"):
        raise ParameterError(f"axis must be 'k' or 'delta', got {axis!r}")
    rows = []
    for v in values:
        if axis == "k":
            if v < config.delta:
                cfg = _replace(config, k=v, delta=max(1, min(config.delta, int(math.ceil(v)))))
            else:
                cfg = _replace(config, k=v)
        else:
            if v > math.ceil(config.k):
                raise ParameterError(f"delta={v} exceeds ceil(k)={math.ceil(config.k)}")
            cfg = _replace(config, delta=int(v))
        rep = run_dvs(cfg)
        c = krnr_coefficients(rep["alpha_bar_t"], cfg.k)
        rows.append(
            (
                v,
                rep["psnr_visible_db"],
                rep["init_mean"],
                rep["init_variance"],
                c.c_x0,
                c.c_eps,
                rep["mask_coverage_fraction"],
            )
        )
    if csv_path is not None:
        fileio.write_csv(
            csv_path,
            rows,
            [axis, "psnr_visible_db", "init_mean", "init_variance", "c_x0", "c_eps", "mask_coverage"],
        )
    return rows


def _replace(config: PipelineConfig, **kw) -> PipelineConfig:
    d = asdict(config)
    d.update(kw)
    d["output_dir"] = ""  # sweeps keep artifacts from individual runs off disk
    return PipelineConfig(**d)
