"""Camera-conditioning geometry: depth unprojection, pose transforms,
z-buffer point splatting, visibility masks, and canonical trajectories.

Conventions: pixel centers at integer coordinates, +z along the optical
axis, projected coordinates rounded half-up, points at z <= z_near
culled, and z ties broken by the lowest source row-major index so the
renderer is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyCloudError, ParameterError
from .tensor import BinaryMask

Z_NEAR = 1e-6


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ParameterError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")


@dataclass(frozen=True)
class Pose:
    """Rigid transform p' = R @ p + t (source camera to target camera)."""

    R: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64).reshape(3)
        if R.shape != (3, 3):
            raise ParameterError(f"R must be 3x3, got {R.shape}")
        if not np.allclose(R.T @ R, np.eye(3), atol=1e-9):
            raise ParameterError("R is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ParameterError("det(R) != 1")
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "t", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def inverse(self) -> "Pose":
        return Pose(self.R.T, -self.R.T @ self.t)

    def compose(self, other: "Pose") -> "Pose":
        """self after other: p -> self(other(p))."""
        return Pose(self.R @ other.R, self.R @ other.t + self.t)


@dataclass(frozen=True)
class PointCloud:
    """3xN camera-space points with parallel colors and validity flags."""

    points: np.ndarray  # (3, N)
    colors: np.ndarray  # (N, 3)
    valid: np.ndarray  # (N,) bool
    source_shape: tuple  # (H, W) of the pixel grid the cloud came from

    @property
    def count(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class RenderOutput:
    image: np.ndarray  # (H, W, 3)
    visibility: np.ndarray  # (H, W) uint8, 1 = hole / out of frame
    depth: np.ndarray  # (H, W) z-buffer, 0 where no splat landed


def rotation_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rotation_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def unproject(image: np.ndarray, depth: np.ndarray, k: Intrinsics, valid: np.ndarray | None = None) -> PointCloud:
    """Lift every pixel (u, v) with depth d to d * K^-1 * [u, v, 1]^T."""
    image = np.asarray(image, dtype=np.float64)
    depth = np.asarray(depth, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"image must be (H, W, 3), got {image.shape}")
    if depth.shape != image.shape[:2]:
        raise DimensionError(f"depth {depth.shape} does not match image {image.shape[:2]}")
    h, w = depth.shape
    if valid is None:
        valid = np.isfinite(depth) & (depth > 0)
    else:
        valid = np.asarray(valid, dtype=bool) & np.isfinite(depth) & (depth > 0)
    if not valid.any():
        raise EmptyCloudError("no valid depth anywhere: empty point cloud")
    u, v = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    d = np.where(valid, depth, 1.0)
    x = d * (u - k.cx) / k.fx
    y = d * (v - k.cy) / k.fy
    points = np.stack([x.ravel(), y.ravel(), d.ravel()])
    return PointCloud(points, image.reshape(-1, 3), valid.ravel(), (h, w))


def transform_points(cloud: PointCloud, pose: Pose) -> PointCloud:
    return PointCloud(pose.R @ cloud.points + pose.t[:, None], cloud.colors, cloud.valid, cloud.source_shape)


def project_splat(cloud: PointCloud, k: Intrinsics, out_dims: tuple, z_near: float = Z_NEAR) -> RenderOutput:
    """Perspective-project and splat with a z-buffer.

    u = fx*x/z + cx, v = fy*y/z + cy, rounded half-up. The nearest point
    wins each pixel; equal depths resolve to the lowest source index.
    """
    if cloud.count == 0:
        raise EmptyCloudError("cannot splat an empty cloud")
    h, w = int(out_dims[0]), int(out_dims[1])
    x, y, z = cloud.points
    keep = cloud.valid & (z > z_near)
    u = np.floor(k.fx * x[keep] / z[keep] + k.cx + 0.5).astype(np.int64)
    v = np.floor(k.fy * y[keep] / z[keep] + k.cy + 0.5).astype(np.int64)
    inside = (u >= 0) & (u < w) & (v >= 0) & (v < h)
    src = np.nonzero(keep)[0][inside]
    u, v = u[inside], v[inside]
    z_in = z[keep][inside]

    image = np.zeros((h, w, 3), dtype=cloud.colors.dtype)
    visibility = np.ones((h, w), dtype=np.uint8)
    depth = np.zeros((h, w), dtype=np.float64)
    if src.size:
        flat = v * w + u
        # Sort by (pixel, z, source index); the first entry per pixel wins.
        order = np.lexsort((src, z_in, flat))
        flat_s = flat[order]
        first = np.ones(flat_s.size, dtype=bool)
        first[1:] = flat_s[1:] != flat_s[:-1]
        winners = order[first]
        tgt = flat[winners]
        image.reshape(-1, 3)[tgt] = cloud.colors[src[winners]]
        visibility.reshape(-1)[tgt] = 0
        depth.reshape(-1)[tgt] = z_in[winners]
    return RenderOutput(image, visibility, depth)


@dataclass(frozen=True)
class TrajectorySpec:
    """A named camera move; frame 0 is always the identity pose."""

    kind: str
    magnitude: float = 1.0
    curve: str = "linear"

    KINDS = (
        "translate_x_pos",
        "translate_x_neg",
        "translate_y_pos",
        "translate_y_neg",
        "dolly_in",
        "dolly_out",
        "pan_left",
        "pan_right",
        "tilt_up",
        "arc",
    )

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown trajectory kind {self.kind!r}")
        if self.curve not in ("linear", "ease"):
            raise ParameterError(f"unknown curve {self.curve!r}")

    def _fractions(self, n_frames: int) -> np.ndarray:
        if n_frames < 1:
            raise ParameterError("n_frames must be >= 1")
        if n_frames == 1:
            return np.zeros(1)
        s = np.arange(n_frames, dtype=np.float64) / (n_frames - 1)
        if self.curve == "ease":
            s = 0.5 - 0.5 * np.cos(np.pi * s)
        return s

    def poses(self, n_frames: int, arc_radius: float = 4.0) -> list:
        """n_frames poses interpolating from identity to the full move."""
        out = []
        for f in self._fractions(n_frames):
            m = self.magnitude * f
            if self.kind == "translate_x_pos":
                p = Pose(np.eye(3), [-m, 0.0, 0.0])
            elif self.kind == "translate_x_neg":
                p = Pose(np.eye(3), [m, 0.0, 0.0])
            elif self.kind == "translate_y_pos":
                p = Pose(np.eye(3), [0.0, -m, 0.0])
            elif self.kind == "translate_y_neg":
                p = Pose(np.eye(3), [0.0, m, 0.0])
            elif self.kind == "dolly_in":
                p = Pose(np.eye(3), [0.0, 0.0, -m])
            elif self.kind == "dolly_out":
                p = Pose(np.eye(3), [0.0, 0.0, m])
            elif self.kind == "pan_left":
                p = Pose(rotation_y(m), np.zeros(3))
            elif self.kind == "pan_right":
                p = Pose(rotation_y(-m), np.zeros(3))
            elif self.kind == "tilt_up":
                p = Pose(rotation_x(m), np.zeros(3))
            else:  # arc: orbit about a pivot on the optical axis
                R = rotation_y(m)
                pivot = np.array([0.0, 0.0, arc_radius])
                p = Pose(R, pivot - R @ pivot)
            out.append(p)
        return out


def canonical_trajectories(
    translate: float = 0.25,
    dolly: float = 0.5,
    pan: float = 0.12,
    tilt: float = 0.10,
    arc: float = 0.20,
) -> dict:
    """The ten stock camera moves; magnitudes are scene-unit/radian knobs."""
    return {
        "translate_x_pos": TrajectorySpec("translate_x_pos", translate),
        "translate_x_neg": TrajectorySpec("translate_x_neg", translate),
        "translate_y_pos": TrajectorySpec("translate_y_pos", translate),
        "translate_y_neg": TrajectorySpec("translate_y_neg", translate),
        "dolly_in": TrajectorySpec("dolly_in", dolly),
        "dolly_out": TrajectorySpec("dolly_out", dolly),
        "pan_left": TrajectorySpec("pan_left", pan),
        "pan_right": TrajectorySpec("pan_right", pan),
        "tilt_up": TrajectorySpec("tilt_up", tilt),
        "arc": TrajectorySpec("arc", arc),
    }


def render_sequence(frames: np.ndarray, depths: np.ndarray, k: Intrinsics, poses) -> tuple:
    """Per-frame unproject -> transform -> splat.

    Returns (rendered (F,H,W,3), masks (F,H,W) uint8, depths (F,H,W)).
    """
    frames = np.asarray(frames)
    depths = np.asarray(depths)
    if frames.ndim != 4 or frames.shape[0] != depths.shape[0] or len(poses) != frames.shape[0]:
        raise ParameterError(
            f"frame/depth/pose counts differ: {frames.shape[0]}, {depths.shape[0]}, {len(poses)}"
        )
    rendered = np.zeros_like(frames, dtype=np.float64)
    masks = np.zeros(depths.shape, dtype=np.uint8)
    zbufs = np.zeros(depths.shape, dtype=np.float64)
    for i, pose in enumerate(poses):
        cloud = transform_points(unproject(frames[i], depths[i], k), pose)
        out = project_splat(cloud, k, frames.shape[1:3])
        rendered[i] = out.image
        masks[i] = out.visibility
        zbufs[i] = out.depth
    return rendered, masks, zbufs


def near_depth_mask(depth: np.ndarray, mode: str = "background", quantile: float = 0.5, valid: np.ndarray | None = None):
    """Per-frame quantile split of a depth map.

    background mode flags depth > threshold; near mode flags
    depth <= threshold. Constant depth yields an all-ones mask and a
    warning flag (no meaningful split exists).

    Returns (mask uint8, constant_depth_warning bool).
    """
    if not 0.0 < quantile < 1.0:
        raise ParameterError(f"quantile must lie in (0, 1), got {quantile}")
    if mode not in ("background", "near"):
        raise ParameterError(f"mode must be 'background' or 'near', got {mode!r}")
    depth = np.asarray(depth, dtype=np.float64)
    if valid is None:
        valid = np.isfinite(depth) & (depth > 0)
    vals = depth[valid]
    if vals.size == 0:
        raise EmptyCloudError("no valid depth to threshold")
    if vals.max() == vals.min():
        return np.ones(depth.shape, dtype=np.uint8) * valid.astype(np.uint8), True
    thr = float(np.quantile(vals, quantile))
    if mode == "background":
        mask = (depth > thr) & valid
    else:
        mask = (depth <= thr) & valid
    return mask.astype(np.uint8), False


def downsample_mask_to_latent(
    masks: np.ndarray,
    spatial_factor: int = 8,
    temporal_factor: int = 4,
    threshold: float = 0.5,
    channels: int = 16,
) -> BinaryMask:
    """Majority-vote pixel masks down to the latent grid.

    A latent cell is 1 iff the fraction of 1s in its
    temporal_factor x spatial_factor x spatial_factor pixel block is
    >= threshold; the result is broadcast across latent channels.
    """
    masks = np.asarray(masks)
    if masks.ndim != 3:
        raise DimensionError(f"expected (F, H, W) masks, got {masks.shape}")
    f, h, w = masks.shape
    if f % temporal_factor or h % spatial_factor or w % spatial_factor:
        raise DimensionError(
            f"dims {masks.shape} not divisible by factors ({temporal_factor}, {spatial_factor})"
        )
    blocks = masks.reshape(
        f // temporal_factor, temporal_factor, h // spatial_factor, spatial_factor, w // spatial_factor, spatial_factor
    )
    frac = blocks.astype(np.float64).mean(axis=(1, 3, 5))
    cell = (frac >= threshold).astype(np.uint8)
    out = np.broadcast_to(cell[None, :, None, :, :], (1, cell.shape[0], channels, cell.shape[1], cell.shape[2]))
    return BinaryMask(out.copy())
