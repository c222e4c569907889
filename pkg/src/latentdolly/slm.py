"""Stochastic latent modulation: visibility-aware occlusion filling.

The sampling mask S = (1 - M) * D names latent positions that are both
visible and in the eligible depth class. Each occluded position draws a
source position uniformly (with replacement) from S, and both the
content latent and the inverted-noise latent copy from the SAME source
index, so an occluded cell moves coherently.

Two index spaces are supported: channel-coherent (default; a cell is a
(B, F, H, W) site and its whole channel vector moves together) and
per-channel (every (B, F, C, H, W) element drawn independently).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NoVisibleSourceError
from .rng import Rng
from .tensor import BinaryMask, LatentTensor


@dataclass(frozen=True)
class ModulationInputs:
    x0: LatentTensor
    eps_inv: LatentTensor
    occlusion: BinaryMask  # M, 1 = occluded
    depth_class: BinaryMask  # D, 1 = eligible source

    def __post_init__(self):
        dims = self.x0.dims
        for other in (self.eps_inv.dims, self.occlusion.dims, self.depth_class.dims):
            if other != dims:
                raise DimensionError(f"modulation inputs disagree on dims: {dims} vs {other}")


def sampling_mask(m: BinaryMask, d: BinaryMask) -> BinaryMask:
    """S = (1 - M) * D."""
    if m.dims != d.dims:
        raise DimensionError(f"mask dims differ: {m.dims} vs {d.dims}")
    return BinaryMask((1 - m.data) * d.data)


def modulate(inputs: ModulationInputs, rng: Rng, per_channel: bool = False):
    """Fill occluded positions of x0 and eps_inv from the source pool.

    Targets are processed in row-major order with one uniform draw each
    (counter-based, so the result is independent of scheduling). Visible
    positions pass through bit-exactly.

    Returns (x0_tilde, eps_inv_tilde).
    """
    s = sampling_mask(inputs.occlusion, inputs.depth_class)
    x = inputs.x0.data.copy()
    e = inputs.eps_inv.data.copy()

    if per_channel:
        m_flat = inputs.occlusion.data.ravel()
        s_flat = s.data.ravel()
        targets = np.nonzero(m_flat == 1)[0]
        sources = np.nonzero(s_flat == 1)[0]
        if targets.size == 0:
            return LatentTensor(x), LatentTensor(e)
        if sources.size == 0:
            raise NoVisibleSourceError("occluded targets exist but the source pool is empty")
        draws = rng.generator().integers(0, sources.size, size=targets.size)
        picked = sources[draws]
        x.reshape(-1)[targets] = x.reshape(-1)[picked]
        e.reshape(-1)[targets] = e.reshape(-1)[picked]
        return LatentTensor(x), LatentTensor(e)

    # Channel-coherent: collapse the channel axis; a cell is occluded /
    # eligible if any channel says so (masks from the geometry path are
    # channel-uniform anyway).
    m_cell = inputs.occlusion.data.max(axis=2)
    s_cell = s.data.min(axis=2)
    targets = np.nonzero(m_cell.ravel() == 1)[0]
    sources = np.nonzero(s_cell.ravel() == 1)[0]
    if targets.size == 0:
        return LatentTensor(x), LatentTensor(e)
    if sources.size == 0:
        raise NoVisibleSourceError("occluded targets exist but the source pool is empty")
    draws = rng.generator().integers(0, sources.size, size=targets.size)
    picked = sources[draws]
    b, f, c, h, w = inputs.x0.dims
    xc = x.transpose(0, 1, 3, 4, 2).reshape(-1, c)
    ec = e.transpose(0, 1, 3, 4, 2).reshape(-1, c)
    xc[targets] = xc[picked]
    ec[targets] = ec[picked]
    x = xc.reshape(b, f, h, w, c).transpose(0, 1, 4, 2, 3)
    e = ec.reshape(b, f, h, w, c).transpose(0, 1, 4, 2, 3)
    return LatentTensor(x), LatentTensor(e)
