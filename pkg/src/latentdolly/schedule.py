"""Variance-preserving noise schedules and the forward diffusion map.

Covers schedule construction (linear / scaled-linear beta grids),
zero-terminal-SNR rescaling, SNR arithmetic, strength-to-index mapping,
and the baseline noise-interpolation strategies used by current video
models. Timesteps are 1-based to match the cumulative-product convention
alpha_bar_t = prod_{s=1..t} (1 - beta_s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateScheduleError,
    DimensionError,
    ParameterError,
    TimestepIndexError,
)
from .tensor import LatentTensor

#: Default endpoints for the scaled-linear family (configuration, not a
#: tested assertion: the upstream video model's exact endpoints are not
#: published in a citable form).
DEFAULT_BETA_START = 0.00085
DEFAULT_BETA_END = 0.012
DEFAULT_T = 1000


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-timestep betas and cumulative alpha_bars, both float64."""

    betas: np.ndarray
    alpha_bars: np.ndarray
    terminal: str  # "positive" | "zero"

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64).copy()
        abars = np.asarray(self.alpha_bars, dtype=np.float64).copy()
        if betas.shape != abars.shape or betas.ndim != 1 or betas.size < 2:
            raise ParameterError("betas/alpha_bars must be equal-length 1-D arrays, T >= 2")
        if self.terminal not in ("positive", "zero"):
            raise ParameterError(f"terminal must be 'positive' or 'zero', got {self.terminal!r}")
        if np.any(np.diff(abars) >= 0):
            raise ParameterError("alpha_bars must be strictly decreasing")
        if abars[0] >= 1.0 or np.any(abars < 0.0):
            raise ParameterError("alpha_bars must lie in [0, 1) ")
        if self.terminal == "positive" and abars[-1] <= 0.0:
            raise ParameterError("terminal=positive requires alpha_bar_T > 0")
        if self.terminal == "zero" and abars[-1] > 1e-12:
            raise ParameterError("terminal=zero requires alpha_bar_T <= 1e-12")
        betas.flags.writeable = False
        abars.flags.writeable = False
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", abars)

    @property
    def T(self) -> int:
        return self.betas.size

    def alpha_bar(self, t: int) -> float:
        """alpha_bar at 1-based timestep t."""
        if not 1 <= t <= self.T:
            raise TimestepIndexError(f"timestep {t} outside [1, {self.T}]")
        return float(self.alpha_bars[t - 1])

    def beta(self, t: int) -> float:
        if not 1 <= t <= self.T:
            raise TimestepIndexError(f"timestep {t} outside [1, {self.T}]")
        return float(self.betas[t - 1])


def make_schedule(T: int, beta_start: float, beta_end: float, kind: str = "scaled_linear") -> NoiseSchedule:
    """Build a positive-terminal schedule from a beta grid.

    linear: betas evenly spaced; scaled_linear: sqrt(beta) evenly spaced.
    """
    if T < 2:
        raise ParameterError(f"T must be >= 2, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ParameterError(
            f"require 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    if kind == "linear":
        betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    elif kind == "scaled_linear":
        betas = np.linspace(np.sqrt(beta_start), np.sqrt(beta_end), T, dtype=np.float64) ** 2
    else:
        raise ParameterError(f"unknown schedule kind {kind!r}")
    alpha_bars = np.cumprod(1.0 - betas)
    return NoiseSchedule(betas, alpha_bars, "positive")


def default_schedule(zero_terminal: bool = True) -> NoiseSchedule:
    s = make_schedule(DEFAULT_T, DEFAULT_BETA_START, DEFAULT_BETA_END, "scaled_linear")
    return rescale_zero_terminal_snr(s) if zero_terminal else s


def rescale_zero_terminal_snr(s: NoiseSchedule) -> NoiseSchedule:
    """Shift/scale sqrt(alpha_bar) so the terminal value is exactly zero
    while the first value is preserved; betas are recomputed from
    consecutive alpha_bar ratios. Idempotent: on a zero-terminal schedule
    the shift/scale is the identity."""
    sq = np.sqrt(s.alpha_bars)
    sq1, sqT = sq[0], sq[-1]
    if sq1 - sqT < 1e-15:
        raise DegenerateScheduleError("flat schedule: alpha_bar_1 == alpha_bar_T")
    sq = (sq - sqT) * (sq1 / (sq1 - sqT))
    sq[-1] = 0.0
    abars = sq * sq
    betas = np.empty_like(abars)
    betas[0] = 1.0 - abars[0]
    betas[1:] = 1.0 - abars[1:] / abars[:-1]
    return NoiseSchedule(betas, abars, "zero")


def snr(s: NoiseSchedule, t: int) -> float:
    """Signal-to-noise ratio alpha_bar_t / (1 - alpha_bar_t); 0 when alpha_bar_t = 0."""
    ab = s.alpha_bar(t)
    if ab == 0.0:
        return 0.0
    return ab / (1.0 - ab)


def forward_diffuse(x0: LatentTensor, eps: LatentTensor, alpha_bar: float) -> LatentTensor:
    """sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps.

    At alpha_bar = 0 this returns eps bit-exactly for every x0: the
    collapse that breaks injectivity of the forward map.
    """
    if not x0.same_dims(eps):
        raise DimensionError(f"dims differ: {x0.dims} vs {eps.dims}")
    if not 0.0 <= alpha_bar <= 1.0:
        raise ParameterError(f"alpha_bar must lie in [0, 1], got {alpha_bar}")
    if alpha_bar == 0.0:
        return LatentTensor(eps.data.copy())
    if alpha_bar == 1.0:
        return LatentTensor(x0.data.copy())
    a = float(np.sqrt(alpha_bar))
    b = float(np.sqrt(1.0 - alpha_bar))
    return LatentTensor(a * x0.data + b * eps.data)


def interpolate_init(x0: LatentTensor, eps: LatentTensor, strategy: str, param: float) -> LatentTensor:
    """Baseline initializations: additive (x0 + gamma*eps), flow
    (t*eps + (1-t)*x0), and vp (forward diffusion with
    alpha_bar = (1 - param)^2)."""
    if not x0.same_dims(eps):
        raise DimensionError(f"dims differ: {x0.dims} vs {eps.dims}")
    if strategy == "additive":
        if param < 0.0:
            raise ParameterError(f"additive param must be >= 0, got {param}")
        return LatentTensor(x0.data + float(param) * eps.data)
    if strategy == "flow":
        if not 0.0 <= param <= 1.0:
            raise ParameterError(f"flow param must lie in [0, 1], got {param}")
        return LatentTensor(float(param) * eps.data + float(1.0 - param) * x0.data)
    if strategy == "vp":
        if not 0.0 <= param <= 1.0:
            raise ParameterError(f"vp param must lie in [0, 1], got {param}")
        return forward_diffuse(x0, eps, (1.0 - param) ** 2)
    raise ParameterError(f"unknown interpolation strategy {strategy!r}")


def strength_to_index(strength: float, T: int) -> int:
    """round(strength * T), clamped to [1, T]."""
    if not 0.0 < strength <= 1.0:
        raise ParameterError(f"strength must lie in (0, 1], got {strength}")
    t = int(np.floor(strength * T + 0.5))
    return min(max(t, 1), T)
