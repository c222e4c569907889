"""Deterministic DDIM stepping and inversion against pluggable denoisers.

The update is the eta = 0 rule: decompose the current latent into
(x0_hat, eps_hat) using the prediction at the current timestep, then
re-noise to the destination alpha_bar. Run descending for sampling,
ascending for inversion; with a step-consistent denoiser the two are
exact algebraic inverses.

Every plan is checked against alpha_bar = 0: a trajectory touching the
zero-terminal point cannot be inverted (the forward map there returns
the noise unchanged, independent of x0), and raises CollapseError.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CollapseError, DimensionError, ParameterError
from .schedule import NoiseSchedule, forward_diffuse
from .tensor import LatentTensor

_COLLAPSE_EPS = 1e-12

PREDICTION_MODES = ("eps", "x0", "v")


class Denoiser:
    """Prediction seam: predict(x_t, t) -> tensor in ``mode`` parameterization."""

    mode = "eps"

    def predict(self, x_t: LatentTensor, t: int) -> LatentTensor:
        raise NotImplementedError


def convert_prediction(
    x_t: LatentTensor,
    pred: LatentTensor,
    alpha_bar: float,
    from_mode: str,
    to: str,
) -> LatentTensor:
    """Exact algebra among eps / x0 / v parameterizations.

    v = sqrt(a) * eps - sqrt(1-a) * x0, so
    eps_hat = sqrt(a) * v + sqrt(1-a) * x_t and
    x0_hat  = sqrt(a) * x_t - sqrt(1-a) * v.
    """
    if not x_t.same_dims(pred):
        raise DimensionError(f"dims differ: {x_t.dims} vs {pred.dims}")
    if from_mode not in PREDICTION_MODES or to not in PREDICTION_MODES:
        raise ParameterError(f"modes must be one of {PREDICTION_MODES}")
    if not 0.0 <= alpha_bar <= 1.0:
        raise ParameterError(f"alpha_bar must lie in [0, 1], got {alpha_bar}")
    if from_mode == to:
        return pred
    a = math.sqrt(alpha_bar)
    b = math.sqrt(1.0 - alpha_bar)
    xt, p = x_t.data, pred.data
    if to == "x0" and alpha_bar <= _COLLAPSE_EPS and from_mode != "x0":
        if from_mode == "eps":
            raise CollapseError("x0 undefined at alpha_bar = 0 (division by zero)")
        # v-mode stays finite: x0_hat = a*x_t - b*v.
    if from_mode == "eps":
        if to == "x0":
            out = (xt - float(b) * p) / float(a)
        else:  # v
            x0 = (xt - float(b) * p) / float(a) if a > 0 else None
            if x0 is None:
                raise CollapseError("v undefined from eps at alpha_bar = 0")
            out = float(a) * p - float(b) * x0
    elif from_mode == "x0":
        if b == 0.0 and to != "x0":
            raise CollapseError("eps/v undefined from x0 at alpha_bar = 1")
        eps = (xt - float(a) * p) / float(b)
        out = eps if to == "eps" else float(a) * eps - float(b) * p
    else:  # from v
        if to == "eps":
            out = float(a) * p + float(b) * xt
        else:  # x0
            out = float(a) * xt - float(b) * p
    return LatentTensor(out)


@dataclass(frozen=True)
class StepPlan:
    """Strictly monotone timestep indices plus their alpha_bars."""

    indices: tuple
    alpha_bars: tuple
    t_start: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        d = np.diff(idx)
        if len(idx) > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ParameterError("plan indices must be strictly monotone")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "alpha_bars", tuple(float(a) for a in self.alpha_bars))

    @property
    def ascending(self) -> bool:
        return len(self.indices) < 2 or self.indices[1] > self.indices[0]


def _spaced_indices(steps: int, t_stop: int) -> list:
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    raw = np.linspace(1, t_stop, steps)
    idx = sorted(set(int(round(v)) for v in raw))
    return idx


def inversion_plan(schedule: NoiseSchedule, steps: int, t_stop: int) -> StepPlan:
    """`steps` ascending indices evenly spaced over [1, t_stop]."""
    idx = _spaced_indices(steps, t_stop)
    abars = [schedule.alpha_bar(t) for t in idx]
    if any(a <= _COLLAPSE_EPS for a in abars):
        raise CollapseError(f"inversion plan reaches alpha_bar = 0 at t = {idx[-1]}")
    return StepPlan(tuple(idx), tuple(abars), t_stop)


def sampling_plan(schedule: NoiseSchedule, steps: int, t_start: int) -> StepPlan:
    idx = _spaced_indices(steps, t_start)[::-1]
    abars = [schedule.alpha_bar(t) for t in idx]
    if any(a <= _COLLAPSE_EPS for a in abars):
        raise CollapseError(f"sampling plan reaches alpha_bar = 0 at t = {idx[0]}")
    return StepPlan(tuple(idx), tuple(abars), t_start)


def _step_alphas(x_t: LatentTensor, eps_hat: LatentTensor, a_from: float, a_to: float) -> LatentTensor:
    if a_from <= _COLLAPSE_EPS:
        raise CollapseError("ddim step from alpha_bar = 0: x0 is unrecoverable")
    sa, sb = math.sqrt(a_from), math.sqrt(1.0 - a_from)
    x0_hat = (x_t.data - float(sb) * eps_hat.data) / float(sa)
    return forward_diffuse(LatentTensor(x0_hat), eps_hat, a_to)


def _predict_eps(denoiser: Denoiser, x_t: LatentTensor, t: int, alpha_bar: float) -> LatentTensor:
    pred = denoiser.predict(x_t, t)
    return convert_prediction(x_t, pred, alpha_bar, denoiser.mode, "eps")


def ddim_step(x_t: LatentTensor, denoiser: Denoiser, t_from: int, t_to: int, schedule: NoiseSchedule) -> LatentTensor:
    """One deterministic denoising step t_from -> t_to (t_to < t_from)."""
    a_from = schedule.alpha_bar(t_from)
    a_to = schedule.alpha_bar(t_to)
    if a_from <= _COLLAPSE_EPS:
        raise CollapseError(f"alpha_bar = 0 at t = {t_from}")
    eps_hat = _predict_eps(denoiser, x_t, t_from, a_from)
    return _step_alphas(x_t, eps_hat, a_from, a_to)


def ddim_invert_step(x_t: LatentTensor, denoiser: Denoiser, t_from: int, t_to: int, schedule: NoiseSchedule) -> LatentTensor:
    """Same update run noise-increasing (t_to > t_from); inverse of
    ddim_step under a fixed prediction."""
    a_from = schedule.alpha_bar(t_from)
    a_to = schedule.alpha_bar(t_to)
    if a_from <= _COLLAPSE_EPS or a_to <= _COLLAPSE_EPS:
        raise CollapseError(f"inversion touching alpha_bar = 0 (t {t_from} -> {t_to})")
    eps_hat = _predict_eps(denoiser, x_t, t_from, a_from)
    return _step_alphas(x_t, eps_hat, a_from, a_to)


def invert(x0: LatentTensor, schedule: NoiseSchedule, steps: int, denoiser: Denoiser, t_stop: int) -> LatentTensor:
    """Map a clean latent to its noise latent at t_stop.

    The first hop starts from the clean state (alpha_bar = 1) and queries
    the denoiser at the destination index; subsequent hops query at the
    current index. sample() mirrors the convention exactly.
    """
    plan = inversion_plan(schedule, steps, t_stop)
    t1, a1 = plan.indices[0], plan.alpha_bars[0]
    sa, sb = math.sqrt(a1), math.sqrt(1.0 - a1)
    pred = denoiser.predict(x0, t1)
    if denoiser.mode == "eps":
        x = forward_diffuse(x0, pred, a1)
    elif denoiser.mode == "v":
        # x0_hat = sqrt(a)*x_t - sqrt(1-a)*v solved for x_t with x0_hat = x0.
        x = LatentTensor((x0.data + float(sb) * pred.data) / float(sa))
    else:
        raise ParameterError("x0-mode denoiser carries no noise information to seed inversion")
    a_from, t_query = a1, t1
    for t, a_to in zip(plan.indices[1:], plan.alpha_bars[1:]):
        eps_hat = _predict_eps(denoiser, x, t_query, a_from)
        x = _step_alphas(x, eps_hat, a_from, a_to)
        a_from, t_query = a_to, t
    return x


def _zero_like(t: LatentTensor) -> LatentTensor:
    return LatentTensor(np.zeros(t.dims, dtype=t.dtype))


def sample(x_init: LatentTensor, schedule: NoiseSchedule, steps: int, denoiser: Denoiser, t_start: int) -> LatentTensor:
    """Run the descending plan from t_start and return the final x0_hat.

    steps = 0 returns the input unchanged.
    """
    if steps == 0:
        return x_init
    plan = sampling_plan(schedule, steps, t_start)
    x = x_init
    idx = plan.indices
    abars = plan.alpha_bars
    for i in range(len(idx) - 1):
        eps_hat = _predict_eps(denoiser, x, idx[i], abars[i])
        x = _step_alphas(x, eps_hat, abars[i], abars[i + 1])
    # Final hop: to the clean state (alpha_bar = 1), i.e. return x0_hat.
    eps_hat = _predict_eps(denoiser, x, idx[-1], abars[-1])
    return _step_alphas(x, eps_hat, abars[-1], 1.0)


class OracleDenoiser(Denoiser):
    """Ground-truth seam anchored at a known clean latent.

    For any observed x_t, the predicted noise is the unique eps with
    x_t = forward_diffuse(x0_true, eps, alpha_bar_t); when x_t really is
    forward_diffuse(x0_true, eps_true, alpha_bar_t), the prediction
    reproduces eps_true exactly. One denoising step therefore recovers
    x0_true from any state."""

    def __init__(self, x0_true: LatentTensor, eps_true: LatentTensor | None = None, schedule: NoiseSchedule | None = None, mode: str = "eps"):
        if schedule is None:
            raise ParameterError("oracle denoiser needs the schedule it is consistent with")
        if eps_true is not None and not x0_true.same_dims(eps_true):
            raise DimensionError("x0/eps dims differ")
        if mode not in PREDICTION_MODES:
            raise ParameterError(f"mode must be one of {PREDICTION_MODES}")
        self.x0 = x0_true
        self.eps_true = eps_true
        self.schedule = schedule
        self.mode = mode

    def predict(self, x_t: LatentTensor, t: int) -> LatentTensor:
        ab = self.schedule.alpha_bar(t)
        if self.mode == "x0":
            return self.x0
        a, b = math.sqrt(ab), math.sqrt(1.0 - ab)
        if b == 0.0:
            raise CollapseError("oracle eps/v prediction undefined at alpha_bar = 1")
        eps_hat = (x_t.data - float(a) * self.x0.data) / float(b)
        if self.mode == "eps":
            return LatentTensor(eps_hat)
        return LatentTensor(float(a) * eps_hat - float(b) * self.x0.data)


class ZeroDenoiser(Denoiser):
    """Predicts eps = 0 everywhere; steps reduce to pure rescaling."""

    mode = "eps"

    def predict(self, x_t: LatentTensor, t: int) -> LatentTensor:
        return _zero_like(x_t)


class LinearDenoiser(Denoiser):
    """Predicts eps = gain * x_t; a deterministic non-trivial stand-in."""

    mode = "eps"

    def __init__(self, gain: float = 0.1):
        self.gain = float(gain)

    def predict(self, x_t: LatentTensor, t: int) -> LatentTensor:
        return LatentTensor(self.gain * x_t.data)
