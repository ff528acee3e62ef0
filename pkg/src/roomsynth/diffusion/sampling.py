"""Ancestral sampling and the collision-as-outlier score.

Sampling runs the learned reverse chain from pure noise down to t=1 with
sigma_t^2 = beta_t and no noise on the final step. The outlier score replays
the training objective at late timesteps (heavy noise) and averages over many
draws: samples the model considers unlikely, such as layouts with object
collisions, come back with a higher score.
"""

from __future__ import annotations

import numpy as np

from ..raster import LayoutImage, WorldTransform
from .nn import TensorError
from .schedule import NoiseSchedule, forward_diffuse
from .training import from_model_space, to_model_space


class SamplingError(Exception):
    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step t={step})")
        self.step = step


def _cond_tensor(cond) -> tuple[np.ndarray, WorldTransform | None]:
    if isinstance(cond, LayoutImage):
        return to_model_space(cond), cond.transform
    arr = np.asarray(cond)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return to_model_space(arr), None
    if arr.ndim == 3 and arr.shape[0] == 3:
        return arr.astype(np.float32), None
    raise TensorError(f"condition must be (H, W, 3) or (3, H, W), got {arr.shape}")


def sample(denoiser, cond, schedule: NoiseSchedule, rng: np.random.Generator) -> LayoutImage:
    """Generate one layout image for a condition image."""
    y, transform = _cond_tensor(cond)
    x = rng.standard_normal(y.shape).astype(np.float32)
    yb = y[None]
    for t in range(schedule.T, 0, -1):
        eps_hat = denoiser.predict(x[None], yb, np.array([t]))[0]
        beta = float(schedule.beta(t))
        alpha = float(schedule.alpha(t))
        abar = float(schedule.alpha_bar(t))
        x = (x - beta / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)
        if t > 1:
            x = x + np.sqrt(beta) * rng.standard_normal(x.shape).astype(np.float32)
        if not np.isfinite(x).all():
            raise SamplingError("sampling produced non-finite values", step=t)
    pixels = from_model_space(x)
    if transform is None:
        transform = WorldTransform(1.0, 0.0, float(pixels.shape[0]))
    return LayoutImage(pixels, transform, {"sampled": True, "T": schedule.T})


def ood_score(
    denoiser,
    x0,
    cond,
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    t_lo: int = 900,
    t_hi: int = 1000,
    iters: int = 100,
    batch: int = 25,
) -> float:
    """Mean late-timestep denoising error of (x0 | cond) over ``iters`` draws.

    Timesteps are uniform over the inclusive range {t_lo..t_hi}. Higher means
    the sample sits further outside the learned distribution.
    """
    if not (1 <= t_lo < t_hi <= schedule.T):
        raise SamplingError(f"need 1 <= t_lo < t_hi <= T={schedule.T}, got [{t_lo}, {t_hi}]")
    if iters < 1:
        raise SamplingError("iters must be >= 1")
    x = to_model_space(x0) if not (isinstance(x0, np.ndarray) and x0.ndim == 3 and x0.shape[0] == 3) else x0.astype(np.float32)
    y, _ = _cond_tensor(cond)

    # All draws happen up front so the result does not depend on chunking.
    ts = rng.integers(t_lo, t_hi + 1, size=iters)
    eps = rng.standard_normal((iters,) + x.shape).astype(np.float32)

    total = 0.0
    for start in range(0, iters, batch):
        t = ts[start : start + batch]
        e = eps[start : start + batch]
        m = len(t)
        x_t = forward_diffuse(np.broadcast_to(x, (m,) + x.shape), t, e, schedule)
        eps_hat = denoiser.predict(x_t, np.broadcast_to(y, (m,) + y.shape), t)
        diff = eps_hat.astype(np.float64) - e
        total += float(np.mean(diff * diff, axis=(1, 2, 3)).sum())
    return total / iters
