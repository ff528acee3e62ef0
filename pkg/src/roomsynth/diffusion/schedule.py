"""Noise schedule for the forward diffusion process.

The schedule owns the beta sequence and its cumulative products; the forward
closed form is x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps with t
1-indexed in {1..T}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import TensorError

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


class ScheduleError(Exception):
    pass


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    betas: np.ndarray  # (T,) float64
    kind: str = "linear"

    def __post_init__(self):
        b = np.asarray(self.betas, dtype=np.float64)
        if b.ndim != 1 or len(b) < 1:
            raise ScheduleError("schedule needs at least one beta")
        if np.any(b <= 0.0) or np.any(b >= 1.0):
            raise ScheduleError("betas must lie strictly inside (0, 1)")
        if np.any(np.diff(b) < 0.0):
            raise ScheduleError("betas must be nondecreasing")
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "alphas", 1.0 - b)
        abar = np.cumprod(1.0 - b)
        if len(abar) > 1 and not np.all(np.diff(abar) < 0.0):
            raise ScheduleError("alpha_bar must be strictly decreasing")
        object.__setattr__(self, "alpha_bars", abar)

    @property
    def T(self) -> int:
        return len(self.betas)

    def beta(self, t: int | np.ndarray) -> np.ndarray:
        return self.betas[np.asarray(t) - 1]

    def alpha(self, t: int | np.ndarray) -> np.ndarray:
        return self.alphas[np.asarray(t) - 1]

    def alpha_bar(self, t: int | np.ndarray) -> np.ndarray:
        return self.alpha_bars[np.asarray(t) - 1]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "T": self.T,
            "beta_start": float(self.betas[0]),
            "beta_end": float(self.betas[-1]),
        }

    @staticmethod
    def from_dict(d: dict) -> "NoiseSchedule":
        return make_schedule(d.get("kind", "linear"), d["T"], d["beta_start"], d["beta_end"])


def make_schedule(
    kind: str = "linear",
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """Linear beta schedule, endpoints included."""
    if kind != "linear":
        raise ScheduleError(f"unknown schedule kind '{kind}'")
    if T < 1:
        raise ScheduleError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ScheduleError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    return NoiseSchedule(betas, kind=kind)


def _t_array(t, batch: int) -> np.ndarray:
    arr = np.asarray(t)
    if arr.ndim == 0:
        arr = np.full(batch, int(arr))
    return arr.astype(np.int64)


def forward_diffuse(x0: np.ndarray, t, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Closed-form DDPM forward sample at step(s) t (1-indexed)."""
    if x0.shape != eps.shape:
        raise TensorError(f"x0 {x0.shape} and eps {eps.shape} shapes differ")
    batched = x0.ndim == 4
    tt = _t_array(t, x0.shape[0] if batched else 1)
    if np.any(tt < 1) or np.any(tt > schedule.T):
        raise TensorError(f"t must lie in [1, {schedule.T}]")
    abar = schedule.alpha_bar(tt)
    if batched:
        sa = np.sqrt(abar).reshape(-1, 1, 1, 1)
        sb = np.sqrt(1.0 - abar).reshape(-1, 1, 1, 1)
    else:
        sa = float(np.sqrt(abar[0]))
        sb = float(np.sqrt(1.0 - abar[0]))
    return (sa * x0 + sb * eps).astype(x0.dtype, copy=False)
