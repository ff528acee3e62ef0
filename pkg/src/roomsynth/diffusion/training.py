"""Noise-prediction training: the squared-error objective and the loop.

The objective draws a timestep uniformly from {1..T} and Gaussian noise, forms
the diffused sample, and scores the denoiser by mean squared error against the
drawn noise. Images live in [0, 1]; the diffusion process runs on [-1, 1]
tensors, mapped at this boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..raster import LayoutImage
from .nn import Adam, TensorError
from .schedule import NoiseSchedule, forward_diffuse


class TrainingError(Exception):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message if epoch is None else f"{message} (epoch {epoch})")
        self.epoch = epoch


def to_model_space(image) -> np.ndarray:
    """LayoutImage or (H, W, 3) array in [0, 1] -> (3, H, W) in [-1, 1]."""
    arr = image.pixels if isinstance(image, LayoutImage) else np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise TensorError(f"expected (H, W, 3) image, got {arr.shape}")
    return (arr.transpose(2, 0, 1) * 2.0 - 1.0).astype(np.float32)


def from_model_space(tensor: np.ndarray) -> np.ndarray:
    """(3, H, W) in [-1, 1] -> (H, W, 3) in [0, 1], clamped."""
    arr = (np.asarray(tensor) + 1.0) / 2.0
    return np.clip(arr.transpose(1, 2, 0), 0.0, 1.0)


def _as_batch(x: np.ndarray) -> np.ndarray:
    return x[None] if x.ndim == 3 else x


def loss_and_grad(denoiser, x0: np.ndarray, cond: np.ndarray, t: np.ndarray, eps: np.ndarray, schedule: NoiseSchedule, backward: bool = False) -> float:
    """Squared-error noise-prediction loss at fixed (t, eps) draws.

    With ``backward`` the denoiser's parameter gradients are accumulated; the
    deterministic (t, eps) interface is what the finite-difference gradient
    check exercises.
    """
    x0, cond, eps = _as_batch(x0), _as_batch(cond), _as_batch(eps)
    x_t = forward_diffuse(x0, t, eps, schedule)
    eps_hat = denoiser.predict(x_t, cond, t)
    if not np.isfinite(eps_hat).all():
        raise TrainingError("denoiser output is not finite")
    diff = eps_hat.astype(np.float64) - eps.astype(np.float64)
    loss = float(np.mean(diff * diff))
    if backward:
        denoiser.backward((2.0 / diff.size) * diff)
    return loss


def training_loss(denoiser, x0: np.ndarray, cond: np.ndarray, schedule: NoiseSchedule, rng: np.random.Generator) -> float:
    """One Monte-Carlo evaluation of the training objective."""
    x0 = _as_batch(np.asarray(x0))
    t = rng.integers(1, schedule.T + 1, size=x0.shape[0])
    eps = rng.standard_normal(x0.shape).astype(x0.dtype)
    return loss_and_grad(denoiser, x0, _as_batch(np.asarray(cond)), t, eps, schedule, backward=False)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    decay_factor: float = 0.1
    decay_milestones: tuple[int, ...] = (100, 200, 300)  # epochs
    batch_size: int = 4
    epochs: int = 400
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainResult:
    loss_curve: list[float] = field(default_factory=list)  # per-epoch mean loss
    steps: int = 0

    def to_csv(self) -> str:
        lines = ["epoch,mean_loss"]
        lines += [f"{i + 1},{v:.10g}" for i, v in enumerate(self.loss_curve)]
        return "\n".join(lines) + "\n"

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv())


def load_loss_csv(path) -> list[float]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [float(row["mean_loss"]) for row in csv.DictReader(fh)]


def _stack_dataset(dataset) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for layout, cond in dataset:
        xs.append(to_model_space(layout))
        ys.append(to_model_space(cond))
    if not xs:
        raise TrainingError("dataset is empty")
    shapes = {a.shape for a in xs} | {a.shape for a in ys}
    if len(shapes) != 1:
        raise TrainingError(f"all layout/condition images must share one shape, got {sorted(shapes)}")
    return np.stack(xs), np.stack(ys)


def train(denoiser, dataset, config: TrainConfig, schedule: NoiseSchedule) -> TrainResult:
    """Adam training over (layout, condition) pairs; deterministic per seed.

    ``dataset`` is a sequence of (layout, condition) items, each a LayoutImage
    or (H, W, 3) array in [0, 1]. Returns the per-epoch mean loss curve.
    """
    x_all, y_all = _stack_dataset(dataset)
    n = len(x_all)
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(denoiser.parameters(), lr=config.learning_rate)
    result = TrainResult()

    for epoch in range(1, config.epochs + 1):
        if epoch - 1 in config.decay_milestones:
            optimizer.lr *= config.decay_factor
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x0, cond = x_all[idx], y_all[idx]
            t = rng.integers(1, schedule.T + 1, size=len(idx))
            eps = rng.standard_normal(x0.shape).astype(np.float32)
            optimizer.zero_grad()
            try:
                loss = loss_and_grad(denoiser, x0, cond, t, eps, schedule, backward=True)
            except (TrainingError, TensorError) as e:
                raise TrainingError(f"training diverged: {e}", epoch=epoch) from e
            if not np.isfinite(loss):
                raise TrainingError("training loss diverged", epoch=epoch)
            optimizer.step()
            losses.append(loss)
            result.steps += 1
        result.loss_curve.append(float(np.mean(losses)))
    return result
