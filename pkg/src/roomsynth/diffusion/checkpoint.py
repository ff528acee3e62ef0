"""Versioned checkpoints: parameters, schedule, and provenance in one .npz.

The palette hash recorded at save time lets loading code refuse to decode
samples against a palette other than the one the model was trained on.
"""

from __future__ import annotations

import json

import numpy as np

from .schedule import NoiseSchedule
from .unet import TinyUNetDenoiser

FORMAT_VERSION = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(path, denoiser: TinyUNetDenoiser, schedule: NoiseSchedule, palette_hash: str | None = None, meta: dict | None = None) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "model": "tiny_unet",
        "config": denoiser.config,
        "schedule": schedule.to_dict(),
        "palette_hash": palette_hash,
        "meta": meta or {},
    }
    arrays = {f"param/{k}": v for k, v in denoiser.state_arrays().items()}
    np.savez_compressed(path, header=np.frombuffer(json.dumps(header).encode("utf-8"), dtype=np.uint8), **arrays)


def load_checkpoint(path, palette_hash: str | None = None) -> tuple[TinyUNetDenoiser, NoiseSchedule, dict]:
    """Load (denoiser, schedule, header). When ``palette_hash`` is given it
    must match the hash stored at save time."""
    with np.load(path) as data:
        if "header" not in data:
            raise CheckpointError(f"{path} is not a roomsynth checkpoint")
        header = json.loads(bytes(data["header"]).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format {header.get('format_version')}")
        saved_hash = header.get("palette_hash")
        if palette_hash is not None and saved_hash is not None and palette_hash != saved_hash:
            raise CheckpointError(
                "palette mismatch: checkpoint was trained against a different palette "
                f"({saved_hash[:12]}... != {palette_hash[:12]}...)"
            )
        denoiser = TinyUNetDenoiser.from_config(header["config"])
        denoiser.load_state_arrays({k[len("param/"):]: data[k] for k in data.files if k.startswith("param/")})
        schedule = NoiseSchedule.from_dict(header["schedule"])
    return denoiser, schedule, header
