"""Reference denoiser: a small conditional U-Net with explicit backprop.

Input is the noisy layout concatenated with the condition image along
channels (3 + 3 = 6); output predicts the injected noise for the 3 layout
channels. A sinusoidal timestep embedding feeds a per-resolution linear
projection whose output is added as a channel bias. Spatial dims must be
divisible by 4 (two stride-2 stages).
"""

from __future__ import annotations

from typing import Protocol

import numpy as np

from .nn import Adam, Conv2d, ConvTranspose2d, GroupNorm, Linear, Parameter, SiLU, TensorError, sinusoidal_embedding


class Denoiser(Protocol):
    """Anything that predicts the injected noise from (x_t, condition, t)."""

    def predict(self, x_t: np.ndarray, cond: np.ndarray, t: np.ndarray) -> np.ndarray: ...

    def parameters(self) -> list[Parameter]: ...


class TinyUNetDenoiser:
    def __init__(
        self,
        in_channels: int = 6,
        out_channels: int = 3,
        widths: tuple[int, int, int] = (16, 32, 64),
        emb_dim: int = 32,
        seed: int = 0,
        dtype=np.float32,
        group_norm: bool = False,
        zero_init_out: bool = False,
        global_skip: bool = True,
    ):
        rng = np.random.default_rng(seed)
        c1, c2, c3 = widths
        self.config = {
            "in_channels": in_channels,
            "out_channels": out_channels,
            "widths": list(widths),
            "emb_dim": emb_dim,
            "seed": seed,
            "dtype": np.dtype(dtype).name,
            "group_norm": group_norm,
            "zero_init_out": zero_init_out,
            "global_skip": global_skip,
        }
        self.dtype = np.dtype(dtype)
        self.emb_dim = emb_dim
        self.cond_channels = in_channels - out_channels

        def conv(ci, co, name, stride=1):
            return Conv2d(ci, co, 3, stride, 1, rng=rng, dtype=dtype, name=name)

        self.enc1a = conv(in_channels, c1, "enc1a")
        self.temb1 = Linear(emb_dim, c1, rng=rng, dtype=dtype, name="temb1")
        self.enc1b = conv(c1, c1, "enc1b")
        self.down1 = conv(c1, c2, "down1", stride=2)
        self.enc2a = conv(c2, c2, "enc2a")
        self.temb2 = Linear(emb_dim, c2, rng=rng, dtype=dtype, name="temb2")
        self.enc2b = conv(c2, c2, "enc2b")
        self.down2 = conv(c2, c3, "down2", stride=2)
        self.mida = conv(c3, c3, "mida")
        self.temb3 = Linear(emb_dim, c3, rng=rng, dtype=dtype, name="temb3")
        self.midb = conv(c3, c3, "midb")
        self.up1 = ConvTranspose2d(c3, c2, 2, 2, rng=rng, dtype=dtype, name="up1")
        self.dec2a = conv(2 * c2, c2, "dec2a")
        self.temb4 = Linear(emb_dim, c2, rng=rng, dtype=dtype, name="temb4")
        self.dec2b = conv(c2, c2, "dec2b")
        self.up2 = ConvTranspose2d(c2, c1, 2, 2, rng=rng, dtype=dtype, name="up2")
        self.dec1a = conv(2 * c1, c1, "dec1a")
        self.temb5 = Linear(emb_dim, c1, rng=rng, dtype=dtype, name="temb5")
        self.dec1b = conv(c1, c1, "dec1b")
        self.out = conv(c1, out_channels, "out")
        if zero_init_out:
            # Prediction starts at exactly zero, which stabilizes early steps.
            self.out.w.value[...] = 0.0
        # Timestep-gated copy of x_t added to the output. Near pure noise the
        # optimal prediction is dominated by a scaled x_t; giving that term its
        # own gate frees the trunk to model the data-dependent remainder.
        self.skip_gate: Linear | None = None
        if global_skip:
            self.skip_gate = Linear(emb_dim, out_channels, rng=rng, dtype=dtype, name="skip_gate")
            self.skip_gate.w.value[...] = 0.0

        self.norms: dict[str, GroupNorm] = {}
        if group_norm:
            for tag, ch in (("n1", c1), ("n2", c2), ("n3", c3), ("n4", c2), ("n5", c1)):
                self.norms[tag] = GroupNorm(min(8, ch), ch, dtype=dtype, name=tag)

        self._convs = [
            self.enc1a, self.enc1b, self.down1, self.enc2a, self.enc2b, self.down2,
            self.mida, self.midb, self.up1, self.dec2a, self.dec2b, self.up2,
            self.dec1a, self.dec1b, self.out,
        ]
        self._tembs = [self.temb1, self.temb2, self.temb3, self.temb4, self.temb5]
        # One SiLU instance per activation site so caches never collide.
        self._acts = {name: SiLU() for name in
                      ("e1a", "e1b", "d1", "e2a", "e2b", "d2", "ma", "mb", "u2a", "u2b", "u1a", "u1b")}

    def parameters(self) -> list[Parameter]:
        params: list[Parameter] = []
        layers = [*self._convs, *self._tembs, *self.norms.values()]
        if self.skip_gate is not None:
            layers.append(self.skip_gate)
        for layer in layers:
            params.extend(layer.parameters())
        return params

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def _check_input(self, x_t: np.ndarray, cond: np.ndarray) -> None:
        if x_t.ndim != 4 or cond.ndim != 4:
            raise TensorError("inputs must be (B, C, H, W)")
        if x_t.shape[0] != cond.shape[0] or x_t.shape[2:] != cond.shape[2:]:
            raise TensorError(f"x_t {x_t.shape} and cond {cond.shape} disagree")
        if x_t.shape[2] % 4 or x_t.shape[3] % 4:
            raise TensorError(f"spatial dims {x_t.shape[2:]} must be divisible by 4")

    def forward(self, x_t: np.ndarray, cond: np.ndarray, t: np.ndarray) -> np.ndarray:
        self._check_input(x_t, cond)
        a = self._acts
        x = np.concatenate([x_t.astype(self.dtype, copy=False), cond.astype(self.dtype, copy=False)], axis=1)
        emb = sinusoidal_embedding(t, self.emb_dim, dtype=self.dtype)

        h = self.enc1a.forward(x)
        h = h + self.temb1.forward(emb)[:, :, None, None]
        h = a["e1a"].forward(h)
        s1 = a["e1b"].forward(self.enc1b.forward(h))
        if "n1" in self.norms:
            s1 = self.norms["n1"].forward(s1)

        h = a["d1"].forward(self.down1.forward(s1))
        h = self.enc2a.forward(h)
        h = h + self.temb2.forward(emb)[:, :, None, None]
        h = a["e2a"].forward(h)
        s2 = a["e2b"].forward(self.enc2b.forward(h))
        if "n2" in self.norms:
            s2 = self.norms["n2"].forward(s2)

        h = a["d2"].forward(self.down2.forward(s2))
        h = self.mida.forward(h)
        h = h + self.temb3.forward(emb)[:, :, None, None]
        h = a["ma"].forward(h)
        h = a["mb"].forward(self.midb.forward(h))
        if "n3" in self.norms:
            h = self.norms["n3"].forward(h)

        u = self.up1.forward(h)
        h = np.concatenate([u, s2], axis=1)
        h = self.dec2a.forward(h)
        h = h + self.temb4.forward(emb)[:, :, None, None]
        h = a["u2a"].forward(h)
        h = a["u2b"].forward(self.dec2b.forward(h))
        if "n4" in self.norms:
            h = self.norms["n4"].forward(h)

        u = self.up2.forward(h)
        h = np.concatenate([u, s1], axis=1)
        h = self.dec1a.forward(h)
        h = h + self.temb5.forward(emb)[:, :, None, None]
        h = a["u1a"].forward(h)
        h = a["u1b"].forward(self.dec1b.forward(h))
        if "n5" in self.norms:
            h = self.norms["n5"].forward(h)

        out = self.out.forward(h)
        if self.skip_gate is not None:
            gate = self.skip_gate.forward(emb)  # (B, out_channels)
            xt = x[:, : out.shape[1]]
            out = out + gate[:, :, None, None] * xt
            self._skip_cache = (gate, xt)
        if not np.isfinite(out).all():
            raise TensorError("denoiser forward produced non-finite values")
        return out

    def backward(self, dout: np.ndarray) -> None:
        """Accumulate parameter gradients for the last forward pass."""
        a = self.norms
        act = self._acts

        dout = dout.astype(self.dtype, copy=False)
        if self.skip_gate is not None:
            _, xt = self._skip_cache
            dgate = np.einsum("bchw,bchw->bc", dout, xt, optimize=True)
            self.skip_gate.backward(dgate.astype(self.dtype, copy=False))

        d = self.out.backward(dout)
        if "n5" in a:
            d = a["n5"].backward(d)
        d = self.dec1b.backward(act["u1b"].backward(d))
        d = act["u1a"].backward(d)
        demb = self.temb5.backward(d.sum(axis=(2, 3)))
        d = self.dec1a.backward(d)
        c1 = self.up2.cout
        du, ds1 = d[:, :c1], d[:, c1:]
        d = self.up2.backward(du)

        if "n4" in a:
            d = a["n4"].backward(d)
        d = self.dec2b.backward(act["u2b"].backward(d))
        d = act["u2a"].backward(d)
        demb += self.temb4.backward(d.sum(axis=(2, 3)))
        d = self.dec2a.backward(d)
        c2 = self.up1.cout
        du, ds2 = d[:, :c2], d[:, c2:]
        d = self.up1.backward(du)

        if "n3" in a:
            d = a["n3"].backward(d)
        d = self.midb.backward(act["mb"].backward(d))
        d = act["ma"].backward(d)
        demb += self.temb3.backward(d.sum(axis=(2, 3)))
        d = self.mida.backward(d)
        d = self.down2.backward(act["d2"].backward(d))

        d = d + ds2
        if "n2" in a:
            d = a["n2"].backward(d)
        d = self.enc2b.backward(act["e2b"].backward(d))
        d = act["e2a"].backward(d)
        demb += self.temb2.backward(d.sum(axis=(2, 3)))
        d = self.enc2a.backward(d)
        d = self.down1.backward(act["d1"].backward(d))

        d = d + ds1
        if "n1" in a:
            d = a["n1"].backward(d)
        d = self.enc1b.backward(act["e1b"].backward(d))
        d = act["e1a"].backward(d)
        demb += self.temb1.backward(d.sum(axis=(2, 3)))
        self.enc1a.backward(d)
        # Timestep features have no trainable upstream; demb stops here.

    def predict(self, x_t: np.ndarray, cond: np.ndarray, t) -> np.ndarray:
        t = np.broadcast_to(np.asarray(t), (x_t.shape[0],))
        return self.forward(x_t, cond, t)

    # --- serialization ---

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {p.name: p.value for p in self.parameters()}

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in arrays:
                raise TensorError(f"checkpoint is missing parameter '{p.name}'")
            src = arrays[p.name]
            if src.shape != p.value.shape:
                raise TensorError(f"parameter '{p.name}' shape {src.shape} != expected {p.value.shape}")
            p.value[...] = src.astype(p.value.dtype)

    @classmethod
    def from_config(cls, config: dict) -> "TinyUNetDenoiser":
        return cls(
            in_channels=config["in_channels"],
            out_channels=config["out_channels"],
            widths=tuple(config["widths"]),
            emb_dim=config["emb_dim"],
            seed=config.get("seed", 0),
            dtype=np.dtype(config.get("dtype", "float32")),
            group_norm=config.get("group_norm", False),
            zero_init_out=config.get("zero_init_out", False),
            global_skip=config.get("global_skip", True),
        )


class OracleDenoiser:
    """Test helper: returns a fixed tensor (e.g. the exact drawn noise)."""

    def __init__(self, output: np.ndarray | float = 0.0):
        self.output = output

    def predict(self, x_t: np.ndarray, cond: np.ndarray, t) -> np.ndarray:
        if np.isscalar(self.output):
            return np.full_like(x_t, float(self.output))
        return np.broadcast_to(self.output, x_t.shape).copy()

    def parameters(self) -> list[Parameter]:
        return []
