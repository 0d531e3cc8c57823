"""Sinusoidal positional encoding for field inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class PositionalEncoding:
    """Frequency layout: for each band j in [0, bands) emit sin(2^j pi x)
    then cos(2^j pi x) per input channel. Output dim is 3*2*bands, plus 3
    when the raw coordinates are prepended."""

    bands: int = 6
    include_input: bool = False

    def __post_init__(self):
        if self.bands < 1:
            raise ValueError("need at least one frequency band")

    @property
    def out_dim(self) -> int:
        return 3 * 2 * self.bands + (3 if self.include_input else 0)


def encode(x: torch.Tensor, pe: PositionalEncoding) -> torch.Tensor:
    """Encode Nx3 coordinates; accepts any float dtype and keeps it."""
    if x.ndim != 2 or x.shape[1] != 3:
        raise ValueError(f"expected Nx3 coordinates, got {tuple(x.shape)}")
    freqs = (2.0 ** torch.arange(pe.bands, dtype=x.dtype, device=x.device)) * torch.pi
    ang = x[:, None, :] * freqs[None, :, None]  # N x bands x 3
    feat = torch.cat([torch.sin(ang), torch.cos(ang)], dim=2).reshape(x.shape[0], -1)
    if pe.include_input:
        feat = torch.cat([x, feat], dim=1)
    return feat


def encode_np(x: np.ndarray, pe: PositionalEncoding) -> np.ndarray:
    return encode(torch.from_numpy(np.asarray(x, dtype=np.float64)), pe).numpy()
