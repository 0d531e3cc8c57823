"""Pluggable perceptual distance; the default extractor needs no pretrained weights.

An extractor maps a (B, 3, H, W) image batch to a list of feature tensors.
The default builds a 3-level Gaussian pyramid and appends horizontal and
vertical 3x3 gradient responses per level, a cheap stand-in for the usual
pretrained feature stack.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F

_LEVELS = 3

_BINOMIAL = torch.tensor([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
_BLUR_K = (_BINOMIAL[:, None] * _BINOMIAL[None, :]).reshape(1, 1, 5, 5)
_SOBEL_X = torch.tensor([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]).reshape(1, 1, 3, 3) / 8.0
_SOBEL_Y = _SOBEL_X.transpose(-1, -2).contiguous()


def _depthwise(x: torch.Tensor, kernel: torch.Tensor, stride: int = 1) -> torch.Tensor:
    c = x.shape[1]
    pad = kernel.shape[-1] // 2
    x = F.pad(x, (pad, pad, pad, pad), mode="reflect")
    return F.conv2d(x, kernel.to(x.dtype).expand(c, 1, -1, -1), stride=stride, groups=c)


def default_extractor(images: torch.Tensor) -> list[torch.Tensor]:
    feats = []
    x = images
    for level in range(_LEVELS):
        gx = _depthwise(x, _SOBEL_X)
        gy = _depthwise(x, _SOBEL_Y)
        feats.append(torch.cat([x, gx, gy], dim=1))
        if level + 1 < _LEVELS:
            x = _depthwise(x, _BLUR_K, stride=2)
    return feats


def perceptual_loss_t(a: torch.Tensor, b: torch.Tensor, extractor=None) -> torch.Tensor:
    """Sum over levels of the mean squared feature difference."""
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    extractor = extractor or default_extractor
    total = None
    for fa, fb in zip(extractor(a), extractor(b)):
        term = ((fa - fb) ** 2).mean()
        total = term if total is None else total + term
    return total


def perceptual_loss(a, b, extractor=None) -> float:
    """Numpy-facing wrapper; accepts (H, W, 3) arrays or ColorImage-likes."""
    def to_t(img):
        arr = np.asarray(getattr(img, "rgb", img), dtype=np.float64)
        return torch.from_numpy(arr).permute(2, 0, 1)[None]

    with torch.no_grad():
        return float(perceptual_loss_t(to_t(a), to_t(b), extractor))
