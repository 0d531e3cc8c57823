"""Training loop and loss for the hole-filling network."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ValidationError
from ..scenekit import SemanticMask
from .network import HoleFillerNet, InpainterParams, mask_to_input


@dataclass(frozen=True)
class InpaintConfig:
    resolution: int = 64
    batch_size: int = 8
    iterations: int = 2000
    lr: float = 5e-4
    seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        if self.resolution < 1 or self.batch_size < 1 or self.iterations < 1:
            raise ValidationError("resolution, batch_size and iterations must be positive")
        if self.lr < 0:
            raise ValidationError("lr must be non-negative")
        if self.log_every < 1:
            raise ValidationError("log_every must be positive")


def inpaint_loss_t(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel cross-entropy; supervises every pixel, not just holes."""
    return F.cross_entropy(logits, labels)


def inpaint_loss(logits, target: SemanticMask) -> float:
    """Cross-entropy of (M_s, H, W) logits against a hole-free target mask."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (target.num_classes,) + target.shape:
        raise ValidationError(
            f"logits shape {logits.shape} does not match "
            f"({target.num_classes},) + {target.shape}"
        )
    if not target.is_hole_free():
        raise ValidationError("target mask must be hole-free")
    m = logits.max(axis=0)
    lse = m + np.log(np.exp(logits - m[None]).sum(axis=0))
    picked = np.take_along_axis(logits, target.labels[None].astype(np.int64), axis=0)[0]
    return float((lse - picked).mean())


def _stack_pairs(pairs):
    num_classes = pairs[0][0].num_classes
    shape = pairs[0][0].shape
    inputs, targets = [], []
    for corrupted, target in pairs:
        if corrupted.num_classes != num_classes or target.num_classes != num_classes:
            raise ValidationError("all pairs must share one class count")
        if corrupted.shape != shape or target.shape != shape:
            raise ValidationError("all pairs must share one resolution")
        if not target.is_hole_free():
            raise ValidationError("target masks must be hole-free")
        inputs.append(mask_to_input(corrupted))
        targets.append(target.labels.astype(np.int64))
    x = torch.from_numpy(np.stack(inputs))
    y = torch.from_numpy(np.stack(targets))
    return x, y, num_classes


def train_inpainter(
    pairs: Iterable[tuple[SemanticMask, SemanticMask]],
    cfg: InpaintConfig,
) -> InpainterParams:
    """Fit the hole filler on (corrupted, target) warp-back pairs.

    Deterministic for a fixed seed on a single thread: weight init comes from
    the global torch seed and batch sampling from one dedicated generator.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValidationError("need at least one training pair")
    x, y, num_classes = _stack_pairs(pairs)

    torch.manual_seed(cfg.seed)
    net = HoleFillerNet(num_classes)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    gen = torch.Generator()
    gen.manual_seed(cfg.seed + 1)

    log: list[tuple[float, float]] = []
    window: list[float] = []
    for it in range(cfg.iterations):
        idx = torch.randint(len(pairs), (cfg.batch_size,), generator=gen)
        loss = inpaint_loss_t(net(x[idx]), y[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()
        window.append(float(loss.detach()))
        if (it + 1) % cfg.log_every == 0 or it + 1 == cfg.iterations:
            log.append((float(it + 1), float(np.mean(window))))
            window.clear()
    return InpainterParams(net=net, num_classes=num_classes, loss_log=tuple(log))
