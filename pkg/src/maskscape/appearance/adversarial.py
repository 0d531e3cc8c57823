"""Label-conditional per-pixel adversary: real pixels get their class, fakes class M_s."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

# CE is computed on clamped log-probabilities, so a discriminator that is
# certain a sample is fake yields a large but finite generator loss.
_LOGP_FLOOR = math.log(1e-7)


class PixelDisc(nn.Module):
    """Small conv net emitting (M_s + 1)-way logits per pixel; zero-init head
    makes the untrained output exactly uniform."""

    def __init__(self, num_classes: int, width: int = 32):
        super().__init__()
        self.num_classes = int(num_classes)
        self.width = int(width)
        self.body = nn.Sequential(
            nn.Conv2d(3, self.width, 3, padding=1),
            nn.ReLU(),
            nn.Conv2d(self.width, self.width, 3, padding=2, dilation=2),
            nn.ReLU(),
            nn.Conv2d(self.width, self.width, 3, padding=1),
            nn.ReLU(),
        )
        self.head = nn.Conv2d(self.width, self.num_classes + 1, 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.head(self.body(images))


def _pixel_ce(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    logp = F.log_softmax(logits, dim=1).clamp_min(_LOGP_FLOOR)
    return F.nll_loss(logp, labels)


def adversarial_step(
    disc: PixelDisc,
    rendered: torch.Tensor,
    pseudo_gt: torch.Tensor,
    labels: torch.Tensor,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Both sides' losses for one batch; no optimizer is touched here.

    rendered/pseudo_gt: (B, 3, H, W); labels: (B, H, W) int64 semantic classes.
    The generator loss asks the rendered pixels to be classified as their
    semantic class; the discriminator loss labels real pixels with their class
    and rendered ones with the extra fake class.
    """
    fake = torch.full_like(labels, disc.num_classes)
    disc_loss = _pixel_ce(disc(pseudo_gt), labels) + _pixel_ce(disc(rendered.detach()), fake)
    gen_loss = _pixel_ce(disc(rendered), labels)
    return gen_loss, disc_loss
