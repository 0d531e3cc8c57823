"""Semantic hole filling: a small skip-connected encoder-decoder over mask channels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .. import checkpoint
from ..errors import FormatError, ValidationError
from ..scenekit import SemanticMask

_WIDTHS = (16, 24, 40)


class HoleFillerNet(nn.Module):
    """Two-downsample encoder-decoder, one-hot mask + hole channel in, logits out.

    Fully convolutional, so any resolution works; inputs are reflection-padded
    to a multiple of 4 and the logits cropped back, keeping output spatial
    shape equal to the input's.
    """

    def __init__(self, num_classes: int, widths: tuple[int, int, int] = _WIDTHS):
        super().__init__()
        if num_classes < 2:
            raise ValidationError("need at least 2 classes")
        self.num_classes = int(num_classes)
        self.widths = tuple(int(w) for w in widths)
        w0, w1, w2 = self.widths
        self.enc0 = nn.Conv2d(self.num_classes + 1, w0, 3, padding=1)
        self.down1 = nn.Conv2d(w0, w1, 3, stride=2, padding=1)
        self.down2 = nn.Conv2d(w1, w2, 3, stride=2, padding=1)
        self.mid = nn.Conv2d(w2, w2, 3, padding=1)
        self.up1 = nn.Conv2d(w2 + w1, w1, 3, padding=1)
        self.up0 = nn.Conv2d(w1 + w0, w0, 3, padding=1)
        self.head = nn.Conv2d(w0, self.num_classes, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h, w = x.shape[-2:]
        ph = (-h) % 4
        pw = (-w) % 4
        if ph or pw:
            x = F.pad(x, (0, pw, 0, ph), mode="reflect")
        e0 = F.relu(self.enc0(x))
        e1 = F.relu(self.down1(e0))
        e2 = F.relu(self.down2(e1))
        m = F.relu(self.mid(e2))
        u1 = F.interpolate(m, scale_factor=2, mode="nearest")
        u1 = F.relu(self.up1(torch.cat([u1, e1], dim=1)))
        u0 = F.interpolate(u1, scale_factor=2, mode="nearest")
        u0 = F.relu(self.up0(torch.cat([u0, e0], dim=1)))
        out = self.head(u0)
        return out[..., :h, :w]


@dataclass(frozen=True)
class InpainterParams:
    net: HoleFillerNet
    num_classes: int
    loss_log: tuple = ()


def mask_to_input(mask: SemanticMask) -> np.ndarray:
    """(M_s + 1, H, W) float32: one-hot labels (zeroed at holes) plus hole channel."""
    one_hot = mask.one_hot().transpose(2, 0, 1)
    holes = mask.holes[None, :, :].astype(np.float32)
    return np.concatenate([one_hot, holes], axis=0).astype(np.float32)


def inpaint(params: InpainterParams, mask: SemanticMask) -> SemanticMask:
    """Fill every hole with the network's argmax label; known pixels are re-predicted too."""
    if mask.num_classes != params.num_classes:
        raise ValidationError(
            f"params trained for {params.num_classes} classes, mask has {mask.num_classes}"
        )
    x = torch.from_numpy(mask_to_input(mask))[None]
    was_training = params.net.training
    params.net.eval()
    try:
        with torch.no_grad():
            logits = params.net(x)[0]
    finally:
        params.net.train(was_training)
    labels = logits.argmax(dim=0).numpy().astype(np.int32)
    return SemanticMask(labels, mask.num_classes)


def resize_mask(mask: SemanticMask, resolution: tuple[int, int]) -> SemanticMask:
    """Nearest-neighbor resample of categorical labels (holes travel with them)."""
    h, w = int(resolution[0]), int(resolution[1])
    if h <= 0 or w <= 0:
        raise ValidationError("resolution must be positive")
    src_h, src_w = mask.shape
    rows = np.minimum((np.arange(h) * src_h) // h, src_h - 1)
    cols = np.minimum((np.arange(w) * src_w) // w, src_w - 1)
    return SemanticMask(mask.labels[np.ix_(rows, cols)], mask.num_classes)


def save_inpainter(path, params: InpainterParams) -> None:
    arrays = {f"net/{k}": v.detach().numpy() for k, v in params.net.state_dict().items()}
    checkpoint.save_scalar_meta(
        arrays,
        num_classes=params.num_classes,
        width0=params.net.widths[0],
        width1=params.net.widths[1],
        width2=params.net.widths[2],
    )
    if params.loss_log:
        arrays["meta/loss_log"] = np.asarray(params.loss_log, dtype=np.float32)
    checkpoint.save_arrays(path, arrays)


def load_inpainter(path) -> InpainterParams:
    arrays = checkpoint.load_arrays(path)
    read = lambda k: checkpoint.read_scalar_meta(arrays, k)
    net = HoleFillerNet(
        int(read("num_classes")),
        widths=(int(read("width0")), int(read("width1")), int(read("width2"))),
    )
    state = {}
    for key, value in arrays.items():
        if key.startswith("net/"):
            state[key[4:]] = torch.from_numpy(np.ascontiguousarray(value))
    try:
        net.load_state_dict(state)
    except RuntimeError as exc:
        raise FormatError(f"checkpoint does not match inpainter architecture: {exc}") from exc
    log = arrays.get("meta/loss_log")
    loss_log = tuple(map(tuple, log.tolist())) if log is not None else ()
    return InpainterParams(net=net, num_classes=net.num_classes, loss_log=loss_log)
