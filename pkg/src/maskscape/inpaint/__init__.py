"""Trainable semantic inpainting for disocclusion holes in warped masks."""

from .network import (
    HoleFillerNet,
    InpainterParams,
    inpaint,
    load_inpainter,
    mask_to_input,
    resize_mask,
    save_inpainter,
)
from .training import InpaintConfig, inpaint_loss, inpaint_loss_t, train_inpainter

__all__ = [
    "HoleFillerNet",
    "InpainterParams",
    "InpaintConfig",
    "inpaint",
    "inpaint_loss",
    "inpaint_loss_t",
    "load_inpainter",
    "mask_to_input",
    "resize_mask",
    "save_inpainter",
    "train_inpainter",
]
