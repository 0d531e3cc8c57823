"""Appearance training against synthesizer pseudo-ground-truth, geometry frozen."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from ..errors import ValidationError
from ..scenekit import Camera
from ..semfield import SemanticFieldParams, SurfaceMesh, render_semantic_views
from .adversarial import PixelDisc, adversarial_step
from .geometry import camera_surface_hits
from .network import AppearanceNet, AppearanceParams, sky_colors_t, sky_uv, surface_colors_t
from .perceptual import perceptual_loss_t


@dataclass(frozen=True)
class AppearanceConfig:
    iterations: int = 1500
    lr: float = 2e-3
    disc_lr: float = 4e-4
    adv_weight: float = 1.0
    l2_weight: float = 10.0
    perc_weight: float = 10.0
    style_seed: int = 0
    seed: int = 0
    log_every: int = 50
    plane_res: int = 64
    channels: int = 16
    sky_res: int = 64
    hidden: int = 64
    mask_stratified: int = 32
    mask_importance: int = 16

    def __post_init__(self):
        if self.iterations < 1 or self.log_every < 1:
            raise ValidationError("iterations and log_every must be positive")
        if min(self.lr, self.disc_lr, self.adv_weight, self.l2_weight, self.perc_weight) < 0:
            raise ValidationError("rates and weights must be non-negative")
        if min(self.plane_res, self.channels, self.sky_res, self.hidden) < 2:
            raise ValidationError("network sizes are too small")


@dataclass(frozen=True)
class _ViewBundle:
    gt: torch.Tensor  # (3, H, W)
    labels: torch.Tensor  # (H, W) int64
    hit_mask: torch.Tensor  # (H*W,) bool
    hit_points: torch.Tensor  # (n_hit, 3)
    sky_u: torch.Tensor
    sky_v: torch.Tensor


def _prepare_views(field_params, mesh, synthesizer, cameras, cfg, masks):
    if masks is None:
        rendered = render_semantic_views(
            field_params, cameras,
            n_stratified=cfg.mask_stratified, n_importance=cfg.mask_importance,
        )
        masks = [mask for mask, _depth in rendered]
    elif len(masks) != len(cameras):
        raise ValidationError("need one mask per training camera")
    bundles = []
    for cam, mask in zip(cameras, masks):
        image = synthesizer(mask, cfg.style_seed)
        hits = camera_surface_hits(mesh, cam)
        _, dirs, _ = cam.pixel_rays()
        u, v = sky_uv(cam, dirs[hits.sky], field_params.far)
        bundles.append(_ViewBundle(
            gt=torch.from_numpy(image.rgb.astype(np.float32)).permute(2, 0, 1),
            labels=torch.from_numpy(mask.labels.astype(np.int64)),
            hit_mask=torch.from_numpy(hits.hit.copy()),
            hit_points=torch.from_numpy(hits.points[hits.hit].astype(np.float32)),
            sky_u=torch.from_numpy(u.astype(np.float32)),
            sky_v=torch.from_numpy(v.astype(np.float32)),
        ))
    return bundles


def _render_view_t(params: AppearanceParams, bundle: _ViewBundle, shape) -> torch.Tensor:
    h, w = shape
    img = torch.zeros(h * w, 3)
    if bundle.hit_points.shape[0]:
        img = img.index_put((bundle.hit_mask.nonzero(as_tuple=True)[0],),
                            surface_colors_t(params, bundle.hit_points))
    sky_idx = (~bundle.hit_mask).nonzero(as_tuple=True)[0]
    if sky_idx.numel():
        img = img.index_put((sky_idx,), sky_colors_t(params, bundle.sky_u, bundle.sky_v))
    return img.t().reshape(3, h, w)


def train_appearance(
    field_params: SemanticFieldParams,
    mesh: SurfaceMesh,
    synthesizer,
    cameras: Sequence[Camera],
    cfg: AppearanceConfig,
    masks=None,
) -> AppearanceParams:
    """Fit tri-plane, color head and sky to per-view pseudo-GT images.

    Geometry enters only through precomputed surface hits, so the field and
    mesh are never touched. Deterministic per seed on a single thread. Pass
    `masks` to supply per-camera label maps instead of rendering the field.
    """
    if not cameras:
        raise ValidationError("need at least one training camera")
    resolutions = {cam.resolution for cam in cameras}
    if len(resolutions) != 1:
        raise ValidationError("training cameras must share one resolution")
    shape = resolutions.pop()

    bundles = _prepare_views(field_params, mesh, synthesizer, cameras, cfg, masks)

    torch.manual_seed(cfg.seed)
    net = AppearanceNet(cfg.plane_res, cfg.channels, cfg.sky_res, cfg.hidden)
    params = AppearanceParams(
        net=net, bounds=field_params.bounds, far=field_params.far,
        style_seed=cfg.style_seed,
    )
    num_classes = int(field_params.num_classes)
    disc = PixelDisc(num_classes)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    disc_opt = torch.optim.Adam(disc.parameters(), lr=cfg.disc_lr)

    log: list[tuple[float, float, float, float, float]] = []
    window: list[np.ndarray] = []
    for it in range(cfg.iterations):
        bundle = bundles[it % len(bundles)]
        img = _render_view_t(params, bundle, shape)
        gt = bundle.gt
        l2 = ((img - gt) ** 2).mean()
        perc = perceptual_loss_t(img[None], gt[None])
        if cfg.adv_weight > 0:
            gen_adv, disc_loss = adversarial_step(
                disc, img[None], gt[None], bundle.labels[None])
        else:
            gen_adv = torch.zeros(())
            disc_loss = None
        total = cfg.l2_weight * l2 + cfg.perc_weight * perc + cfg.adv_weight * gen_adv

        opt.zero_grad()
        total.backward()
        opt.step()
        if disc_loss is not None:
            disc_opt.zero_grad()
            disc_loss.backward()
            disc_opt.step()

        window.append(np.array([float(total.detach()), float(l2.detach()),
                                float(perc.detach()), float(gen_adv.detach())]))
        if (it + 1) % cfg.log_every == 0 or it + 1 == cfg.iterations:
            mean = np.stack(window).mean(axis=0)
            log.append((float(it + 1), *map(float, mean)))
            window.clear()

    return AppearanceParams(
        net=net, bounds=field_params.bounds, far=field_params.far,
        style_seed=cfg.style_seed, loss_log=tuple(log),
    )
