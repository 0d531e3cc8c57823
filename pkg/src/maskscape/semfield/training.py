"""Optimizing the semantic field against a set of supervising views."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import torch

from ..scenekit import Box, Camera, DepthMap, SemanticMask
from .losses import (
    LossWeights,
    align_scale_shift_t,
    ranking_core_t,
    semantic_loss_t,
    src_view_loss_t,
    total_loss,
    transmittance_loss_t,
)
from ..errors import DegenerateInputError
from .network import FieldNet, SemanticFieldParams
from .rendering import SkySemantics, render_field_rays


@dataclass(frozen=True)
class FusionView:
    """One supervising viewpoint: an infilled mask, a per-view depth
    estimate, and the warped source depth with its disocclusion holes."""

    camera: Camera
    mask: SemanticMask
    depth_pred: DepthMap
    src_depth: DepthMap

    def __post_init__(self):
        h, w = self.camera.resolution
        if self.mask.shape != (h, w) or self.depth_pred.shape != (h, w) \
                or self.src_depth.shape != (h, w):
            raise ValueError("view images must match the camera resolution")
        if not self.mask.is_hole_free():
            raise ValueError("supervising masks must be hole-free (inpaint first)")
        if not self.depth_pred.all_valid():
            raise ValueError("per-view depth estimates must cover every pixel")


@dataclass(frozen=True)
class FusionViewSet:
    views: tuple[FusionView, ...]
    bounds: Box

    def __post_init__(self):
        views = tuple(self.views)
        if not views:
            raise ValueError("need at least one supervising view")
        k = views[0].mask.num_classes
        if any(v.mask.num_classes != k for v in views):
            raise ValueError("all views must agree on the class count")
        object.__setattr__(self, "views", views)

    @property
    def num_classes(self) -> int:
        return self.views[0].mask.num_classes

    @property
    def sky_label(self) -> int:
        return self.num_classes - 1


@dataclass
class SemanticFieldConfig:
    iterations: int = 3000
    rays_per_iter: int = 1024
    n_stratified: int = 64
    n_importance: int = 32
    hidden_width: int = 128
    hidden_layers: int = 4
    feature_dim: int = 16
    sem_width: int = 64
    pe_bands: int = 6
    lr: float = 5e-4
    eikonal_points: int = 256
    rank_pairs: int = 128
    rank_tau_rel: float = 0.02  # tau = this times the view's median depth
    near: float = 0.05
    far: float = 4.0
    alpha_init: float = 12.0
    beta_init: float = 0.08
    init_radius: float = 0.5
    surface_jitter: float = 0.02
    min_depth_rays: int = 8  # rays a view needs in a batch for its depth terms
    seed: int = 0
    log_every: int = 50
    weights: LossWeights = dc_field(default_factory=LossWeights)


def _flatten_views(view_set: FusionViewSet, cfg: SemanticFieldConfig):
    """Stack every pixel of every view into flat ray/supervision tensors."""
    origins, dirs, cos = [], [], []
    labels, dhat, src_vals, src_ok, view_id = [], [], [], [], []
    taus = []
    for v, view in enumerate(view_set.views):
        o, d, c = view.camera.pixel_rays()
        origins.append(o)
        dirs.append(d)
        cos.append(c)
        lab = view.mask.labels.ravel()
        labels.append(lab)
        pred = view.depth_pred.values.ravel().astype(np.float64)
        dhat.append(pred)
        src_vals.append(view.src_depth.values.ravel().astype(np.float64))
        src_ok.append(view.src_depth.validity.ravel())
        view_id.append(np.full(lab.size, v, dtype=np.int64))
        fg = lab != view_set.sky_label
        med = np.median(pred[fg]) if fg.any() else 1.0
        taus.append(cfg.rank_tau_rel * float(med))
    to32 = lambda parts: torch.from_numpy(np.concatenate(parts)).to(torch.float32)
    return {
        "origins": to32(origins), "dirs": to32(dirs), "cos": to32(cos),
        "labels": torch.from_numpy(np.concatenate(labels)).to(torch.int64),
        "dhat": to32(dhat), "src_vals": to32(src_vals),
        "src_ok": torch.from_numpy(np.concatenate(src_ok)),
        "view_id": torch.from_numpy(np.concatenate(view_id)),
        "taus": taus,
    }


def train_semantic_field(view_set: FusionViewSet, cfg: SemanticFieldConfig) -> SemanticFieldParams:
    """Fit the field to the supervising views.

    Deterministic for a fixed seed on a single thread: every random draw
    comes from one seeded generator consumed in a fixed order.
    """
    if cfg.iterations < 1:
        raise ValueError("need at least one iteration")
    torch.manual_seed(cfg.seed)
    gen = torch.Generator()
    gen.manual_seed(cfg.seed + 1)

    k = view_set.num_classes
    net = FieldNet(
        num_classes=k,
        hidden_width=cfg.hidden_width,
        hidden_layers=cfg.hidden_layers,
        feature_dim=cfg.feature_dim,
        sem_width=cfg.sem_width,
        pe_bands=cfg.pe_bands,
        init_radius=cfg.init_radius,
        alpha_init=cfg.alpha_init,
        beta_init=cfg.beta_init,
    )
    opt = torch.optim.Adam(net.parameters(), lr=cfg.lr, betas=(0.9, 0.999))

    data = _flatten_views(view_set, cfg)
    n_rays_total = data["labels"].shape[0]
    sky_t = torch.from_numpy(SkySemantics.one_hot(k, view_set.sky_label).probs.copy()).to(torch.float32)
    eye = torch.eye(k, dtype=torch.float32)
    lo = torch.from_numpy(view_set.bounds.lo.copy()).to(torch.float32)
    hi = torch.from_numpy(view_set.bounds.hi.copy()).to(torch.float32)
    fg_all = data["labels"] != view_set.sky_label
    n_views = len(view_set.views)

    loss_log: list[list[float]] = []
    window: list[np.ndarray] = []

    for it in range(cfg.iterations):
        idx = torch.randint(0, n_rays_total, (cfg.rays_per_iter,), generator=gen)
        o = data["origins"][idx]
        d = data["dirs"][idx]
        cos_b = data["cos"][idx]
        near_b = torch.full((idx.shape[0],), cfg.near, dtype=torch.float32)
        far_b = torch.full((idx.shape[0],), cfg.far, dtype=torch.float32)

        out = render_field_rays(net, o, d, near_b, far_b, sky_t,
                                cfg.n_stratified, cfg.n_importance, gen)
        depth_z = out["depth"] * cos_b

        labels_b = data["labels"][idx]
        sem = semantic_loss_t(out["composited"], eye[labels_b], cfg.weights.sem_eps)
        trans = transmittance_loss_t(out["fg_opacity"], cfg.weights.trans_eps)

        fg_b = fg_all[idx]
        vid_b = data["view_id"][idx]
        dhat_b = data["dhat"][idx]
        src_vals_b = data["src_vals"][idx]
        src_ok_b = data["src_ok"][idx]

        zero = depth_z.sum() * 0.0
        depth_terms, rank_p0, rank_p1, rank_ell = [], [], [], []
        src_term = zero
        for v in range(n_views):
            in_view = vid_b == v
            sel = torch.nonzero(in_view & fg_b, as_tuple=False).squeeze(1)
            if sel.numel() >= cfg.min_depth_rays:
                try:
                    w, q = align_scale_shift_t(depth_z[sel], dhat_b[sel])
                    depth_terms.append(((w * depth_z[sel] + q - dhat_b[sel]) ** 2).mean())
                except DegenerateInputError:
                    pass
                perm = sel[torch.randperm(sel.numel(), generator=gen)]
                half = perm.numel() // 2
                quota = max(cfg.rank_pairs // n_views, 1)
                p0 = perm[:half][:quota]
                p1 = perm[half : 2 * half][:quota]
                gap = dhat_b[p0] - dhat_b[p1]
                tau = data["taus"][v]
                ell = torch.where(gap >= tau, 1.0, torch.where(gap <= -tau, -1.0, 0.0))
                rank_p0.append(depth_z[p0])
                rank_p1.append(depth_z[p1])
                rank_ell.append(ell)
            src_sel = torch.nonzero(in_view & src_ok_b, as_tuple=False).squeeze(1)
            if src_sel.numel() > 0:
                src_term = src_term + src_view_loss_t(
                    depth_z[src_sel], src_vals_b[src_sel],
                    torch.ones(src_sel.numel(), dtype=torch.bool),
                )
        depth_term = torch.stack(depth_terms).mean() if depth_terms else zero
        rank_term = (
            ranking_core_t(torch.cat(rank_p0), torch.cat(rank_p1), torch.cat(rank_ell))
            if rank_p0 else zero
        )

        n_uni = cfg.eikonal_points // 2
        pts_uni = lo + torch.rand(n_uni, 3, generator=gen) * (hi - lo)
        fg_idx = torch.nonzero(fg_b, as_tuple=False).squeeze(1)[: cfg.eikonal_points - n_uni]
        if fg_idx.numel() > 0:
            surf = o[fg_idx] + out["depth"].detach()[fg_idx, None] * d[fg_idx]
            surf = surf + cfg.surface_jitter * torch.randn(surf.shape, generator=gen)
            pts = torch.cat([pts_uni, torch.max(torch.min(surf, hi), lo)])
        else:
            pts = pts_uni
        pts_g = pts.detach().requires_grad_(True)
        sdf_vals = net.sdf(pts_g)
        (grad,) = torch.autograd.grad(sdf_vals.sum(), pts_g, create_graph=True)
        eik = ((grad.norm(dim=-1) - 1.0) ** 2).mean()

        total, contributions = total_loss(
            {"depth": depth_term, "trans": trans, "sem": sem,
             "eik": eik, "rank": rank_term, "src": src_term},
            cfg.weights,
        )
        opt.zero_grad()
        total.backward()
        opt.step()

        window.append(np.array([float(total.detach())] + [contributions[n] for n in
                               ("depth", "trans", "sem", "eik", "rank", "src")]))
        if (it + 1) % cfg.log_every == 0 or it + 1 == cfg.iterations:
            mean = np.stack(window).mean(axis=0)
            loss_log.append([float(it + 1)] + mean.tolist())
            window.clear()

    return SemanticFieldParams(
        net=net,
        num_classes=k,
        bounds=view_set.bounds,
        near=cfg.near,
        far=cfg.far,
        loss_log=loss_log,
    )
