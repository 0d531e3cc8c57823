"""Volume rendering of the semantic field with sky compositing.

Per ray, stratified samples (optionally refined by importance resampling
near the surface) are turned into quadrature weights

    w_i = T_i * (1 - exp(-sigma_i * delta_i)),   T_i = exp(-sum_{j<i} sigma_j delta_j)

computed as adjacent differences of the transmittance sequence so that
sum_i w_i + T_residual = 1 holds to float exactness. Class logits are
accumulated with these weights and softmaxed into a foreground
distribution P_fg; the composited distribution mixes in a constant sky
one-hot: Y = T_fg * P_fg + (1 - T_fg) * P_sky with T_fg = sum_i w_i.
Expected depth is sum_i w_i t_i in ray-parameter units.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np
import torch

from ..scenekit import Camera, DepthMap, SemanticMask
from ..scenekit.types import _frozen
from .network import SemanticFieldParams, sdf_to_density

_PDF_EPS = 1e-5  # keeps the importance distribution strictly positive


@dataclass(frozen=True)
class RayBatch:
    """A batch of rays with unit directions and per-ray sample counts."""

    origins: np.ndarray  # Bx3
    directions: np.ndarray  # Bx3, unit norm
    near: np.ndarray  # B
    far: np.ndarray  # B
    n_stratified: int = 64
    n_importance: int = 32

    def __post_init__(self):
        o = np.atleast_2d(np.asarray(self.origins, dtype=np.float64))
        d = np.atleast_2d(np.asarray(self.directions, dtype=np.float64))
        near = np.atleast_1d(np.asarray(self.near, dtype=np.float64))
        far = np.atleast_1d(np.asarray(self.far, dtype=np.float64))
        if o.shape != d.shape or o.shape[1] != 3 or o.shape[0] == 0:
            raise ValueError("origins and directions must both be Bx3")
        if near.shape != (o.shape[0],) or far.shape != (o.shape[0],):
            raise ValueError("near/far must have one entry per ray")
        norms = np.linalg.norm(d, axis=1)
        if np.abs(norms - 1.0).max() > 1e-6:
            raise ValueError("ray directions must be unit length (within 1e-6)")
        if (near <= 0).any() or (far <= near).any():
            raise ValueError("require 0 < near < far per ray")
        if self.n_stratified < 2:
            raise ValueError("need at least two stratified samples")
        if self.n_importance < 0:
            raise ValueError("importance sample count cannot be negative")
        object.__setattr__(self, "origins", _frozen(o, np.float64))
        object.__setattr__(self, "directions", _frozen(d, np.float64))
        object.__setattr__(self, "near", _frozen(near, np.float64))
        object.__setattr__(self, "far", _frozen(far, np.float64))

    @property
    def count(self) -> int:
        return self.origins.shape[0]


@dataclass(frozen=True)
class SkySemantics:
    """Constant class distribution composited behind the field."""

    probs: np.ndarray  # K

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64).reshape(-1)
        if p.size < 2 or (p < 0).any() or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("sky probabilities must be a distribution over >= 2 classes")
        object.__setattr__(self, "probs", _frozen(p, np.float64))

    @staticmethod
    def one_hot(num_classes: int, sky_label: int) -> "SkySemantics":
        p = np.zeros(num_classes)
        p[sky_label] = 1.0
        return SkySemantics(p)


@dataclass(frozen=True)
class RenderOutput:
    """Per-ray render results; arrays are detached numpy copies."""

    probs_fg: np.ndarray  # BxK, softmax of accumulated logits
    fg_opacity: np.ndarray  # B, sum of weights
    depth: np.ndarray  # B, expected ray parameter
    composited: np.ndarray  # BxK, sky-composited distribution
    weights: np.ndarray  # BxS quadrature weights
    residual: np.ndarray  # B, transmittance left after the last sample
    t_samples: np.ndarray  # BxS sample positions


def _stratified_ts(near, far, n, generator, dtype):
    b = near.shape[0]
    edges = torch.linspace(0.0, 1.0, n + 1, dtype=dtype)[None, :]
    if generator is None:
        u = torch.full((b, n), 0.5, dtype=dtype)
    else:
        u = torch.rand(b, n, generator=generator, dtype=dtype)
    lo = edges[:, :-1]
    span = (far - near)[:, None]
    return near[:, None] + (lo + u / n) * span


def _sample_importance(ts, weights, n_imp, generator, dtype):
    """Inverse-CDF draws from the per-bin weight histogram (detached)."""
    b, s = weights.shape
    pdf = weights + _PDF_EPS
    pdf = pdf / pdf.sum(dim=1, keepdim=True)
    cdf = torch.cumsum(pdf, dim=1)
    cdf = torch.cat([torch.zeros(b, 1, dtype=dtype), cdf], dim=1)
    cdf[:, -1] = 1.0
    if generator is None:
        u = (torch.arange(n_imp, dtype=dtype)[None, :] + 0.5) / n_imp
        u = u.expand(b, n_imp).contiguous()
    else:
        u = torch.rand(b, n_imp, generator=generator, dtype=dtype)
    idx = torch.searchsorted(cdf, u, right=True).clamp(1, s) - 1
    # Bin edges in t: midpoint bins around the stratified samples.
    lo_edge = torch.gather(ts, 1, idx)
    hi_edge = torch.gather(ts, 1, (idx + 1).clamp(max=s - 1))
    cdf_lo = torch.gather(cdf, 1, idx)
    cdf_hi = torch.gather(cdf, 1, idx + 1)
    denom = (cdf_hi - cdf_lo).clamp_min(1e-12)
    frac = (u - cdf_lo) / denom
    return lo_edge + frac * (hi_edge - lo_edge)


def quadrature_weights(sigma: torch.Tensor, ts: torch.Tensor, far: torch.Tensor):
    """(weights, residual transmittance) for sorted samples ts and densities sigma."""
    delta = torch.cat([ts[:, 1:] - ts[:, :-1], (far[:, None] - ts[:, -1:]).clamp_min(0.0)], dim=1)
    tau = sigma * delta
    acc = torch.cumsum(tau, dim=1)
    trans = torch.exp(-torch.cat([torch.zeros_like(acc[:, :1]), acc], dim=1))  # B x (S+1)
    weights = trans[:, :-1] - trans[:, 1:]
    return weights, trans[:, -1]


def render_field_rays(
    net,
    origins: torch.Tensor,
    dirs: torch.Tensor,
    near: torch.Tensor,
    far: torch.Tensor,
    sky_probs: torch.Tensor,
    n_stratified: int,
    n_importance: int,
    generator: torch.Generator | None = None,
):
    """Torch rendering core; differentiable w.r.t. the field parameters."""
    dtype = origins.dtype
    ts = _stratified_ts(near, far, n_stratified, generator, dtype)
    if n_importance > 0:
        with torch.no_grad():
            pts = origins[:, None, :] + ts[:, :, None] * dirs[:, None, :]
            d_coarse = net.sdf(pts.reshape(-1, 3)).reshape(ts.shape)
            sigma_c = sdf_to_density(d_coarse, net.alpha, net.beta)
            w_coarse, _ = quadrature_weights(sigma_c, ts, far)
            t_fine = _sample_importance(ts, w_coarse, n_importance, generator, dtype)
        ts = torch.sort(torch.cat([ts, t_fine], dim=1), dim=1).values

    pts = origins[:, None, :] + ts[:, :, None] * dirs[:, None, :]
    flat = pts.reshape(-1, 3)
    d, feat = net.sdf_and_feature(flat)
    logits = net.semantics(feat).reshape(ts.shape[0], ts.shape[1], -1)
    sigma = sdf_to_density(d.reshape(ts.shape), net.alpha, net.beta)

    weights, residual = quadrature_weights(sigma, ts, far)
    acc_logits = (weights[:, :, None] * logits).sum(dim=1)
    probs_fg = torch.softmax(acc_logits, dim=1)
    fg_opacity = weights.sum(dim=1)
    depth = (weights * ts).sum(dim=1)
    composited = fg_opacity[:, None] * probs_fg + (1.0 - fg_opacity)[:, None] * sky_probs[None, :]
    return {
        "probs_fg": probs_fg, "fg_opacity": fg_opacity, "depth": depth,
        "composited": composited, "weights": weights, "residual": residual, "ts": ts,
    }


def _net_as_dtype(net, dtype: torch.dtype):
    """The module itself when dtypes already agree, else a converted copy so
    the caller's parameters are left untouched."""
    current = next(net.parameters()).dtype
    if current == dtype:
        return net
    return copy.deepcopy(net).to(dtype)


def render_rays(
    params: SemanticFieldParams,
    rays: RayBatch,
    sky: SkySemantics,
    seed: int | None = None,
    dtype: torch.dtype = torch.float32,
) -> RenderOutput:
    """Render a ray batch. With seed None sampling is deterministic
    (mid-bin stratification and quantile importance draws)."""
    if sky.probs.shape[0] != params.num_classes:
        raise ValueError("sky distribution class count does not match the field")
    gen = None
    if seed is not None:
        gen = torch.Generator()
        gen.manual_seed(int(seed))
    with torch.no_grad():
        out = render_field_rays(
            _net_as_dtype(params.net, dtype),
            torch.from_numpy(rays.origins.copy()).to(dtype),
            torch.from_numpy(rays.directions.copy()).to(dtype),
            torch.from_numpy(rays.near.copy()).to(dtype),
            torch.from_numpy(rays.far.copy()).to(dtype),
            torch.from_numpy(sky.probs.copy()).to(dtype),
            rays.n_stratified,
            rays.n_importance,
            gen,
        )
    return RenderOutput(
        probs_fg=out["probs_fg"].numpy(),
        fg_opacity=out["fg_opacity"].numpy(),
        depth=out["depth"].numpy(),
        composited=out["composited"].numpy(),
        weights=out["weights"].numpy(),
        residual=out["residual"].numpy(),
        t_samples=out["ts"].numpy(),
    )


def camera_ray_arrays(cam: Camera, near: float, far: float):
    """(origins, unit dirs, cos) for every pixel of `cam`, plus clipped near/far."""
    origins, dirs, cos = cam.pixel_rays()
    n = origins.shape[0]
    return origins, dirs, cos, np.full(n, near), np.full(n, far)


def render_semantic_views(
    params: SemanticFieldParams,
    cameras: list[Camera],
    n_stratified: int = 64,
    n_importance: int = 32,
    chunk: int = 8192,
) -> list[tuple[SemanticMask, DepthMap]]:
    """Deterministically render label masks and depth maps for whole views.

    Labels are the argmax of the composited distribution; pixels that come
    out sky get an invalid depth. Depth is converted from ray parameter to
    camera-space z.
    """
    sky = SkySemantics.one_hot(params.num_classes, params.sky_label)
    sky_t = torch.from_numpy(sky.probs.copy()).to(torch.float32)
    net = _net_as_dtype(params.net, torch.float32)
    results = []
    for cam in cameras:
        h, w = cam.resolution
        origins, dirs, cos, near, far = camera_ray_arrays(cam, params.near, params.far)
        labels = np.empty(h * w, dtype=np.int32)
        depth = np.zeros(h * w, dtype=np.float32)
        for s in range(0, h * w, chunk):
            sl = slice(s, min(s + chunk, h * w))
            with torch.no_grad():
                out = render_field_rays(
                    net,
                    torch.from_numpy(origins[sl]).to(torch.float32),
                    torch.from_numpy(dirs[sl]).to(torch.float32),
                    torch.from_numpy(near[sl]).to(torch.float32),
                    torch.from_numpy(far[sl]).to(torch.float32),
                    sky_t, n_stratified, n_importance, None,
                )
            labels[sl] = out["composited"].argmax(dim=1).numpy()
            depth[sl] = out["depth"].numpy() * cos[sl]
        validity = labels != params.sky_label
        # Guard: a foreground pixel with a degenerate depth cannot be valid.
        validity &= depth > 0
        results.append(
            (
                SemanticMask(labels.reshape(h, w), params.num_classes),
                DepthMap(np.where(validity, depth, 0.0).reshape(h, w), validity.reshape(h, w)),
            )
        )
    return results
