"""Evaluation metrics: view-consistency, label likelihood, depth and color error.

The consistency and likelihood scores are directional stand-ins for the
published ones: the reference classifier here is the oracle's own labels with
mild smoothing, so absolute values are not comparable to any external tables.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .appearance import camera_surface_hits
from .errors import UndefinedMetricError, ValidationError
from .scenekit import Camera, ColorImage, DepthMap, SemanticMask
from .semfield import SurfaceMesh, align_scale_shift
from .warp import DEFAULT_EDGE_THRESHOLD, warp_mask


def label_accuracy(mask: SemanticMask, reference: SemanticMask) -> float:
    """Fraction of pixels agreeing with the reference labels."""
    if mask.shape != reference.shape:
        raise ValidationError("mask shapes differ")
    return float((mask.labels == reference.labels).mean())


def vsc_score(
    masks: Sequence[SemanticMask],
    depths: Sequence[DepthMap],
    cameras: Sequence[Camera],
    rel_threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> float:
    """Cross-view label disagreement after depth warping; lower is better.

    Every ordered view pair (i, j) warps mask i into camera j using depth i;
    the pair's rate is the disagreement with mask j over the warp's covered
    (hole-free) pixels. Pairs with no coverage are skipped; if none have any,
    the score is undefined.
    """
    if not (len(masks) == len(depths) == len(cameras)):
        raise ValidationError("masks, depths and cameras must align")
    if len(masks) < 2:
        raise ValidationError("need at least two views")
    rates = []
    for i in range(len(masks)):
        for j in range(len(masks)):
            if i == j:
                continue
            warped = warp_mask(masks[i], depths[i], cameras[i], cameras[j], rel_threshold).mask
            covered = ~warped.holes
            if covered.any():
                rates.append(float((warped.labels[covered] != masks[j].labels[covered]).mean()))
    if not rates:
        raise UndefinedMetricError("no view pair shares co-visible pixels")
    return float(np.mean(rates))


def nll_score(
    rendered_masks: Sequence[SemanticMask],
    reference_masks: Sequence[SemanticMask],
    smoothing: float = 0.05,
) -> float:
    """Mean negative log-probability of rendered labels under smoothed references.

    The reference distribution puts 1 - smoothing on the reference label and
    spreads smoothing uniformly over the other classes.
    """
    if len(rendered_masks) != len(reference_masks) or not rendered_masks:
        raise ValidationError("need equally many rendered and reference masks")
    if not 0.0 < smoothing < 1.0:
        raise ValidationError("smoothing must be in (0, 1)")
    total = 0.0
    count = 0
    for rendered, ref in zip(rendered_masks, reference_masks):
        if rendered.shape != ref.shape or rendered.num_classes != ref.num_classes:
            raise ValidationError("rendered/reference masks must match in shape and classes")
        p_match = 1.0 - smoothing
        p_other = smoothing / (rendered.num_classes - 1)
        match = rendered.labels == ref.labels
        total += float(np.where(match, -np.log(p_match), -np.log(p_other)).sum())
        count += match.size
    return total / count


def depth_abs_rel(pred: DepthMap, reference: DepthMap, align: bool = True) -> float:
    """Mean |d - d_ref| / d_ref over jointly valid pixels, after affine alignment."""
    if pred.shape != reference.shape:
        raise ValidationError("depth shapes differ")
    both = pred.validity & reference.validity
    if not both.any():
        raise UndefinedMetricError("no jointly valid depth pixels")
    d = pred.values[both].astype(np.float64)
    r = reference.values[both].astype(np.float64)
    if align:
        w, q = align_scale_shift(d, r)
        d = w * d + q
    return float((np.abs(d - r) / r).mean())


def psnr(a: ColorImage, b: ColorImage) -> float:
    if a.shape != b.shape:
        raise ValidationError("image shapes differ")
    mse = float(((a.rgb.astype(np.float64) - b.rgb.astype(np.float64)) ** 2).mean())
    if mse == 0.0:
        return float("inf")
    return -10.0 * np.log10(mse)


def color_consistency(
    images: Sequence[ColorImage],
    mesh: SurfaceMesh,
    cameras: Sequence[Camera],
    depth_tol: float = 0.01,
) -> float:
    """Median cross-view color difference at co-visible surface points.

    For each ordered camera pair, surface points seen by view i are projected
    into view j; samples whose depth matches view j's own surface (within
    depth_tol) compare colors at the two pixels. Returns the median absolute
    channel-mean difference over all pooled samples.
    """
    if len(images) != len(cameras) or len(images) < 2:
        raise ValidationError("need matching images and cameras, at least two views")
    hits = [camera_surface_hits(mesh, cam) for cam in cameras]
    flats = [img.rgb.reshape(-1, 3).astype(np.float64) for img in images]
    diffs = []
    for i in range(len(cameras)):
        pts = hits[i].points[hits[i].hit]
        if not pts.size:
            continue
        src_pix = np.flatnonzero(hits[i].hit)
        for j in range(len(cameras)):
            if i == j:
                continue
            cam_j = cameras[j]
            uv, z = cam_j.project(pts)
            h, w = cam_j.resolution
            col = np.round(uv[:, 0]).astype(np.int64)
            row = np.round(uv[:, 1]).astype(np.int64)
            inside = (z > 0) & (row >= 0) & (row < h) & (col >= 0) & (col < w)
            if not inside.any():
                continue
            pix_j = row[inside] * w + col[inside]
            t_j = hits[j].depth[pix_j]
            _, _, cos_j = cam_j.pixel_rays()
            z_surf = np.where(np.isfinite(t_j), t_j * cos_j[pix_j], np.inf)
            covis = np.abs(z_surf - z[inside]) < depth_tol
            if not covis.any():
                continue
            a = flats[i][src_pix[inside][covis]]
            b = flats[j][pix_j[covis]]
            diffs.append(np.abs(a - b).mean(axis=1))
    if not diffs:
        raise UndefinedMetricError("no co-visible surface samples between any view pair")
    return float(np.median(np.concatenate(diffs)))
