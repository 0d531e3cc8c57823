"""Training losses for the semantic field and their weighted total.

Every loss has a torch core (suffix _t) used by the training loop and by
gradient tests, plus a float-returning wrapper for callers holding numpy
arrays. Cores keep the dtype of their inputs, so finite-difference checks
can run in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import DegenerateInputError, NumericError

_VAR_TOL = 1e-12  # relative variance below this counts as constant input


def _as_t(x, dtype=torch.float64) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(np.asarray(x), dtype=dtype)


# ---------------------------------------------------------------- alignment

def align_scale_shift_t(d: torch.Tensor, dhat: torch.Tensor):
    """Least-squares (w, q) minimizing |w*d + q - dhat|^2, differentiable."""
    d = d.reshape(-1)
    dhat = dhat.reshape(-1)
    if d.shape != dhat.shape or d.numel() < 2:
        raise ValueError("need two equally sized samples of at least 2 entries")
    mean_d = d.mean()
    mean_y = dhat.mean()
    var = ((d - mean_d) ** 2).mean()
    scale = (d * d).mean() + 1e-30
    if float((var / scale).detach()) <= _VAR_TOL:
        raise DegenerateInputError("scale/shift is unidentifiable: depth input is constant")
    w = ((d - mean_d) * (dhat - mean_y)).mean() / var
    q = mean_y - w * mean_d
    return w, q


def align_scale_shift(d, dhat) -> tuple[float, float]:
    """Closed-form scale/shift aligning rendered depth d onto a target dhat."""
    w, q = align_scale_shift_t(_as_t(d), _as_t(dhat))
    return float(w), float(q)


# ------------------------------------------------------------------- losses

def semantic_loss_t(composited: torch.Tensor, target: torch.Tensor, eps: float = 1e-7):
    y = composited.clamp(eps, 1.0)
    return -(target * torch.log(y)).sum(dim=1).mean()


def semantic_loss(composited, target_one_hot, eps: float = 1e-7) -> float:
    """Cross entropy between composited class distributions and one-hot targets."""
    y = _as_t(composited)
    t = _as_t(target_one_hot)
    if y.ndim != 2 or y.shape != t.shape:
        raise ValueError("expected matching BxK distributions and targets")
    return float(semantic_loss_t(y, t, eps))


def depth_loss_t(d: torch.Tensor, dhat: torch.Tensor):
    w, q = align_scale_shift_t(d, dhat)
    return ((w * d + q - dhat) ** 2).mean()


def depth_loss(d, dhat) -> float:
    """Scale/shift-invariant squared depth error over the given rays.

    The optimal alignment is recomputed inside, so gradients (in the torch
    core) flow through the closed-form (w, q) as in training.
    """
    return float(depth_loss_t(_as_t(d), _as_t(dhat)))


def transmittance_loss_t(opacity: torch.Tensor, eps: float = 1e-5):
    t = opacity.clamp(eps, 1.0 - eps)
    return (torch.log(t) + torch.log(1.0 - t)).mean()


def transmittance_loss(opacity, eps: float = 1e-5) -> float:
    """Drives accumulated foreground opacity toward 0 or 1; minimized at the
    clamped extremes, maximal at 1/2."""
    return float(transmittance_loss_t(_as_t(opacity), eps))


def eikonal_loss_t(sdf_fn, points: torch.Tensor):
    pts = points.detach().requires_grad_(True)
    d = sdf_fn(pts)
    (grad,) = torch.autograd.grad(d.sum(), pts, create_graph=True)
    return ((grad.norm(dim=-1) - 1.0) ** 2).mean()


def eikonal_loss(sdf_fn, points) -> float:
    """Mean squared deviation of |grad f| from 1 at the given points.

    `sdf_fn` maps an Nx3 tensor to N signed distances; gradients come from
    the same autodiff machinery training uses.
    """
    return float(eikonal_loss_t(sdf_fn, _as_t(points)))


def ranking_core_t(p0: torch.Tensor, p1: torch.Tensor, ell: torch.Tensor):
    diff = p0 - p1
    ordered = torch.nn.functional.softplus(-ell * diff)
    tied = diff**2
    return torch.where(ell == 0, tied, ordered).mean()


def ranking_labels(ref0, ref1, tau: float):
    """Ordinal labels from reference depths: +1 / -1 beyond the tau band
    (symmetric on both sides), 0 inside it."""
    gap = np.asarray(ref0, dtype=np.float64) - np.asarray(ref1, dtype=np.float64)
    return np.where(gap >= tau, 1.0, np.where(gap <= -tau, -1.0, 0.0))


def ranking_loss(d, dhat, tau: float, num_pairs: int, seed: int) -> float:
    """Ordinal depth consistency on seeded random pixel pairs.

    Pair order comes from the reference depth dhat; clearly ordered pairs
    get a logistic rank penalty on the rendered depth d, near-ties a
    squared one.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if num_pairs < 1:
        raise ValueError("need at least one pair")
    d = np.asarray(d, dtype=np.float64).reshape(-1)
    dhat = np.asarray(dhat, dtype=np.float64).reshape(-1)
    if d.shape != dhat.shape:
        raise ValueError("rendered and reference depth shapes differ")
    rng = np.random.default_rng(seed)
    i0 = rng.integers(0, d.size, num_pairs)
    i1 = rng.integers(0, d.size, num_pairs)
    ell = ranking_labels(dhat[i0], dhat[i1], tau)
    return float(ranking_core_t(_as_t(d[i0]), _as_t(d[i1]), _as_t(ell)))


def src_view_loss_t(rendered: torch.Tensor, warped: torch.Tensor, validity: torch.Tensor):
    if not bool(validity.any()):
        return rendered.sum() * 0.0
    return (rendered[validity] - warped[validity]).abs().mean()


def src_depth_loss(rendered_views, warped_views) -> float:
    """L1 anchor to the warped source depth, summed over views.

    Each view contributes the mean absolute difference over its valid
    warped pixels; views with no valid pixel contribute nothing.
    """
    if len(rendered_views) != len(warped_views):
        raise ValueError("need one rendered depth per warped view")
    total = 0.0
    for rendered, warped in zip(rendered_views, warped_views):
        values = np.asarray(warped.values, dtype=np.float64)
        validity = np.array(warped.validity, dtype=bool)  # copy: source may be read-only
        total += float(
            src_view_loss_t(_as_t(rendered), _as_t(values), torch.from_numpy(validity))
        )
    return total


# -------------------------------------------------------------------- total

@dataclass(frozen=True)
class LossWeights:
    depth: float = 0.1
    trans: float = 10.0
    sem: float = 1.0
    eik: float = 0.01
    rank: float = 0.1
    src: float = 1.0
    trans_eps: float = 1e-5
    sem_eps: float = 1e-7

    def as_dict(self) -> dict[str, float]:
        return {"depth": self.depth, "trans": self.trans, "sem": self.sem,
                "eik": self.eik, "rank": self.rank, "src": self.src}


TERM_NAMES = ("depth", "trans", "sem", "eik", "rank", "src")


def total_loss(components: dict, weights: LossWeights):
    """Weighted sum of the six field losses.

    Returns (total, per-term weighted contributions). Raises NumericError
    naming the first non-finite component. Works on floats and 0-dim torch
    tensors alike, so the training loop feeds it live graph nodes.
    """
    missing = [k for k in TERM_NAMES if k not in components]
    if missing:
        raise ValueError(f"missing loss components: {missing}")
    scale = weights.as_dict()
    torch_mode = any(isinstance(components[k], torch.Tensor) for k in TERM_NAMES)
    contributions = {}
    total = None
    for name in TERM_NAMES:
        value = components[name]
        raw = float(value.detach()) if isinstance(value, torch.Tensor) else float(value)
        if not np.isfinite(raw):
            raise NumericError(f"loss component '{name}' is not finite ({raw})")
        term = scale[name] * value
        contributions[name] = float(term.detach()) if isinstance(term, torch.Tensor) else float(term)
        total = term if total is None else total + term
    if not torch_mode:
        total = float(total)
    return total, contributions
