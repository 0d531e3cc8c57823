"""The fused semantic field: one SDF + feature MLP and a semantic head.

f_theta maps a world point to (signed distance, feature); f_phi maps the
feature to per-class logits. Density for volume rendering comes from the
signed distance through a Laplace CDF with trainable scale (alpha) and
sharpness (beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import torch
from torch import nn

from ..scenekit import Box
from .. import checkpoint
from ..errors import FormatError
from .encoding import PositionalEncoding, encode

_BETA_FLOOR = 5e-4
_ALPHA_FLOOR = 1e-2


def _softplus_inv(y: float) -> float:
    return float(np.log(np.expm1(y)))


def sdf_to_density(d, alpha, beta):
    """Laplace-CDF density: sigma = alpha * Psi_beta(-d).

    Psi_beta(s) = 0.5 * exp(s / beta) for s <= 0 and 1 - 0.5 * exp(-s / beta)
    above zero, so sigma runs from alpha deep inside the surface to 0 far
    outside and equals alpha / 2 on it. Works on numpy arrays, scalars and
    torch tensors alike; only one decaying exponential is evaluated, so no
    overflow on either side.
    """
    if isinstance(d, torch.Tensor):
        h = 0.5 * torch.exp(-torch.abs(d) / beta)
        return alpha * torch.where(d < 0, 1.0 - h, h)
    d = np.asarray(d, dtype=np.float64)
    h = 0.5 * np.exp(-np.abs(d) / beta)
    return alpha * np.where(d < 0, 1.0 - h, h)


class FieldNet(nn.Module):
    """SDF + semantics MLP pair with softplus activations and a geometric
    (sphere-like) initialization so optimization starts from a sane surface."""

    def __init__(
        self,
        num_classes: int,
        hidden_width: int = 128,
        hidden_layers: int = 4,
        feature_dim: int = 16,
        sem_width: int = 64,
        pe_bands: int = 6,
        init_radius: float = 0.5,
        alpha_init: float = 12.0,
        beta_init: float = 0.08,
    ):
        super().__init__()
        if num_classes < 2:
            raise ValueError("need at least two classes")
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.pe = PositionalEncoding(bands=pe_bands, include_input=True)
        self.act = nn.Softplus(beta=100)

        dims = [self.pe.out_dim] + [hidden_width] * hidden_layers + [1 + feature_dim]
        layers = []
        for i in range(len(dims) - 1):
            lin = nn.Linear(dims[i], dims[i + 1])
            if i == len(dims) - 2:
                # Last layer approximates ||x|| - r at init.
                nn.init.normal_(lin.weight, mean=math.sqrt(math.pi) / math.sqrt(dims[i]), std=1e-4)
                nn.init.zeros_(lin.bias)
                with torch.no_grad():
                    lin.bias[0] = -init_radius
            elif i == 0:
                # Raw coordinates drive the init; encoded features fade in.
                nn.init.zeros_(lin.weight)
                nn.init.normal_(lin.weight[:, :3], 0.0, math.sqrt(2.0) / math.sqrt(dims[i + 1]))
                nn.init.zeros_(lin.bias)
            else:
                nn.init.normal_(lin.weight, 0.0, math.sqrt(2.0) / math.sqrt(dims[i + 1]))
                nn.init.zeros_(lin.bias)
            layers.append(lin)
        self.theta_layers = nn.ModuleList(layers)

        self.phi = nn.Sequential(
            nn.Linear(feature_dim, sem_width), nn.Softplus(beta=100),
            nn.Linear(sem_width, num_classes),
        )

        self.raw_alpha = nn.Parameter(torch.tensor(_softplus_inv(alpha_init)))
        self.raw_beta = nn.Parameter(torch.tensor(_softplus_inv(beta_init)))

    @property
    def alpha(self) -> torch.Tensor:
        return torch.nn.functional.softplus(self.raw_alpha) + _ALPHA_FLOOR

    @property
    def beta(self) -> torch.Tensor:
        return torch.nn.functional.softplus(self.raw_beta) + _BETA_FLOOR

    def sdf_and_feature(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = encode(x, self.pe)
        for i, lin in enumerate(self.theta_layers):
            h = lin(h)
            if i < len(self.theta_layers) - 1:
                h = self.act(h)
        return h[:, 0], h[:, 1:]

    def sdf(self, x: torch.Tensor) -> torch.Tensor:
        return self.sdf_and_feature(x)[0]

    def semantics(self, feature: torch.Tensor) -> torch.Tensor:
        return self.phi(feature)

    def class_logits(self, x: torch.Tensor) -> torch.Tensor:
        return self.semantics(self.sdf_and_feature(x)[1])


@dataclass
class SemanticFieldParams:
    """Trained field plus the scene description needed to render it."""

    net: FieldNet
    num_classes: int
    bounds: Box
    near: float = 0.05
    far: float = 4.0
    loss_log: list = dc_field(default_factory=list)

    @property
    def sky_label(self) -> int:
        return self.num_classes - 1


def save_field(path, params: SemanticFieldParams) -> None:
    net = params.net
    arrays = {f"net/{k}": v.detach().numpy() for k, v in net.state_dict().items()}
    checkpoint.save_scalar_meta(
        arrays,
        num_classes=net.num_classes,
        hidden_width=net.theta_layers[0].out_features,
        hidden_layers=len(net.theta_layers) - 1,
        feature_dim=net.feature_dim,
        sem_width=net.phi[0].out_features,
        pe_bands=net.pe.bands,
        near=params.near,
        far=params.far,
    )
    arrays["meta/bounds"] = np.concatenate([params.bounds.lo, params.bounds.hi]).astype(np.float64)
    if params.loss_log:
        arrays["meta/loss_log"] = np.asarray(params.loss_log, dtype=np.float32)
    checkpoint.save_arrays(path, arrays)


def load_field(path) -> SemanticFieldParams:
    arrays = checkpoint.load_arrays(path)
    read = lambda k: checkpoint.read_scalar_meta(arrays, k)
    net = FieldNet(
        num_classes=int(read("num_classes")),
        hidden_width=int(read("hidden_width")),
        hidden_layers=int(read("hidden_layers")),
        feature_dim=int(read("feature_dim")),
        sem_width=int(read("sem_width")),
        pe_bands=int(read("pe_bands")),
    )
    state = {k[len("net/"):]: torch.from_numpy(v) for k, v in arrays.items() if k.startswith("net/")}
    try:
        net.load_state_dict(state)
    except RuntimeError as exc:
        raise FormatError(f"{path}: weights do not fit the declared architecture: {exc}") from exc
    if "meta/bounds" not in arrays:
        raise FormatError(f"{path}: missing scene bounds")
    b = arrays["meta/bounds"].astype(np.float64)
    loss_log = arrays.get("meta/loss_log")
    return SemanticFieldParams(
        net=net,
        num_classes=net.num_classes,
        bounds=Box(b[:3], b[3:]),
        near=read("near"),
        far=read("far"),
        loss_log=[] if loss_log is None else loss_log.tolist(),
    )
