from .encoding import PositionalEncoding, encode, encode_np
from .network import FieldNet, SemanticFieldParams, load_field, save_field, sdf_to_density
from .rendering import (
    RayBatch, RenderOutput, SkySemantics,
    quadrature_weights, render_field_rays, render_rays, render_semantic_views,
)
from .losses import (
    LossWeights, align_scale_shift, depth_loss, eikonal_loss,
    ranking_labels, ranking_loss, semantic_loss, src_depth_loss,
    total_loss, transmittance_loss,
)
from .training import FusionView, FusionViewSet, SemanticFieldConfig, train_semantic_field
from .meshing import SurfaceMesh, extract_mesh, extract_sdf_mesh, load_mesh, save_mesh

__all__ = [
    "PositionalEncoding", "encode", "encode_np",
    "FieldNet", "SemanticFieldParams", "load_field", "save_field", "sdf_to_density",
    "RayBatch", "RenderOutput", "SkySemantics",
    "quadrature_weights", "render_field_rays", "render_rays", "render_semantic_views",
    "LossWeights", "align_scale_shift", "depth_loss", "eikonal_loss",
    "ranking_labels", "ranking_loss", "semantic_loss", "src_depth_loss",
    "total_loss", "transmittance_loss",
    "FusionView", "FusionViewSet", "SemanticFieldConfig", "train_semantic_field",
    "SurfaceMesh", "extract_mesh", "extract_sdf_mesh", "load_mesh", "save_mesh",
]
