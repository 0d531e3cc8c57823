from .mesh import LabeledMesh, depth_to_mesh, prune_spurious_edges
from .raster import RasterBuffers, WarpResult, rasterize, rasterize_labels
from .warping import DEFAULT_EDGE_THRESHOLD, PoseSampler, warp_mask, warpback_pair

__all__ = [
    "LabeledMesh", "depth_to_mesh", "prune_spurious_edges",
    "RasterBuffers", "WarpResult", "rasterize", "rasterize_labels",
    "DEFAULT_EDGE_THRESHOLD", "PoseSampler", "warp_mask", "warpback_pair",
]
