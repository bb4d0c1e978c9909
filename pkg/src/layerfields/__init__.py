"""layerfields: intersection-free multi-layer garment geometry.

Winding-number fields over open triangle meshes, garment indication fields,
layered signed-distance grids with covering enforcement, marching-cubes
extraction with indication-field trimming, and evaluation metrics.
"""

from ._kernels import backend_name
from .bvh import BvhIndex, build_bvh
from .fields import FieldParams, gif_argument, gif_binary, ground_truth_sdf, occupancy, watertight_from_occupancy
from .lattice import GridSpec, ScalarGrid, fill, gradient, load_grid, marching_cubes, save_grid, trilinear
from .layering import (
    CoveringParams,
    CoveringReport,
    LayerManifest,
    covering_loss,
    enforce_covering,
    overlap_mask,
    sample_training_points,
)
from .mesh import Aabb, TriangleMesh, ValidationReport, load_obj, save_obj, surface_sample, validate
from .metrics import chamfer, field_l1, max_penetration, p2s
from .trim import TrimmedMesh, boundary_loops, trim_by_gif
from .winding import closest_point, triangle_solid_angle, winding_at, winding_exact, winding_fast

__version__ = "0.1.0"
