"""Per-halfedge texturing: one square texture per mesh edge, sampled seamlessly."""
from .baker import ResolutionPolicy, bake, corner_preprocess, make_shader, triplanar_shader
from .errors import (DegenerateSampleError, FingerprintMismatchError, FormatError, HtexError, MeshError,
                     UnsupportedVersionError)
from .estimator import HtexBaker
from .format import ChannelLayout, HtexTexture, TextureSet, generate_mips, read, write
from .halfedge import BOUNDARY, HalfedgeMesh, load_obj, save_obj, validate, vertex_normals
from .intrinsic import (intrinsic_triangle_vertices, quad_of_halfedge, quad_uv_to_surface_point,
                        triangle_to_quad_uv)
from .renderer import Camera, crack_check, rasterize, seam_check, tessellate_displaced
from .sampler import LodSelector, SampleResult, htexture, htexture_trilinear, sample_bilinear_border

__version__ = "0.1.0"
