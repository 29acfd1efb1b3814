"""scikit-learn style front end: fit bakes a mesh, transform samples it."""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .baker import ResolutionPolicy, bake, corner_preprocess, make_shader
from .sampler import LodSelector, htexture, htexture_trilinear
from .validation import check_mesh, check_queries


class HtexBaker(TransformerMixin, BaseEstimator):
    """Bake per-edge textures for a mesh and sample them by halfedge.

    Parameters
    ----------
    shader : str or SurfaceShader
        Built-in shader name (``constant``, ``position``, ``checker``,
        ``radial-displacement``, ``triplanar``) or a shader instance.
    shader_params : dict, optional
        Keyword arguments for a named shader.
    log2_res : int
        Side length exponent for a uniform bake; ignored when
        ``texels_per_unit`` is set.
    texels_per_unit : float, optional
        Size textures proportionally to edge length instead.
    corner_fix : bool
        Unify shared corner texels after baking (needed for crack-free
        displacement).
    level : float
        Mip level used by :meth:`transform`; fractional levels blend.

    ``fit`` takes a :class:`~htex.halfedge.HalfedgeMesh` or an OBJ path;
    ``transform`` takes rows ``[halfedge, u, v]``.
    """

    def __init__(self, shader="position", shader_params=None, log2_res=4, texels_per_unit=None,
                 corner_fix=True, level=0.0):
        self.shader = shader
        self.shader_params = shader_params
        self.log2_res = log2_res
        self.texels_per_unit = texels_per_unit
        self.corner_fix = corner_fix
        self.level = level

    def _policy(self):
        if self.texels_per_unit is not None:
            return ResolutionPolicy.edge_length(self.texels_per_unit)
        return ResolutionPolicy.uniform(self.log2_res)

    def fit(self, X, y=None):
        mesh = check_mesh(X)
        shader = self.shader
        if isinstance(shader, str):
            shader = make_shader(shader, **dict(self.shader_params or {}))
        textures = bake(mesh, shader, self._policy())
        if self.corner_fix:
            corner_preprocess(mesh, textures)
        self.mesh_ = mesh
        self.textures_ = textures
        self.n_features_out_ = textures.layout.n
        return self

    def transform(self, X):
        check_is_fitted(self, "textures_")
        h, u, v = check_queries(X, self.mesh_)
        if float(self.level) == int(self.level):
            res = htexture(self.mesh_, self.textures_, h, u, v, LodSelector.explicit(self.level))
        else:
            res = htexture_trilinear(self.mesh_, self.textures_, h, u, v, self.level)
        return res.channels

    def fit_transform(self, X, y=None, queries=None):
        """Bake ``X``; sample ``queries`` if given, else every triangle centroid."""
        self.fit(X)
        if queries is None:
            H = self.mesh_.H
            queries = np.column_stack([np.arange(H), np.full(H, 1 / 3), np.full(H, 1 / 3)])
        return self.transform(queries)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "textures_")
        return np.asarray(self.textures_.layout.names, dtype=object)
