"""Constant anisotropic mean curvature surfaces: anisotropies, Wulff shapes, curvature and graph solver."""
from .anisotropy import AnisotropyFunction, check_ellipticity, eval_eta, eval_F, eval_tangential_hessian
from .analysis import hemisphere_classifier, meeks_constant, slice_components_diameter
from .curvature import aniso_H_mesh, aniso_shape_operator, functional_F0
from .graphpde import make_problem, solve_dirichlet
from .wulff import build_cylinder, build_wulff_mesh, wulff_diameter

__version__ = "0.1.0"
