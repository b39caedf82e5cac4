"""Stochastic flows adapted to Riemannian foliations on compact models.

Two built-in geometries drive everything: a warped product metric on the
two-torus (leaves are circles) and a hyperbolic torus bundle over the circle
(leaves are the expanding lines of the gluing map).  On top of them the
package provides exact adapted-frame geometry, Stratonovich frame-bundle
flows driven by dyadic polygonal Brownian paths, Monte Carlo transition
semigroup estimators for functions and basic one-forms, and grid solvers for
invariant densities with the metric-dilation pipeline that flattens them.
"""

from .manifold_atlas import (Atlas, ChartPoint, DeckMap, FoliationDims,
                             FourierSeries, build_e1, build_e2, chart_point,
                             in_fundamental_domain, leaf_step, normalize,
                             random_point)
from .metric_geometry import (ScalarField, VectorFieldValue, adjoint_apply,
                              basic_cos, basic_oneform_laplacian_series,
                              basic_sin, christoffel_field, christoffel_lc,
                              christoffel_lc_fd, christoffel_oplus,
                              constant_field, drift_field, generator_apply,
                              kappa_profile, mean_curvature, metric,
                              metric_inverse, sqrt_det_g,
                              transverse_christoffel)
from .frame_bundle import (AdaptedFrame, DualFrame, GroupElement, OneForm,
                           OneFormScalarization, basic_oneform,
                           coordinate_frame, descalarize_oneform, dual_frame,
                           gram_schmidt, group_act, leaf_transport,
                           orthonormality_residual, random_group_element,
                           scalarize_oneform)
from .stochastic_flows import (DrivingPath, FlowTrajectory, IntegratorConfig,
                               ReducedTrajectory, flow_deterministic,
                               flow_stochastic, flow_transverse_reduced,
                               horizontal_vector, sample_brownian)
from .semigroup_mc import (FdCheck, IndependenceCheck, McEstimate,
                           OneFormEstimate, estimate_semigroup_fn,
                           estimate_semigroup_oneform, generator_fd_check,
                           metric_independence_check)
from .invariant_measure import (BasicProfile, DilationSpec, GridDensity,
                                basic_harmonic_residual, basic_projection,
                                carriere_moment_check, coclosure_residual,
                                dilate_metric, invariant_density_oracle,
                                kappa_dilated, solve_invariant_density,
                                verify_phi_b_one)
from .checks import CheckResult, run_checks

__version__ = "0.1.0"

__all__ = [
    "Atlas", "ChartPoint", "DeckMap", "FoliationDims", "FourierSeries",
    "build_e1", "build_e2", "chart_point", "in_fundamental_domain",
    "leaf_step", "normalize", "random_point",
    "ScalarField", "VectorFieldValue", "adjoint_apply", "basic_cos",
    "basic_oneform_laplacian_series", "basic_sin", "christoffel_field",
    "christoffel_lc", "christoffel_lc_fd", "christoffel_oplus",
    "constant_field", "drift_field", "generator_apply", "kappa_profile",
    "mean_curvature", "metric", "metric_inverse", "sqrt_det_g",
    "transverse_christoffel",
    "AdaptedFrame", "DualFrame", "GroupElement", "OneForm",
    "OneFormScalarization", "basic_oneform", "coordinate_frame",
    "descalarize_oneform", "dual_frame", "gram_schmidt", "group_act",
    "leaf_transport", "orthonormality_residual", "random_group_element",
    "scalarize_oneform",
    "DrivingPath", "FlowTrajectory", "IntegratorConfig", "ReducedTrajectory",
    "flow_deterministic", "flow_stochastic", "flow_transverse_reduced",
    "horizontal_vector", "sample_brownian",
    "FdCheck", "IndependenceCheck", "McEstimate", "OneFormEstimate",
    "estimate_semigroup_fn", "estimate_semigroup_oneform",
    "generator_fd_check", "metric_independence_check",
    "BasicProfile", "DilationSpec", "GridDensity", "basic_harmonic_residual",
    "basic_projection", "carriere_moment_check", "coclosure_residual",
    "dilate_metric", "invariant_density_oracle", "kappa_dilated",
    "solve_invariant_density", "verify_phi_b_one",
    "CheckResult", "run_checks",
]
