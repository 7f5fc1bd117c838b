"""Numerical tools for the beta-polygon flow on planar polygons."""

from .errors import *  # noqa: F401,F403
from .polygon import (
    FlowParams,
    apply_similarity,
    as_polygon,
    center_of_mass,
    edge_lengths,
    energy,
    interior_angles,
    laplacian,
    p_norm,
    regular_polygon,
)
from .flow import (
    IntegratorConfig,
    RescalingSchedule,
    Trajectory,
    dilation_sequence,
    entropy_rho,
    evolve,
    evolve_rescaled,
    monotonicity_residual,
    rescaled_velocity,
    self_similar_residual,
    self_similar_scale,
    tau_of_t,
    t_of_tau,
    velocity,
)

__version__ = "0.1.0"
