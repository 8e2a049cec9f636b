"""Constrained motion primitives and bag-state metrics.

Fit dynamic movement primitives to demonstrations, reproduce them under
kinematic limits (uniform slowdown, temporal coupling, or per-DOF weight
optimization), and evaluate/refine deformable-bag openings from marker
clouds — including a deterministic synthetic bag simulator for closed-loop
episodes.
"""

from .bagsim import (
    Action,
    BagSimConfig,
    BagSimState,
    EpisodeConfig,
    EpisodeTrace,
    apply_dynamic,
    apply_refinement,
    refine_step,
    reference_metrics,
    render_markers,
    run_episode,
    trajectory_quality,
)
from .constrain import (
    ConstrainedResult,
    KinematicLimits,
    OptDmpConfig,
    TcConfig,
    build_affine_maps,
    constrain_opt,
    constrain_tau,
    constrain_tc,
    tune_gamma_a,
    violation_report,
)
from .demoprep import (
    DemoBundle,
    HandPosePair,
    KinematicChain,
    distance_profile,
    filter_rotation,
    main_rotation_axis,
    mirror_hand,
    preprocess,
    smooth,
    to_joint_space,
)
from .dmp import CanonicalSystem, Dmp, DmpModel, KernelGrid, fit, rollout
from .errors import DmpBagError
from .markers import (
    AlphaRule,
    BagMetricsReport,
    MarkerCloud,
    elongation,
    evaluate,
    filter_markers,
    opening_area,
    rim_points,
)
from .qp import QpProblem, QpSolution, QpStatus, kkt_residuals, solve
from .trajectory import Trajectory

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AlphaRule",
    "BagMetricsReport",
    "BagSimConfig",
    "BagSimState",
    "CanonicalSystem",
    "ConstrainedResult",
    "DemoBundle",
    "Dmp",
    "DmpBagError",
    "DmpModel",
    "EpisodeConfig",
    "EpisodeTrace",
    "HandPosePair",
    "KernelGrid",
    "KinematicChain",
    "KinematicLimits",
    "MarkerCloud",
    "OptDmpConfig",
    "QpProblem",
    "QpSolution",
    "QpStatus",
    "TcConfig",
    "Trajectory",
    "apply_dynamic",
    "apply_refinement",
    "build_affine_maps",
    "constrain_opt",
    "constrain_tau",
    "constrain_tc",
    "distance_profile",
    "elongation",
    "evaluate",
    "filter_markers",
    "filter_rotation",
    "fit",
    "kkt_residuals",
    "main_rotation_axis",
    "mirror_hand",
    "opening_area",
    "preprocess",
    "reference_metrics",
    "refine_step",
    "render_markers",
    "rim_points",
    "rollout",
    "run_episode",
    "smooth",
    "solve",
    "to_joint_space",
    "trajectory_quality",
    "tune_gamma_a",
    "violation_report",
]
