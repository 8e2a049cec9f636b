"""Exception hierarchy shared across the package."""


class DmpBagError(Exception):
    """Base class for all package errors."""


class DegeneratePhaseError(DmpBagError):
    """Kernel activations summed below the machine-safe floor."""


class IntegrationDivergenceError(DmpBagError):
    """Non-finite state encountered during rollout integration."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at integration step {step}")


class UnsatisfiableBySlowdownError(DmpBagError):
    """Position limits are violated by the path itself; no time scaling can fix them."""


class InfeasibleQpError(DmpBagError):
    """The constrained weight optimization has an empty feasible set."""

    def __init__(self, message, violated=None):
        self.violated = violated or []
        super().__init__(message)


class IllPosedProblemError(DmpBagError):
    """Singular KKT factorization in the QP solver."""


class DegenerateHullError(DmpBagError):
    """All input points collinear; no 2D hull exists."""

    def __init__(self, message=None, segment=None):
        self.segment = segment
        super().__init__(
            message or "all points are collinear; convex hull is degenerate"
        )


class DegenerateVolumeError(DmpBagError):
    """Coplanar input; 3D hull has zero volume."""


class InsufficientMarkersError(DmpBagError):
    """Too few markers survive filtering for meaningful metrics."""


class RimNotFoundError(DmpBagError):
    """Fewer than three rim points were identified."""


class ElongationUndefinedError(DmpBagError):
    """Planar PCA of the rim is degenerate."""


class AlphaRuleMisconfiguredError(DmpBagError):
    """The linear alpha rule produced a non-positive alpha for this input."""


class DegenerateDemoError(DmpBagError):
    """Demonstration carries no usable signal (e.g. all hand distances zero)."""


class UnreachablePoseError(DmpBagError):
    """IK residual stayed above tolerance for a sample."""

    def __init__(self, sample, residual):
        self.sample = sample
        self.residual = residual
        super().__init__(
            f"pose at sample {sample} unreachable (residual {residual:.3e} m)"
        )


class FormatError(DmpBagError):
    """File failed schema or value validation."""
