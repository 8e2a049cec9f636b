"""Deterministic synthetic bag model and the two-stage episode controller.

The bag is reduced to two scalars: a crumple level c in [0, 1] (1 = pressed
flat) and the gripper distance d. Rendering turns that state into a labelled
marker cloud whose rim is an ellipse with x-semi-axis d/2 and y-semi-axis
shrinking quadratically with crumple; the opening area is then independent of
d, so distance refinement trades elongation against volume only.

An episode first repeats the dynamic (uncrumpling) primitive until the area
and volume ratios clear their targets, then switches to small reversible
gripper-distance steps that drive the rim elongation toward 1. Refinement
steps that break a target are reversed once and the episode terminates.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .markers import AlphaRule, MarkerCloud, evaluate

_NOISE_SIGMA = 0.002
_CRUMPLE_AREA_LOSS = 0.8
_CRUMPLE_DEPTH_LOSS = 0.6
_UNCRUMPLE_U_RANGE = (0.6, 1.0)
_INNER_RING_SCALE = 0.55
_BODY_TAPER = 0.7


@dataclass(frozen=True)
class BagSimConfig:
    """Geometry, marker layout and action parameters of the synthetic bag."""

    rim_radius_nominal: float = 0.15
    depth: float = 0.25
    stiffness: float = 0.5
    n_rim_markers: int = 24
    n_body_markers: int = 32
    seed: int = 0
    d_min: float = 0.1
    d_max: float = 0.5
    step: float = 0.02
    uncrumple_gain: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.d_min < self.d_max:
            raise ValueError(
                f"need 0 < d_min < d_max, got ({self.d_min}, {self.d_max})"
            )
        if self.step <= 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        if min(self.n_rim_markers, self.n_body_markers) < 8:
            raise ValueError("marker counts must be at least 8")
        if not 0.0 < self.uncrumple_gain < 1.0:
            raise ValueError(
                f"uncrumple_gain must be in (0, 1), got {self.uncrumple_gain}"
            )
        if not 0.0 <= self.stiffness <= 1.0:
            raise ValueError(f"stiffness must be in [0, 1], got {self.stiffness}")
        if self.rim_radius_nominal <= 0.0 or self.depth <= 0.0:
            raise ValueError("rim_radius_nominal and depth must be positive")


@dataclass(frozen=True)
class BagSimState:
    """Abstract bag state: crumple level, gripper distance, rng cursor, log.

    ``gripper_distance`` is always ``d_base + widen_count * step`` (clamped),
    so an unclamped widen/narrow pair restores the exact float — refinement
    actions are bitwise reversible. ``rng_state`` counts the stochastic
    actions taken so far and keys every random draw.
    """

    crumple: float
    gripper_distance: float
    d_base: float = None
    widen_count: int = 0
    rng_state: int = 0
    history: tuple = ()

    def __post_init__(self):
        if not 0.0 <= self.crumple <= 1.0:
            raise ValueError(f"crumple must be in [0, 1], got {self.crumple}")
        if self.d_base is None:
            object.__setattr__(self, "d_base", self.gripper_distance)

    def physical(self):
        """State tuple without the action log, for exact-identity checks."""
        return (self.crumple, self.gripper_distance, self.widen_count, self.rng_state)


@dataclass(frozen=True)
class Action:
    """One controller action; widen/narrow are mutual inverses."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("dynamic", "widen", "narrow"):
            raise ValueError(f"unknown action kind {self.kind!r}")

    @property
    def reverse(self):
        if self.kind == "dynamic":
            raise ValueError("dynamic actions are irreversible")
        return Action("narrow" if self.kind == "widen" else "widen")


@dataclass(frozen=True)
class EpisodeConfig:
    """Targets and action budgets of the two-stage controller."""

    area_target: float = 0.6
    volume_target: float = 0.7
    delta_e_target: float = 0.2
    max_dynamic: int = 10
    max_total: int = 20
    reverse_at_limits: bool = False

    def __post_init__(self):
        for name in ("area_target", "volume_target", "delta_e_target"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {v}")
        if self.max_dynamic < 0 or self.max_total <= 0:
            raise ValueError("action budgets must be nonnegative / positive")


@dataclass
class TraceStep:
    action: str
    report: object
    clamped: bool = False


@dataclass
class EpisodeTrace:
    """Every (action, metrics) pair of one episode plus the outcome."""

    steps: list = field(default_factory=list)
    targets_reached: bool = False
    dynamic_actions: int = 0
    termination: str = ""
    final_state: BagSimState = None

    @property
    def final_report(self):
        return self.steps[-1].report


def _ellipse_ring(semi_x, semi_y, n, phase=0.0):
    theta = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False) + phase
    return np.column_stack([semi_x * np.cos(theta), semi_y * np.sin(theta)])


def rim_semi_axes(state, config):
    """Model rim ellipse semi-axes (x, y) for a state."""
    shrink = (1.0 - _CRUMPLE_AREA_LOSS * state.crumple) ** 2
    semi_x = state.gripper_distance / 2.0
    semi_y = config.rim_radius_nominal * shrink / (
        state.gripper_distance / (2.0 * config.rim_radius_nominal)
    )
    return semi_x, semi_y


def render_markers(state, config):
    """Deterministic marker cloud for a state; same state renders identically.

    The rim plane sits at z = 0 with the outer ring labelled ``rim`` and an
    inner ring plus center labelled ``rim_inner`` (the inner markers keep the
    opening triangulation fine enough for the alpha-shape). Body markers
    spiral down a tapered surface of depth ``depth * (1 - 0.6 c)``. All
    coordinates get seeded Gaussian noise, sigma 2 mm.
    """
    rng = np.random.default_rng([config.seed, state.rng_state, 0xB0])
    semi_x, semi_y = rim_semi_axes(state, config)

    n_rim = config.n_rim_markers
    rim = _ellipse_ring(semi_x, semi_y, n_rim)
    n_inner = n_rim // 2
    inner = _ellipse_ring(
        _INNER_RING_SCALE * semi_x, _INNER_RING_SCALE * semi_y, n_inner, 0.13
    )
    plane = np.vstack([rim, inner, [[0.0, 0.0]]])
    plane3 = np.column_stack([plane, np.zeros(plane.shape[0])])

    depth_eff = config.depth * (1.0 - _CRUMPLE_DEPTH_LOSS * state.crumple)
    n_body = config.n_body_markers
    t = np.linspace(0.15, 1.0, n_body)
    theta = 2.0 * np.pi * np.arange(n_body) * 0.381966  # golden-angle spiral
    taper = 1.0 - _BODY_TAPER * t
    body = np.column_stack(
        [
            semi_x * taper * np.cos(theta),
            semi_y * taper * np.sin(theta),
            -depth_eff * t,
        ]
    )

    points = np.vstack([plane3, body])
    points = points + rng.normal(0.0, _NOISE_SIGMA, points.shape)
    labels = (
        ("rim",) * n_rim + ("rim_inner",) * (n_inner + 1) + ("body",) * n_body
    )
    return MarkerCloud(points, labels)


def apply_dynamic(state, config, trajectory_quality):
    """Uncrumple by one dynamic primitive execution (irreversible).

    c' = c * (1 - gain * quality * u) with u ~ Uniform(0.6, 1.0) drawn from
    the seeded stream, so high-quality (fast) executions flatten the bag much
    faster than slowed-down ones.
    """
    if not 0.0 < trajectory_quality <= 1.0:
        raise ValueError(
            f"trajectory_quality must be in (0, 1], got {trajectory_quality}"
        )
    rng = np.random.default_rng([config.seed, state.rng_state, 0xD1])
    u = rng.uniform(*_UNCRUMPLE_U_RANGE)
    new_c = state.crumple * (1.0 - config.uncrumple_gain * trajectory_quality * u)
    return replace(
        state,
        crumple=new_c,
        rng_state=state.rng_state + 1,
        history=state.history + (("dynamic", float(trajectory_quality)),),
    )


def apply_refinement(state, config, action):
    """Move the grippers one step; clamped moves leave the state unchanged.

    The distance is tracked as ``d_base + widen_count * step`` so that an
    unclamped widen and narrow cancel to the bit.
    """
    if action.kind not in ("widen", "narrow"):
        raise ValueError(f"refinement action must be widen/narrow, got {action.kind!r}")
    delta = 1 if action.kind == "widen" else -1
    proposed = state.d_base + (state.widen_count + delta) * config.step
    if not config.d_min <= proposed <= config.d_max:
        return replace(state, history=state.history + ((action.kind, "clamped"),))
    return replace(
        state,
        gripper_distance=proposed,
        widen_count=state.widen_count + delta,
        history=state.history + ((action.kind, None),),
    )


def refine_step(state, config, report):
    """Refinement decision: E < 1 narrows, E > 1 widens, E = 1 stops."""
    if report.elongation < 1.0:
        return Action("narrow")
    if report.elongation > 1.0:
        return Action("widen")
    return None


def trajectory_quality(constrained_traj, demo_traj):
    """Mean per-joint peak-speed ratio of an execution vs its demonstration.

    Each joint's ratio is clipped to 1 (shaping one joint's profile cannot
    score above the demo); a uniform slowdown scores the slowdown factor on
    every joint. Peak speed, not path accuracy, is what drives the
    uncrumpling dynamics. Result is in (0, 1].
    """
    peak = np.max(np.abs(constrained_traj.vel), axis=1)
    peak_demo = np.max(np.abs(demo_traj.vel), axis=1)
    moving = peak_demo > 0.0
    if not np.any(moving):
        raise ValueError("demonstration has zero peak speed")
    ratios = np.clip(peak[moving] / peak_demo[moving], 0.0, 1.0)
    return float(np.clip(np.mean(ratios), 1e-9, 1.0))


def reference_metrics(config):
    """(volume_ref, area_ref) of the flat round-rim reference render.

    The reference is the fully uncrumpled bag with the grippers at the
    distance that makes the rim circular (d = 2 * rim_radius_nominal) —
    the stand-in for a successful human demonstration.
    """
    d_ref = float(np.clip(2.0 * config.rim_radius_nominal, config.d_min, config.d_max))
    ref_state = BagSimState(crumple=0.0, gripper_distance=d_ref)
    report = evaluate(render_markers(ref_state, config))
    return report.volume, report.area


def _evaluate_state(state, config, volume_ref, area_ref):
    cloud = render_markers(state, config)
    return evaluate(
        cloud, AlphaRule(), volume_ref=volume_ref, area_ref=area_ref
    )


def run_episode(config, episode, quality, initial_state=None):
    """Run one two-stage episode and return its trace.

    Stage 1 repeats the dynamic primitive (at the given execution quality)
    until both the area and volume ratios clear their targets or the dynamic
    budget runs out. Stage 2 steps the gripper distance toward a round rim,
    reversing and terminating if a step drops either ratio below target.
    """
    volume_ref, area_ref = reference_metrics(config)
    if initial_state is None:
        d0 = float(np.clip(2.0 * config.rim_radius_nominal, config.d_min, config.d_max))
        initial_state = BagSimState(crumple=1.0, gripper_distance=d0)
    state = initial_state
    report = _evaluate_state(state, config, volume_ref, area_ref)
    trace = EpisodeTrace(steps=[TraceStep("initial", report)])
    total = 0

    def below_targets(rep):
        return (
            rep.area_ratio < episode.area_target
            or rep.volume_ratio < episode.volume_target
        )

    while below_targets(report):
        if trace.dynamic_actions >= episode.max_dynamic or total >= episode.max_total:
            trace.termination = "dynamic-budget-exhausted"
            trace.final_state = state
            return trace
        state = apply_dynamic(state, config, quality)
        trace.dynamic_actions += 1
        total += 1
        report = _evaluate_state(state, config, volume_ref, area_ref)
        trace.steps.append(TraceStep("dynamic", report))
    trace.targets_reached = True

    while True:
        if report.delta_elongation <= episode.delta_e_target:
            trace.termination = "delta-e-target"
            break
        if total >= episode.max_total:
            trace.termination = "action-budget-exhausted"
            break
        action = refine_step(state, config, report)
        if action is None:
            trace.termination = "elongation-optimal"
            break
        new_state = apply_refinement(state, config, action)
        if new_state.gripper_distance == state.gripper_distance:
            # pushed into a distance limit
            if episode.reverse_at_limits:
                state = apply_refinement(state, config, action.reverse)
                total += 1
                report = _evaluate_state(state, config, volume_ref, area_ref)
                trace.steps.append(
                    TraceStep(action.reverse.kind, report, clamped=True)
                )
            trace.termination = "distance-limit"
            break
        state = new_state
        total += 1
        report = _evaluate_state(state, config, volume_ref, area_ref)
        trace.steps.append(TraceStep(action.kind, report))
        if below_targets(report):
            state = apply_refinement(state, config, action.reverse)
            total += 1
            report = _evaluate_state(state, config, volume_ref, area_ref)
            trace.steps.append(TraceStep(action.reverse.kind, report))
            trace.termination = "reversed-after-target-breach"
            break

    trace.final_state = state
    return trace
