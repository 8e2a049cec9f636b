"""Simulator contracts: determinism, reversibility, episode state machine."""

import numpy as np
import pytest

from dmpbag.bagsim import (
    Action,
    BagSimConfig,
    BagSimState,
    EpisodeConfig,
    apply_dynamic,
    apply_refinement,
    refine_step,
    reference_metrics,
    render_markers,
    run_episode,
    trajectory_quality,
)
from dmpbag.markers import evaluate
from dmpbag.trajectory import Trajectory


def round_state(config, crumple=0.0):
    return BagSimState(
        crumple=crumple, gripper_distance=2.0 * config.rim_radius_nominal
    )


class TestConfigValidation:
    def test_bad_distance_bounds(self):
        with pytest.raises(ValueError, match="d_min"):
            BagSimConfig(d_min=0.5, d_max=0.1)

    def test_bad_step(self):
        with pytest.raises(ValueError, match="step"):
            BagSimConfig(step=0.0)

    def test_small_marker_count(self):
        with pytest.raises(ValueError, match="marker"):
            BagSimConfig(n_rim_markers=4)

    def test_bad_crumple(self):
        with pytest.raises(ValueError, match="crumple"):
            BagSimState(crumple=1.5, gripper_distance=0.3)

    def test_episode_targets(self):
        with pytest.raises(ValueError, match="area_target"):
            EpisodeConfig(area_target=0.0)

    def test_action_reverse(self):
        assert Action("widen").reverse == Action("narrow")
        assert Action("narrow").reverse.reverse == Action("narrow")
        with pytest.raises(ValueError, match="irreversible"):
            Action("dynamic").reverse


class TestRenderMarkers:
    def test_round_rim_is_round(self):
        # [DERIVED] at c=0 and d = 2R both semi-axes equal R, so E ~ 1
        cfg = BagSimConfig(seed=5)
        report = evaluate(render_markers(round_state(cfg), cfg))
        assert report.elongation == pytest.approx(1.0, abs=0.05)

    def test_crumpled_volume_collapses(self):
        # [DERIVED] c=1 shrinks the rim ellipse area 25x and the depth 2.5x
        cfg = BagSimConfig(seed=2)
        d = 2.0 * cfg.rim_radius_nominal
        flat = evaluate(render_markers(round_state(cfg), cfg))
        hard = evaluate(
            render_markers(BagSimState(crumple=1.0, gripper_distance=d), cfg)
        )
        assert hard.volume <= 0.3 * flat.volume

    def test_bitwise_deterministic(self):
        cfg = BagSimConfig(seed=11)
        state = BagSimState(crumple=0.4, gripper_distance=0.35)
        a = render_markers(state, cfg)
        b = render_markers(state, cfg)
        assert np.array_equal(a.points, b.points)
        assert a.labels == b.labels

    def test_labels_populated(self):
        cfg = BagSimConfig()
        cloud = render_markers(round_state(cfg), cfg)
        kinds = set(cloud.labels)
        assert kinds == {"rim", "rim_inner", "body"}


class TestApplyDynamic:
    def test_reduction_bounds_full_quality(self):
        # [DERIVED] c' = c(1 - 0.5 * 1 * u), u in [0.6, 1] -> c' in [0.5c, 0.7c]
        cfg = BagSimConfig(seed=3)
        state = BagSimState(crumple=0.8, gripper_distance=0.3)
        new = apply_dynamic(state, cfg, 1.0)
        assert 0.5 * 0.8 <= new.crumple <= 0.7 * 0.8
        assert new.gripper_distance == state.gripper_distance
        assert new.rng_state == state.rng_state + 1

    def test_low_quality_smaller_reduction(self):
        cfg = BagSimConfig(seed=3)
        state = BagSimState(crumple=0.8, gripper_distance=0.3)
        assert apply_dynamic(state, cfg, 0.4).crumple > apply_dynamic(
            state, cfg, 1.0
        ).crumple

    def test_flat_bag_fixed_point(self):
        cfg = BagSimConfig(seed=3)
        state = BagSimState(crumple=0.0, gripper_distance=0.3)
        assert apply_dynamic(state, cfg, 1.0).crumple == 0.0

    def test_quality_range_validated(self):
        cfg = BagSimConfig()
        state = BagSimState(crumple=0.5, gripper_distance=0.3)
        with pytest.raises(ValueError, match="quality"):
            apply_dynamic(state, cfg, 0.0)


class TestApplyRefinement:
    def test_widen_then_narrow_bitwise_identity(self):
        cfg = BagSimConfig()
        state = BagSimState(crumple=0.3, gripper_distance=0.31)
        out = apply_refinement(
            apply_refinement(state, cfg, Action("widen")), cfg, Action("narrow")
        )
        assert out.physical() == state.physical()

    def test_long_excursion_returns_exactly(self):
        cfg = BagSimConfig(step=0.017)
        state = BagSimState(crumple=0.0, gripper_distance=0.293)
        s = state
        for _ in range(7):
            s = apply_refinement(s, cfg, Action("widen"))
        for _ in range(7):
            s = apply_refinement(s, cfg, Action("narrow"))
        assert s.physical() == state.physical()

    def test_clamp_leaves_state_unchanged_and_logs(self):
        cfg = BagSimConfig(d_max=0.3)
        state = BagSimState(crumple=0.0, gripper_distance=0.3)
        out = apply_refinement(state, cfg, Action("widen"))
        assert out.physical() == state.physical()
        assert out.history[-1] == ("widen", "clamped")

    def test_crumple_untouched(self):
        cfg = BagSimConfig()
        state = BagSimState(crumple=0.7, gripper_distance=0.3)
        assert apply_refinement(state, cfg, Action("narrow")).crumple == 0.7

    def test_narrow_raises_elongation_when_x_stretched(self):
        # [DERIVED] E = 4R^2(1-0.8c)^2 / d^2 grows as d shrinks
        cfg = BagSimConfig(seed=9)
        state = BagSimState(crumple=0.0, gripper_distance=0.4)
        before = evaluate(render_markers(state, cfg)).elongation
        after_state = apply_refinement(state, cfg, Action("narrow"))
        after = evaluate(render_markers(after_state, cfg)).elongation
        assert before < 1.0
        assert after > before


class TestRefineStep:
    @pytest.mark.parametrize(
        "e,kind", [(0.7, "narrow"), (1.3, "widen"), (1.0, None)]
    )
    def test_decision_table(self, e, kind):
        class R:
            elongation = e

        cfg = BagSimConfig()
        state = BagSimState(crumple=0.0, gripper_distance=0.3)
        action = refine_step(state, cfg, R())
        assert (action.kind if action else None) == kind


class TestTrajectoryQuality:
    def test_ratio_and_clip(self):
        t = np.linspace(0.0, 1.0, 11)
        pos = np.zeros((1, 11))
        demo = Trajectory(t, pos, np.full((1, 11), 2.0), pos)
        slow = Trajectory(t, pos, np.full((1, 11), 0.8), pos)
        fast = Trajectory(t, pos, np.full((1, 11), 3.0), pos)
        assert trajectory_quality(slow, demo) == pytest.approx(0.4)
        assert trajectory_quality(fast, demo) == 1.0


class TestRunEpisode:
    def test_easy_start_needs_no_dynamic_actions(self):
        cfg = BagSimConfig(seed=4)
        trace = run_episode(
            cfg, EpisodeConfig(), 1.0, initial_state=round_state(cfg)
        )
        assert trace.targets_reached
        assert trace.dynamic_actions <= 2

    def test_hard_start_full_quality_reaches_targets(self):
        # [DERIVED] worst-case per-action crumple factor is 0.7, and
        # 0.7^6 = 0.118 clears both target thresholds
        for seed in range(10):
            trace = run_episode(BagSimConfig(seed=seed), EpisodeConfig(), 1.0)
            assert trace.targets_reached
            assert trace.dynamic_actions <= 6
            assert trace.final_report.delta_elongation <= 0.2

    def test_hard_start_degraded_quality_fails(self):
        # [DERIVED] factor >= 0.85 per action leaves c >= 0.197 after 10
        # actions, short of the volume target
        failures = sum(
            not run_episode(BagSimConfig(seed=seed), EpisodeConfig(), 0.3).targets_reached
            for seed in range(10)
        )
        assert failures >= 3

    def test_stage2_delta_e_monotone(self):
        cfg = BagSimConfig(seed=7)
        start = BagSimState(crumple=0.0, gripper_distance=0.44)
        trace = run_episode(cfg, EpisodeConfig(delta_e_target=0.01), 1.0, start)
        deltas = [
            s.report.delta_elongation
            for s in trace.steps
            if s.action in ("widen", "narrow")
        ]
        assert len(deltas) >= 3
        assert all(b <= a + 1e-12 for a, b in zip(deltas, deltas[1:]))

    def test_no_refinement_in_stage1_no_dynamic_in_stage2(self):
        trace = run_episode(BagSimConfig(seed=1), EpisodeConfig(), 1.0)
        kinds = [s.action for s in trace.steps[1:]]
        if "widen" in kinds or "narrow" in kinds:
            first_refine = min(
                kinds.index(k) for k in ("widen", "narrow") if k in kinds
            )
            assert "dynamic" not in kinds[first_refine:]

    def test_target_breach_reverses_and_terminates(self):
        # residual crumple keeps volume ratios below 1 and slowly decreasing
        # during narrowing; pick a target between two consecutive stage-2
        # ratios so one narrow step breaches it
        cfg = BagSimConfig(seed=7)
        start = BagSimState(crumple=0.1, gripper_distance=0.44)
        probe = run_episode(cfg, EpisodeConfig(delta_e_target=0.01), 1.0, start)
        ratios = [
            s.report.volume_ratio
            for s in probe.steps
            if s.action in ("initial", "narrow")
        ]
        target = None
        for k, (a, b) in enumerate(zip(ratios, ratios[1:])):
            mid = 0.5 * (a + b)
            if b < a - 1e-9 and mid < 1.0 and all(r >= mid for r in ratios[: k + 1]):
                target = mid
                break
        assert target is not None, "no decreasing volume step to exploit"
        trace = run_episode(
            cfg,
            EpisodeConfig(volume_target=target, delta_e_target=0.01),
            1.0,
            start,
        )
        assert trace.termination == "reversed-after-target-breach"
        refine_kinds = [
            s.action for s in trace.steps if s.action in ("widen", "narrow")
        ]
        assert refine_kinds[-1] == "widen"  # the reverse of the breaching narrow
        assert trace.final_report.volume_ratio >= target

    def test_refinement_only_never_reaches_targets(self):
        # [DERIVED] opening area is independent of d: area_ratio stays at
        # (1 - 0.8)^2 = 0.04 from c0 = 1 no matter how the grippers move
        trace = run_episode(
            BagSimConfig(seed=6), EpisodeConfig(max_dynamic=0), 1.0
        )
        assert not trace.targets_reached
        assert trace.termination == "dynamic-budget-exhausted"

    def test_distance_limit_terminates(self):
        # E = 1 needs d = 0.3, but the grippers cannot narrow below 0.32
        cfg = BagSimConfig(seed=8, d_min=0.32, d_max=0.48, step=0.04)
        start = BagSimState(crumple=0.0, gripper_distance=0.44)
        trace = run_episode(cfg, EpisodeConfig(delta_e_target=0.001), 1.0, start)
        assert trace.termination == "distance-limit"

    def test_identical_seeds_identical_traces(self):
        a = run_episode(BagSimConfig(seed=12), EpisodeConfig(), 1.0)
        b = run_episode(BagSimConfig(seed=12), EpisodeConfig(), 1.0)
        assert len(a.steps) == len(b.steps)
        for sa, sb in zip(a.steps, b.steps):
            assert sa.action == sb.action
            assert sa.report.volume == sb.report.volume
            assert sa.report.area == sb.report.area
            assert sa.report.elongation == sb.report.elongation
        assert a.final_state.physical() == b.final_state.physical()

    def test_reference_positive(self):
        v, s = reference_metrics(BagSimConfig())
        assert v > 0.0 and s > 0.0

    def test_bounded_metric_change_per_refinement(self):
        # one step moves d by `step`; rim extent changes at most ~step, so
        # elongation moves by a model Lipschitz constant times step
        cfg = BagSimConfig(seed=10)
        state = BagSimState(crumple=0.0, gripper_distance=0.36)
        before = evaluate(render_markers(state, cfg)).elongation
        after_state = apply_refinement(state, cfg, Action("narrow"))
        after = evaluate(render_markers(after_state, cfg)).elongation
        lipschitz = 8.0 * cfg.rim_radius_nominal**2 / cfg.d_min**3
        assert abs(after - before) <= lipschitz * cfg.step
