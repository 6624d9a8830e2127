"""Scenario model, calibration, and schedule-replay tests."""

import json
import math

import numpy as np
import pytest

from edgemvs import sim
from edgemvs.controller import PipelineConfig
from edgemvs.sim import (
    ScenarioModel,
    StageFractions,
    TaskStream,
    build_designed_matrix,
    calibrate_model,
    dance1_scenario,
    latency_reduction,
    run_task,
    scenario_from_json,
    simulate_collaboration,
    simulate_stream,
)


def small_model(**overrides):
    kwargs = dict(
        t0=20.0,
        alpha=2.0,
        beta=1.5,
        q_max=0.9,
        gamma=0.3,
        n_cameras=5,
        coverage={3: 80, 4: 90, 5: 100},
        eta=0.0,
    )
    kwargs.update(overrides)
    return ScenarioModel(**kwargs)


def test_latency_law_values():
    model = small_model()
    assert model.latency(1.0, 5) == 20.0
    assert model.latency(0.5, 5) == pytest.approx(20.0 * 0.25)
    assert model.latency(1.0, 4) == pytest.approx(20.0 * (4 / 5) ** 1.5)


def test_quality_law_values():
    model = small_model()
    assert model.quality(1.0, 5) == pytest.approx(0.9)
    assert model.quality(1.0, 3) == pytest.approx(0.9 * 0.8)
    assert model.quality(0.5, 5) == pytest.approx(0.9 * 0.5**0.3)


def test_quality_clamped_to_unit():
    model = small_model(q_max=1.5)
    assert model.quality(1.0, 5) == 1.0


def test_model_validation():
    with pytest.raises(ValueError, match="positive"):
        small_model(t0=0.0)
    with pytest.raises(ValueError, match="eta"):
        small_model(eta=1.0)
    with pytest.raises(ValueError, match="coverage"):
        small_model(coverage={3: 80})


def test_stage_fractions_sum_and_split():
    fr = StageFractions(0.25, 0.25, 0.4, 0.1)
    assert sum(fr.durations(8.0)) == pytest.approx(8.0)
    with pytest.raises(ValueError, match="sum"):
        StageFractions(0.5, 0.5, 0.5, 0.5)
    with pytest.raises(ValueError, match="non-negative"):
        StageFractions(-0.5, 0.5, 0.5, 0.5)


def test_calibration_recovers_exact_law(rng):
    t0, alpha, beta, n = 26.17, 2.1, 1.5, 7
    samples = []
    for r in (1.0, 0.8, 0.6, 0.45):
        for n_prime in (7, 5, 3):
            samples.append((r, n_prime, t0 * r**alpha * (n_prime / n) ** beta))
    fit = calibrate_model(samples, n_cameras=7)
    assert fit.t0 == pytest.approx(t0, rel=1e-9)
    assert fit.alpha == pytest.approx(alpha, rel=1e-9)
    assert fit.beta == pytest.approx(beta, rel=1e-9)
    assert fit.max_rel_residual < 1e-9


def test_calibration_pins_beta_zero_with_full_rig_only():
    samples = [(1.0, 7, 26.17), (0.8, 7, 16.07), (0.6, 7, 9.1)]
    fit = calibrate_model(samples)
    assert fit.beta == pytest.approx(0.0, abs=1e-9)
    assert fit.n_cameras == 7
    for r, _, t in samples:
        assert fit.t0 * r**fit.alpha == pytest.approx(t, rel=0.05)


def test_calibration_validates_inputs():
    with pytest.raises(ValueError, match="3 samples"):
        calibrate_model([(1.0, 7, 26.0), (0.8, 7, 16.0)])
    with pytest.raises(ValueError, match="distinct"):
        calibrate_model([(1.0, 7, 26.0), (1.0, 5, 16.0), (1.0, 3, 9.0)])
    with pytest.raises(ValueError, match="positive"):
        calibrate_model([(1.0, 7, 26.0), (0.8, 7, -16.0), (0.6, 7, 9.0)])


def test_run_task_noise_stays_in_band():
    model = small_model(eta=0.05)
    rng = np.random.default_rng(0)
    config = PipelineConfig(resolution=0.7, n_prime=4, cameras=(0, 1, 2, 3))
    base = model.latency(0.7, 4)
    for i in range(200):
        o = run_task(model, config, rng, i)
        assert abs(o.processing_time - base) <= 0.05 * base + 1e-12
        assert o.quality == model.quality(0.7, 4)


def test_run_task_noise_free_is_exact():
    model = small_model()
    rng = np.random.default_rng(0)
    config = PipelineConfig(resolution=1.0, n_prime=5, cameras=(0, 1, 2, 3, 4))
    o = run_task(model, config, rng)
    assert o.processing_time == model.latency(1.0, 5)


def test_designed_matrix_shape_and_coverage():
    matrix = build_designed_matrix(4, core_points=10, pair_points={(0, 1): 2, (2, 3): 3})
    assert matrix.coverage.shape == (15, 4)
    assert matrix.coverage[:10].all()
    assert (matrix.coverage[10:12].sum(axis=1) == 2).all()
    assert (matrix.coverage[10:12, 0] & matrix.coverage[10:12, 1]).all()
    # deterministic for a fixed seed
    again = build_designed_matrix(4, 10, {(0, 1): 2, (2, 3): 3})
    assert (again.coords == matrix.coords).all()


def test_dance1_scenario_shape():
    model, cmap, matrix = dance1_scenario()
    assert model.n_cameras == 7
    assert matrix.n_points == 200
    assert sorted(cmap.entries) == [3, 4, 5, 6, 7]
    assert model.coverage[7] == 200
    # coverage hits the designed plateau: mild loss per dropped camera
    assert model.coverage[3] == 183
    assert model.latency(1.0, 7) == pytest.approx(26.17)


def test_scenario_json_round_trip():
    text = sim.default_scenario_json()
    model, cmap, _ = scenario_from_json(text)
    ref, ref_map, _ = dance1_scenario()
    assert model.coverage == ref.coverage
    assert model.t0 == ref.t0 and model.gamma == ref.gamma
    assert cmap.entries == ref_map.entries
    json.loads(text)  # stays valid JSON


def test_stream_first_task_is_golden():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(1, 10.0, 42))
    assert len(result.records) == 1
    rec = result.records[0]
    assert (rec.resolution, rec.n_prime, rec.phase) == (1.0, 7, "searching")
    assert result.search_steps == 0


def test_stream_is_deterministic_per_seed():
    model, cmap, _ = dance1_scenario()
    a = simulate_stream(model, cmap, TaskStream(40, 7.5, 9))
    b = simulate_stream(model, cmap, TaskStream(40, 7.5, 9))
    assert a.records == b.records
    c = simulate_stream(model, cmap, TaskStream(40, 7.5, 10))
    assert a.records != c.records


def test_stream_search_step_count_excludes_golden():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(60, 10.0, 42))
    searching = [r for r in result.records if r.phase == "searching"]
    assert result.search_steps == len(searching) - 1


def test_stream_flags_infeasible_deadline_and_stops():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(60, 0.5, 42))
    assert result.infeasible_deadline
    assert len(result.records) < 60
    assert result.final_state.infeasible


def test_stream_validation():
    with pytest.raises(ValueError, match="n_tasks"):
        TaskStream(0, 10.0)
    with pytest.raises(ValueError, match="deadline"):
        TaskStream(5, 0.0)


def test_collaboration_critical_path_is_stage_sum():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(20, 10.0, 42))
    stats = simulate_collaboration(model, result)
    fr = model.stage_fractions
    for rec, cp in zip(result.records, stats.critical_paths):
        assert cp == sum(fr.durations(rec.processing_time))
        assert cp == pytest.approx(rec.processing_time)  # fractions sum to 1


def test_collaboration_accounting_hand_case():
    # deadline 10, backend busy 0.4 + 2.56 + 0.3 = 3.26 -> idle 6.74 per task
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(8, 10.0, 42))
    stats = simulate_collaboration(model, result)
    assert stats.idle_windows == pytest.approx([10.0 - 3.26] * 8)
    # background takes 22.5 s of idle plus 0.1 transfer: first push finishes
    # during task 4's window (cumulative idle 4*6.74 = 26.96 > 22.5)
    assert stats.bg_after_task == [0, 0, 0, 1, 1, 1, 2, 2]
    assert stats.bg_completed == 2


def test_collaboration_bg_progress_is_monotone():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(60, 7.5, 42))
    stats = simulate_collaboration(model, result)
    assert all(b >= a for a, b in zip(stats.bg_after_task, stats.bg_after_task[1:]))
    assert stats.bg_completed == stats.bg_after_task[-1]
    assert all(w >= 0 for w in stats.idle_windows)


def test_collaboration_slow_backend_starves_background():
    model, cmap, _ = dance1_scenario()
    model.t_golden_sfm = 50.0  # busy longer than any deadline window
    result = simulate_stream(model, cmap, TaskStream(10, 5.0, 42))
    stats = simulate_collaboration(model, result)
    assert stats.bg_completed == 0
    assert all(w == 0.0 for w in stats.idle_windows)


def test_latency_reduction_math():
    assert latency_reduction(11.98, 26.17) == pytest.approx(54.222, abs=5e-4)
    with pytest.raises(ValueError):
        latency_reduction(1.0, 0.0)


def test_summary_covers_adjusting_window():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(60, 10.0, 42))
    stats = simulate_collaboration(model, result)
    summary = sim.summary_to_dict(result, stats)
    adjusting = [r for r in result.records if r.phase == "adjusting"]
    assert summary["tasks"] == 60
    assert summary["n_cameras"] == 4
    assert summary["avg_processing_time"] == pytest.approx(
        float(np.mean([r.processing_time for r in adjusting]))
    )
    assert not summary["infeasible_deadline"]


def test_trace_csv_shape():
    model, cmap, _ = dance1_scenario()
    result = simulate_stream(model, cmap, TaskStream(5, 10.0, 42))
    stats = simulate_collaboration(model, result)
    text = sim.trace_to_csv(result, stats)
    lines = text.strip().splitlines()
    assert lines[0] == "task,resolution,n_prime,processing_time,quality,phase,bg_completed"
    assert len(lines) == 6
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == 1.0 and first[2] == "7"
