from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bactlink.capacity import (
	CapacityResult,
	DiscreteChannel,
	InputGrid,
	blahut_arimoto,
	capacity_for_p_max,
	capacity_sweep,
	discretize_channel,
	mutual_information,
)
from bactlink.config import load_config, parse_config
from bactlink.errors import ConvergenceWarning, DegenerateChannelError, DomainError


def h2(e: float) -> float:
	return -e * math.log2(e) - (1 - e) * math.log2(1 - e)


def test_identity_channel():
	res = blahut_arimoto(np.eye(2))
	assert res.capacity_bits == pytest.approx(1.0, abs=1e-9)
	assert res.input_distribution == pytest.approx([0.5, 0.5])
	assert res.converged


def test_binary_symmetric_channel():
	res = blahut_arimoto(np.array([[0.9, 0.1], [0.1, 0.9]]))
	assert res.capacity_bits == pytest.approx(0.531004, abs=1e-6)
	assert res.capacity_bits == pytest.approx(1 - h2(0.1), abs=1e-9)


def test_binary_erasure_channel():
	res = blahut_arimoto(np.array([[0.75, 0.25, 0.0], [0.0, 0.25, 0.75]]))
	assert res.capacity_bits == pytest.approx(0.75, abs=1e-6)


def test_z_channel_needs_iterations():
	res = blahut_arimoto(np.array([[1.0, 0.0], [0.5, 0.5]]), tol=1e-11)
	assert res.capacity_bits == pytest.approx(math.log2(1.25), abs=1e-9)
	assert res.iterations > 1
	assert res.upper_bound_gap <= 1e-11
	assert np.all(np.diff(res.lower_bound_history) >= -1e-9)


def test_non_convergence_warns_and_returns():
	W = np.array([[1.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.3, 0.3, 0.4]])
	with pytest.warns(ConvergenceWarning) as record:
		res = blahut_arimoto(W, tol=1e-14, max_iter=3)
	assert record[0].message.iterations == 3
	assert not res.converged
	assert res.iterations == 3
	assert res.upper_bound_gap > 0


def test_blahut_arimoto_domain():
	with pytest.raises(DomainError):
		blahut_arimoto(np.eye(2), tol=0.0)
	with pytest.raises(DomainError):
		blahut_arimoto(np.array([[0.5, 0.4], [0.0, 1.0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=6), st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=2**32 - 1))
def test_random_channel_bounds(k, b, seed):
	rng = np.random.default_rng(seed)
	W = rng.random((k, b)) + 1e-3
	W /= W.sum(axis=1, keepdims=True)
	res = blahut_arimoto(W, tol=1e-9, max_iter=2000, warn=False)
	assert 0.0 <= res.capacity_bits <= math.log2(min(k, b)) + 1e-12
	assert res.input_distribution.sum() == pytest.approx(1.0, abs=1e-9)
	assert np.all(np.diff(res.lower_bound_history) >= -1e-9)
	assert mutual_information(res.input_distribution, W) <= res.capacity_bits + 1e-9


def test_mutual_information_of_uniform_bsc():
	W = np.array([[0.8, 0.2], [0.2, 0.8]])
	assert mutual_information([0.5, 0.5], W) == pytest.approx(1 - h2(0.2), abs=1e-12)
	with pytest.raises(DomainError):
		mutual_information([1.0], W)


def test_input_grid():
	grid = InputGrid.uniform(0.8, 5)
	assert grid.levels[0] == 0.0
	assert grid.levels[-1] == 0.8
	assert np.allclose(np.diff(grid.levels), 0.2, atol=1e-12)
	with pytest.raises(DomainError):
		InputGrid.uniform(1.0, 5)
	with pytest.raises(DomainError):
		InputGrid.uniform(0.5, 1)


def test_discretized_rows_are_stochastic(preset_link):
	ch = discretize_channel(preset_link, InputGrid.uniform(0.8, 201), 2000)
	assert ch.shape == (201, 2000)
	assert np.all(ch.transition >= 0)
	assert np.allclose(ch.transition.sum(axis=1), 1.0, atol=1e-9)
	assert ch.output_bins.size == 2001
	assert np.all(np.diff(ch.output_bins) > 0)


def test_zero_variance_level_is_a_delta_row(preset_link):
	ch = discretize_channel(preset_link, InputGrid.uniform(0.6, 2), 100)
	assert ch.transition[0].max() == 1.0
	assert ch.transition[1].max() < 1.0


def test_noiseless_channel_is_a_permutation(noiseless_link):
	ch = discretize_channel(noiseless_link, InputGrid.uniform(0.6, 5), 50)
	W = ch.transition
	assert np.array_equal(W.max(axis=1), np.ones(5))
	assert len(set(W.argmax(axis=1))) == 5
	res = blahut_arimoto(ch)
	assert res.capacity_bits == pytest.approx(math.log2(5), abs=1e-9)


def test_degenerate_channel(preset_link):
	with pytest.raises(DegenerateChannelError):
		discretize_channel(preset_link, InputGrid(p_max=0.5, levels=np.zeros(2)), 10)


def test_discrete_channel_rejects_bad_rows():
	with pytest.raises(DomainError):
		DiscreteChannel(transition=np.array([[0.6, 0.6]]))
	with pytest.raises(DomainError):
		DiscreteChannel(transition=np.array([[1.5, -0.5]]))


def test_capacity_for_p_max_reports_concentrations(preset_link):
	res = capacity_for_p_max(preset_link, 0.5, levels=21, bins=200, tol=1e-7)
	assert isinstance(res, CapacityResult)
	assert res.input_levels[-1] == 0.5
	assert res.input_concentrations[-1] == pytest.approx(1.0)
	assert res.input_concentrations[0] == 0.0
	assert 0 < res.capacity_bits <= math.log2(21)


def test_refining_bins_does_not_lose_capacity(preset_link):
	coarse = capacity_for_p_max(preset_link, 0.8, levels=51, bins=400, tol=1e-7, max_iter=3000, warn=False)
	fine = capacity_for_p_max(preset_link, 0.8, levels=51, bins=800, tol=1e-7, max_iter=3000, warn=False)
	assert fine.capacity_bits >= coarse.capacity_bits - fine.upper_bound_gap - 1e-12


def test_lower_bound_never_drops_on_the_preset(preset_link):
	res = capacity_for_p_max(preset_link, 0.8, levels=51, bins=400, tol=1e-9, max_iter=500, warn=False)
	history = np.array(res.lower_bound_history)
	assert history.size == res.iterations
	assert np.all(np.diff(history) >= -1e-9)
	assert history[-1] == pytest.approx(res.capacity_bits, abs=1e-12)


@pytest.mark.slow
def test_grid_refinement_at_the_preset(preset_link):
	kwargs = dict(p_max=0.8, tol=1e-6, max_iter=3000, warn=False)
	base = capacity_for_p_max(preset_link, levels=201, bins=2000, **kwargs)
	more_bins = capacity_for_p_max(preset_link, levels=201, bins=4000, **kwargs)
	more_levels = capacity_for_p_max(preset_link, levels=401, bins=2000, **kwargs)
	assert np.all(np.diff(base.lower_bound_history) >= -1e-9)
	assert more_bins.capacity_bits == pytest.approx(base.capacity_bits, rel=0.005)
	# noise near p0 = 0 shrinks with p0, so every finer level grid resolves more low levels
	growth = more_levels.capacity_bits / base.capacity_bits - 1.0
	assert 0.01 < growth < 0.06


@pytest.mark.slow
def test_fig2_preset_structure(presets_dir):
	raw, text = load_config(presets_dir / "fig2.json")
	cfg = parse_config(raw, text)
	grid = list(cfg["p_max_grid"])
	rows = capacity_sweep(
		cfg.link, grid, [100], levels=cfg["levels_K"], bins=cfg["bins_B"], tol=1e-6, max_iter=3000, jobs=4,
	)
	assert all(r.error is None for r in rows)
	caps = [r.capacity_bits for r in rows]
	assert caps[0] > 0
	for prev, cur in zip(rows, rows[1:]):
		assert cur.capacity_bits >= prev.capacity_bits - cur.gap - 1e-3
	# output noise falls once p_max passes 1/2, so the upper half of the grid gains more
	half, top = grid.index(0.5), grid.index(0.95)
	assert caps[top] - caps[half] > caps[half] - caps[0]

	p = rows[grid.index(0.8)].distribution
	middle = p[90:111].mean()
	assert p[0] > middle
	assert p[-1] > middle


@pytest.mark.slow
def test_capacity_grows_with_bacteria(preset_link):
	rows = capacity_sweep(preset_link, [0.8], [10, 50, 100], levels=101, bins=800, tol=1e-6, max_iter=3000)
	caps = [r.capacity_bits for r in rows]
	assert [r.n for r in rows] == [10, 50, 100]
	assert all(r.error is None for r in rows)
	assert caps[0] > 0
	assert caps[0] < caps[1] < caps[2]


@pytest.mark.slow
def test_capacity_grows_with_p_max(preset_link):
	grid = np.linspace(0.1, 0.95, 10)
	rows = capacity_sweep(preset_link, grid, [10], levels=101, bins=800, tol=1e-6, max_iter=3000)
	caps = [r.capacity_bits for r in rows]
	for prev, cur in zip(rows, rows[1:]):
		assert cur.capacity_bits >= prev.capacity_bits - cur.gap - 1e-3
	assert caps[-1] > caps[0]


@pytest.mark.slow
def test_optimal_distribution_peaks_at_the_ends(preset_link):
	res = capacity_for_p_max(preset_link.with_bacteria(10), 0.8, levels=101, bins=800, tol=1e-6, max_iter=3000, warn=False)
	p = res.input_distribution
	middle = p[40:61].mean()
	assert p[0] > middle
	assert p[-1] > middle


@pytest.mark.slow
def test_capacity_stays_bounded_near_saturation(preset_link):
	res = capacity_for_p_max(preset_link, 0.999, levels=201, bins=1000, tol=1e-6, max_iter=2000, warn=False)
	assert res.capacity_bits < math.log2(201)


def test_sweep_records_cell_errors(preset_link):
	rows = capacity_sweep(preset_link, [0.5, 1.0], [10], levels=11, bins=100, tol=1e-6)
	assert rows[0].error is None
	assert rows[1].error is not None
	assert math.isnan(rows[1].capacity_bits)


def test_sweep_order_and_threads_agree(preset_link):
	kwargs = dict(levels=11, bins=100, tol=1e-6)
	serial = capacity_sweep(preset_link, [0.3, 0.6], [10, 20], **kwargs)
	threaded = capacity_sweep(preset_link, [0.3, 0.6], [10, 20], jobs=2, **kwargs)
	assert [(r.n, r.p_max) for r in serial] == [(10, 0.3), (10, 0.6), (20, 0.3), (20, 0.6)]
	assert [r.capacity_bits for r in serial] == [r.capacity_bits for r in threaded]
