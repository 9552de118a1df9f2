from __future__ import annotations

from pathlib import Path

import pytest

from bactlink.params import LinkParams, TransmitterVariance

PRESETS = Path(__file__).resolve().parents[1] / "presets"


@pytest.fixture
def presets_dir() -> Path:
	return PRESETS


@pytest.fixture
def preset_link() -> LinkParams:
	"""Identical nodes with N=50, sigma_gamma^2/gamma^2=0.1 and n=100, as in presets/."""
	return LinkParams.symmetric(
		bacteria_n=100,
		receptors_N=50,
		gain_noise_rel_var=0.1,
		distance_r=0.01,
		transmitter_variance=TransmitterVariance.LARGE_N,
	)


@pytest.fixture
def noiseless_link() -> LinkParams:
	return LinkParams.symmetric(
		bacteria_n=10,
		receptors_N=50,
		gain_noise_rel_var=0.0,
		transmitter_variance=TransmitterVariance.LARGE_N,
	)


@pytest.fixture
def unit_gain_link() -> LinkParams:
	"""G(r)=1 and alpha=4e-4, so the saturation limit is 2 and p0=0.5 means A0=A1=1."""
	return LinkParams.symmetric(
		bacteria_n=100,
		receptors_N=50,
		gain_noise_rel_var=0.1,
		production_alpha=4e-4,
		transmitter_variance=TransmitterVariance.LARGE_N,
	)
