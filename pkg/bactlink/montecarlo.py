"""Exact bacterium-level simulation of the link, used as an oracle for link.py.

Every bacterium draws its own gain perturbation, binds through the exact
(untruncated) binding probability and reports a Binomial count. Trials are
drawn in fixed-size blocks; block b of stream s is seeded from
SeedSequence(seed, spawn_key=(*s, b)), so results are the same for any
number of workers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from joblib import Parallel, delayed

from .errors import DomainError
from .link import (
	concentration_for_probability,
	receiver_output_moments,
	received_concentration_stats,
	stimulus_concentration,
	transmitter_output_moments,
)
from .params import LinkMoments, LinkParams, NodeParams, VarianceMode

logger = logging.getLogger(__name__)

BLOCK_TRIALS = 4096
CLAMP_WARN_FREQUENCY = 1e-3

Sampler = Callable[[np.random.Generator, int], np.ndarray]
T = TypeVar("T")


@dataclass(frozen=True)
class SimConfig:
	trials: int
	seed: int = 0
	antithetic: bool = False
	jobs: int = 1

	def __post_init__(self):
		if int(self.trials) != self.trials or self.trials < 1:
			raise DomainError(f"trials must be a positive integer, got {self.trials!r}")
		if int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
			raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
		if int(self.jobs) != self.jobs or self.jobs < 1:
			raise DomainError(f"jobs must be a positive integer, got {self.jobs!r}")
		if self.antithetic and self.trials % 2:
			raise DomainError("antithetic sampling needs an even number of trials")


@dataclass(frozen=True)
class MomentEstimate:
	mean: float
	variance: float
	std_error_mean: float
	std_error_variance: float
	trials: int


@dataclass(frozen=True)
class ChainDraw:
	"""X, A2 and Y from the same simulated transmissions."""

	x: np.ndarray
	a2: np.ndarray
	y: np.ndarray
	clamps: int


def _gain_draws(node: NodeParams, rng: np.random.Generator, size: int, antithetic: bool) -> Tuple[np.ndarray, int]:
	"""Per-bacterium effective gains gamma + eps_gamma, clamped at 0."""
	b = node.bacterium
	shape = (size, node.bacteria_n)
	if b.gain_noise_rel_var == 0:
		return np.full(shape, b.gain_gamma), 0
	if antithetic:
		if size % 2:
			raise DomainError("antithetic sampling needs an even number of trials")
		z = rng.standard_normal((size // 2, node.bacteria_n))
		z = np.concatenate([z, -z])
	else:
		z = rng.standard_normal(shape)
	gains = b.gain_gamma + b.gain_noise_std * z
	negative = gains < 0
	clamps = int(np.count_nonzero(negative))
	gains[negative] = 0.0
	return gains, clamps


def _node_response(
	concentration,
	node: NodeParams,
	rng: np.random.Generator,
	size: int,
	antithetic: bool,
) -> Tuple[np.ndarray, int]:
	"""Total activated receptors of a node exposed to `concentration` (scalar or per trial)."""
	gains, clamps = _gain_draws(node, rng, size, antithetic)
	bound = np.reshape(np.asarray(concentration, dtype=np.float64), (-1, 1)) * gains
	p = bound / (bound + node.bacterium.dissociation_kappa)
	counts = rng.binomial(node.bacterium.receptors_N, p)
	return counts.sum(axis=1, dtype=np.int64), clamps


def _draw_transmitter(A1: float, link: LinkParams, rng: np.random.Generator, size: int, antithetic: bool = False):
	if not A1 >= 0:
		raise DomainError(f"stimulus concentration must be nonnegative, got {A1!r}")
	return _node_response(A1, link.transmitter, rng, size, antithetic)


def _draw_chain(A0: float, link: LinkParams, rng: np.random.Generator, size: int, antithetic: bool = False) -> ChainDraw:
	A1 = stimulus_concentration(A0, link)
	x, tx_clamps = _draw_transmitter(A1, link, rng, size, antithetic)
	# one received concentration per trial, shared by the whole receiver node
	a2 = link.gain * link.transmitter.production_alpha * x
	y, rx_clamps = _node_response(a2, link.receiver, rng, size, antithetic)
	return ChainDraw(x=x, a2=a2, y=y, clamps=tx_clamps + rx_clamps)


def sample_transmitter(
	A1: float,
	link: LinkParams,
	rng: np.random.Generator,
	size: Optional[int] = None,
	antithetic: bool = False,
):
	"""Draw X, the activated receptors of the transmitter node under stimulus A1."""
	x, _ = _draw_transmitter(A1, link, rng, 1 if size is None else size, antithetic)
	return int(x[0]) if size is None else x


def sample_received_concentration(
	A0: float,
	link: LinkParams,
	rng: np.random.Generator,
	size: Optional[int] = None,
	antithetic: bool = False,
):
	"""Draw A2 = G(r) alpha X with the transmitter stimulated to target A0."""
	x, _ = _draw_transmitter(stimulus_concentration(A0, link), link, rng, 1 if size is None else size, antithetic)
	a2 = link.gain * link.transmitter.production_alpha * x
	return float(a2[0]) if size is None else a2


def sample_link_output(
	A0: float,
	link: LinkParams,
	rng: np.random.Generator,
	size: Optional[int] = None,
	antithetic: bool = False,
):
	"""Draw Y, the receiver light output, through the full chain."""
	draw = _draw_chain(A0, link, rng, 1 if size is None else size, antithetic)
	return int(draw.y[0]) if size is None else draw.y


def transmitter_sampler(A1: float, link: LinkParams, antithetic: bool = False) -> Sampler:
	return partial(sample_transmitter, A1, link, antithetic=antithetic)


def link_output_sampler(A0: float, link: LinkParams, antithetic: bool = False) -> Sampler:
	return partial(sample_link_output, A0, link, antithetic=antithetic)


def block_sizes(trials: int) -> List[int]:
	full, rest = divmod(trials, BLOCK_TRIALS)
	return [BLOCK_TRIALS] * full + ([rest] if rest else [])


def block_rng(seed: int, stream: Sequence[int], block: int) -> np.random.Generator:
	return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(*stream, block)))


def _run_blocks(draw: Callable[[np.random.Generator, int], T], cfg: SimConfig, stream: Sequence[int] = ()) -> List[T]:
	sizes = block_sizes(cfg.trials)

	def one(block: int) -> T:
		return draw(block_rng(cfg.seed, stream, block), sizes[block])

	if cfg.jobs == 1 or len(sizes) == 1:
		return [one(b) for b in range(len(sizes))]
	return Parallel(n_jobs=cfg.jobs, prefer="threads")(delayed(one)(b) for b in range(len(sizes)))


def _pair_means(blocks: List[np.ndarray]) -> np.ndarray:
	halves = []
	for block in blocks:
		half = block.size // 2
		halves.append(0.5 * (block[:half] + block[half:]))
	return np.concatenate(halves)


def summarize(blocks: List[np.ndarray], antithetic: bool = False) -> MomentEstimate:
	"""Sample moments and their standard errors from blocks kept in block order."""
	blocks = [np.asarray(b, dtype=np.float64).ravel() for b in blocks]
	samples = np.concatenate(blocks)
	t = samples.size
	if t < 2:
		raise DomainError("at least two trials are needed to estimate a variance")
	mean = float(np.mean(samples))
	dev = samples - mean
	m2 = float(np.mean(dev * dev))
	m4 = float(np.mean(dev ** 4))
	variance = m2 * t / (t - 1)
	se_variance = math.sqrt(max(0.0, (m4 - m2 * m2 * (t - 3) / (t - 1)) / t))
	if antithetic:
		pairs = _pair_means(blocks)
		se_mean = math.sqrt(float(np.var(pairs, ddof=1)) / pairs.size) if pairs.size > 1 else 0.0
	else:
		se_mean = math.sqrt(variance / t)
	return MomentEstimate(
		mean=mean,
		variance=variance,
		std_error_mean=se_mean,
		std_error_variance=se_variance,
		trials=t,
	)


def estimate_moments(sampler: Sampler, cfg: SimConfig, stream: Sequence[int] = ()) -> MomentEstimate:
	"""Monte Carlo mean and variance of `sampler(rng, size)` over cfg.trials draws."""
	if cfg.trials < 2:
		raise DomainError("estimate_moments needs at least two trials")
	blocks = _run_blocks(lambda rng, size: np.asarray(sampler(rng, size)), cfg, stream)
	return summarize(blocks, cfg.antithetic)


@dataclass(frozen=True)
class Tolerances:
	"""PASS criteria for analytic vs empirical moments.

	A mean passes when |empirical - analytic| <= k_mean * SE + bias * |analytic|;
	a variance passes when |empirical - analytic| <= rel * analytic + k_var * SE.
	"""

	mean_se_multiplier: float = 3.0
	mean_bias_allowance: float = 0.01
	variance_rel_tol: float = 0.10
	variance_se_multiplier: float = 3.0


@dataclass(frozen=True)
class ValidationRow:
	p0: float
	quantity: str
	analytic: LinkMoments
	empirical: MomentEstimate
	mean_ok: bool
	variance_ok: bool
	clamps: int

	@property
	def passed(self) -> bool:
		return self.mean_ok and self.variance_ok

	@property
	def mean_gap_rel(self) -> float:
		return _rel_gap(self.empirical.mean, self.analytic.mean)

	@property
	def variance_gap_rel(self) -> float:
		return _rel_gap(self.empirical.variance, self.analytic.variance)


@dataclass(frozen=True)
class ValidationReport:
	rows: List[ValidationRow]
	mode: VarianceMode
	config: SimConfig
	tolerances: Tolerances = field(default_factory=Tolerances)

	@property
	def passed(self) -> bool:
		return all(row.passed for row in self.rows)

	def failures(self) -> List[ValidationRow]:
		return [row for row in self.rows if not row.passed]

	@property
	def clamp_events(self) -> int:
		return sum(row.clamps for row in self.rows if row.quantity == "Y")


def _rel_gap(empirical: float, analytic: float) -> float:
	if analytic == 0:
		return 0.0 if empirical == 0 else math.inf
	return (empirical - analytic) / abs(analytic)


def check_moments(analytic: LinkMoments, empirical: MomentEstimate, tol: Tolerances) -> Tuple[bool, bool]:
	mean_allowed = tol.mean_se_multiplier * empirical.std_error_mean + tol.mean_bias_allowance * abs(analytic.mean)
	var_allowed = tol.variance_rel_tol * analytic.variance + tol.variance_se_multiplier * empirical.std_error_variance
	mean_ok = abs(empirical.mean - analytic.mean) <= mean_allowed
	variance_ok = abs(empirical.variance - analytic.variance) <= var_allowed
	return mean_ok, variance_ok


def validate_approximations(
	link: LinkParams,
	p0_grid: Sequence[float],
	cfg: SimConfig,
	tolerances: Optional[Tolerances] = None,
) -> ValidationReport:
	"""Compare analytic moments of X, A2 and Y with the exact simulation on a p0 grid."""
	tol = tolerances or Tolerances()
	rows: List[ValidationRow] = []
	for index, p0 in enumerate(p0_grid):
		A0 = concentration_for_probability(p0, link.receiver.bacterium)
		A1 = stimulus_concentration(A0, link)
		analytic = {
			"X": transmitter_output_moments(A1, link),
			"A2": received_concentration_stats(A0, link),
			"Y": receiver_output_moments(p0, link),
		}
		draws = _run_blocks(partial(_draw_chain, A0, link, antithetic=cfg.antithetic), cfg, (index,))
		clamps = sum(d.clamps for d in draws)
		empirical = {
			"X": summarize([d.x for d in draws], cfg.antithetic),
			"A2": summarize([d.a2 for d in draws], cfg.antithetic),
			"Y": summarize([d.y for d in draws], cfg.antithetic),
		}
		draws_per_trial = link.transmitter.bacteria_n + link.receiver.bacteria_n
		if clamps > CLAMP_WARN_FREQUENCY * cfg.trials * draws_per_trial:
			logger.warning("p0=%.6g: %d gain draws clamped at zero", p0, clamps)
		for quantity in ("X", "A2", "Y"):
			mean_ok, variance_ok = check_moments(analytic[quantity], empirical[quantity], tol)
			rows.append(ValidationRow(
				p0=float(p0),
				quantity=quantity,
				analytic=analytic[quantity],
				empirical=empirical[quantity],
				mean_ok=mean_ok,
				variance_ok=variance_ok,
				clamps=clamps,
			))
		logger.info(
			"p0=%.6g: Var(Y) analytic %.6g empirical %.6g (%s)",
			p0, analytic["Y"].variance, empirical["Y"].variance,
			"PASS" if rows[-1].passed else "FAIL",
		)
	return ValidationReport(rows=rows, mode=link.variance_mode, config=cfg, tolerances=tol)
