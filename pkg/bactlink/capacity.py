"""Capacity of the discretized p0 -> Y channel.

The receiver output is handled on the probability scale p_hat = Y / (n N),
where level p0 is Gaussian with mean p0 and std normalized_output_std(p0).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy.special import ndtr, rel_entr
from tqdm import tqdm

from .errors import BactlinkError, ConvergenceWarning, DegenerateChannelError, DomainError
from .link import concentration_for_probability, normalized_output_std
from .params import LinkParams

logger = logging.getLogger(__name__)

DEFAULT_LEVELS = 201
DEFAULT_BINS = 2000
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000
SUPPORT_SIGMAS = 6.0
LOWER_BOUND_SLACK = 1e-10
ROW_SUM_TOL = 1e-9

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class InputGrid:
	p_max: float
	levels: np.ndarray

	@classmethod
	def uniform(cls, p_max: float, size: int) -> "InputGrid":
		"""`size` equally spaced binding probabilities from 0 to p_max inclusive."""
		if not 0 < p_max < 1:
			raise DomainError(f"p_max must lie in (0, 1), got {p_max!r}")
		if int(size) != size or size < 2:
			raise DomainError(f"an input grid needs at least two levels, got {size!r}")
		levels = p_max * np.arange(size, dtype=np.float64) / (size - 1)
		levels[-1] = p_max
		return cls(p_max=float(p_max), levels=levels)

	@property
	def size(self) -> int:
		return int(self.levels.size)


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
	transition: np.ndarray
	input_grid: Optional[InputGrid] = None
	output_edges: Optional[np.ndarray] = None

	def __post_init__(self):
		W = np.asarray(self.transition, dtype=np.float64)
		if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
			raise DomainError(f"transition matrix must be 2-D and nonempty, got shape {W.shape}")
		if np.any(W < 0) or not np.all(np.isfinite(W)):
			raise DomainError("transition probabilities must be finite and nonnegative")
		worst = float(np.max(np.abs(W.sum(axis=1) - 1.0)))
		if worst > ROW_SUM_TOL:
			raise DomainError(f"transition rows must sum to 1 (worst deviation {worst:.3e})")
		object.__setattr__(self, "transition", W)

	@property
	def shape(self) -> Tuple[int, int]:
		return self.transition.shape

	@property
	def output_bins(self) -> Optional[np.ndarray]:
		"""B + 1 edges of the output bins on the p_hat scale."""
		return self.output_edges


@dataclass(frozen=True, eq=False)
class CapacityResult:
	capacity_bits: float
	input_distribution: np.ndarray
	iterations: int
	upper_bound_gap: float
	converged: bool = True
	lower_bound_history: Tuple[float, ...] = field(default=(), repr=False)
	input_levels: Optional[np.ndarray] = None
	input_concentrations: Optional[np.ndarray] = None


def discretize_channel(link: LinkParams, grid: InputGrid, bins: int = DEFAULT_BINS) -> DiscreteChannel:
	"""K x B transition matrix of the signal-dependent Gaussian output, binned uniformly.

	Support is [min(mu - 6 sigma), max(mu + 6 sigma)]; tail mass outside it is
	folded into the end bins, and a level with zero variance becomes a delta row.
	"""
	if int(bins) != bins or bins < 2:
		raise DomainError(f"bins must be an integer >= 2, got {bins!r}")
	means = np.asarray(grid.levels, dtype=np.float64)
	stds = np.array([normalized_output_std(float(p), link) for p in means])
	lo = float(np.min(means - SUPPORT_SIGMAS * stds))
	hi = float(np.max(means + SUPPORT_SIGMAS * stds))
	if not hi > lo:
		raise DegenerateChannelError("every input level maps to the same deterministic output")
	edges = np.linspace(lo, hi, bins + 1)

	W = np.zeros((means.size, bins))
	noisy = stds > 0
	if np.any(noisy):
		cdf = ndtr((edges[None, :] - means[noisy, None]) / stds[noisy, None])
		rows = np.diff(cdf, axis=1)
		rows[:, 0] += cdf[:, 0]
		rows[:, -1] += 1.0 - cdf[:, -1]
		W[noisy] = rows
	quiet = np.flatnonzero(~noisy)
	if quiet.size:
		idx = np.clip(np.searchsorted(edges, means[quiet], side="right") - 1, 0, bins - 1)
		W[quiet, idx] = 1.0
	logger.debug("discretized %d levels into %d bins over [%.6g, %.6g]", means.size, bins, lo, hi)
	return DiscreteChannel(transition=W, input_grid=grid, output_edges=edges)


def _transition(ch: Union[DiscreteChannel, np.ndarray]) -> np.ndarray:
	if isinstance(ch, DiscreteChannel):
		return ch.transition
	return DiscreteChannel(transition=np.asarray(ch, dtype=np.float64)).transition


def _divergences(W: np.ndarray, p: np.ndarray) -> np.ndarray:
	"""D(W_i || pW) in nats for every input i."""
	q = np.maximum(p @ W, np.finfo(np.float64).tiny)
	return rel_entr(W, q[None, :]).sum(axis=1)


def mutual_information(p, ch: Union[DiscreteChannel, np.ndarray]) -> float:
	"""I(X;Y) in bits for input distribution p over the rows of the channel."""
	W = _transition(ch)
	p = np.asarray(p, dtype=np.float64)
	if p.shape != (W.shape[0],):
		raise DomainError(f"distribution has {p.size} entries, channel has {W.shape[0]} inputs")
	return max(0.0, float(p @ _divergences(W, p)) / LN2)


def blahut_arimoto(
	ch: Union[DiscreteChannel, np.ndarray],
	tol: float = DEFAULT_TOL,
	max_iter: int = DEFAULT_MAX_ITER,
	warn: bool = True,
) -> CapacityResult:
	"""Capacity-achieving input distribution by alternating maximization.

	Stops once max_i D(W_i || q) minus the lower bound, in bits, is at most tol.
	"""
	if not tol > 0:
		raise DomainError(f"tol must be positive, got {tol!r}")
	if int(max_iter) != max_iter or max_iter < 1:
		raise DomainError(f"max_iter must be a positive integer, got {max_iter!r}")
	W = _transition(ch)
	K, B = W.shape
	p = np.full(K, 1.0 / K)
	history: List[float] = []
	lower = upper = 0.0
	converged = False
	iterations = 0
	for iterations in range(1, max_iter + 1):
		D = _divergences(W, p)
		upper = float(D.max())
		c = np.exp(D - upper)
		z = float(p @ c)
		lower = upper + math.log(z)
		if history and lower < history[-1] - LOWER_BOUND_SLACK:
			logger.warning("lower bound decreased at iteration %d: %.12g -> %.12g", iterations, history[-1], lower)
		history.append(lower)
		if (upper - lower) / LN2 <= tol:
			converged = True
			break
		# keep the distribution the bounds were computed for
		if iterations < max_iter:
			p = p * c / z

	gap = max(0.0, upper - lower) / LN2
	ceiling = math.log2(min(K, B))
	capacity = min(max(0.0, lower / LN2), ceiling)
	if not converged:
		logger.warning("Blahut-Arimoto stopped at %d iterations with gap %.3e bits", iterations, gap)
		if warn:
			warnings.warn(ConvergenceWarning(gap, iterations, tol), stacklevel=2)
	p = p / p.sum()
	grid = ch.input_grid if isinstance(ch, DiscreteChannel) else None
	return CapacityResult(
		capacity_bits=capacity,
		input_distribution=p,
		iterations=iterations,
		upper_bound_gap=gap,
		converged=converged,
		lower_bound_history=tuple(h / LN2 for h in history),
		input_levels=None if grid is None else grid.levels,
	)


def capacity_for_p_max(
	link: LinkParams,
	p_max: float,
	levels: int = DEFAULT_LEVELS,
	bins: int = DEFAULT_BINS,
	tol: float = DEFAULT_TOL,
	max_iter: int = DEFAULT_MAX_ITER,
	warn: bool = True,
) -> CapacityResult:
	"""Capacity of the link with inputs limited to [0, p_max]."""
	grid = InputGrid.uniform(p_max, levels)
	result = blahut_arimoto(discretize_channel(link, grid, bins), tol=tol, max_iter=max_iter, warn=warn)
	bacterium = link.receiver.bacterium
	concentrations = np.array([concentration_for_probability(float(p), bacterium) for p in grid.levels])
	return CapacityResult(
		capacity_bits=result.capacity_bits,
		input_distribution=result.input_distribution,
		iterations=result.iterations,
		upper_bound_gap=result.upper_bound_gap,
		converged=result.converged,
		lower_bound_history=result.lower_bound_history,
		input_levels=grid.levels,
		input_concentrations=concentrations,
	)


@dataclass(frozen=True, eq=False)
class SweepRow:
	n: int
	p_max: float
	levels: int
	bins: int
	capacity_bits: float
	iterations: int
	gap: float
	converged: bool
	distribution: Optional[np.ndarray] = None
	error: Optional[str] = None


def _sweep_cell(link, n, p_max, levels, bins, tol, max_iter) -> SweepRow:
	try:
		res = capacity_for_p_max(link.with_bacteria(n), p_max, levels, bins, tol, max_iter, warn=False)
	except BactlinkError as exc:
		logger.warning("n=%d p_max=%.6g: %s", n, p_max, exc)
		return SweepRow(n, p_max, levels, bins, math.nan, 0, math.nan, False, None, str(exc))
	return SweepRow(
		n, p_max, levels, bins, res.capacity_bits, res.iterations,
		res.upper_bound_gap, res.converged, res.input_distribution,
	)


def capacity_sweep(
	link: LinkParams,
	p_max_grid: Sequence[float],
	n_list: Sequence[int],
	levels: int = DEFAULT_LEVELS,
	bins: int = DEFAULT_BINS,
	tol: float = DEFAULT_TOL,
	max_iter: int = DEFAULT_MAX_ITER,
	jobs: int = 1,
	progress: bool = False,
) -> List[SweepRow]:
	"""Capacity for every (n, p_max) cell, n-major, in input order.

	A failing cell is reported in its row's `error` and the sweep goes on.
	"""
	cells = [(int(n), float(p)) for n in n_list for p in p_max_grid]
	jobs_iter = tqdm(cells, desc="capacity", disable=not progress)
	if jobs == 1:
		rows = [_sweep_cell(link, n, p, levels, bins, tol, max_iter) for n, p in jobs_iter]
	else:
		rows = Parallel(n_jobs=jobs, prefer="threads")(
			delayed(_sweep_cell)(link, n, p, levels, bins, tol, max_iter) for n, p in jobs_iter
		)
	stalled = sum(1 for r in rows if r.error is None and not r.converged)
	if stalled:
		logger.warning("%d of %d sweep cells hit max_iter=%d", stalled, len(rows), max_iter)
	return rows
