"""M-ary concentration signalling on uniformly spaced binding probabilities."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.special import ndtr
from scipy.stats import norm
from tqdm import tqdm

from .capacity import (
	DEFAULT_BINS,
	DEFAULT_MAX_ITER,
	DEFAULT_TOL,
	CapacityResult,
	InputGrid,
	blahut_arimoto,
	discretize_channel,
	mutual_information,
)
from .errors import BactlinkError, DomainError
from .link import concentration_for_p_max, normalized_output_std
from .params import LinkParams

logger = logging.getLogger(__name__)

DEFAULT_SCAN_POINTS = 512
BISECT_TOL = 1e-6
WEIGHT_SUM_TOL = 1e-9


def symbol_levels(m: int, p_max: float) -> np.ndarray:
	"""p_max * i / (m - 1) for i = 0 .. m - 1."""
	if int(m) != m or m < 2:
		raise DomainError(f"m must be an integer >= 2, got {m!r}")
	if not 0 < p_max < 1:
		raise DomainError(f"p_max must lie in (0, 1), got {p_max!r}")
	return InputGrid.uniform(p_max, int(m)).levels


@dataclass(frozen=True, eq=False)
class ModulationScheme:
	m: int
	p_max: float
	levels: np.ndarray
	weights: np.ndarray

	def __post_init__(self):
		w = np.asarray(self.weights, dtype=np.float64)
		if w.shape != (self.m,):
			raise DomainError(f"expected {self.m} symbol weights, got {w.size}")
		if np.any(w < 0) or abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
			raise DomainError("symbol weights must be nonnegative and sum to 1")
		object.__setattr__(self, "weights", w)

	@classmethod
	def uniform(cls, m: int, p_max: float) -> "ModulationScheme":
		levels = symbol_levels(m, p_max)
		return cls(m=int(m), p_max=float(p_max), levels=levels, weights=np.full(int(m), 1.0 / m))

	def with_weights(self, weights) -> "ModulationScheme":
		return replace(self, weights=np.asarray(weights, dtype=np.float64))

	@property
	def spacing(self) -> float:
		return self.p_max / (self.m - 1)

	@property
	def decision_half_width(self) -> float:
		return self.spacing / 2.0


@dataclass(frozen=True, eq=False)
class ModulationReport:
	per_symbol_error: np.ndarray
	total_error: float
	rate_bits: float
	decision_half_width: float
	weights: np.ndarray
	log2_m: float
	region_error: float
	capacity_bits: Optional[float] = None


@dataclass(frozen=True)
class FeasibilityResult:
	m: int
	target_pe: float
	feasible: bool
	p_max: Optional[float]
	achieved_error: float
	a_max: Optional[float]


def two_sided_error(half_width: float, std: float) -> float:
	"""P(|Z| sigma > half_width) = 2 Q(half_width / sigma)."""
	if std == 0:
		return 0.0
	return float(2.0 * norm.sf(half_width / std))


def symbol_stds(link: LinkParams, levels) -> np.ndarray:
	return np.array([normalized_output_std(float(p), link) for p in levels])


def symbol_error_probabilities(link: LinkParams, s: ModulationScheme) -> np.ndarray:
	"""Two-sided error of every symbol, endpoints included."""
	stds = symbol_stds(link, s.levels)
	return np.array([two_sided_error(s.decision_half_width, sd) for sd in stds])


def _symbol_capacity(
	link: LinkParams, s: ModulationScheme, tol: float, bins: int, max_iter: int,
) -> CapacityResult:
	grid = InputGrid(p_max=s.p_max, levels=s.levels)
	return blahut_arimoto(discretize_channel(link, grid, bins), tol=tol, max_iter=max_iter)


def symbol_weights(
	link: LinkParams,
	s: ModulationScheme,
	tol: float = DEFAULT_TOL,
	bins: int = DEFAULT_BINS,
	max_iter: int = DEFAULT_MAX_ITER,
) -> np.ndarray:
	"""Optimal input distribution of the channel restricted to the m symbol levels."""
	return _symbol_capacity(link, s, tol, bins, max_iter).input_distribution


def total_error(s: ModulationScheme, per_symbol) -> float:
	per_symbol = np.asarray(per_symbol, dtype=np.float64)
	if per_symbol.shape != (s.m,):
		raise DomainError(f"expected {s.m} per-symbol errors, got {per_symbol.size}")
	return min(1.0, max(0.0, float(np.dot(s.weights, per_symbol))))


def hard_decision_channel(levels, stds) -> np.ndarray:
	"""m x m channel from sent symbol to nearest-level decision region."""
	levels = np.asarray(levels, dtype=np.float64)
	stds = np.asarray(stds, dtype=np.float64)
	bounds = np.concatenate([[-np.inf], 0.5 * (levels[:-1] + levels[1:]), [np.inf]])
	H = np.zeros((levels.size, levels.size))
	for i, (mu, sd) in enumerate(zip(levels, stds)):
		if sd == 0:
			H[i, i] = 1.0
			continue
		cdf = ndtr((bounds - mu) / sd)
		H[i] = np.diff(cdf)
	return H


def modulation_rate(link: LinkParams, s: ModulationScheme) -> ModulationReport:
	"""Error probabilities and hard-decision information rate of a weighted scheme."""
	stds = symbol_stds(link, s.levels)
	per_symbol = np.array([two_sided_error(s.decision_half_width, sd) for sd in stds])
	H = hard_decision_channel(s.levels, stds)
	log2_m = math.log2(s.m)
	rate = min(mutual_information(s.weights, H / H.sum(axis=1, keepdims=True)), log2_m)
	region_error = max(0.0, 1.0 - float(np.dot(s.weights, np.diag(H))))
	return ModulationReport(
		per_symbol_error=per_symbol,
		total_error=total_error(s, per_symbol),
		rate_bits=rate,
		decision_half_width=s.decision_half_width,
		weights=s.weights,
		log2_m=log2_m,
		region_error=region_error,
	)


def evaluate_scheme(
	link: LinkParams,
	m: int,
	p_max: float,
	bins: int = DEFAULT_BINS,
	tol: float = DEFAULT_TOL,
	max_iter: int = DEFAULT_MAX_ITER,
) -> ModulationReport:
	"""Weights from Blahut-Arimoto at this p_max, then errors and rate."""
	scheme = ModulationScheme.uniform(m, p_max)
	cap = _symbol_capacity(link, scheme, tol, bins, max_iter)
	report = modulation_rate(link, scheme.with_weights(cap.input_distribution))
	return replace(report, capacity_bits=cap.capacity_bits)


@dataclass(frozen=True, eq=False)
class ModulationSweepRow:
	m: int
	p_max: float
	report: Optional[ModulationReport]
	error: Optional[str] = None


def _modulation_cell(link, m, p_max, bins, tol, max_iter) -> ModulationSweepRow:
	try:
		return ModulationSweepRow(m, p_max, evaluate_scheme(link, m, p_max, bins, tol, max_iter))
	except BactlinkError as exc:
		logger.warning("m=%d p_max=%.6g: %s", m, p_max, exc)
		return ModulationSweepRow(m, p_max, None, str(exc))


def modulation_sweep(
	link: LinkParams,
	m_list: Sequence[int],
	p_max_grid: Sequence[float],
	bins: int = DEFAULT_BINS,
	tol: float = DEFAULT_TOL,
	max_iter: int = DEFAULT_MAX_ITER,
	jobs: int = 1,
	progress: bool = False,
) -> List[ModulationSweepRow]:
	cells = [(int(m), float(p)) for m in m_list for p in p_max_grid]
	cells_iter = tqdm(cells, desc="modulation", disable=not progress)
	if jobs == 1:
		return [_modulation_cell(link, m, p, bins, tol, max_iter) for m, p in cells_iter]
	return Parallel(n_jobs=jobs, prefer="threads")(
		delayed(_modulation_cell)(link, m, p, bins, tol, max_iter) for m, p in cells_iter
	)


def min_power_for_target_error(
	link: LinkParams,
	m: int,
	target_pe: float,
	p_max_cap: float = 0.999,
	scan_points: int = DEFAULT_SCAN_POINTS,
	bins: int = DEFAULT_BINS,
	tol: float = DEFAULT_TOL,
	max_iter: int = DEFAULT_MAX_ITER,
) -> FeasibilityResult:
	"""Smallest p_max in (0, p_max_cap] whose total error is at most target_pe.

	The error curve need not be monotone in p_max, so a uniform scan locates the
	first qualifying point and bisection refines it against the previous one.
	"""
	if not 0 < target_pe < 1:
		raise DomainError(f"target_pe must lie in (0, 1), got {target_pe!r}")
	if not 0 < p_max_cap < 1:
		raise DomainError(f"p_max_cap must lie in (0, 1), got {p_max_cap!r}")
	if int(scan_points) != scan_points or scan_points < 1:
		raise DomainError(f"scan_points must be a positive integer, got {scan_points!r}")

	def error_at(p_max: float) -> float:
		try:
			return evaluate_scheme(link, m, p_max, bins, tol, max_iter).total_error
		except DomainError as exc:
			logger.debug("m=%d p_max=%.6g skipped: %s", m, p_max, exc)
			return math.inf

	def a_max(p_max: float) -> float:
		return concentration_for_p_max(p_max, link.receiver.bacterium)

	scan = p_max_cap * np.arange(1, scan_points + 1) / scan_points
	errors: List[float] = []
	first = None
	for k, p in enumerate(scan):
		errors.append(error_at(float(p)))
		if errors[-1] <= target_pe:
			first = k
			break

	if first is None:
		best = int(np.argmin(errors))
		logger.info("m=%d: target %.3g not reached, best error %.6g at p_max=%.6g", m, target_pe, errors[best], scan[best])
		return FeasibilityResult(
			m=int(m), target_pe=target_pe, feasible=False,
			p_max=float(scan[best]), achieved_error=float(errors[best]), a_max=a_max(float(scan[best])),
		)
	if first == 0:
		p = float(scan[0])
		return FeasibilityResult(int(m), target_pe, True, p, errors[0], a_max(p))

	lo, hi, hi_error = float(scan[first - 1]), float(scan[first]), errors[first]
	while hi - lo > BISECT_TOL:
		mid = 0.5 * (lo + hi)
		e = error_at(mid)
		if e <= target_pe:
			hi, hi_error = mid, e
		else:
			lo = mid
	logger.info("m=%d: target %.3g reached at p_max=%.8g", m, target_pe, hi)
	return FeasibilityResult(int(m), target_pe, True, hi, hi_error, a_max(hi))
