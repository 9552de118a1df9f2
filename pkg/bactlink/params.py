from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import DomainError


# Largest sigma_gamma / gamma for which the first-order expansion is trusted.
MAX_GAIN_NOISE_REL_STD = 0.5

# A0 is admissible strictly below this fraction of the transmitter saturation limit.
ADMISSIBLE_FRACTION = 0.99999


class VarianceMode(str, enum.Enum):
	"""How the receiver light-output variance is assembled.

	- CONSISTENT: n N^2 (s + n rel_var_t) p0^2 (1 - p0)^2, the sum form obtained from
	  the conditional variance with the relative received-concentration variance
	- PAPER_LITERAL: n N^2 (s + n var_t)^2 p0^2 (1 - p0)^2, squaring the sum and
	  using the absolute received-concentration variance; kept for comparison
	- FULL: the same algebra without dropping N against N^2, so the receiver
	  Binomial floor n N p0 (1 - p0) and the (N^2 - N) factor are kept
	"""

	CONSISTENT = "consistent"
	PAPER_LITERAL = "paper-literal"
	FULL = "full"


class TransmitterVariance(str, enum.Enum):
	"""Which Var(X) feeds the received-concentration noise."""

	FULL = "full"
	LARGE_N = "large-n"


@dataclass(frozen=True)
class BacteriumParams:
	"""One engineered bacterium.

	Attributes:
	- receptors_N: ligand receptors per bacterium for one molecule type
	- gain_gamma: input gain gamma
	- dissociation_kappa: dissociation rate kappa
	- gain_noise_rel_var: sigma_gamma^2 / gamma^2
	"""

	receptors_N: int
	gain_gamma: float
	dissociation_kappa: float
	gain_noise_rel_var: float = 0.0

	def __post_init__(self):
		if int(self.receptors_N) != self.receptors_N or self.receptors_N < 1:
			raise DomainError(f"receptors_N must be a positive integer, got {self.receptors_N!r}")
		if not self.gain_gamma > 0 or not math.isfinite(self.gain_gamma):
			raise DomainError(f"gain_gamma must be positive, got {self.gain_gamma!r}")
		if not self.dissociation_kappa > 0 or not math.isfinite(self.dissociation_kappa):
			raise DomainError(f"dissociation_kappa must be positive, got {self.dissociation_kappa!r}")
		if not self.gain_noise_rel_var >= 0:
			raise DomainError(f"gain_noise_rel_var must be nonnegative, got {self.gain_noise_rel_var!r}")
		if math.sqrt(self.gain_noise_rel_var) >= MAX_GAIN_NOISE_REL_STD:
			raise DomainError(
				f"sigma_gamma/gamma = {math.sqrt(self.gain_noise_rel_var):.4g} is outside the "
				f"first-order regime (must be below {MAX_GAIN_NOISE_REL_STD})"
			)
		object.__setattr__(self, "receptors_N", int(self.receptors_N))

	@property
	def gain_noise_std(self) -> float:
		"""Absolute sigma_gamma."""
		return self.gain_gamma * math.sqrt(self.gain_noise_rel_var)


@dataclass(frozen=True)
class NodeParams:
	"""A node: n identical bacteria and their production constant alpha."""

	bacteria_n: int
	bacterium: BacteriumParams
	production_alpha: float

	def __post_init__(self):
		if int(self.bacteria_n) != self.bacteria_n or self.bacteria_n < 1:
			raise DomainError(f"bacteria_n must be a positive integer, got {self.bacteria_n!r}")
		if not self.production_alpha > 0 or not math.isfinite(self.production_alpha):
			raise DomainError(f"production_alpha must be positive, got {self.production_alpha!r}")
		object.__setattr__(self, "bacteria_n", int(self.bacteria_n))

	@property
	def total_receptors(self) -> int:
		return self.bacteria_n * self.bacterium.receptors_N


@dataclass(frozen=True)
class DiffusionChannelParams:
	diffusion_D: float
	distance_r: float

	def __post_init__(self):
		if not self.diffusion_D > 0 or not math.isfinite(self.diffusion_D):
			raise DomainError(f"diffusion_D must be positive, got {self.diffusion_D!r}")
		if not self.distance_r > 0 or not math.isfinite(self.distance_r):
			raise DomainError(f"distance_r must be positive, got {self.distance_r!r}")


@dataclass(frozen=True)
class LinkParams:
	"""Transmitter node, ideal diffusion channel and receiver node."""

	transmitter: NodeParams
	channel: DiffusionChannelParams
	receiver: NodeParams
	variance_mode: VarianceMode = VarianceMode.CONSISTENT
	transmitter_variance: TransmitterVariance = TransmitterVariance.FULL

	def __post_init__(self):
		object.__setattr__(self, "variance_mode", VarianceMode(self.variance_mode))
		object.__setattr__(self, "transmitter_variance", TransmitterVariance(self.transmitter_variance))
		limit = self.saturation_limit
		if not (limit > 0 and math.isfinite(limit)):
			raise DomainError(f"saturation limit alpha*G(r)*n*N must be positive and finite, got {limit!r}")

	@classmethod
	def symmetric(
		cls,
		bacteria_n: int,
		receptors_N: int,
		gain_gamma: float = 1.0,
		dissociation_kappa: float = 1.0,
		gain_noise_rel_var: float = 0.0,
		production_alpha: float = 1.0,
		diffusion_D: float = 1.0,
		distance_r: float = 1.0 / (4.0 * math.pi),
		variance_mode: VarianceMode = VarianceMode.CONSISTENT,
		transmitter_variance: TransmitterVariance = TransmitterVariance.FULL,
	) -> "LinkParams":
		"""Link with identical transmitter and receiver nodes."""
		bacterium = BacteriumParams(
			receptors_N=receptors_N,
			gain_gamma=gain_gamma,
			dissociation_kappa=dissociation_kappa,
			gain_noise_rel_var=gain_noise_rel_var,
		)
		node = NodeParams(bacteria_n=bacteria_n, bacterium=bacterium, production_alpha=production_alpha)
		return cls(
			transmitter=node,
			channel=DiffusionChannelParams(diffusion_D=diffusion_D, distance_r=distance_r),
			receiver=node,
			variance_mode=variance_mode,
			transmitter_variance=transmitter_variance,
		)

	@property
	def gain(self) -> float:
		"""Steady-state diffusion gain G(r) = 1 / (4 pi D r)."""
		return 1.0 / (4.0 * math.pi * self.channel.diffusion_D * self.channel.distance_r)

	@property
	def saturation_limit(self) -> float:
		"""alpha G(r) n N of the transmitter: E(A2) as every receptor binds."""
		return self.transmitter.production_alpha * self.gain * self.transmitter.total_receptors

	@property
	def admissible_limit(self) -> float:
		return ADMISSIBLE_FRACTION * self.saturation_limit

	def with_bacteria(self, bacteria_n: int) -> "LinkParams":
		"""Same link with both nodes resized to bacteria_n bacteria."""
		return replace(
			self,
			transmitter=replace(self.transmitter, bacteria_n=bacteria_n),
			receiver=replace(self.receiver, bacteria_n=bacteria_n),
		)

	def with_mode(self, variance_mode: VarianceMode) -> "LinkParams":
		return replace(self, variance_mode=VarianceMode(variance_mode))


@dataclass(frozen=True)
class LinkMoments:
	mean: float
	variance: float

	def __post_init__(self):
		if self.variance < 0:
			raise DomainError(f"variance must be nonnegative, got {self.variance!r}")

	@property
	def std(self) -> float:
		return math.sqrt(self.variance)
