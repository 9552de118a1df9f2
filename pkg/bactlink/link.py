"""Closed-form signal chain of the two-node link.

stimulus A1 -> transmitter activated receptors X -> received concentration A2
-> receiver light output Y, each summarised by its first two moments.
"""

from __future__ import annotations

import math

from .errors import DomainError, UnreachableConcentrationError
from .params import (
	BacteriumParams,
	DiffusionChannelParams,
	LinkMoments,
	LinkParams,
	TransmitterVariance,
	VarianceMode,
)


def binding_probability(A: float, b: BacteriumParams) -> float:
	"""Steady-state receptor binding probability A gamma / (A gamma + kappa)."""
	if not A >= 0:
		raise DomainError(f"concentration must be nonnegative, got {A!r}")
	bound = A * b.gain_gamma
	return bound / (bound + b.dissociation_kappa)


def concentration_for_probability(p: float, b: BacteriumParams) -> float:
	"""Inverse of binding_probability."""
	if not 0 <= p < 1:
		raise DomainError(f"binding probability must lie in [0, 1), got {p!r}")
	return b.dissociation_kappa * p / (b.gain_gamma * (1.0 - p))


# Names used when reporting power as A_max or p_max.
p_max_for_concentration = binding_probability
concentration_for_p_max = concentration_for_probability


def channel_gain(c: DiffusionChannelParams) -> float:
	"""Ideal-channel diffusion gain G(r) = 1 / (4 pi D r)."""
	return 1.0 / (4.0 * math.pi * c.diffusion_D * c.distance_r)


def stimulus_concentration(A0: float, link: LinkParams) -> float:
	"""Type I concentration A1 that makes E(A2) equal A0."""
	if not A0 >= 0:
		raise DomainError(f"target concentration must be nonnegative, got {A0!r}")
	limit = link.saturation_limit
	if A0 >= link.admissible_limit:
		raise UnreachableConcentrationError(A0, limit, link.admissible_limit)
	b = link.transmitter.bacterium
	return b.dissociation_kappa * A0 / (b.gain_gamma * (limit - A0))


def _check_stimulus(A1: float) -> None:
	if not A1 >= 0:
		raise DomainError(f"stimulus concentration must be nonnegative, got {A1!r}")


def transmitter_output_moments(A1: float, link: LinkParams) -> LinkMoments:
	"""Mean and variance of X, the activated receptors of the whole transmitter node.

	The variance keeps both terms: the Binomial reception noise and the
	(N^2 - N) term driven by the gain perturbation.
	"""
	_check_stimulus(A1)
	node = link.transmitter
	b = node.bacterium
	n, N = node.bacteria_n, b.receptors_N
	p = binding_probability(A1, b)
	q = p * (1.0 - p)
	variance = n * N * q + n * (N * N - N) * q * q * b.gain_noise_rel_var
	return LinkMoments(mean=n * N * p, variance=variance)


def transmitter_output_variance_large_n(A1: float, link: LinkParams) -> float:
	"""Large-N approximation of Var(X): n N^2 p^2 (1 - p)^2 sigma_gamma^2 / gamma^2."""
	_check_stimulus(A1)
	node = link.transmitter
	b = node.bacterium
	p = binding_probability(A1, b)
	q = p * (1.0 - p)
	return node.bacteria_n * b.receptors_N ** 2 * q * q * b.gain_noise_rel_var


def received_concentration_stats(A0: float, link: LinkParams) -> LinkMoments:
	"""Mean and variance of A2 = G(r) alpha X when the transmitter targets A0."""
	A1 = stimulus_concentration(A0, link)
	scale = link.gain * link.transmitter.production_alpha
	moments = transmitter_output_moments(A1, link)
	if link.transmitter_variance is TransmitterVariance.LARGE_N:
		var_x = transmitter_output_variance_large_n(A1, link)
	else:
		var_x = moments.variance
	return LinkMoments(mean=scale * moments.mean, variance=scale * scale * var_x)


def relative_received_variance(A0: float, link: LinkParams) -> float:
	"""sigma_t^2 / A0^2, the dimensionless transmitter noise seen at the receiver."""
	if A0 == 0:
		return 0.0
	return received_concentration_stats(A0, link).variance / (A0 * A0)


def receiver_output_moments(p0: float, link: LinkParams) -> LinkMoments:
	"""Mean and variance of Y, the light output of the receiver node, at input p0."""
	if not 0 <= p0 < 1:
		raise DomainError(f"p0 must lie in [0, 1), got {p0!r}")
	node = link.receiver
	b = node.bacterium
	n, N = node.bacteria_n, b.receptors_N
	mean = n * N * p0
	# p0 = 0 is a dark, deterministic output; A0 = 0 also makes sigma_t undefined.
	if p0 == 0:
		stimulus_concentration(0.0, link)
		return LinkMoments(mean=0.0, variance=0.0)
	A0 = concentration_for_probability(p0, b)
	q2 = (p0 * (1.0 - p0)) ** 2
	s = b.gain_noise_rel_var
	mode = link.variance_mode
	if mode is VarianceMode.PAPER_LITERAL:
		var_t = received_concentration_stats(A0, link).variance
		variance = n * N * N * (s + n * var_t) ** 2 * q2
	elif mode is VarianceMode.FULL:
		rel_t = relative_received_variance(A0, link)
		variance = (
			n * N * p0 * (1.0 - p0)
			+ n * (N * N - N) * q2 * s
			+ (n * N) ** 2 * q2 * rel_t
		)
	else:
		rel_t = relative_received_variance(A0, link)
		variance = n * N * N * (s + n * rel_t) * q2
	return LinkMoments(mean=mean, variance=variance)


def normalized_output_std(p0: float, link: LinkParams) -> float:
	"""Standard deviation of Y / (n N), the output on the probability scale."""
	return receiver_output_moments(p0, link).std / link.receiver.total_receptors
