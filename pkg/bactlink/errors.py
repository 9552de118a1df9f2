from __future__ import annotations

from typing import Optional


class BactlinkError(Exception):
	"""Base class for every error raised by the package."""


class DomainError(BactlinkError, ValueError):
	"""An argument or parameter lies outside the model's domain."""


class UnreachableConcentrationError(DomainError):
	"""The transmitter node cannot produce the requested concentration.

	Attributes:
	- requested: the concentration A0 that was asked for
	- limit: the saturation limit alpha * G(r) * n * N of the transmitter
	"""

	def __init__(self, requested: float, limit: float, admissible: float):
		self.requested = float(requested)
		self.limit = float(limit)
		self.admissible = float(admissible)
		super().__init__(
			f"concentration {self.requested:.6g} is not reachable: the transmitter "
			f"saturates at {self.limit:.6g} (admissible below {self.admissible:.6g})"
		)


class DegenerateChannelError(BactlinkError):
	"""All input levels map to the same deterministic output."""


class ConfigError(BactlinkError):
	"""Invalid experiment configuration."""

	def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
		self.key = key
		self.line = line
		where = []
		if line is not None:
			where.append(f"line {line}")
		if key is not None:
			where.append(f"key '{key}'")
		prefix = f"{', '.join(where)}: " if where else ""
		super().__init__(prefix + message)


class ConvergenceWarning(UserWarning):
	"""Blahut-Arimoto stopped at max_iter before the bound gap reached tol."""

	def __init__(self, gap: float, iterations: int, tol: float):
		self.gap = float(gap)
		self.iterations = int(iterations)
		self.tol = float(tol)
		super().__init__(
			f"Blahut-Arimoto did not converge after {self.iterations} iterations: "
			f"gap {self.gap:.3e} bits > tol {self.tol:.3e}"
		)
