"""Experiment configuration: flat JSON keys with documented units.

Node keys without a prefix apply to both nodes; `transmitter_<key>` and
`receiver_<key>` override one side. Unknown keys are an error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError, DomainError
from .params import (
	BacteriumParams,
	DiffusionChannelParams,
	LinkParams,
	NodeParams,
	TransmitterVariance,
	VarianceMode,
)

HEADER_PREFIX = "# bactlink "


@dataclass(frozen=True)
class KeySpec:
	kind: str
	default: Any
	unit: str
	choices: Tuple[str, ...] = ()


NODE_KEYS: Dict[str, KeySpec] = {
	"bacteria_n": KeySpec("int", None, "bacteria per node"),
	"receptors_N": KeySpec("int", None, "receptors per bacterium"),
	"gain_gamma": KeySpec("float", 1.0, "1/concentration"),
	"dissociation_kappa": KeySpec("float", 1.0, "1/time"),
	"gain_noise_rel_var": KeySpec("float", 0.0, "dimensionless, sigma_gamma^2/gamma^2"),
	"production_alpha": KeySpec("float", 1.0, "molecules per activated receptor"),
}

DEFAULT_P_MAX_GRID = [round(0.05 * k, 2) for k in range(1, 20)] + [0.999]

KEYS: Dict[str, KeySpec] = {
	**NODE_KEYS,
	**{f"{side}_{k}": KeySpec(v.kind, None, v.unit) for side in ("transmitter", "receiver") for k, v in NODE_KEYS.items()},
	"diffusion_D": KeySpec("float", 1.0, "length^2/time"),
	"distance_r": KeySpec("float", 1.0 / (4.0 * math.pi), "length"),
	"variance_mode": KeySpec("choice", VarianceMode.CONSISTENT.value, "", tuple(m.value for m in VarianceMode)),
	"transmitter_variance": KeySpec(
		"choice", TransmitterVariance.FULL.value, "", tuple(m.value for m in TransmitterVariance)
	),
	# moments
	"p0": KeySpec("float", 0.5, "probability"),
	# validate
	"p0_grid": KeySpec("float_list", [0.1, 0.3, 0.5, 0.7, 0.9], "probability"),
	"trials": KeySpec("int", 100_000, "trials"),
	"seed": KeySpec("int", 0, ""),
	"antithetic": KeySpec("bool", False, ""),
	"mean_se_multiplier": KeySpec("float", 3.0, "standard errors"),
	"mean_bias_allowance": KeySpec("float", 0.01, "relative"),
	"variance_rel_tol": KeySpec("float", 0.10, "relative"),
	"variance_se_multiplier": KeySpec("float", 3.0, "standard errors"),
	# capacity-sweep / modulation-sweep
	"p_max_grid": KeySpec("float_list", DEFAULT_P_MAX_GRID, "probability"),
	"n_list": KeySpec("int_list", None, "bacteria per node"),
	"levels_K": KeySpec("int", 201, "input levels"),
	"bins_B": KeySpec("int", 2000, "output bins"),
	"tol": KeySpec("float", 1e-9, "bits"),
	"max_iter": KeySpec("int", 10_000, "iterations"),
	"m_list": KeySpec("int_list", [2, 4, 8, 16, 32], "symbols"),
	# feasibility
	"target_pe": KeySpec("float", 1e-6, "probability"),
	"p_max_cap": KeySpec("float", 0.999, "probability"),
	"scan_points": KeySpec("int", 512, "points"),
	# run
	"jobs": KeySpec("int", 1, "workers"),
	"format": KeySpec("choice", "csv", "", ("csv", "json")),
	"out": KeySpec("str", "-", "path, - for stdout"),
}

# Keys that change nothing in the output bytes and stay out of the header.
RUNTIME_KEYS = frozenset({"jobs", "out", "format"})


def _line_of(text: Optional[str], key: str) -> Optional[int]:
	if not text:
		return None
	needle = json.dumps(key)
	for number, line in enumerate(text.splitlines(), start=1):
		if needle in line:
			return number
	return None


def _coerce(key: str, value: Any, spec: KeySpec, line: Optional[int]) -> Any:
	def bad(expected: str) -> ConfigError:
		return ConfigError(f"expected {expected}, got {value!r}", key=key, line=line)

	def as_int(v):
		if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
			raise bad("an integer")
		return int(v)

	def as_float(v):
		if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
			raise bad("a finite number")
		return float(v)

	if value is None:
		return None
	if spec.kind == "int":
		return as_int(value)
	if spec.kind == "float":
		return as_float(value)
	if spec.kind == "bool":
		if not isinstance(value, bool):
			raise bad("true or false")
		return value
	if spec.kind == "str":
		if not isinstance(value, str):
			raise bad("a string")
		return value
	if spec.kind == "choice":
		if value not in spec.choices:
			raise bad("one of " + ", ".join(spec.choices))
		return value
	if not isinstance(value, list) or not value:
		raise bad("a nonempty list")
	return [as_int(v) if spec.kind == "int_list" else as_float(v) for v in value]


@dataclass(frozen=True)
class ExperimentConfig:
	values: Dict[str, Any]
	link: LinkParams

	def __getitem__(self, key: str) -> Any:
		return self.values[key]

	def resolved(self) -> Dict[str, Any]:
		"""Every key that shapes the output, defaults filled in, sorted."""
		return {k: self.values[k] for k in sorted(self.values) if k not in RUNTIME_KEYS and self.values[k] is not None}


def _node(values: Mapping[str, Any], side: str) -> NodeParams:
	def pick(name: str) -> Any:
		own = values.get(f"{side}_{name}")
		value = values[name] if own is None else own
		if value is None:
			raise ConfigError("required", key=name)
		return value

	bacterium = BacteriumParams(
		receptors_N=pick("receptors_N"),
		gain_gamma=pick("gain_gamma"),
		dissociation_kappa=pick("dissociation_kappa"),
		gain_noise_rel_var=pick("gain_noise_rel_var"),
	)
	return NodeParams(bacteria_n=pick("bacteria_n"), bacterium=bacterium, production_alpha=pick("production_alpha"))


def parse_config(raw: Mapping[str, Any], source: Optional[str] = None) -> ExperimentConfig:
	"""Check keys and types, fill defaults and build the link."""
	if not isinstance(raw, Mapping):
		raise ConfigError("configuration must be a JSON object")
	unknown = sorted(set(raw) - set(KEYS))
	if unknown:
		raise ConfigError("unknown key", key=unknown[0], line=_line_of(source, unknown[0]))
	values: Dict[str, Any] = {}
	for key, spec in KEYS.items():
		if key in raw:
			values[key] = _coerce(key, raw[key], spec, _line_of(source, key))
		else:
			values[key] = list(spec.default) if isinstance(spec.default, list) else spec.default
	try:
		link = LinkParams(
			transmitter=_node(values, "transmitter"),
			channel=DiffusionChannelParams(diffusion_D=values["diffusion_D"], distance_r=values["distance_r"]),
			receiver=_node(values, "receiver"),
			variance_mode=values["variance_mode"],
			transmitter_variance=values["transmitter_variance"],
		)
	except DomainError as exc:
		raise ConfigError(str(exc)) from exc
	return ExperimentConfig(values=values, link=link)


def parse_config_text(text: str) -> Dict[str, Any]:
	"""JSON object from a config file or from the header line of a CSV result."""
	first = text.split("\n", 1)[0]
	if first.startswith(HEADER_PREFIX):
		# "# bactlink <version> <command> <config json>"
		parts = first[len(HEADER_PREFIX):].split(" ", 2)
		if len(parts) != 3:
			raise ConfigError("malformed result header", line=1)
		text = parts[2]
	try:
		raw = json.loads(text)
	except json.JSONDecodeError as exc:
		raise ConfigError(exc.msg, line=exc.lineno) from exc
	if isinstance(raw, dict) and "config" in raw and "records" in raw:
		raw = raw["config"]
	if not isinstance(raw, dict):
		raise ConfigError("configuration must be a JSON object")
	return raw


def load_config(path: Path) -> Tuple[Dict[str, Any], str]:
	path = Path(path)
	try:
		text = path.read_text()
	except OSError as exc:
		raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
	return parse_config_text(text), text


def apply_overrides(raw: Dict[str, Any], assignments: List[str]) -> Dict[str, Any]:
	"""Apply `key=value` strings; value is JSON, falling back to a bare string."""
	out = dict(raw)
	for item in assignments:
		key, sep, value = item.partition("=")
		if not sep or not key:
			raise ConfigError(f"override must look like key=value, got {item!r}")
		try:
			out[key.strip()] = json.loads(value)
		except json.JSONDecodeError:
			out[key.strip()] = value
	return out
