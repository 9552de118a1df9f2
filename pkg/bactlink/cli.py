"""Batch front-end: `python -m bactlink <command> [options]`."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Callable, Dict, Optional, Sequence, Tuple

from . import __version__
from .capacity import capacity_sweep
from .config import ExperimentConfig, apply_overrides, load_config, parse_config
from .errors import BactlinkError
from .link import (
	concentration_for_probability,
	normalized_output_std,
	receiver_output_moments,
	received_concentration_stats,
	relative_received_variance,
	stimulus_concentration,
	transmitter_output_moments,
	transmitter_output_variance_large_n,
)
from .modulation import min_power_for_target_error, modulation_sweep
from .montecarlo import SimConfig, Tolerances, validate_approximations
from .tables import ResultTable, write_table

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION_FAIL = 3

Handler = Callable[[ExperimentConfig, bool], Tuple[ResultTable, bool]]


def run_moments(cfg: ExperimentConfig, progress: bool) -> Tuple[ResultTable, bool]:
	link = cfg.link
	p0 = cfg["p0"]
	A0 = concentration_for_probability(p0, link.receiver.bacterium)
	A1 = stimulus_concentration(A0, link)
	x = transmitter_output_moments(A1, link)
	a2 = received_concentration_stats(A0, link)
	y = receiver_output_moments(p0, link)
	table = ResultTable("moments", [
		"p0", "A0", "A1", "E_X", "Var_X", "Var_X_large_n", "E_A2", "Var_A2",
		"rel_var_t", "E_Y", "Var_Y", "norm_std_Y", "mode",
	])
	table.append([
		p0, A0, A1, x.mean, x.variance, transmitter_output_variance_large_n(A1, link),
		a2.mean, a2.variance, relative_received_variance(A0, link),
		y.mean, y.variance, normalized_output_std(p0, link), link.variance_mode.value,
	])
	return table, True


def run_validate(cfg: ExperimentConfig, progress: bool) -> Tuple[ResultTable, bool]:
	sim = SimConfig(trials=cfg["trials"], seed=cfg["seed"], antithetic=cfg["antithetic"], jobs=cfg["jobs"])
	tol = Tolerances(
		mean_se_multiplier=cfg["mean_se_multiplier"],
		mean_bias_allowance=cfg["mean_bias_allowance"],
		variance_rel_tol=cfg["variance_rel_tol"],
		variance_se_multiplier=cfg["variance_se_multiplier"],
	)
	report = validate_approximations(cfg.link, cfg["p0_grid"], sim, tol)
	table = ResultTable("validate", [
		"p0", "quantity", "analytic_mean", "empirical_mean", "se_mean",
		"analytic_var", "empirical_var", "se_var", "mean_gap_rel", "var_gap_rel", "clamps", "status",
	])
	for row in report.rows:
		table.append([
			row.p0, row.quantity, row.analytic.mean, row.empirical.mean, row.empirical.std_error_mean,
			row.analytic.variance, row.empirical.variance, row.empirical.std_error_variance,
			row.mean_gap_rel, row.variance_gap_rel, row.clamps, "PASS" if row.passed else "FAIL",
		])
	if not report.passed:
		logger.warning("%d of %d validation rows failed", len(report.failures()), len(report.rows))
	return table, report.passed


def run_capacity_sweep(cfg: ExperimentConfig, progress: bool) -> Tuple[ResultTable, bool]:
	n_list = cfg["n_list"] or [cfg.link.receiver.bacteria_n]
	rows = capacity_sweep(
		cfg.link, cfg["p_max_grid"], n_list,
		levels=cfg["levels_K"], bins=cfg["bins_B"], tol=cfg["tol"], max_iter=cfg["max_iter"],
		jobs=cfg["jobs"], progress=progress,
	)
	table = ResultTable(
		"capacity-sweep", ["n", "p_max", "K", "B", "capacity_bits", "iterations", "gap", "converged", "error"],
	)
	for r in rows:
		table.append(
			[r.n, r.p_max, r.levels, r.bins, r.capacity_bits, r.iterations, r.gap, r.converged, r.error],
			distribution=r.distribution,
		)
	return table, True


def run_modulation_sweep(cfg: ExperimentConfig, progress: bool) -> Tuple[ResultTable, bool]:
	rows = modulation_sweep(
		cfg.link, cfg["m_list"], cfg["p_max_grid"],
		bins=cfg["bins_B"], tol=cfg["tol"], max_iter=cfg["max_iter"], jobs=cfg["jobs"], progress=progress,
	)
	width = max(cfg["m_list"])
	table = ResultTable(
		"modulation-sweep",
		["m", "p_max", "rate_bits", "total_error"] + [f"p_e_{i}" for i in range(width)],
	)
	for r in rows:
		rep = r.report
		if rep is None:
			table.append([r.m, r.p_max, None, None] + [None] * width, error=r.error)
			continue
		errors = list(rep.per_symbol_error) + [None] * (width - r.m)
		table.append(
			[r.m, r.p_max, rep.rate_bits, rep.total_error] + errors,
			weights=rep.weights, log2_m=rep.log2_m, region_error=rep.region_error,
			capacity_bits=rep.capacity_bits, decision_half_width=rep.decision_half_width,
		)
	return table, True


def run_feasibility(cfg: ExperimentConfig, progress: bool) -> Tuple[ResultTable, bool]:
	table = ResultTable("feasibility", ["m", "target_pe", "feasible", "p_max", "A_max", "achieved_error"])
	for m in cfg["m_list"]:
		res = min_power_for_target_error(
			cfg.link, m, cfg["target_pe"], cfg["p_max_cap"],
			scan_points=cfg["scan_points"], bins=cfg["bins_B"], tol=cfg["tol"], max_iter=cfg["max_iter"],
		)
		table.append([res.m, res.target_pe, res.feasible, res.p_max, res.a_max, res.achieved_error])
	return table, True


COMMANDS: Dict[str, Handler] = {
	"validate": run_validate,
	"capacity-sweep": run_capacity_sweep,
	"modulation-sweep": run_modulation_sweep,
	"feasibility": run_feasibility,
	"moments": run_moments,
}


def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(prog="bactlink", description="Bacterial molecular link: moments, capacity and modulation")
	parser.add_argument("command", choices=list(COMMANDS))
	parser.add_argument("--config", dest="config", default=None, help="JSON config, or a CSV/JSON result to rerun")
	parser.add_argument("--mode", dest="mode", choices=["consistent", "paper-literal", "full"], default=None)
	parser.add_argument("--seed", dest="seed", type=int, default=None)
	parser.add_argument("--trials", dest="trials", type=int, default=None)
	parser.add_argument("--jobs", dest="jobs", type=int, default=None)
	parser.add_argument("--out", dest="out", default=None, help="output path, - for stdout")
	parser.add_argument("--format", dest="format", choices=["csv", "json"], default=None)
	parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
	parser.add_argument("-v", "--verbose", dest="verbose", action="count", default=0)
	parser.add_argument("--no-progress", dest="progress", action="store_false")
	return parser


def _configure_logging(verbose: int) -> None:
	level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
	logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _flag_values(args: argparse.Namespace) -> Dict[str, object]:
	flags = {
		"variance_mode": args.mode,
		"seed": args.seed,
		"trials": args.trials,
		"jobs": args.jobs,
		"format": args.format,
		"out": args.out,
	}
	return {k: v for k, v in flags.items() if v is not None}


def run(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
	"""Run one command; returns 0 on success, 2 on bad input, 3 on a failed validation."""
	if stdout is None:
		stdout = sys.stdout
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as exc:
		return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
	_configure_logging(args.verbose)

	try:
		raw, source = load_config(args.config) if args.config else ({}, None)
		raw = apply_overrides(raw, args.overrides)
		raw.update(_flag_values(args))
		cfg = parse_config(raw, source)
		table, ok = COMMANDS[args.command](cfg, args.progress)
	except BactlinkError as exc:
		# ConfigError and DomainError alike: the input cannot be run as given
		logger.debug("rejected input", exc_info=True)
		print(f"bactlink: error: {exc}", file=sys.stderr)
		return EXIT_CONFIG

	write_table(table, cfg["out"], cfg["format"], __version__, cfg.resolved(), stdout)
	if not ok:
		print("bactlink: validation FAILED", file=sys.stderr)
		return EXIT_VALIDATION_FAIL
	return EXIT_OK


def main() -> int:
	return run(sys.argv[1:])
