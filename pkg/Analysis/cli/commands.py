"""
Subcommands: clusrank, fit, tail and reproduce.
"""
import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from cli import config as CLIConfig
from cli.reports import RunConfig, write_csv, write_json
from clusrank.clusrank import compare
from data_model.builder import build_clustered_sample, build_model_dataset, summarize_by_year
from data_model.config import COMPARISONS
from data_model.loader import load_csv, load_exclusions
from data_model.records import ModelDataset
from errors import AnalysisError, UnknownComparisonError
from remixfit.remixfit import FitConfig, MixedGGModel, density_overlay, fit, quantile_residuals
from tailsim.tailsim import tail_report

logger = logging.getLogger(__name__)

GENDERS = ('men', 'women')
COMMANDS = ('clusrank', 'fit', 'tail', 'reproduce')


# --- Argument Parsing ---

def _float_list(text: str) -> Tuple[float, ...]:
	try:
		return tuple(float(item) for item in text.split(',') if item.strip())
	except ValueError:
		raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def build_parser() -> argparse.ArgumentParser:
	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--data", default=CLIConfig.DEFAULT_DATA_FILE, help="Reaction-time CSV")
	common.add_argument("--exclusions", default=None,
		help="Exclusion list CSV (default: DATASETS/exclusions.csv when present)")
	common.add_argument("--seed", type=int, default=CLIConfig.DEFAULT_SEED)
	common.add_argument("--out", default=CLIConfig.OUTPUT_DIR, help="Output directory")
	common.add_argument("--gender", choices=['men', 'women', 'pooled'], default=None)
	common.add_argument("--pool-genders", action="store_true", help="Same as --gender pooled")
	common.add_argument("--include-2022", dest="include_2022", action=argparse.BooleanOptionalAction, default=True)
	common.add_argument("--include-dq", dest="include_dq", action=argparse.BooleanOptionalAction, default=True)
	common.add_argument("--permutations", type=int, default=None,
		help="Permutations for the rank test; 0 runs the asymptotic test only")
	common.add_argument("--draws", type=int, default=None, help="Monte Carlo draws for tail estimates")
	common.add_argument("--workers", type=int, default=1, help="Worker processes")
	common.add_argument("--quick", action="store_true",
		help=f"{CLIConfig.QUICK_PERMUTATIONS} permutations and {CLIConfig.QUICK_DRAWS} draws")
	common.add_argument("--verbose", action="store_true")

	parser = argparse.ArgumentParser(
		prog="python -m cli",
		description="Clustered rank-sum tests and generalized Gamma mixed models of sprint reaction times.",
	)
	subparsers = parser.add_subparsers(dest="command", required=True)

	clusrank_parser = subparsers.add_parser("clusrank", parents=[common], help="Compare competitions")
	clusrank_parser.add_argument("--compare", action="append", default=None,
		help=f"Comparison name ({', '.join(COMPARISONS)}) or 'all'; repeatable")

	subparsers.add_parser("fit", parents=[common], help="Fit the random-effects GG model")

	tail_parser = subparsers.add_parser("tail", parents=[common], help="Tail probabilities and barriers")
	tail_parser.add_argument("--model", required=True, help="Model JSON written by 'fit'")
	tail_parser.add_argument("--thresholds", type=_float_list, default=CLIConfig.THRESHOLDS)
	tail_parser.add_argument("--targets", type=_float_list, default=CLIConfig.TARGETS)

	subparsers.add_parser("reproduce", parents=[common], help="Every table into a timestamped directory")
	return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
	gender = 'pooled' if args.pool_genders else args.gender

	if args.quick:
		n_permutations = CLIConfig.QUICK_PERMUTATIONS if args.permutations is None else args.permutations
		n_draws = CLIConfig.QUICK_DRAWS if args.draws is None else args.draws
		overlay_draws = min(CLIConfig.OVERLAY_DRAWS, n_draws)
		moment_permutations = CLIConfig.QUICK_PERMUTATIONS
	else:
		n_permutations = CLIConfig.PERMUTATIONS if args.permutations is None else args.permutations
		n_draws = CLIConfig.DRAWS if args.draws is None else args.draws
		overlay_draws = CLIConfig.OVERLAY_DRAWS
		moment_permutations = CLIConfig.MOMENT_DRAWS

	exclusions = args.exclusions
	if exclusions is None and os.path.exists(CLIConfig.DEFAULT_EXCLUSIONS_FILE):
		exclusions = CLIConfig.DEFAULT_EXCLUSIONS_FILE

	names = getattr(args, 'compare', None) or ['all']
	compare_names = tuple(COMPARISONS) if 'all' in names else tuple(names)

	config = RunConfig(
		command=args.command,
		data_path=os.path.abspath(args.data),
		output_dir=os.path.abspath(args.out),
		seed=args.seed,
		n_permutations=n_permutations,
		moment_permutations=moment_permutations,
		n_draws=n_draws,
		overlay_draws=overlay_draws,
		exclusions_path=os.path.abspath(exclusions) if exclusions else None,
		gender=gender,
		compare=compare_names,
		include_2022=args.include_2022,
		include_dq=args.include_dq,
		thresholds=tuple(getattr(args, 'thresholds', CLIConfig.THRESHOLDS)),
		targets=tuple(getattr(args, 'targets', CLIConfig.TARGETS)),
		model_path=os.path.abspath(args.model) if getattr(args, 'model', None) else None,
		workers=min(max(1, args.workers), CLIConfig.MAX_WORKERS),
		quick=args.quick,
	)
	return config.with_checksum()


# --- clusrank ---

def cmd_clusrank(config: RunConfig) -> List[str]:
	"""One JSON report per (comparison, gender) plus a combined CSV table."""
	unknown = [name for name in config.compare if name not in COMPARISONS]
	if unknown:
		raise UnknownComparisonError(
			f"unknown comparison '{unknown[0]}'; expected one of {', '.join(COMPARISONS)} or 'all'"
		)

	records = load_csv(config.data_path)
	genders = GENDERS if config.gender is None else (config.gender,)

	outputs = []
	rows = []
	for name in config.compare:
		treatment, control = COMPARISONS[name]
		for gender in genders:
			pooled = gender == 'pooled'
			sample = build_clustered_sample(
				records, treatment, control,
				gender=None if pooled else gender, pool_genders=pooled,
			)
			result = compare(
				sample, config.n_permutations, config.moment_permutations, config.seed, config.workers
			)
			print(
				f"  {name} [{gender}]: {sample.n} athletes, {sample.n_obs} RTs, "
				f"z={result.z:.3f}, p_asym={result.p_asymptotic:.3g}, p_perm={result.p_permutation}"
			)

			report = dict(result.to_dict(), comparison=name, gender=gender,
				treatment=treatment, control=control, n_athletes=sample.n, n_rts=sample.n_obs)
			path = os.path.join(config.output_dir, f"clusrank_{name}_{gender}.json")
			outputs.append(write_json(path, report, config))
			rows.append({
				'comparison': name, 'gender': gender, 'n_athletes': sample.n, 'n_rts': sample.n_obs,
				'S': result.S, 'z': result.z,
				'p_asymptotic': result.p_asymptotic, 'p_permutation': result.p_permutation,
			})

	suffix = config.gender or 'by_gender'
	table_path = os.path.join(config.output_dir, f"clusrank_table_{suffix}.csv")
	outputs.append(write_csv(table_path, pd.DataFrame(rows), config))
	return outputs


# --- fit ---

def fit_label(config: RunConfig) -> str:
	return "_".join([
		config.gender or 'men',
		'incl2022' if config.include_2022 else 'excl2022',
		'dq' if config.include_dq else 'nodq',
	])


def _model_dataset(config: RunConfig) -> ModelDataset:
	records = load_csv(config.data_path)
	exclusions = load_exclusions(config.exclusions_path) if config.exclusions_path else frozenset()
	gender = config.gender or 'men'
	if gender == 'women' and not exclusions:
		logger.warning("No exclusions listed; the women's model data keeps its outlier")
	return build_model_dataset(
		records,
		gender=None if gender == 'pooled' else gender,
		include_2022=config.include_2022,
		include_positive_dq=config.include_dq,
		exclusions=exclusions,
	)


def cmd_fit(config: RunConfig) -> Tuple[List[str], MixedGGModel]:
	"""Model JSON, residuals, Q-Q pairs, density overlay and per-year summary."""
	data = _model_dataset(config)
	label = fit_label(config)
	print(f"  Fitting {label}: n={data.n}, venues={data.venue_count}, heats={data.heat_count}")

	start = time.time()
	model = fit(data, FitConfig())
	model = replace(model, provenance=dict(
		model.provenance, label=label, gender=config.gender or 'men',
		include_2022=config.include_2022, include_dq=config.include_dq,
		dataset_sha256=config.dataset_sha256,
	))
	print(
		f"  beta0={model.beta0:.3f} ({model.se_beta0:.3f}), gamma0={model.gamma0:.3f} ({model.se_gamma0:.3f}), "
		f"nu={model.nu:.3f} ({model.se_nu:.3f}), tau_v={model.tau_v:.3f}, tau_h={model.tau_h:.3f} "
		f"[{model.n_iterations} iterations, {time.time() - start:.1f}s]"
	)

	outputs = []
	model_path = os.path.join(config.output_dir, f"model_{label}.json")
	outputs.append(write_json(model_path, model.to_dict(), config))

	residuals = quantile_residuals(model, data)
	print(f"  Filliben correlation {residuals.filliben:.4f} (adequate: {residuals.adequate})")
	frame = data.to_frame().assign(z=residuals.z_scores, flagged=False)
	frame.loc[frame.index[residuals.flagged], 'flagged'] = True
	outputs.append(write_csv(os.path.join(config.output_dir, f"residuals_{label}.csv"), frame, config))
	outputs.append(write_csv(os.path.join(config.output_dir, f"qq_{label}.csv"), residuals.qq_frame(), config))

	overlay = density_overlay(model, data.values, config.overlay_draws, config.seed, config.workers)
	outputs.append(write_csv(os.path.join(config.output_dir, f"density_{label}.csv"), overlay, config))
	outputs.append(write_csv(
		os.path.join(config.output_dir, f"summary_{label}.csv"), summarize_by_year(data), config
	))

	if not model.converged:
		logger.error(f"Fit {label} did not converge; the partial model was written to {model_path}")
	return outputs, model


# --- tail ---

def cmd_tail(config: RunConfig, model: Optional[MixedGGModel] = None) -> List[str]:
	"""TailReport JSON, threshold CSV and barrier CSV for a saved (or given) model."""
	if model is None:
		model = MixedGGModel.load(config.model_path)
	label = model.provenance.get('label') or os.path.splitext(os.path.basename(config.model_path or 'model'))[0]

	report = tail_report(model, config.thresholds, config.targets, config.n_draws, config.seed, config.workers)
	for row in report.thresholds_evaluated:
		bound = " (upper bound)" if row.upper_bound else ""
		print(f"  P(Y < {row.t:.3f}) = {row.p_hat:.3g}{bound}, one in {row.one_in_n} starts")
	for row in report.barriers:
		print(f"  barrier at p={row.target_tail_prob:g}: {row.barrier_seconds}")

	payload = dict(report.to_dict(), model_path=config.model_path, model=model.to_dict())
	return [
		write_json(os.path.join(config.output_dir, f"tail_{label}.json"), payload, config),
		write_csv(os.path.join(config.output_dir, f"tail_{label}.csv"), report.to_frame(), config),
		write_csv(os.path.join(config.output_dir, f"barriers_{label}.csv"), report.barrier_frame(), config),
	]


# --- reproduce ---

def cmd_reproduce(config: RunConfig) -> int:
	"""Every rank test, fit and tail report into a timestamped directory; 1 if any step failed."""
	import pipeline
	return pipeline.run_pipeline(config)


# --- Entry Point ---

def configure_logging(verbose: bool) -> None:
	logging.basicConfig(
		level=logging.DEBUG if verbose else logging.INFO,
		format=CLIConfig.LOG_FORMAT,
		force=True,
	)


def main(argv: Optional[Sequence[str]] = None) -> int:
	args = build_parser().parse_args(argv)
	configure_logging(args.verbose)

	try:
		config = resolve_config(args)
		if config.command == 'clusrank':
			cmd_clusrank(config)
		elif config.command == 'fit':
			_, model = cmd_fit(config)
			if not model.converged:
				return 1
		elif config.command == 'tail':
			cmd_tail(config)
		else:
			return cmd_reproduce(config)
	except (AnalysisError, FileNotFoundError, ValueError) as e:
		print(f"[ERROR] {e}", file=sys.stderr)
		return 1
	return 0
