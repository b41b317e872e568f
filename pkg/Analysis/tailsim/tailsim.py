"""
Monte Carlo tail probabilities P(Y < t) under the marginal scale mixture of a
fitted model, and their inversion into reaction-time barriers.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd

from errors import InsufficientDrawsError
from remixfit.remixfit import MixedGGModel, simulate_marginal
from tailsim.config import BARRIER_DECIMALS, MIN_DRAWS, MIN_TAIL_COUNT, ZERO_COUNT_BOUND

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ThresholdRow:
	t: float
	p_hat: float
	mc_standard_error: float
	count: int
	# round(1/p_hat): "one in N starts"
	one_in_n: int
	# True when no draw fell below t and p_hat is the upper bound 3/n
	upper_bound: bool = False


@dataclass(frozen=True)
class BarrierRow:
	target_tail_prob: float
	barrier_seconds: float
	insufficient: bool = False


@dataclass(frozen=True)
class TailReport:
	thresholds_evaluated: List[ThresholdRow]
	barriers: List[BarrierRow]
	n_draws: int
	seed: int
	model_provenance: Dict = field(default_factory=dict)

	def to_dict(self) -> Dict:
		payload = asdict(self)
		for row in payload['barriers']:
			if not math.isfinite(row['barrier_seconds']):
				row['barrier_seconds'] = None
		return payload

	def to_frame(self) -> pd.DataFrame:
		columns = ['t', 'p_hat', 'mc_standard_error', 'count', 'one_in_n', 'upper_bound']
		return pd.DataFrame([asdict(row) for row in self.thresholds_evaluated], columns=columns)

	def barrier_frame(self) -> pd.DataFrame:
		columns = ['target_tail_prob', 'barrier_seconds', 'insufficient']
		return pd.DataFrame([asdict(row) for row in self.barriers], columns=columns)


# --- Helpers ---

def _check_draws(n_draws: int) -> None:
	if n_draws < MIN_DRAWS:
		raise ValueError(f"n_draws must be at least {MIN_DRAWS}, got {n_draws}")


def _threshold_row(sorted_draws: np.ndarray, t: float) -> ThresholdRow:
	if not t > 0:
		raise ValueError(f"thresholds must be positive, got {t}")

	n = sorted_draws.size
	count = int(np.searchsorted(sorted_draws, t, side='left'))
	if count == 0:
		bound = ZERO_COUNT_BOUND / n
		logger.warning(f"No draw below t={t}; reporting the upper bound {bound:.3g}")
		return ThresholdRow(t=t, p_hat=bound, mc_standard_error=math.sqrt(bound * (1.0 - bound) / n), count=0,
			one_in_n=int(round(1.0 / bound)), upper_bound=True)

	p_hat = count / n
	return ThresholdRow(
		t=t, p_hat=p_hat, mc_standard_error=math.sqrt(p_hat * (1.0 - p_hat) / n),
		count=count, one_in_n=int(round(1.0 / p_hat)),
	)


def _check_target(n: int, target: float) -> None:
	if not 0.0 < target < 1.0:
		raise ValueError(f"target_tail_prob must lie in (0, 1), got {target}")
	if n * target < MIN_TAIL_COUNT:
		raise InsufficientDrawsError(
			f"insufficient draws for target probability {target}: "
			f"{n} draws give {n * target:.0f} expected tail draws, need {MIN_TAIL_COUNT}"
		)


def _barrier_row(sorted_draws: np.ndarray, target: float, strict: bool) -> BarrierRow:
	try:
		_check_target(sorted_draws.size, target)
	except InsufficientDrawsError as e:
		if strict:
			raise
		logger.warning(str(e))
		return BarrierRow(target_tail_prob=target, barrier_seconds=math.nan, insufficient=True)

	barrier = float(np.quantile(sorted_draws, target))
	return BarrierRow(target_tail_prob=target, barrier_seconds=round(barrier, BARRIER_DECIMALS))


def _sorted_sample(model: MixedGGModel, n_draws: int, seed: int, workers: int) -> np.ndarray:
	logger.info(f"Simulating {n_draws} marginal draws (seed={seed}, workers={workers})")
	return np.sort(simulate_marginal(model, n_draws, seed, workers))


# --- Public API ---

def tail_probabilities(model: MixedGGModel, thresholds: Sequence[float], n_draws: int, seed: int,
		workers: int = 1) -> TailReport:
	"""Fraction of simulated marginal draws strictly below each threshold."""
	_check_draws(n_draws)
	draws = _sorted_sample(model, n_draws, seed, workers)
	rows = [_threshold_row(draws, float(t)) for t in sorted(thresholds)]
	return TailReport(rows, [], n_draws, seed, dict(model.provenance))


def invert_barrier(model: MixedGGModel, target_tail_prob: float, n_draws: int, seed: int,
		workers: int = 1) -> float:
	"""Empirical target_tail_prob-quantile of the simulated marginal, in seconds to 3 decimals."""
	_check_target(n_draws, target_tail_prob)
	draws = _sorted_sample(model, n_draws, seed, workers)
	return _barrier_row(draws, target_tail_prob, strict=True).barrier_seconds


def barrier_table(model: MixedGGModel, targets: Sequence[float], n_draws: int, seed: int,
		workers: int = 1) -> List[BarrierRow]:
	"""Every barrier from one simulated sample, most permissive target first."""
	for target in targets:
		_check_target(n_draws, target)
	draws = _sorted_sample(model, n_draws, seed, workers)
	return [_barrier_row(draws, float(p), strict=True) for p in sorted(targets, reverse=True)]


def tail_report(model: MixedGGModel, thresholds: Sequence[float], targets: Sequence[float],
		n_draws: int, seed: int, workers: int = 1) -> TailReport:
	"""
	Threshold probabilities and barriers from the same sample. Targets the sample
	is too small for are reported as insufficient instead of failing the report.
	"""
	_check_draws(n_draws)
	draws = _sorted_sample(model, n_draws, seed, workers)
	rows = [_threshold_row(draws, float(t)) for t in sorted(thresholds)]
	barriers = [_barrier_row(draws, float(p), strict=False) for p in sorted(targets, reverse=True)]
	return TailReport(rows, barriers, n_draws, seed, dict(model.provenance))
