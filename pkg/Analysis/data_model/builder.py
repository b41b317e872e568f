import logging
from typing import Collection, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from data_model.config import MODEL_ROUNDS, EXCLUDED_YEAR
from data_model.records import (
	ClusteredSample, CompetitionFilter, Gender, ModelDataset, Round, RTRecord,
	competition_tokens
)
from errors import EmptySelectionError, InsufficientClustersError

logger = logging.getLogger(__name__)

FRAME_COLUMNS = [
	'athlete_id', 'gender', 'event', 'competition', 'kind', 'year',
	'round', 'heat_id', 'rt_seconds', 'dq', 'line'
]


def records_frame(records: Iterable[RTRecord]) -> pd.DataFrame:
	"""Flattens records into a DataFrame with plain-text enum columns."""
	rows = [
		(r.athlete_id, r.gender.value, r.event.value, r.competition.token, r.competition.kind,
		 r.year, r.round.value, r.heat_id, r.rt_seconds, r.dq, r.line)
		for r in records
	]
	frame = pd.DataFrame(rows, columns=FRAME_COLUMNS)
	return frame.astype({'year': 'int64', 'rt_seconds': 'float64', 'dq': 'bool', 'line': 'int64'})


def apply_exclusions(records: Iterable[RTRecord], exclusions: Collection[Tuple[str, str]]) -> List[RTRecord]:
	"""Drops records whose (athlete_id, heat_id) key is listed."""
	records = list(records)
	if not exclusions:
		return records
	kept = [r for r in records if r.key not in exclusions]
	logger.info(f"Excluded {len(records) - len(kept)} record(s) by exclusion list")
	return kept


def _gender_mask(frame: pd.DataFrame, gender: Optional[Union[Gender, str]]) -> pd.Series:
	if gender is None:
		return pd.Series(True, index=frame.index)
	return frame['gender'] == Gender(gender).value


# --- Rank-test sample ---

def build_clustered_sample(
	records: Iterable[RTRecord],
	treatment: CompetitionFilter,
	control: CompetitionFilter,
	gender: Optional[Union[Gender, str]] = None,
	pool_genders: bool = False,
) -> ClusteredSample:
	"""
	Groups positive reaction times by athlete, labelling the treatment competitions,
	and keeps only athletes observed in both groups. All rounds are kept.
	"""
	treatment_tokens = competition_tokens(treatment)
	control_tokens = competition_tokens(control)
	if treatment_tokens & control_tokens:
		raise ValueError("treatment and control filters must select disjoint competitions")
	if gender is None and not pool_genders:
		raise ValueError("a gender is required unless genders are pooled")

	frame = records_frame(records)
	if not pool_genders:
		frame = frame[_gender_mask(frame, gender)]

	# 1. Negative (and zero) times are false starts, never reactions
	frame = frame[frame['rt_seconds'] > 0]

	is_treatment = frame['competition'].isin(treatment_tokens)
	is_control = frame['competition'].isin(control_tokens)
	if not is_treatment.any():
		raise EmptySelectionError(f"treatment records ({', '.join(sorted(treatment_tokens))})")
	if not is_control.any():
		raise EmptySelectionError(f"control records ({', '.join(sorted(control_tokens))})")

	frame = frame[is_treatment | is_control].assign(treatment=is_treatment)

	# 2. Athletes must appear on both sides
	per_athlete = frame.groupby('athlete_id')['treatment'].agg(['any', 'all'])
	both = per_athlete.index[per_athlete['any'] & ~per_athlete['all']]
	dropped = len(per_athlete) - len(both)
	if dropped:
		logger.debug(f"Dropped {dropped} athlete(s) observed in one group only")

	if len(both) < 2:
		raise InsufficientClustersError(len(both))

	# 3. Stable order: athletes sorted, observations in file order within athlete
	frame = frame[frame['athlete_id'].isin(both)].sort_values(['athlete_id', 'line'], kind='mergesort')
	athlete_ids = tuple(sorted(both))
	codes = pd.Categorical(frame['athlete_id'], categories=athlete_ids).codes

	return ClusteredSample(
		athlete_ids=athlete_ids,
		values=frame['rt_seconds'].to_numpy(dtype=float),
		treatment=frame['treatment'].to_numpy(dtype=bool),
		cluster=np.asarray(codes, dtype=np.int64),
	)


# --- Model dataset ---

def build_model_dataset(
	records: Iterable[RTRecord],
	gender: Optional[Union[Gender, str]],
	include_2022: bool = True,
	include_positive_dq: bool = True,
	rounds: Collection[Union[Round, str]] = MODEL_ROUNDS,
	exclusions: Collection[Tuple[str, str]] = frozenset(),
) -> ModelDataset:
	"""
	Selects World Championships reaction times for the mixed model.
	Venue index is the championship year; heats are nested within year.
	"""
	records = apply_exclusions(records, exclusions)
	frame = records_frame(records)
	round_tokens = {Round(r).value for r in rounds}

	keep = (
		(frame['kind'] == 'world')
		& (frame['rt_seconds'] > 0)
		& frame['round'].isin(round_tokens)
		& _gender_mask(frame, gender)
	)
	if not include_2022:
		keep &= frame['year'] != EXCLUDED_YEAR
	if not include_positive_dq:
		keep &= ~frame['dq']

	frame = frame[keep]
	if frame.empty:
		raise EmptySelectionError("model records")

	logger.info(
		f"Model dataset: {len(frame)} observations, {frame['year'].nunique()} venues, "
		f"{frame[['year', 'heat_id']].drop_duplicates().shape[0]} heats"
	)
	return ModelDataset.from_arrays(
		values=frame['rt_seconds'].to_numpy(dtype=float),
		years=frame['year'].to_numpy(dtype=np.int64),
		heat_ids=frame['heat_id'].tolist(),
		athlete_ids=frame['athlete_id'].tolist(),
	)


def summarize_by_year(dataset: ModelDataset) -> pd.DataFrame:
	"""Per-year count and five-number summary of the model dataset."""
	frame = dataset.to_frame()
	grouped = frame.groupby('year')['rt_seconds']
	summary = pd.DataFrame({
		'n': grouped.size(),
		'min': grouped.min(),
		'q1': grouped.quantile(0.25),
		'median': grouped.median(),
		'q3': grouped.quantile(0.75),
		'max': grouped.max(),
	})
	return summary.reset_index()
