"""
Domain types for reaction-time records and the two analysis-ready datasets.
"""
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from data_model.config import NATIONAL_PATTERN, WORLD_PATTERN
from errors import DataFormatError, InvalidSampleError


class Gender(str, Enum):
	MEN = 'men'
	WOMEN = 'women'


class Event(str, Enum):
	DASH100 = 'dash100'
	HURDLES100 = 'hurdles100'
	HURDLES110 = 'hurdles110'


class Round(str, Enum):
	HEAT = 'heat'
	SEMIFINAL = 'semifinal'
	FINAL = 'final'


@dataclass(frozen=True, order=True)
class Competition:
	"""A championship, either a national meeting or a World Championships edition."""
	kind: str
	year: int

	@property
	def token(self) -> str:
		return f"{self.kind}{self.year}"

	@classmethod
	def parse(cls, token: str) -> 'Competition':
		text = str(token).strip()
		match = re.match(WORLD_PATTERN, text)
		if match:
			return cls('world', int(match.group(1)))
		match = re.match(NATIONAL_PATTERN, text)
		if match and int(match.group(1)) == 2022:
			return cls('national', 2022)
		raise ValueError(f"unknown competition '{token}'")

	def __str__(self) -> str:
		return self.token


CompetitionFilter = Union[Competition, str, Iterable[Union[Competition, str]]]


def competition_tokens(selection: CompetitionFilter) -> frozenset:
	"""Normalizes a competition filter (one competition, a token, or a collection) to tokens."""
	if isinstance(selection, (Competition, str)):
		selection = [selection]
	return frozenset(Competition.parse(item).token if isinstance(item, str) else item.token for item in selection)


@dataclass(frozen=True)
class RTRecord:
	athlete_id: str
	gender: Gender
	event: Event
	competition: Competition
	year: int
	round: Round
	heat_id: str
	rt_seconds: float
	dq: bool
	line: int = field(default=0, compare=False)

	def __post_init__(self):
		if not math.isfinite(self.rt_seconds):
			raise DataFormatError("rt_seconds must be finite", self.line or None, 'rt_seconds')

	@property
	def key(self) -> Tuple[str, str]:
		return (self.athlete_id, self.heat_id)


def _frozen(array: np.ndarray) -> np.ndarray:
	array = np.array(array, copy=True)
	array.setflags(write=False)
	return array


# --- Rank-test sample ---

@dataclass(frozen=True, eq=False)
class ClusteredSample:
	"""
	Athlete-clustered reaction times with treatment/control labels.
	Observations are stored flat and ordered by cluster; cluster[k] is the
	0-based cluster index of observation k.
	"""
	athlete_ids: Tuple[str, ...]
	values: np.ndarray
	treatment: np.ndarray
	cluster: np.ndarray

	def __post_init__(self):
		object.__setattr__(self, 'values', _frozen(np.asarray(self.values, dtype=float)))
		object.__setattr__(self, 'treatment', _frozen(np.asarray(self.treatment, dtype=bool)))
		object.__setattr__(self, 'cluster', _frozen(np.asarray(self.cluster, dtype=np.int64)))
		object.__setattr__(self, 'athlete_ids', tuple(self.athlete_ids))

		n = len(self.athlete_ids)
		if n < 2:
			raise InvalidSampleError(f"a clustered sample needs at least 2 clusters, got {n}")
		if not (len(self.values) == len(self.treatment) == len(self.cluster)):
			raise InvalidSampleError("values, labels and cluster codes differ in length")
		if np.any(np.diff(self.cluster) < 0) or self.cluster.min() != 0 or self.cluster.max() != n - 1:
			raise InvalidSampleError("cluster codes must be sorted and cover 0..n-1")
		if not np.all(np.isfinite(self.values)) or np.any(self.values <= 0):
			raise InvalidSampleError("all values must be finite and positive")

		n_treated = np.bincount(self.cluster, weights=self.treatment, minlength=n)
		sizes = np.bincount(self.cluster, minlength=n)
		mixed = (n_treated > 0) & (n_treated < sizes)
		if not mixed.all():
			bad = self.athlete_ids[int(np.flatnonzero(~mixed)[0])]
			raise InvalidSampleError(f"cluster '{bad}' lacks a treatment or a control observation")

	@classmethod
	def from_clusters(cls, clusters: Sequence[Tuple[str, Sequence[Tuple[float, Union[str, bool]]]]]) -> 'ClusteredSample':
		"""Builds a sample from (athlete_id, [(value, group), ...]) pairs; group is 'treatment'/'control' or a bool."""
		ids, values, labels, codes = [], [], [], []
		for index, (athlete_id, observations) in enumerate(clusters):
			ids.append(athlete_id)
			for value, group in observations:
				values.append(float(value))
				labels.append(group == 'treatment' if isinstance(group, str) else bool(group))
				codes.append(index)
		return cls(tuple(ids), np.array(values), np.array(labels, dtype=bool), np.array(codes, dtype=np.int64))

	@property
	def n(self) -> int:
		return len(self.athlete_ids)

	@property
	def m(self) -> np.ndarray:
		return np.bincount(self.cluster, minlength=self.n)

	@property
	def n_obs(self) -> int:
		return int(self.values.size)

	@property
	def clusters(self) -> List[Tuple[str, List[Tuple[float, str]]]]:
		out = []
		for index, athlete_id in enumerate(self.athlete_ids):
			mask = self.cluster == index
			groups = ['treatment' if t else 'control' for t in self.treatment[mask]]
			out.append((athlete_id, list(zip(self.values[mask].tolist(), groups))))
		return out

	def with_labels(self, treatment: np.ndarray) -> 'ClusteredSample':
		return ClusteredSample(self.athlete_ids, self.values, treatment, self.cluster)

	def with_values(self, values: np.ndarray) -> 'ClusteredSample':
		return ClusteredSample(self.athlete_ids, values, self.treatment, self.cluster)

	def to_frame(self) -> pd.DataFrame:
		return pd.DataFrame({
			'athlete_id': [self.athlete_ids[c] for c in self.cluster],
			'rt_seconds': self.values,
			'group': np.where(self.treatment, 'treatment', 'control'),
		})


# --- Model dataset ---

@dataclass(frozen=True, eq=False)
class ModelDataset:
	"""
	Reaction times indexed by venue (championship year) and heat nested in venue.
	venue[k] and heat[k] are 0-based codes; heat_venue[j] is the venue code of heat j.
	"""
	values: np.ndarray
	venue: np.ndarray
	heat: np.ndarray
	venue_years: Tuple[int, ...]
	heat_keys: Tuple[Tuple[int, str], ...]
	heat_venue: np.ndarray
	athlete_ids: Tuple[str, ...] = ()

	def __post_init__(self):
		object.__setattr__(self, 'values', _frozen(np.asarray(self.values, dtype=float)))
		object.__setattr__(self, 'venue', _frozen(np.asarray(self.venue, dtype=np.int64)))
		object.__setattr__(self, 'heat', _frozen(np.asarray(self.heat, dtype=np.int64)))
		object.__setattr__(self, 'heat_venue', _frozen(np.asarray(self.heat_venue, dtype=np.int64)))

		if self.values.size == 0:
			raise InvalidSampleError("a model dataset needs at least one observation")
		if np.any(self.values <= 0) or not np.all(np.isfinite(self.values)):
			raise InvalidSampleError("all values must be finite and positive")
		if len(self.heat_venue) != len(self.heat_keys):
			raise InvalidSampleError("heat_venue and heat_keys differ in length")
		if np.any(self.heat_venue[self.heat] != self.venue):
			raise InvalidSampleError("heats must be nested within venues")

	@classmethod
	def from_arrays(cls, values: Sequence[float], years: Sequence[int], heat_ids: Sequence[str],
			athlete_ids: Sequence[str] = ()) -> 'ModelDataset':
		years = np.asarray(years, dtype=np.int64)
		venue_years, venue = np.unique(years, return_inverse=True)

		keys = list(zip(years.tolist(), [str(h) for h in heat_ids]))
		heat_keys = sorted(set(keys))
		heat_lookup = {key: index for index, key in enumerate(heat_keys)}
		heat = np.array([heat_lookup[key] for key in keys], dtype=np.int64)

		year_lookup = {int(year): index for index, year in enumerate(venue_years)}
		heat_venue = np.array([year_lookup[year] for year, _ in heat_keys], dtype=np.int64)

		return cls(
			values=np.asarray(values, dtype=float),
			venue=venue,
			heat=heat,
			venue_years=tuple(int(y) for y in venue_years),
			heat_keys=tuple(heat_keys),
			heat_venue=heat_venue,
			athlete_ids=tuple(athlete_ids),
		)

	@property
	def n(self) -> int:
		return int(self.values.size)

	@property
	def venue_count(self) -> int:
		return len(self.venue_years)

	@property
	def heat_count(self) -> int:
		return len(self.heat_keys)

	@property
	def heats_per_venue(self) -> Dict[int, int]:
		counts = np.bincount(self.heat_venue, minlength=self.venue_count)
		return {year: int(count) for year, count in zip(self.venue_years, counts)}

	def observations(self) -> Iterator[Tuple[float, int, str]]:
		"""Yields (value, year, heat_id) per observation in dataset order."""
		for value, heat in zip(self.values.tolist(), self.heat.tolist()):
			year, heat_id = self.heat_keys[heat]
			yield value, year, heat_id

	def to_frame(self) -> pd.DataFrame:
		frame = pd.DataFrame({
			'year': [self.venue_years[v] for v in self.venue],
			'heat_id': [self.heat_keys[h][1] for h in self.heat],
			'rt_seconds': self.values,
		})
		if self.athlete_ids:
			frame.insert(0, 'athlete_id', list(self.athlete_ids))
		return frame
