import logging
import math
import os
import re
from typing import FrozenSet, List, Tuple

import pandas as pd

from data_model.config import (
	CSV_COLUMNS, RT_DTYPES, BOOLEAN_TOKENS, EXCLUSION_COLUMNS
)
from data_model.records import Competition, Event, Gender, Round, RTRecord
from errors import DataFormatError

logger = logging.getLogger(__name__)

# Header is line 1, so data row i (0-based) sits on line i + 2
FIRST_DATA_LINE = 2


# --- Cell Parsers ---

def _parse_enum(enum_cls, value: str, line: int, column: str):
	try:
		return enum_cls(value.strip())
	except ValueError:
		raise DataFormatError(f"unknown {column} token '{value}'", line, column) from None


def _parse_competition(value: str, line: int) -> Competition:
	try:
		return Competition.parse(value)
	except ValueError:
		raise DataFormatError(f"unknown competition token '{value}'", line, 'competition') from None


def _parse_int(value: str, line: int, column: str) -> int:
	try:
		return int(value.strip())
	except ValueError:
		raise DataFormatError(f"expected an integer, got '{value}'", line, column) from None


def _parse_rt(value: str, line: int) -> float:
	try:
		rt = float(value.strip())
	except ValueError:
		raise DataFormatError(f"rt_seconds is not numeric: '{value}'", line, 'rt_seconds') from None
	if not math.isfinite(rt):
		raise DataFormatError(f"rt_seconds must be finite, got '{value}'", line, 'rt_seconds')
	return rt


def _parse_bool(value: str, line: int, column: str) -> bool:
	token = value.strip().lower()
	if token not in BOOLEAN_TOKENS:
		raise DataFormatError(f"expected true/false, got '{value}'", line, column)
	return BOOLEAN_TOKENS[token]


def _read_text_frame(path: str, columns: List[str], dtypes) -> pd.DataFrame:
	"""Reads a CSV as strings, checking the header; an empty file yields an empty frame."""
	try:
		frame = pd.read_csv(
			path, dtype=dtypes, keep_default_na=False, skip_blank_lines=False, encoding='utf-8'
		)
	except pd.errors.EmptyDataError:
		return pd.DataFrame(columns=columns)
	except pd.errors.ParserError as e:
		match = re.search(r'line (\d+)', str(e))
		raise DataFormatError(f"malformed row ({e})", int(match.group(1)) if match else None) from None

	frame.columns = [str(c).strip() for c in frame.columns]
	missing = [c for c in columns if c not in frame.columns]
	if missing:
		raise DataFormatError(f"header is missing column(s): {', '.join(missing)}", 1)
	if frame.empty:
		return frame

	# Blank lines are kept above so the index still maps to file lines; drop them now
	is_blank = frame.astype('string').fillna("").apply(lambda col: col.str.strip() == "").all(axis=1)
	return frame[~is_blank]


def _row_to_record(row: dict, line: int) -> RTRecord:
	for column in CSV_COLUMNS:
		value = row[column]
		if value is None or pd.isna(value) or str(value).strip() == "":
			raise DataFormatError("missing value", line, column)

	competition = _parse_competition(row['competition'], line)
	year = _parse_int(row['year'], line, 'year')
	if competition.year != year:
		raise DataFormatError(
			f"competition '{competition.token}' does not match year {year}", line, 'year'
		)

	return RTRecord(
		athlete_id=row['athlete_id'].strip(),
		gender=_parse_enum(Gender, row['gender'], line, 'gender'),
		event=_parse_enum(Event, row['event'], line, 'event'),
		competition=competition,
		year=year,
		round=_parse_enum(Round, row['round'], line, 'round'),
		heat_id=row['heat_id'].strip(),
		rt_seconds=_parse_rt(row['rt_seconds'], line),
		dq=_parse_bool(row['dq'], line, 'dq'),
		line=line,
	)


def _check_heats(records: List[RTRecord]) -> None:
	"""Every record of one heat_id must share year, round, event and gender."""
	seen = {}
	for record in records:
		signature = (record.year, record.round, record.event, record.gender)
		first = seen.setdefault(record.heat_id, (signature, record.line))
		if first[0] != signature:
			raise DataFormatError(
				f"heat '{record.heat_id}' disagrees with line {first[1]} on year/round/event/gender",
				record.line, 'heat_id'
			)


# --- Public Loaders ---

def load_csv(path: str) -> List[RTRecord]:
	"""
	Loads reaction-time records, one per data row, keeping the source line number.
	Raw values are kept as-is (negative times included); filtering is left to the builders.
	"""
	if not os.path.exists(path):
		raise FileNotFoundError(f"Input file '{path}' not found.")

	frame = _read_text_frame(path, CSV_COLUMNS, RT_DTYPES)
	records = [
		_row_to_record(row, index + FIRST_DATA_LINE)
		for index, row in zip(frame.index, frame[CSV_COLUMNS].to_dict('records'))
	]
	_check_heats(records)

	logger.info(f"Loaded {len(records)} records from {path}")
	return records


def load_exclusions(path: str) -> FrozenSet[Tuple[str, str]]:
	"""Reads the per-record exclusion list as a set of (athlete_id, heat_id) keys."""
	if not os.path.exists(path):
		raise FileNotFoundError(f"Exclusion list '{path}' not found.")

	frame = _read_text_frame(path, EXCLUSION_COLUMNS, 'string')
	keys = set()
	for index, row in zip(frame.index, frame.to_dict('records')):
		athlete_id = "" if pd.isna(row['athlete_id']) else row['athlete_id'].strip()
		heat_id = "" if pd.isna(row['heat_id']) else row['heat_id'].strip()
		if not athlete_id or not heat_id:
			raise DataFormatError("exclusion needs athlete_id and heat_id", index + FIRST_DATA_LINE)
		keys.add((athlete_id, heat_id))
		logger.debug(f"Exclusion {athlete_id}/{heat_id}: {row.get('reason', '')}")

	return frozenset(keys)
