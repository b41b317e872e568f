"""
Run configuration and report writers. Every JSON and CSV file carries the
resolved run configuration, the seed and the dataset checksum.
"""
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from cli.config import CSV_FLOAT_FORMAT
from data_model.utils import dataset_checksum, ensure_directory

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
	command: str
	data_path: str
	output_dir: str
	seed: int
	n_permutations: int
	moment_permutations: int
	n_draws: int
	overlay_draws: int
	exclusions_path: Optional[str] = None
	# men, women or pooled; None means both genders one after the other
	gender: Optional[str] = None
	compare: Tuple[str, ...] = ()
	include_2022: bool = True
	include_dq: bool = True
	thresholds: Tuple[float, ...] = ()
	targets: Tuple[float, ...] = ()
	model_path: Optional[str] = None
	workers: int = 1
	quick: bool = False
	dataset_sha256: Optional[str] = field(default=None, compare=False)

	def to_dict(self) -> Dict:
		payload = asdict(self)
		payload['compare'] = list(self.compare)
		payload['thresholds'] = list(self.thresholds)
		payload['targets'] = list(self.targets)
		return payload

	def with_checksum(self) -> 'RunConfig':
		if self.dataset_sha256 is not None or not os.path.exists(self.data_path):
			return self
		return replace(self, dataset_sha256=dataset_checksum(self.data_path))


def _plain(value):
	"""numpy scalars to builtins and non-finite floats to None, recursively."""
	if isinstance(value, dict):
		return {str(k): _plain(v) for k, v in value.items()}
	if isinstance(value, (list, tuple)):
		return [_plain(v) for v in value]
	if isinstance(value, np.ndarray):
		return [_plain(v) for v in value.tolist()]
	if isinstance(value, np.generic):
		value = value.item()
	if isinstance(value, float) and not math.isfinite(value):
		return None
	return value


def provenance(config: RunConfig) -> Dict:
	return {
		'seed': config.seed,
		'dataset_sha256': config.dataset_sha256,
		'run_config': config.to_dict(),
	}


def write_json(path: str, payload: Dict, config: RunConfig) -> str:
	ensure_directory(os.path.dirname(path) or '.')
	document = dict(payload)
	document.update(provenance(config))
	with open(path, 'w', encoding='utf-8') as f:
		json.dump(_plain(document), f, indent=2, sort_keys=True)
		f.write('\n')
	logger.info(f"Wrote {path}")
	return path


def write_csv(path: str, frame: pd.DataFrame, config: RunConfig) -> str:
	"""CSV preceded by '# key: value' comment lines (pandas reads it back with comment='#')."""
	ensure_directory(os.path.dirname(path) or '.')
	header = provenance(config)
	with open(path, 'w', encoding='utf-8', newline='') as f:
		f.write(f"# seed: {header['seed']}\n")
		f.write(f"# dataset_sha256: {header['dataset_sha256']}\n")
		f.write(f"# run_config: {json.dumps(_plain(header['run_config']), sort_keys=True)}\n")
		frame.to_csv(f, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator='\n')
	logger.info(f"Wrote {path}")
	return path
