import json
import os
import platform
import sys
import time
from dataclasses import replace
from importlib import metadata
from typing import Callable, Dict, List

# Ensure we can import modules from the script's directory
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
if BASE_DIR not in sys.path:
	sys.path.insert(0, BASE_DIR)

from cli.commands import cmd_clusrank, cmd_fit, cmd_tail, fit_label
from cli.reports import RunConfig
from data_model.config import COMPARISONS

PACKAGES = ('numpy', 'pandas', 'scipy', 'python-dotenv')

# (gender, include_2022, include_dq) per model fit
FIT_VARIANTS = [
	('men', True, True),
	('men', False, True),
	('men', True, False),
	('women', True, True),
	('women', False, True),
]


def package_versions() -> Dict[str, str]:
	versions = {'python': platform.python_version()}
	for name in PACKAGES:
		try:
			versions[name] = metadata.version(name)
		except metadata.PackageNotFoundError:
			versions[name] = 'not installed'
	return versions


class Pipeline:
	"""Runs every analysis step into one directory and keeps a manifest of the outcome."""

	def __init__(self, config: RunConfig):
		self.config = config
		self.run_dir = os.path.join(config.output_dir, time.strftime('run_%Y%m%d_%H%M%S'))
		self.steps: List[Dict] = []

	def run_step(self, name: str, step_func: Callable, *args):
		print(f"\n{'-'*40}\n[{name}]\n{'-'*40}")
		start = time.time()
		entry = {'name': name, 'status': 'ok', 'outputs': [], 'error': None}
		result = None
		try:
			result = step_func(*args)
		except Exception as e:
			print(f"[ERROR] {name} failed: {e}")
			entry.update(status='failed', error=f"{type(e).__name__}: {e}")
		entry['seconds'] = round(time.time() - start, 3)
		self.steps.append(entry)
		return entry, result

	def _sub_config(self, folder: str, **changes) -> RunConfig:
		return replace(self.config, output_dir=os.path.join(self.run_dir, folder), **changes)

	def _clusrank(self) -> None:
		compare_names = tuple(COMPARISONS)
		for gender, folder in (('men', 'clusrank'), ('women', 'clusrank'), ('pooled', 'clusrank_pooled')):
			sub = self._sub_config(folder, command='clusrank', gender=gender, compare=compare_names)
			entry, outputs = self.run_step(f"Rank tests: {gender}", cmd_clusrank, sub)
			entry['outputs'] = outputs or []
			# pooled-gender tests are supplementary and counted apart from the six gendered reports
			entry['supplementary'] = gender == 'pooled'

	def _fits_and_tails(self) -> None:
		for gender, include_2022, include_dq in FIT_VARIANTS:
			sub = self._sub_config('models', command='fit', gender=gender,
				include_2022=include_2022, include_dq=include_dq)
			label = fit_label(sub)

			entry, result = self.run_step(f"Model fit: {label}", cmd_fit, sub)
			if result is None:
				print(f"[SKIP] Tail report for {label}: no model")
				continue

			outputs, model = result
			entry['outputs'] = outputs
			if not model.converged:
				entry['status'] = 'not converged'

			model_path = next(path for path in outputs if os.path.basename(path).startswith('model_'))
			tail = self._sub_config('tails', command='tail', model_path=model_path)
			entry, outputs = self.run_step(f"Tail report: {label}", cmd_tail, tail, model)
			entry['outputs'] = outputs or []

	def write_manifest(self, duration: float) -> str:
		manifest = {
			'seed': self.config.seed,
			'dataset_sha256': self.config.dataset_sha256,
			'run_config': self.config.to_dict(),
			'versions': package_versions(),
			'duration_seconds': round(duration, 3),
			'succeeded': all(step['status'] == 'ok' for step in self.steps),
			'steps': self.steps,
		}
		path = os.path.join(self.run_dir, 'manifest.json')
		with open(path, 'w', encoding='utf-8') as f:
			json.dump(manifest, f, indent=2, sort_keys=True)
			f.write('\n')
		return path

	def run(self) -> int:
		start_global = time.time()
		print("="*60)
		print("SPRINT REACTION-TIME ANALYSIS")
		print("="*60)
		os.makedirs(self.run_dir, exist_ok=True)
		print(f"Output: {self.run_dir}/")

		if not os.path.exists(self.config.data_path):
			print(f"[ERROR] Input not found: {self.config.data_path}")
			self.steps.append({'name': 'Load data', 'status': 'failed', 'outputs': [],
				'error': f"input file '{self.config.data_path}' not found", 'seconds': 0.0})
		else:
			self._clusrank()
			self._fits_and_tails()

		duration = time.time() - start_global
		manifest = self.write_manifest(duration)
		failed = [step['name'] for step in self.steps if step['status'] != 'ok']

		print("\n" + "="*60)
		if failed:
			print(f"PIPELINE FINISHED WITH {len(failed)} FAILED STEP(S) in {duration:.2f} seconds.")
			for name in failed:
				print(f"  [ERROR] {name}")
		else:
			print(f"PIPELINE COMPLETE in {duration:.2f} seconds.")
		print(f"Manifest: {manifest}")
		print("="*60)
		return 1 if failed else 0


def run_pipeline(config: RunConfig) -> int:
	return Pipeline(config).run()


if __name__ == "__main__":
	from cli.commands import main
	sys.exit(main(["reproduce"] + sys.argv[1:]))
