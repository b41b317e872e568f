import csv
import math
import os
from typing import Dict, List

import numpy as np
import pytest
from scipy import optimize

from data_model.config import CSV_COLUMNS, EXCLUSIONS_FILE, INPUT_FILE
from data_model.loader import load_exclusions
from data_model.records import ModelDataset
from gengamma.gengamma import GGParams, cdf, draw
from remixfit.remixfit import MixedGGModel

# Fixed-effect and variance parameters of the reference fits on the compiled dataset
MEN_INCL_2022 = dict(beta0=-1.910, gamma0=-2.200, nu=-1.178, tau_v=0.058, tau_h=0.320)
MEN_EXCL_2022 = dict(beta0=-1.910, gamma0=-2.200, nu=-1.177, tau_v=0.043, tau_h=0.326)
WOMEN = dict(beta0=-1.921, gamma0=-2.071, nu=-3.691, tau_v=0.057, tau_h=0.111)

requires_dataset = pytest.mark.skipif(
	not os.path.exists(INPUT_FILE), reason="compiled reaction-time dataset not present"
)


def listed_exclusions():
	return load_exclusions(EXCLUSIONS_FILE) if os.path.exists(EXCLUSIONS_FILE) else frozenset()


# the women's outlier has to be identified on the compiled dataset and listed by hand
requires_exclusions = pytest.mark.skipif(not listed_exclusions(), reason="exclusion list is empty")


def make_row(**overrides) -> Dict[str, str]:
	row = {
		'athlete_id': 'A001', 'gender': 'men', 'event': 'dash100', 'competition': 'world2022',
		'year': '2022', 'round': 'final', 'heat_id': 'W22-M100-F', 'rt_seconds': '0.152', 'dq': 'false',
	}
	row.update({k: str(v) for k, v in overrides.items()})
	return row


def write_rows(path, rows: List[Dict[str, str]], columns=CSV_COLUMNS) -> str:
	with open(path, 'w', encoding='utf-8', newline='') as f:
		writer = csv.DictWriter(f, fieldnames=columns)
		writer.writeheader()
		writer.writerows(rows)
	return str(path)


def synthetic_rows(seed: int = 7, athletes: int = 12) -> List[Dict[str, str]]:
	"""
	Men and women sprinters at national2022 and three World Championships, each
	athlete running every competition; RTs from a GG with heat-level scale noise.
	"""
	rng = np.random.default_rng(seed)
	rows = []
	competitions = [
		('national2022', 2022, ['heat']),
		('world2019', 2019, ['semifinal', 'semifinal', 'final']),
		('world2022', 2022, ['heat', 'semifinal', 'semifinal', 'final']),
		('world2023', 2023, ['semifinal', 'semifinal', 'final']),
	]
	for gender, event, shift in (('men', 'dash100', 0.0), ('women', 'hurdles100', 0.01)):
		ids = [f"{gender[0].upper()}{i:03d}" for i in range(athletes)]
		for token, year, rounds in competitions:
			venue = rng.normal(0.0, 0.04)
			for index, round_name in enumerate(rounds):
				heat_id = f"{token}-{gender}-{round_name}-{index}"
				sigma = np.exp(-2.2 + rng.normal(0.0, 0.2))
				mu = np.exp(-1.9 + venue) + shift + (0.01 if token == 'world2022' else 0.0)
				values = draw(mu, sigma, -1.2, rng, size=8)
				for athlete_id, value in zip(rng.choice(ids, size=8, replace=False), values):
					rows.append({
						'athlete_id': athlete_id, 'gender': gender, 'event': event, 'competition': token,
						'year': str(year), 'round': round_name, 'heat_id': heat_id,
						'rt_seconds': f"{value:.3f}", 'dq': 'false',
					})
	return rows


def simulated_dataset(rng: np.random.Generator, params: Dict[str, float], venues: int = 6,
		heats_per_venue: int = 8, per_heat: int = 8, centered: bool = True) -> ModelDataset:
	"""Responses from the random-effects model on a balanced venue/heat layout."""
	v = rng.normal(0.0, params['tau_v'], venues)
	h = rng.normal(0.0, params['tau_h'], venues * heats_per_venue)
	if centered:
		v -= v.mean()
		h -= h.mean()

	venue = np.repeat(np.arange(venues), heats_per_venue * per_heat)
	heat = np.repeat(np.arange(venues * heats_per_venue), per_heat)
	values = draw(np.exp(params['beta0'] + v[venue]), np.exp(params['gamma0'] + h[heat]), params['nu'], rng)

	years = 2000 + 2 * venue
	heat_ids = [f"H{j:03d}" for j in heat]
	return ModelDataset.from_arrays(values, years, heat_ids)


@pytest.fixture
def synthetic_csv(tmp_path):
	return write_rows(tmp_path / 'reaction_times.csv', synthetic_rows())


@pytest.fixture
def men_model():
	return MixedGGModel.from_parameters(**MEN_INCL_2022)


@pytest.fixture
def men_excl_model():
	return MixedGGModel.from_parameters(**MEN_EXCL_2022)


@pytest.fixture
def women_model():
	return MixedGGModel.from_parameters(**WOMEN)


def mixture_cdf(params: Dict[str, float], t: float, nodes: int = 40) -> float:
	"""P(Y <= t) under the random-effects model by Gauss-Hermite quadrature over both effects."""
	x, w = np.polynomial.hermite.hermgauss(nodes)
	total = 0.0
	for x_v, w_v in zip(x, w):
		for x_h, w_h in zip(x, w):
			params_vh = GGParams.from_log(
				params['beta0'] + math.sqrt(2.0) * params['tau_v'] * x_v,
				params['gamma0'] + math.sqrt(2.0) * params['tau_h'] * x_h,
				params['nu'],
			)
			total += w_v * w_h * cdf(params_vh, t)
	return total / math.pi


def mixture_quantile(params: Dict[str, float], p: float) -> float:
	return optimize.brentq(lambda t: mixture_cdf(params, t) - p, 0.03, 0.3, xtol=1e-7)
