"""
Random-effects generalized Gamma model

	Y_ijk ~ GG(mu_ijk, sigma_ijk, nu),  log mu_ijk = beta0 + v_i,  log sigma_ijk = gamma0 + h_ij,

with venue effects v_i ~ N(0, tau_v^2) and heat effects h_ij ~ N(0, tau_h^2)
nested in venue, fitted by block-coordinate ascent on the penalized
log-likelihood; variance components follow the effective-degrees-of-freedom rule.
"""
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import ndimage, optimize, special

from data_model.records import ModelDataset
from errors import InvalidSampleError, ModelDataMismatchError, ModelFileError
from gengamma.gengamma import GGParams, cdf, draw, sf
from remixfit.config import (
	TOLERANCE, MAX_ITERATIONS, ASCENT_SLACK, INIT_NU, INIT_TAU, NU_MIN, NU_MAX, TAU_MIN, TAU_MAX,
	MODE_TOLERANCE, MODE_MAX_STEPS, MODE_MAX_STEP, INTERCEPT_BRACKET,
	RESIDUAL_CLAMP, PLOTTING_OFFSET, FILLIBEN_CUTOFF, SHARD_SIZE,
	HIST_BIN_WIDTH, DENSITY_GRID_POINTS
)
from remixfit.utils import (
	eta_derivatives, eta_information, loglik_terms, nu_derivative, numerical_hessian,
	s_derivatives, s_information, s_third_derivative
)

logger = logging.getLogger(__name__)

HeatKey = Tuple[int, str]


@dataclass(frozen=True)
class FitConfig:
	tol: float = TOLERANCE
	max_iter: int = MAX_ITERATIONS
	init_nu: float = INIT_NU
	init_tau_v: float = INIT_TAU
	init_tau_h: float = INIT_TAU
	# False keeps tau_v and tau_h at their initial values
	estimate_variance: bool = True
	# Recenter the heat effects on their approximate conditional means instead of their modes
	scale_correction: bool = True


@dataclass(frozen=True)
class MixedGGModel:
	beta0: float
	gamma0: float
	nu: float
	v: Dict[int, float]
	h: Dict[HeatKey, float]
	tau_v: float
	tau_h: float
	se_beta0: float = math.nan
	se_gamma0: float = math.nan
	se_nu: float = math.nan
	loglik_penalized: float = math.nan
	converged: bool = True
	n_iterations: int = 0
	tau_v_boundary: bool = False
	tau_h_boundary: bool = False
	history: List[Dict] = field(default_factory=list)
	provenance: Dict = field(default_factory=dict)

	@classmethod
	def from_parameters(cls, beta0: float, gamma0: float, nu: float, tau_v: float, tau_h: float,
			**provenance) -> 'MixedGGModel':
		"""A model from known parameters, without fitted effects; enough for simulation."""
		return cls(beta0, gamma0, nu, {}, {}, tau_v, tau_h, provenance=dict(provenance, source='parameters'))

	def linear_predictors(self, data: ModelDataset) -> Tuple[np.ndarray, np.ndarray]:
		"""Per-observation log mu and log sigma, conditional on the fitted effects."""
		try:
			v = np.array([self.v[year] for year in data.venue_years])
			h = np.array([self.h[key] for key in data.heat_keys])
		except KeyError as e:
			raise ModelDataMismatchError(f"model has no random effect for {e.args[0]!r}") from None
		return self.beta0 + v[data.venue], self.gamma0 + h[data.heat]

	# --- Serialization ---

	def to_dict(self) -> Dict:
		def number(x):
			return None if isinstance(x, float) and not math.isfinite(x) else x

		return {
			'beta0': self.beta0, 'gamma0': self.gamma0, 'nu': self.nu,
			'tau_v': self.tau_v, 'tau_h': self.tau_h,
			'se_beta0': number(self.se_beta0), 'se_gamma0': number(self.se_gamma0), 'se_nu': number(self.se_nu),
			'loglik_penalized': number(self.loglik_penalized),
			'converged': self.converged, 'n_iterations': self.n_iterations,
			'tau_v_boundary': self.tau_v_boundary, 'tau_h_boundary': self.tau_h_boundary,
			'v': {str(year): value for year, value in sorted(self.v.items())},
			'h': {f"{year}/{heat_id}": value for (year, heat_id), value in sorted(self.h.items())},
			'history': self.history,
			'provenance': self.provenance,
		}

	@classmethod
	def from_dict(cls, payload: Dict) -> 'MixedGGModel':
		def number(x):
			return math.nan if x is None else float(x)

		h = {}
		for key, value in payload.get('h', {}).items():
			year, heat_id = key.split('/', 1)
			h[(int(year), heat_id)] = float(value)

		return cls(
			beta0=float(payload['beta0']), gamma0=float(payload['gamma0']), nu=float(payload['nu']),
			v={int(year): float(value) for year, value in payload.get('v', {}).items()},
			h=h,
			tau_v=float(payload['tau_v']), tau_h=float(payload['tau_h']),
			se_beta0=number(payload.get('se_beta0')), se_gamma0=number(payload.get('se_gamma0')),
			se_nu=number(payload.get('se_nu')),
			loglik_penalized=number(payload.get('loglik_penalized')),
			converged=bool(payload.get('converged', True)),
			n_iterations=int(payload.get('n_iterations', 0)),
			tau_v_boundary=bool(payload.get('tau_v_boundary', False)),
			tau_h_boundary=bool(payload.get('tau_h_boundary', False)),
			history=list(payload.get('history', [])),
			provenance=dict(payload.get('provenance', {})),
		)

	def save(self, path: str, extra: Optional[Dict] = None) -> None:
		payload = self.to_dict()
		if extra:
			payload.update(extra)
		with open(path, 'w', encoding='utf-8') as f:
			json.dump(payload, f, indent=2, sort_keys=True)

	@classmethod
	def load(cls, path: str) -> 'MixedGGModel':
		if not os.path.exists(path):
			raise ModelFileError(f"model file '{path}' not found")
		try:
			with open(path, 'r', encoding='utf-8') as f:
				return cls.from_dict(json.load(f))
		except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
			raise ModelFileError(f"model file '{path}' is corrupt: {e}") from None


@dataclass(frozen=True, eq=False)
class ResidualSet:
	z_scores: np.ndarray
	qq_pairs: np.ndarray
	# indices of observations whose cdf value had to be clamped
	flagged: np.ndarray

	@property
	def filliben(self) -> float:
		"""Probability-plot correlation between theoretical quantiles and sorted z-scores."""
		if len(self.qq_pairs) < 2:
			return math.nan
		return float(np.corrcoef(self.qq_pairs[:, 0], self.qq_pairs[:, 1])[0, 1])

	@property
	def adequate(self) -> bool:
		return self.filliben >= FILLIBEN_CUTOFF

	def qq_frame(self) -> pd.DataFrame:
		return pd.DataFrame(self.qq_pairs, columns=['theoretical', 'sample'])


# --- Objective ---

class _Objective:
	"""Data and penalized log-likelihood of one fit."""

	def __init__(self, data: ModelDataset):
		self.log_y = np.log(data.values)
		self.venue = data.venue
		self.heat = data.heat
		self.q_v = data.venue_count
		self.q_h = data.heat_count

	def loglik(self, beta0, gamma0, nu, v, h) -> float:
		return float(loglik_terms(self.log_y, beta0 + v[self.venue], gamma0 + h[self.heat], nu).sum())

	def penalized(self, beta0, gamma0, nu, v, h, tau_v, tau_h) -> float:
		return (
			self.loglik(beta0, gamma0, nu, v, h)
			- 0.5 * float(np.sum(v ** 2)) / tau_v ** 2
			- 0.5 * float(np.sum(h ** 2)) / tau_h ** 2
		)

	def fixed_gradient(self, v, h) -> Callable[[np.ndarray], np.ndarray]:
		"""Gradient of the log-likelihood in (beta0, gamma0, nu) with effects held fixed."""
		def gradient(x):
			eta = x[0] + v[self.venue]
			s = x[1] + h[self.heat]
			return np.array([
				eta_derivatives(self.log_y, eta, s, x[2])[0].sum(),
				s_derivatives(self.log_y, eta, s, x[2])[0].sum(),
				nu_derivative(self.log_y, eta, s, x[2]).sum(),
			])
		return gradient


def _update_block(intercept: float, effects: np.ndarray, codes: np.ndarray, tau: float,
		term: Callable, derivatives: Callable) -> Tuple[float, np.ndarray]:
	"""
	Maximizes sum(term(intercept + effects[codes])) - sum(effects^2)/(2 tau^2) by
	trust-region Newton, then centers the effects into the intercept.
	"""
	q = effects.size
	frozen = tau <= TAU_MIN

	def unpack(x):
		return x[0], (np.zeros(q) if frozen else x[1:])

	def negative(x):
		b, e = unpack(x)
		return -(term(b + e[codes]).sum() - 0.5 * np.sum(e ** 2) / tau ** 2)

	def gradient(x):
		b, e = unpack(x)
		g, _ = derivatives(b + e[codes])
		if frozen:
			return np.array([-g.sum()])
		grouped = np.bincount(codes, weights=g, minlength=q)
		return -np.concatenate([[grouped.sum()], grouped - e / tau ** 2])

	def hessian(x):
		b, e = unpack(x)
		_, curvature = derivatives(b + e[codes])
		if frozen:
			return np.array([[-curvature.sum()]])
		grouped = np.bincount(codes, weights=curvature, minlength=q)
		matrix = np.diag(np.concatenate([[grouped.sum()], grouped - 1.0 / tau ** 2]))
		matrix[0, 1:] = grouped
		matrix[1:, 0] = grouped
		return -matrix

	start = np.array([intercept]) if frozen else np.concatenate([[intercept], effects])
	result = optimize.minimize(negative, start, jac=gradient, hess=hessian, method='trust-exact',
		options={'gtol': 1e-8, 'maxiter': 200})
	if not result.fun <= negative(start):
		return intercept, effects

	new_intercept, new_effects = unpack(result.x)
	shift = float(np.mean(new_effects)) if q else 0.0
	return new_intercept + shift, new_effects - shift


def _update_nu(nu: float, negative: Callable[[float], float]) -> float:
	"""Bounded scalar search on each side of zero; keeps nu unless a side improves."""
	best_nu, best = nu, negative(nu)
	for low, high in ((-NU_MAX, -NU_MIN), (NU_MIN, NU_MAX)):
		result = optimize.minimize_scalar(negative, bounds=(low, high), method='bounded',
			options={'xatol': 1e-10})
		if result.fun < best:
			best_nu, best = float(result.x), float(result.fun)
	return best_nu


def _variance_update(effects: np.ndarray, codes: np.ndarray, information: np.ndarray, tau: float) -> float:
	"""
	tau^2 <- sum(e^2)/edf, edf = q - tr(C_ee)/tau^2 where C is the inverse of the
	penalized information of (intercept, effects).
	"""
	q = effects.size
	grouped = np.bincount(codes, weights=information, minlength=q)
	matrix = np.diag(np.concatenate([[grouped.sum()], grouped + 1.0 / tau ** 2]))
	matrix[0, 1:] = grouped
	matrix[1:, 0] = grouped

	covariance = np.linalg.inv(matrix)
	edf = q - np.trace(covariance[1:, 1:]) / tau ** 2
	if not edf > 0:
		edf = max(q - 1, 1)

	tau_new = math.sqrt(float(np.sum(effects ** 2)) / edf)
	return min(max(tau_new, TAU_MIN), TAU_MAX)


def _conditional_modes(intercept: float, start: np.ndarray, codes: np.ndarray, tau: float,
		derivatives: Callable) -> np.ndarray:
	"""Modes of each effect given the intercept; the effects decouple, so one vectorized Newton solve."""
	q = start.size
	effects = start.copy()
	for _ in range(MODE_MAX_STEPS):
		first, second, _ = derivatives(intercept + effects[codes])
		gradient = np.bincount(codes, weights=first, minlength=q) - effects / tau ** 2
		curvature = np.minimum(np.bincount(codes, weights=second, minlength=q), 0.0) - 1.0 / tau ** 2
		step = np.clip(gradient / curvature, -MODE_MAX_STEP, MODE_MAX_STEP)
		effects = effects - step
		if np.max(np.abs(step)) < MODE_TOLERANCE:
			break
	return effects


def _corrected_intercept(intercept: float, effects: np.ndarray, codes: np.ndarray, tau: float,
		derivatives: Callable) -> Tuple[float, np.ndarray]:
	"""
	Laplace correction of a block intercept. The conditional mean of each effect is
	approximately mode + l'''/(2 c^2), c the penalized curvature at the mode; the
	intercept is moved until these means average to zero.

	Returns the corrected intercept and the centered conditional means.
	"""
	q = effects.size

	def conditional_means(b: float) -> np.ndarray:
		modes = _conditional_modes(b, effects, codes, tau, derivatives)
		_, second, third = derivatives(b + modes[codes])
		curvature = np.maximum(1.0 / tau ** 2 - np.bincount(codes, weights=second, minlength=q), 1.0 / tau ** 2)
		return modes + np.bincount(codes, weights=third, minlength=q) / (2.0 * curvature ** 2)

	def excess(b: float) -> float:
		return float(np.mean(conditional_means(b)))

	# the mean of the effects falls as the intercept rises
	start = excess(intercept)
	if start == 0.0:
		return intercept, effects
	direction = 1.0 if start > 0 else -1.0
	width = INTERCEPT_BRACKET
	for _ in range(30):
		other = intercept + direction * width
		if excess(other) * start <= 0:
			break
		width *= 2.0
	else:
		logger.warning("Scale intercept correction found no sign change; keeping the modes")
		return intercept, effects

	root = optimize.brentq(excess, min(intercept, other), max(intercept, other), xtol=1e-12)
	means = conditional_means(root)
	shift = float(np.mean(means))
	return root + shift, means - shift


def _standard_errors(objective: _Objective, beta0, gamma0, nu, v, h) -> Tuple[float, float, float]:
	"""Observed-information standard errors of (beta0, gamma0, nu), effects and taus held fixed."""
	hessian = numerical_hessian(objective.fixed_gradient(v, h), np.array([beta0, gamma0, nu]))
	try:
		covariance = np.linalg.inv(-hessian)
	except np.linalg.LinAlgError:
		return math.nan, math.nan, math.nan
	variances = np.diag(covariance)
	return tuple(math.sqrt(x) if x > 0 else math.nan for x in variances)


# --- Fitting ---

def fit(data: ModelDataset, config: FitConfig = FitConfig()) -> MixedGGModel:
	"""
	Block-coordinate ascent: (a) beta0 and venue effects, (b) gamma0 and heat effects,
	(c) nu, then (d) the Laplace correction of gamma0 (heat effects become their
	approximate conditional means, centered) and tau_v, tau_h. Stops when the
	penalized log-likelihood changes by less than config.tol or after config.max_iter
	outer iterations.
	"""
	if data.venue_count < 2 or data.heat_count < 2:
		raise InvalidSampleError(
			f"variance components need at least 2 venues and 2 heats, got {data.venue_count} and {data.heat_count}"
		)

	objective = _Objective(data)
	log_y = objective.log_y

	# 1. Deterministic start
	beta0 = math.log(float(np.mean(data.values)))
	gamma0 = math.log(float(np.std(data.values)) / float(np.mean(data.values)))
	nu = config.init_nu
	v = np.zeros(objective.q_v)
	h = np.zeros(objective.q_h)
	tau_v, tau_h = config.init_tau_v, config.init_tau_h

	def penalized():
		return objective.penalized(beta0, gamma0, nu, v, h, tau_v, tau_h)

	history: List[Dict] = []
	previous = penalized()
	converged = False
	iteration = 0

	for iteration in range(1, config.max_iter + 1):
		before = penalized()

		# (a) location block
		s = gamma0 + h[objective.heat]
		beta0, v = _update_block(
			beta0, v, objective.venue, tau_v,
			lambda eta: loglik_terms(log_y, eta, s, nu),
			lambda eta: eta_derivatives(log_y, eta, s, nu),
		)

		# (b) scale block
		eta = beta0 + v[objective.venue]
		gamma0, h = _update_block(
			gamma0, h, objective.heat, tau_h,
			lambda s_: loglik_terms(log_y, eta, s_, nu),
			lambda s_: s_derivatives(log_y, eta, s_, nu),
		)

		# (c) shape
		s = gamma0 + h[objective.heat]
		nu = _update_nu(nu, lambda value: -float(loglik_terms(log_y, eta, s, value).sum()))

		after = penalized()
		if after < before - ASCENT_SLACK * max(1.0, abs(before)):
			logger.warning(f"Penalized log-likelihood decreased in iteration {iteration}: {before:.6f} -> {after:.6f}")

		# (d) scale intercept correction, then variance components
		if config.scale_correction and tau_h > TAU_MIN:
			gamma0, h = _corrected_intercept(
				gamma0, h, objective.heat, tau_h,
				lambda s_: s_derivatives(log_y, eta, s_, nu) + (s_third_derivative(log_y, eta, s_, nu),),
			)
			s = gamma0 + h[objective.heat]

		if config.estimate_variance:
			tau_v = _variance_update(v, objective.venue, eta_information(s), tau_v)
			tau_h = _variance_update(h, objective.heat, s_information(s, nu), tau_h)

		current = penalized()
		history.append({
			'iteration': iteration, 'before': before, 'after': after, 'penalized_loglik': current,
			'beta0': beta0, 'gamma0': gamma0, 'nu': nu, 'tau_v': tau_v, 'tau_h': tau_h,
		})
		logger.debug(
			f"iter {iteration}: pl={current:.6f} beta0={beta0:.4f} gamma0={gamma0:.4f} "
			f"nu={nu:.4f} tau_v={tau_v:.4f} tau_h={tau_h:.4f}"
		)

		if abs(current - previous) < config.tol:
			converged = True
			break
		previous = current

	if not converged:
		logger.warning(f"Fit did not converge in {config.max_iter} iterations")

	se_beta0, se_gamma0, se_nu = _standard_errors(objective, beta0, gamma0, nu, v, h)

	return MixedGGModel(
		beta0=beta0, gamma0=gamma0, nu=nu,
		v={year: float(value) for year, value in zip(data.venue_years, v)},
		h={key: float(value) for key, value in zip(data.heat_keys, h)},
		tau_v=tau_v, tau_h=tau_h,
		se_beta0=se_beta0, se_gamma0=se_gamma0, se_nu=se_nu,
		loglik_penalized=penalized(),
		converged=converged, n_iterations=iteration,
		tau_v_boundary=tau_v <= TAU_MIN, tau_h_boundary=tau_h <= TAU_MIN,
		history=history,
		provenance={'n_obs': data.n, 'n_venues': data.venue_count, 'n_heats': data.heat_count},
	)


def fit_flat(values: np.ndarray) -> GGParams:
	"""Maximum-likelihood GG fit without random effects, searched on both signs of nu."""
	log_y = np.log(np.asarray(values, dtype=float))
	mean = float(np.exp(log_y).mean())
	start_eta = math.log(mean)
	start_s = math.log(float(np.exp(log_y).std()) / mean)

	def negative(x):
		return -float(loglik_terms(log_y, x[0], x[1], x[2]).sum())

	def gradient(x):
		return -np.array([
			eta_derivatives(log_y, x[0], x[1], x[2])[0].sum(),
			s_derivatives(log_y, x[0], x[1], x[2])[0].sum(),
			nu_derivative(log_y, x[0], x[1], x[2]).sum(),
		])

	best = None
	for sign in (-1.0, 1.0):
		bounds = [(None, None), (None, None), (-NU_MAX, -NU_MIN) if sign < 0 else (NU_MIN, NU_MAX)]
		result = optimize.minimize(negative, np.array([start_eta, start_s, sign]), jac=gradient,
			method='L-BFGS-B', bounds=bounds, options={'ftol': 1e-15, 'gtol': 1e-9, 'maxiter': 5000})
		if best is None or result.fun < best.fun:
			best = result

	return GGParams.from_log(best.x[0], best.x[1], best.x[2])


# --- Diagnostics ---

def quantile_residuals(model: MixedGGModel, data: ModelDataset) -> ResidualSet:
	"""
	z = Phi^-1(F(y | fitted mu, sigma, nu)); probabilities are clamped to
	[eps, 1 - eps] and the affected observations flagged.
	"""
	log_mu, log_sigma = model.linear_predictors(data)
	lower = np.empty(data.n)
	upper = np.empty(data.n)

	# mu and sigma are constant within a heat
	for heat in np.unique(data.heat):
		index = np.flatnonzero(data.heat == heat)
		params = GGParams(math.exp(log_mu[index[0]]), math.exp(log_sigma[index[0]]), model.nu)
		lower[index] = cdf(params, data.values[index])
		upper[index] = sf(params, data.values[index])

	flagged = np.flatnonzero((lower < RESIDUAL_CLAMP) | (upper < RESIDUAL_CLAMP))
	if flagged.size:
		logger.warning(f"{flagged.size} residual(s) clamped at the numerical tails")

	lower = np.clip(lower, RESIDUAL_CLAMP, 1.0 - RESIDUAL_CLAMP)
	upper = np.clip(upper, RESIDUAL_CLAMP, 1.0 - RESIDUAL_CLAMP)
	z = np.where(lower <= 0.5, special.ndtri(lower), -special.ndtri(upper))

	n = z.size
	ranks = np.arange(1, n + 1)
	theoretical = special.ndtri((ranks - PLOTTING_OFFSET) / (n + 1.0 - 2.0 * PLOTTING_OFFSET))
	return ResidualSet(z_scores=z, qq_pairs=np.column_stack([theoretical, np.sort(z)]), flagged=flagged)


# --- Simulation ---

def _marginal_shard_worker(model_terms: Tuple[float, float, float, float, float],
		seed: np.random.SeedSequence, size: int) -> np.ndarray:
	"""Worker function: one shard of scale-mixture draws."""
	beta0, gamma0, nu, tau_v, tau_h = model_terms
	rng = np.random.default_rng(seed)
	v = rng.normal(0.0, tau_v, size)
	h = rng.normal(0.0, tau_h, size)
	return draw(np.exp(beta0 + v), np.exp(gamma0 + h), nu, rng)


def simulate_marginal(model: MixedGGModel, n: int, seed: int, workers: int = 1) -> np.ndarray:
	"""
	Draws from the marginal scale mixture: fresh venue and heat effects per draw.
	Shard k uses the k-th child of SeedSequence(seed), so `workers` does not change the output.
	"""
	if n < 1:
		raise ValueError("n must be at least 1")

	terms = (model.beta0, model.gamma0, model.nu, model.tau_v, model.tau_h)
	full, rest = divmod(n, SHARD_SIZE)
	sizes = [SHARD_SIZE] * full + ([rest] if rest else [])
	seeds = np.random.SeedSequence(seed).spawn(len(sizes))

	if workers <= 1 or len(sizes) == 1:
		return np.concatenate([_marginal_shard_worker(terms, s, size) for s, size in zip(seeds, sizes)])

	with ProcessPoolExecutor(max_workers=workers) as executor:
		shards = list(executor.map(_marginal_shard_worker, [terms] * len(sizes), seeds, sizes))
	return np.concatenate(shards)


def simulate_dataset(model: MixedGGModel, structure: ModelDataset, seed: int,
		conditional: bool = True) -> ModelDataset:
	"""
	New responses at the index structure of `structure`. Conditional draws reuse the
	model's fitted effects; otherwise effects are drawn afresh and centered.
	"""
	rng = np.random.default_rng(seed)
	if conditional:
		log_mu, log_sigma = model.linear_predictors(structure)
	else:
		v = rng.normal(0.0, model.tau_v, structure.venue_count)
		h = rng.normal(0.0, model.tau_h, structure.heat_count)
		log_mu = model.beta0 + (v - v.mean())[structure.venue]
		log_sigma = model.gamma0 + (h - h.mean())[structure.heat]

	values = draw(np.exp(log_mu), np.exp(log_sigma), model.nu, rng)
	return replace(structure, values=values)


def density_overlay(model: MixedGGModel, values: np.ndarray, n_draws: int, seed: int,
		workers: int = 1) -> pd.DataFrame:
	"""
	Histogram of observed values and a binned Gaussian-kernel density of simulated
	marginal draws, as rows (series, x, density).
	"""
	values = np.asarray(values, dtype=float)
	edges = np.arange(0.0, values.max() + HIST_BIN_WIDTH, HIST_BIN_WIDTH)
	counts, edges = np.histogram(values, bins=edges, density=True)
	histogram = pd.DataFrame({'series': 'histogram', 'x': 0.5 * (edges[:-1] + edges[1:]), 'density': counts})

	draws = simulate_marginal(model, n_draws, seed, workers)
	low, high = np.quantile(draws, [1e-4, 1 - 1e-4])
	grid_edges = np.linspace(low, high, DENSITY_GRID_POINTS + 1)
	binned, _ = np.histogram(draws, bins=grid_edges, density=True)
	step = grid_edges[1] - grid_edges[0]

	# Silverman's rule of thumb
	spread = min(draws.std(), (np.quantile(draws, 0.75) - np.quantile(draws, 0.25)) / 1.34)
	bandwidth = 0.9 * spread * draws.size ** (-0.2)
	smoothed = ndimage.gaussian_filter1d(binned, bandwidth / step, mode='constant')
	kde = pd.DataFrame({'series': 'kde', 'x': 0.5 * (grid_edges[:-1] + grid_edges[1:]), 'density': smoothed})

	return pd.concat([histogram, kde], ignore_index=True)
