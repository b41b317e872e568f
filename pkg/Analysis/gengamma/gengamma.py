"""
Generalized Gamma distribution GG(mu, sigma, nu) in the location-scale-shape
parameterization: with z = (y/mu)^nu and theta = 1/(sigma^2 nu^2),

	f(y) = |nu| theta^theta z^theta exp(-z theta) / (Gamma(theta) y),   y > 0.

theta * z follows a Gamma(theta, 1) law, which gives the cdf, the quantile
and the sampler. nu = 1 is the Gamma distribution with shape 1/sigma^2 and
scale mu sigma^2.
"""
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import special

from errors import DomainError, MeanUndefinedError

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class GGParams:
	mu: float
	sigma: float
	nu: float

	def __post_init__(self):
		if not (self.mu > 0 and math.isfinite(self.mu)):
			raise DomainError(f"mu must be positive and finite, got {self.mu}")
		if not (self.sigma > 0 and math.isfinite(self.sigma)):
			raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
		if self.nu == 0 or not math.isfinite(self.nu):
			raise DomainError(f"nu must be finite and nonzero, got {self.nu}")
		try:
			scale = (self.sigma * self.nu) ** 2
		except OverflowError:
			scale = math.inf
		if not (0.0 < scale < math.inf):
			raise DomainError(f"theta = 1/(sigma^2 nu^2) must be positive and finite (sigma={self.sigma}, nu={self.nu})")

	@property
	def theta(self) -> float:
		return 1.0 / (self.sigma ** 2 * self.nu ** 2)

	@classmethod
	def from_log(cls, log_mu: float, log_sigma: float, nu: float) -> 'GGParams':
		return cls(math.exp(log_mu), math.exp(log_sigma), nu)


def _positive(y: ArrayLike) -> np.ndarray:
	y = np.asarray(y, dtype=float)
	if np.any(~(y > 0)):
		raise DomainError("y must be positive")
	return y


def _scaled_gamma_variate(params: GGParams, y: np.ndarray) -> np.ndarray:
	"""theta * z, computed in log space."""
	log_z = params.nu * (np.log(y) - math.log(params.mu))
	return np.exp(log_z + math.log(params.theta))


def log_density(params: GGParams, y: ArrayLike) -> ArrayLike:
	y = _positive(y)
	theta = params.theta
	log_z = params.nu * (np.log(y) - math.log(params.mu))
	value = (
		math.log(abs(params.nu)) + theta * math.log(theta) + theta * log_z
		- special.gammaln(theta) - np.log(y) - np.exp(log_z + math.log(theta))
	)
	return value if value.ndim else float(value)


def density(params: GGParams, y: ArrayLike) -> ArrayLike:
	return np.exp(log_density(params, y))


def cdf(params: GGParams, y: ArrayLike) -> ArrayLike:
	"""P(Y <= y); zero at and left of the origin."""
	y = np.asarray(y, dtype=float)
	out = np.zeros_like(y)
	inside = y > 0
	if np.any(inside):
		x = _scaled_gamma_variate(params, y[inside])
		# z decreases in y when nu < 0, so the lower tail of Y is the upper tail of the gamma variate
		out[inside] = special.gammainc(params.theta, x) if params.nu > 0 else special.gammaincc(params.theta, x)
	return out if out.ndim else float(out)


def sf(params: GGParams, y: ArrayLike) -> ArrayLike:
	"""P(Y > y), without the cancellation of 1 - cdf in the upper tail."""
	y = np.asarray(y, dtype=float)
	out = np.ones_like(y)
	inside = y > 0
	if np.any(inside):
		x = _scaled_gamma_variate(params, y[inside])
		out[inside] = special.gammaincc(params.theta, x) if params.nu > 0 else special.gammainc(params.theta, x)
	return out if out.ndim else float(out)


def quantile(params: GGParams, p: ArrayLike) -> ArrayLike:
	p = np.asarray(p, dtype=float)
	if np.any(~((p > 0) & (p < 1))):
		raise DomainError("p must lie strictly between 0 and 1")
	theta = params.theta
	x = special.gammaincinv(theta, p) if params.nu > 0 else special.gammainccinv(theta, p)
	y = params.mu * np.exp((np.log(x) - math.log(theta)) / params.nu)
	return y if y.ndim else float(y)


def draw(mu: ArrayLike, sigma: ArrayLike, nu: float, rng: np.random.Generator,
		size: Optional[int] = None) -> np.ndarray:
	"""
	GG variates with per-draw mu and sigma (arrays broadcast together, or scalars
	with `size`): G ~ Gamma(theta, 1), y = mu (G/theta)^(1/nu).
	"""
	mu = np.asarray(mu, dtype=float)
	sigma = np.asarray(sigma, dtype=float)
	theta = 1.0 / (sigma ** 2 * nu ** 2)
	shape = size if size is not None else np.broadcast(mu, theta).shape
	g = rng.gamma(theta, 1.0, size=shape)
	with np.errstate(divide='ignore'):
		return mu * np.exp((np.log(g) - np.log(theta)) / nu)


def sample(params: GGParams, rng: np.random.Generator, size: Optional[int] = None) -> ArrayLike:
	out = draw(params.mu, params.sigma, params.nu, rng, size)
	return out if np.ndim(out) else float(out)


def _raw_moment(params: GGParams, order: int) -> float:
	theta, nu = params.theta, params.nu
	if not theta > -order / nu:
		raise MeanUndefinedError(f"moment {order} undefined: need theta > {-order / nu:.6g}, got {theta:.6g}")
	log_moment = (
		order * math.log(params.mu) + special.gammaln(theta + order / nu)
		- special.gammaln(theta) - (order / nu) * math.log(theta)
	)
	return math.exp(log_moment)


def mean(params: GGParams) -> float:
	"""mu Gamma(theta + 1/nu) / (theta^(1/nu) Gamma(theta)), defined when theta > -1/nu."""
	return _raw_moment(params, 1)


def variance(params: GGParams) -> float:
	return _raw_moment(params, 2) - _raw_moment(params, 1) ** 2
