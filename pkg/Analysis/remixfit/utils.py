"""
Per-observation generalized Gamma log-likelihood and its derivatives in terms of
eta = log mu, s = log sigma and nu, shared by the block updates.
"""
from typing import Callable, Tuple

import numpy as np
from scipy import special


def theta_of(s: np.ndarray, nu: float) -> np.ndarray:
	return np.exp(-2.0 * s) / nu ** 2


def loglik_terms(log_y: np.ndarray, eta: np.ndarray, s: np.ndarray, nu: float) -> np.ndarray:
	theta = theta_of(s, nu)
	log_theta = -2.0 * s - 2.0 * np.log(abs(nu))
	log_z = nu * (log_y - eta)
	return (
		np.log(abs(nu)) + theta * log_theta + theta * log_z
		- special.gammaln(theta) - log_y - np.exp(log_z + log_theta)
	)


def _theta_score(log_y, eta, s, nu) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
	theta = theta_of(s, nu)
	log_z = nu * (log_y - eta)
	z = np.exp(log_z)
	# d loglik / d theta
	d1 = np.log(theta) + 1.0 + log_z - z - special.digamma(theta)
	return theta, log_z, z, d1


def eta_derivatives(log_y, eta, s, nu) -> Tuple[np.ndarray, np.ndarray]:
	"""First and second derivative of each term with respect to eta = log mu."""
	theta = theta_of(s, nu)
	z = np.exp(nu * (log_y - eta))
	return theta * nu * (z - 1.0), -np.exp(-2.0 * s) * z


def s_derivatives(log_y, eta, s, nu) -> Tuple[np.ndarray, np.ndarray]:
	"""First and second derivative of each term with respect to s = log sigma."""
	theta, _, _, d1 = _theta_score(log_y, eta, s, nu)
	d2 = 1.0 / theta - special.polygamma(1, theta)
	return -2.0 * theta * d1, 4.0 * theta ** 2 * d2 + 4.0 * theta * d1


def s_third_derivative(log_y, eta, s, nu) -> np.ndarray:
	"""Third derivative in s, used by the Laplace correction of gamma0."""
	theta, _, _, d1 = _theta_score(log_y, eta, s, nu)
	d2 = 1.0 / theta - special.polygamma(1, theta)
	return (
		-24.0 * theta ** 2 * d2 + 8.0 * theta
		+ 8.0 * theta ** 3 * special.polygamma(2, theta) - 8.0 * theta * d1
	)


def nu_derivative(log_y, eta, s, nu) -> np.ndarray:
	theta, log_z, z, d1 = _theta_score(log_y, eta, s, nu)
	return (1.0 - 2.0 * theta * d1 + theta * log_z * (1.0 - z)) / nu


def eta_information(s: np.ndarray) -> np.ndarray:
	"""Expected information per observation for eta (E[z] = 1)."""
	return np.exp(-2.0 * s)


def s_information(s: np.ndarray, nu: float) -> np.ndarray:
	"""Expected information per observation for s."""
	theta = theta_of(s, nu)
	return 4.0 * theta ** 2 * (special.polygamma(1, theta) - 1.0 / theta)


def numerical_hessian(gradient: Callable[[np.ndarray], np.ndarray], x: np.ndarray, rel_step: float = 1e-5) -> np.ndarray:
	"""Central differences of an analytic gradient, symmetrized."""
	x = np.asarray(x, dtype=float)
	k = x.size
	hessian = np.empty((k, k))
	for i in range(k):
		step = rel_step * max(1.0, abs(x[i]))
		shift = np.zeros(k)
		shift[i] = step
		hessian[:, i] = (gradient(x + shift) - gradient(x - shift)) / (2.0 * step)
	return 0.5 * (hessian + hessian.T)
