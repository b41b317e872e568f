"""
Clustered Wilcoxon rank-sum test with subunit-level grouping.

The statistic S averages the pseudo-sample statistic
W* = 1/(n+1) + sum_i delta_i* R_i* over every pseudo-sample (one observation
picked uniformly from each cluster). Clusters are independent, so
E[delta_i* R_i*] is a per-observation sum and S = 1/(n+1) + sum_ik w_ik delta_ik,
where w_ik is the expected midrank of x_ik divided by m_i. The weights do not
depend on the labels, so permuting labels within clusters only reselects them.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import stats

from clusrank.config import (
	PERMUTATION_BATCH, MIN_MOMENT_PERMUTATIONS, MOMENT_METHODS, TIE_TOLERANCE
)
from data_model.records import ClusteredSample
from errors import DegenerateNullError

logger = logging.getLogger(__name__)

# (weights of shape (k, m), treated count t) for k clusters sharing size m and count t
ClusterGroup = Tuple[np.ndarray, int]


@dataclass(frozen=True)
class ClusRankResult:
	S: float
	E0: float
	sd0: float
	z: float
	p_asymptotic: float
	p_permutation: Optional[float]
	n_permutations: int
	seed: int
	n_clusters: int
	n_obs: int
	moment_method: str = 'sampled'
	degenerate: bool = False

	def to_dict(self) -> Dict:
		return asdict(self)


# --- Statistic ---

def _scores(values: np.ndarray, cluster: np.ndarray) -> np.ndarray:
	"""
	Expected midrank of each observation within a pseudo-sample that contains it:
	1 + sum over other clusters j of P(X_j* < x) + 0.5 P(X_j* = x).
	"""
	x = np.asarray(values, dtype=float)
	cluster = np.asarray(cluster)
	_, codes, sizes = np.unique(cluster, return_inverse=True, return_counts=True)
	inverse_size = 1.0 / sizes[codes]

	below = (x[None, :] < x[:, None]).astype(float)
	tied = (x[None, :] == x[:, None]).astype(float)
	other_cluster = cluster[None, :] != cluster[:, None]

	return 1.0 + ((below + 0.5 * tied) * other_cluster * inverse_size[None, :]).sum(axis=1)


def observation_scores(sample: ClusteredSample) -> np.ndarray:
	return _scores(sample.values, sample.cluster)


def label_weights(sample: ClusteredSample) -> Tuple[float, np.ndarray]:
	"""Returns (offset, w) with S = offset + sum(w[treatment])."""
	weights = observation_scores(sample) / sample.m[sample.cluster]
	return 1.0 / (sample.n + 1), weights


def statistic_from_arrays(values: np.ndarray, treatment: np.ndarray, cluster: np.ndarray) -> float:
	"""
	S for raw arrays, without the both-groups requirement of ClusteredSample.
	Clusters holding one group only still enter the ranks.
	"""
	treatment = np.asarray(treatment, dtype=bool)
	_, codes, sizes = np.unique(cluster, return_inverse=True, return_counts=True)
	weights = _scores(values, cluster) / sizes[codes]
	return float(1.0 / (sizes.size + 1) + weights[treatment].sum())


def statistic_S(sample: ClusteredSample) -> float:
	offset, weights = label_weights(sample)
	return float(offset + weights[sample.treatment].sum())


def exact_null_moments(sample: ClusteredSample) -> Tuple[float, float]:
	"""
	Mean and standard deviation of S over all within-cluster label arrangements.
	Each cluster contributes the sum of a simple random sample of t_i of its weights.
	"""
	offset, weights = label_weights(sample)
	sizes = sample.m
	treated = np.bincount(sample.cluster, weights=sample.treatment, minlength=sample.n)

	cluster_mean = np.bincount(sample.cluster, weights=weights, minlength=sample.n) / sizes
	centered = weights - cluster_mean[sample.cluster]
	population_var = np.bincount(sample.cluster, weights=centered ** 2, minlength=sample.n) / sizes

	mean = offset + float(np.sum(treated * cluster_mean))
	variance = float(np.sum(treated * (sizes - treated) / (sizes - 1) * population_var))
	return mean, float(np.sqrt(max(variance, 0.0)))


# --- Permutation Engine ---

def _cluster_groups(sample: ClusteredSample, weights: np.ndarray) -> List[ClusterGroup]:
	"""Stacks clusters sharing (size, treated count) so a batch permutes them together."""
	treated = np.bincount(sample.cluster, weights=sample.treatment, minlength=sample.n).astype(int)
	sizes = sample.m
	stacks: Dict[Tuple[int, int], List[np.ndarray]] = {}
	for index in range(sample.n):
		stacks.setdefault((int(sizes[index]), int(treated[index])), []).append(weights[sample.cluster == index])
	return [(np.vstack(rows), t) for (_, t), rows in sorted(stacks.items())]


def permutation_batch_worker(groups: List[ClusterGroup], seed: np.random.SeedSequence, size: int) -> np.ndarray:
	"""
	Worker function: label-weight totals for `size` within-cluster permutations.
	Each cluster's treated set is the t positions with the smallest uniform keys.
	"""
	rng = np.random.default_rng(seed)
	totals = np.zeros(size)
	for stacked, t in groups:
		keys = rng.random((size,) + stacked.shape)
		picked = np.argpartition(keys, t - 1, axis=2)[..., :t]
		chosen = np.take_along_axis(np.broadcast_to(stacked, keys.shape), picked, axis=2)
		totals += chosen.sum(axis=(1, 2))
	return totals


def _batch_sizes(n_permutations: int) -> List[int]:
	full, rest = divmod(n_permutations, PERMUTATION_BATCH)
	return [PERMUTATION_BATCH] * full + ([rest] if rest else [])


def permutation_null(sample: ClusteredSample, n_permutations: int, seed: int, workers: int = 1) -> np.ndarray:
	"""
	Draws S under within-cluster label permutation. Batch b is seeded by the b-th
	child of SeedSequence(seed), so the output does not depend on `workers`.
	"""
	offset, weights = label_weights(sample)
	groups = _cluster_groups(sample, weights)
	sizes = _batch_sizes(n_permutations)
	seeds = np.random.SeedSequence(seed).spawn(len(sizes))

	if workers <= 1 or len(sizes) == 1:
		batches = [permutation_batch_worker(groups, s, size) for s, size in zip(seeds, sizes)]
		return offset + np.concatenate(batches)

	batches: List[np.ndarray] = []
	with ProcessPoolExecutor(max_workers=workers) as executor:
		futures = []
		for s, size in zip(seeds, sizes):
			futures.append(executor.submit(permutation_batch_worker, groups, s, size))
			# Keep at most 2 batches per worker in flight; results are consumed in submission order
			if len(futures) >= workers * 2:
				batches.append(futures.pop(0).result())
		for future in futures:
			batches.append(future.result())

	return offset + np.concatenate(batches)


# --- Tests ---

def _two_sided_normal(z: float) -> float:
	return float(min(1.0, 2.0 * stats.norm.sf(abs(z))))


def permutation_test(sample: ClusteredSample, n_permutations: int, seed: int, workers: int = 1) -> ClusRankResult:
	"""
	Two-sided permutation p-value with add-one correction. E0 and sd0 are the mean
	and standard deviation of the permutation sample, which also give p_asymptotic.
	"""
	if n_permutations < 1:
		raise ValueError("n_permutations must be at least 1")

	observed = statistic_S(sample)
	null = permutation_null(sample, n_permutations, seed, workers)
	center = float(null.mean())
	spread = float(null.std(ddof=1)) if null.size > 1 else 0.0
	scale = max(1.0, abs(center))

	if np.ptp(null) <= TIE_TOLERANCE * scale or spread == 0.0:
		logger.warning("Permutation null is degenerate; reporting p = 1")
		return ClusRankResult(
			S=observed, E0=center, sd0=0.0, z=0.0, p_asymptotic=1.0, p_permutation=1.0,
			n_permutations=n_permutations, seed=seed, n_clusters=sample.n, n_obs=sample.n_obs,
			degenerate=True,
		)

	extreme = np.abs(null - center) >= abs(observed - center) - TIE_TOLERANCE * scale
	p_permutation = (int(np.count_nonzero(extreme)) + 1) / (n_permutations + 1)
	z = (observed - center) / spread

	return ClusRankResult(
		S=observed, E0=center, sd0=spread, z=z,
		p_asymptotic=_two_sided_normal(z), p_permutation=p_permutation,
		n_permutations=n_permutations, seed=seed, n_clusters=sample.n, n_obs=sample.n_obs,
	)


def asymptotic_test(
	sample: ClusteredSample,
	moment_permutations: int,
	seed: int,
	moment_method: str = 'sampled',
	workers: int = 1,
) -> ClusRankResult:
	"""Normal approximation z = (S - E0)/sd0 with two-sided p-value."""
	if moment_method not in MOMENT_METHODS:
		raise ValueError(f"moment_method must be one of {MOMENT_METHODS}")

	observed = statistic_S(sample)
	if moment_method == 'exact':
		center, spread = exact_null_moments(sample)
	else:
		if moment_permutations < MIN_MOMENT_PERMUTATIONS:
			raise ValueError(f"moment_permutations must be at least {MIN_MOMENT_PERMUTATIONS}")
		null = permutation_null(sample, moment_permutations, seed, workers)
		center, spread = float(null.mean()), float(null.std(ddof=1))

	if not spread > 0.0:
		raise DegenerateNullError("null standard deviation of S is zero")

	z = (observed - center) / spread
	return ClusRankResult(
		S=observed, E0=center, sd0=spread, z=z,
		p_asymptotic=_two_sided_normal(z), p_permutation=None,
		n_permutations=moment_permutations if moment_method == 'sampled' else 0,
		seed=seed, n_clusters=sample.n, n_obs=sample.n_obs, moment_method=moment_method,
	)


def compare(
	sample: ClusteredSample,
	n_permutations: int,
	moment_permutations: int,
	seed: int,
	workers: int = 1,
) -> ClusRankResult:
	"""Permutation mode when n_permutations > 0 (which also yields p_asymptotic), else asymptotic only."""
	if n_permutations > 0:
		return permutation_test(sample, n_permutations, seed, workers)
	return asymptotic_test(sample, moment_permutations, seed, workers=workers)
