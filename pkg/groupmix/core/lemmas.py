"""
Randomized property suite run by `groupmix lemma-tests`.

Every check is exact (rational arithmetic), so a single failure is a bug.
"""
import itertools
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

from groupmix.core.construct import build_counterexample, random_base_pair, random_epsilons
from groupmix.core.measures import DiscreteMeasure, Mixture, canonicalize
from groupmix.core.simulate import bernoulli_reduce, sum_pushforward
from groupmix.core.tensor import DENSE, SYM, group_law, marginalize, rank_of_powers
from groupmix.util.logger import logger


def _random_vector(rng: np.random.Generator, d: int) -> List[Fraction]:
    while True:
        v = [Fraction(int(x)) for x in rng.integers(0, 6, size=d)]
        if any(v):
            return v


def _collinear(a: List[Fraction], b: List[Fraction]) -> bool:
    return all(a[i] * b[j] == a[j] * b[i] for i, j in itertools.combinations(range(len(a)), 2))


def _random_exact_mixture(rng: np.random.Generator, d: int, m: int) -> Mixture:
    components = []
    for _ in range(m):
        counts = rng.integers(1, 10, size=d)
        components.append(DiscreteMeasure([Fraction(int(c), int(counts.sum())) for c in counts]))
    weights = rng.integers(1, 10, size=m)
    return canonicalize([Fraction(int(w), int(weights.sum())) for w in weights], components)


def check_noncollinear_rank(rng: np.random.Generator) -> bool:
    """k pairwise non-collinear vectors have linearly independent (k-1)-th powers"""
    k = int(rng.integers(1, 7))
    d = int(rng.integers(2, 4))
    vectors: List[List[Fraction]] = []
    while len(vectors) < k:
        v = _random_vector(rng, d)
        if not any(_collinear(v, u) for u in vectors):
            vectors.append(v)
    return rank_of_powers(vectors, max(k - 1, 1)) == k


def check_segment_rank(rng: np.random.Generator) -> bool:
    """2m points of a segment span exactly 2m-1 dimensions at power 2m-2"""
    m = int(rng.integers(2, 4))
    seed = int(rng.integers(0, 2 ** 31))
    d = int(rng.integers(2, 5))
    base_p, base_q = random_base_pair(d, seed)
    vectors = [[e * p + (1 - e) * q for p, q in zip(base_p.probs, base_q.probs)]
               for e in random_epsilons(m, seed)]
    return rank_of_powers(vectors, 2 * m - 2) == 2 * m - 1


def check_marginalization(rng: np.random.Generator) -> bool:
    """Summing out coordinates of V_n gives V_q, in both layouts"""
    d = int(rng.integers(2, 4))
    P = _random_exact_mixture(rng, d, int(rng.integers(1, 4)))
    n = int(rng.integers(0, 5))
    for q in range(n + 1):
        for layout in (DENSE, SYM):
            if marginalize(group_law(P, n, layout), q) != group_law(P, q, layout):
                return False
    return True


def check_binomial_bridge(m: int) -> bool:
    """Constructed pairs have equal binomial pmfs at 2m-2, different ones at 2m-1"""
    pair = build_counterexample(m)
    low, high = 2 * m - 2, 2 * m - 1
    if list(bernoulli_reduce(pair.P, low)) != list(bernoulli_reduce(pair.Q, low)):
        return False
    if list(bernoulli_reduce(pair.P, high)) == list(bernoulli_reduce(pair.Q, high)):
        return False
    for side in (pair.P, pair.Q):
        for n in (low, high):
            if list(sum_pushforward(group_law(side, n, SYM))) != list(bernoulli_reduce(side, n)):
                return False
    return True


RANDOM_CHECKS: Dict[str, Callable[[np.random.Generator], bool]] = {
    'noncollinear_rank': check_noncollinear_rank,
    'segment_rank': check_segment_rank,
    'marginalization': check_marginalization,
}


def run_lemma_tests(trials: int, seed: int) -> Dict[str, dict]:
    """
    Run every randomized check `trials` times and the binomial bridge for m = 1..4.

    Check i of trial t draws from the RNG stream keyed by (seed, i, t).

    :return: {check name: {"trials", "failures", "passed"}}
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    results = {}
    for index, (name, check) in enumerate(RANDOM_CHECKS.items()):
        failures = sum(not check(np.random.default_rng([seed, index, t])) for t in range(trials))
        results[name] = {'trials': trials, 'failures': failures, 'passed': failures == 0}
        if failures:
            logger.error(f"{name}: {failures} of {trials} trials failed")
        else:
            logger.debug(f"{name}: {trials} trials passed")

    bridge_failures = sum(not check_binomial_bridge(m) for m in range(1, 5))
    results['binomial_bridge'] = {'trials': 4, 'failures': bridge_failures, 'passed': bridge_failures == 0}
    return results
