"""
Identifiability testing for mixtures observed through groups.

Exact tools (law equality, common-component reduction, the linear
independence certificate) decide what they can; the confusability search
is a numerical falsifier for the rest: it looks for a different mixture
of no greater order whose group law matches the target's.
"""
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from functools import reduce
from typing import List, Optional, Tuple

import numpy as np

from groupmix.core.config import setting
from groupmix.core.measures import (DiscreteMeasure, Mixture, canonicalize, match_components,
                                    merge_tolerance, mixture_distance, mixture_to_json,
                                    optimal_assignment, separation_cost, signed_combination)
from groupmix.core.tensor import (DENSE, SYM, density_context, group_law,
                                  rank_of_powers, tensor_distance)
from groupmix.util.logger import logger
from groupmix.util.number_type import format_scalar

EQUAL = 'equal'
DIFFERENT = 'different'
CERTIFIED = 'certified_distinct'
INCONCLUSIVE = 'inconclusive'
IDENTICAL = 'identical'


def identifiability_threshold(m: int) -> int:
    """Smallest group size at which every order-m mixture is identifiable: 2m-1"""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return 2 * m - 1


class LawVerdict:
    """Outcome of comparing two order-n group laws"""

    def __init__(self, equal: bool, n: int, max_abs, l2: float, tol):
        self.equal = equal
        self.n = n
        self.max_abs = max_abs
        self.l2 = l2
        self.tol = tol

    @property
    def verdict(self) -> str:
        return EQUAL if self.equal else DIFFERENT

    def to_json(self) -> dict:
        return {
            'verdict': self.verdict,
            'n': self.n,
            'max_abs': format_scalar(self.max_abs),
            'l2': self.l2,
            'tol': format_scalar(self.tol),
        }


def check_equal_laws(P: Mixture, Q: Mixture, n: int, tol=None) -> LawVerdict:
    """
    Compare the order-n group laws of P and Q entrywise.

    :param P: Mixture
    :param Q: Mixture over the same atoms
    :param n: Group size
    :param tol: Max-abs tolerance; default 0 when both are exact, else tolerance.law
    :return: LawVerdict, equal iff max-abs <= tol
    """
    if P.d != Q.d:
        raise ValueError(f"Shape mismatch: d={P.d} vs d={Q.d}")
    if tol is None:
        tol = 0 if (P.exact and Q.exact) else float(setting('tolerance.law', 1e-10))
    max_abs, l2 = tensor_distance(group_law(P, n, SYM), group_law(Q, n, SYM))
    return LawVerdict(max_abs <= tol, n, max_abs, l2, tol)


class ReducedPair:
    """
    P and Q after removing common components.

    left/right are the renormalized remainders (None when nothing is left);
    shared lists (component, subtracted mass) pairs.
    """

    def __init__(self, left: Optional[Mixture], right: Optional[Mixture], shared: List[Tuple]):
        self.left = left
        self.right = right
        self.shared = shared

    @property
    def identical(self) -> bool:
        return self.left is None and self.right is None

    def to_json(self) -> dict:
        return {
            'identical': self.identical,
            'left': None if self.left is None else mixture_to_json(self.left),
            'right': None if self.right is None else mixture_to_json(self.right),
            'shared': [{'mass': format_scalar(w), 'component': [format_scalar(p) for p in mu.probs]}
                       for mu, w in self.shared],
        }


def _remainder(terms: List[Tuple], exact: bool) -> Optional[Mixture]:
    if not terms:
        return None
    total = sum(c for c, _ in terms)
    # float leftovers of a cancelled pair are noise
    if not exact and total <= float(setting('tolerance.sum', 1e-12)):
        return None
    return canonicalize([c for c, _ in terms], [mu for _, mu in terms], merge_tol=0)


def reduce_common(P: Mixture, Q: Mixture, tol=None) -> ReducedPair:
    """
    Subtract the smaller weight of every shared component from both sides
    and renormalize what is left.

    :param tol: Component match radius; default the merge tolerance
    """
    diff = signed_combination(P, Q, tol)
    matched = match_components(P, Q, tol)
    shared = [(P.components[i], min(P.weights[i], Q.weights[j])) for i, j in matched]
    left = _remainder(diff.positive_part(), diff.exact)
    right = _remainder(diff.negative_part(), diff.exact)
    if (left is None) != (right is None):
        # remainders carry equal mass, so one side vanishing means both did
        left = right = None
    if left is None:
        logger.debug("mixtures identical up to tol")
    return ReducedPair(left, right, shared)


class Certificate:
    """Linear-independence certificate for V_n(P) != V_n(Q)"""

    def __init__(self, status: str, n: int, rank: int, expected_rank: int, lemma_applies: bool,
                 collinear: List[Tuple[int, int]]):
        self.status = status
        self.n = n
        self.rank = rank
        self.expected_rank = expected_rank
        self.lemma_applies = lemma_applies
        self.collinear = collinear

    @property
    def certified(self) -> bool:
        return self.status == CERTIFIED

    def to_json(self) -> dict:
        return {
            'status': self.status,
            'n': self.n,
            'rank': self.rank,
            'expected_rank': self.expected_rank,
            'lemma_applies': self.lemma_applies,
            'collinear_pairs': [list(p) for p in self.collinear],
        }


def _collinear(a: np.ndarray, b: np.ndarray) -> bool:
    if a.dtype == object and b.dtype == object:
        return all(a[i] * b[j] == a[j] * b[i] for i, j in itertools.combinations(range(len(a)), 2))
    return rank_of_powers([a, b], 1) < 2


def independence_certificate(P: Mixture, Q: Mixture, n: int) -> Certificate:
    """
    Certify V_n(P) != V_n(Q) for mixtures with no common component.

    Densities of all l+m components against their sum are checked for
    pairwise collinearity, then the rank of their n-th tensor powers is
    computed. Full rank l+m makes sum w_i mu_i^n - sum v_j nu_j^n a
    nontrivial combination of independent tensors, hence nonzero; pairwise
    non-collinear families always reach full rank once n >= l+m-1.

    :raises ValueError: "reduce first" if P and Q share a component
    """
    if P.d != Q.d:
        raise ValueError(f"Shape mismatch: d={P.d} vs d={Q.d}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if match_components(P, Q, merge_tolerance(P.exact and Q.exact)):
        raise ValueError("Mixtures share components; reduce first (reduce_common)")

    ctx = density_context(list(P.components) + list(Q.components))
    k = len(ctx.densities)
    collinear = [(i, j) for i, j in itertools.combinations(range(k), 2)
                 if _collinear(ctx.densities[i], ctx.densities[j])]
    rank = rank_of_powers(ctx.densities, n)
    lemma_applies = not collinear and n >= k - 1
    status = CERTIFIED if rank == k else INCONCLUSIVE
    logger.debug(f"certificate n={n}: rank {rank} of {k}, collinear pairs {collinear}")
    return Certificate(status, n, rank, k, lemma_applies, collinear)


def certify_pair(P: Mixture, Q: Mixture, n: int) -> dict:
    """
    reduce_common followed by independence_certificate on the remainders.

    :return: {"status", "reduced", "certificate", "guaranteed_n"}; status is
        "identical" when nothing is left after the reduction
    """
    reduced = reduce_common(P, Q)
    if reduced.identical:
        return {'status': IDENTICAL, 'reduced': reduced.to_json(), 'certificate': None, 'guaranteed_n': None}
    cert = independence_certificate(reduced.left, reduced.right, n)
    guaranteed_n = identifiability_threshold(max(reduced.left.order, reduced.right.order))
    return {
        'status': cert.status,
        'reduced': reduced.to_json(),
        'certificate': cert.to_json(),
        'guaranteed_n': guaranteed_n,
    }


# --- confusability search -------------------------------------------------

def _dense_power(mu: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.multiply.outer, [mu] * n, np.array(1.0))


def _contract(R: np.ndarray, mu: np.ndarray, times: int) -> np.ndarray:
    for _ in range(times):
        R = R @ mu
    return R


def law_objective(target, weights: np.ndarray, components: np.ndarray, n: int):
    """
    f = ||sum_j w_j mu_j^{(x)n} - V_n(target)||^2 with its analytic gradient.

    df/dw_j = 2 <R, mu_j^{(x)n}>, df/dmu_j = 2 n w_j R contracted with mu_j
    on n-1 axes, R being the (symmetric) residual tensor.

    :param target: Mixture or dense float MomentTensor of order n
    :param weights: (k,) candidate weights
    :param components: (k, d) candidate components
    :return: (f, grad_w, grad_mu)
    """
    if isinstance(target, Mixture):
        target = group_law(target.to_float(), n, DENSE)
    target = target.to_float().dense().entries
    weights = np.asarray(weights, dtype=np.float64)
    components = np.asarray(components, dtype=np.float64)

    powers = [_dense_power(mu, n) for mu in components]
    residual = sum(w * p for w, p in zip(weights, powers)) - target
    f = float(np.sum(residual * residual))
    grad_w = np.array([2.0 * np.sum(residual * p) for p in powers])
    if n == 0:
        grad_mu = np.zeros_like(components)
    else:
        grad_mu = np.array([2.0 * n * w * _contract(residual, mu, n - 1)
                            for w, mu in zip(weights, components)])
    return f, grad_w, grad_mu


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of v onto the probability simplex (sort method)"""
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    k = v.shape[1]
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - 1.0
    ind = np.arange(1, k + 1)
    rho = np.count_nonzero(u - css / ind > 0, axis=1)
    theta = css[np.arange(v.shape[0]), rho - 1] / rho
    return np.maximum(v - theta[:, None], 0.0)


class SearchResult:
    """
    Best alternative found by a confusability search.

    separation >= delta holds only when feasible; an infeasible result means
    no restart ever got delta away from the target.
    """

    def __init__(self, best_alternative: Mixture, objective: float, separation: float, restarts_used: int,
                 seed: int, n: int, delta: float, threshold: float):
        self.best_alternative = best_alternative
        self.objective = objective
        self.separation = separation
        self.restarts_used = restarts_used
        self.seed = seed
        self.n = n
        self.delta = delta
        self.threshold = threshold

    @property
    def feasible(self) -> bool:
        return self.separation >= self.delta

    @property
    def confusable(self) -> bool:
        """A different mixture with matching law was found"""
        return self.feasible and self.objective <= self.threshold

    def to_json(self) -> dict:
        return {
            'best_alternative': mixture_to_json(self.best_alternative),
            'objective': self.objective,
            'separation': self.separation,
            'restarts_used': self.restarts_used,
            'seed': self.seed,
            'n': self.n,
            'delta': self.delta,
            'threshold': self.threshold,
            'feasible': self.feasible,
            'confusable': self.confusable,
        }


class _Problem:
    """Penalized objective shared by all restarts of one search"""

    def __init__(self, target: Mixture, n: int, delta: float, penalty: float):
        self.target = target.to_float()
        self.n = n
        self.delta = delta
        self.penalty = penalty
        self.law = group_law(self.target, n, DENSE)
        self.t_weights = self.target.weights
        self.t_comps = self.target.component_matrix()

    def separation(self, w: np.ndarray, C: np.ndarray) -> Tuple[float, np.ndarray]:
        cost = separation_cost(w, C, self.t_weights, self.t_comps)
        perm, total = optimal_assignment(cost)
        return float(total), perm

    def evaluate(self, w: np.ndarray, C: np.ndarray):
        """(penalized value, law objective, separation, grad_w, grad_C)"""
        f, gw, gC = law_objective(self.law, w, C, self.n)
        sep, perm = self.separation(w, C)
        short = self.delta - sep
        if short <= 0:
            return f, f, sep, gw, gC
        # subgradient of the separation for the fixed assignment
        scale = -2.0 * self.penalty * short
        gw, gC = gw.copy(), gC.copy()
        for i, j in enumerate(perm):
            if j >= len(self.t_weights):
                continue
            diff = C[i] - self.t_comps[j]
            a = int(np.argmax(np.abs(diff)))
            gC[i, a] += scale * np.sign(diff[a])
            gw[i] += scale * np.sign(w[i] - self.t_weights[j])
        return f + self.penalty * short * short, f, sep, gw, gC


def _restart(problem: _Problem, order: int, rng: np.random.Generator, iterations: int):
    """
    One spectral projected gradient run: Barzilai-Borwein steps, halved
    until the penalized value decreases.

    :return: (law objective, weights, components, separation) of the best feasible iterate
    """
    d = problem.t_comps.shape[1]
    for _ in range(100):
        w = rng.dirichlet(np.ones(order)) if order > 1 else np.ones(1)
        C = rng.dirichlet(np.ones(d), size=order)
        if problem.separation(w, C)[0] >= problem.delta:
            break

    val, f, sep, gw, gC = problem.evaluate(w, C)
    best = (f, w, C, sep) if sep >= problem.delta else (math.inf, w, C, sep)
    step = 1.0 / max(1.0, math.sqrt(np.sum(gw ** 2) + np.sum(gC ** 2)))

    for _ in range(iterations):
        accepted = False
        for _ in range(40):
            w_new = project_simplex(w - step * gw)[0]
            C_new = project_simplex(C - step * gC)
            val_new, f_new, sep_new, gw_new, gC_new = problem.evaluate(w_new, C_new)
            if val_new < val:
                accepted = True
                break
            step /= 2.0
        if not accepted:
            break

        s = np.concatenate([w_new - w, (C_new - C).ravel()])
        y = np.concatenate([gw_new - gw, (gC_new - gC).ravel()])
        sy = float(s @ y)
        step = float(np.clip(s @ s / sy, 1e-10, 1e10)) if sy > 0 else 1.0

        w, C, val, gw, gC = w_new, C_new, val_new, gw_new, gC_new
        if sep_new >= problem.delta and f_new < best[0]:
            best = (f_new, w, C, sep_new)
        if f_new <= 1e-24 or float(s @ s) <= 1e-30:
            break
    return best


def confusability_search(P: Mixture, n: int, restarts: Optional[int] = None, delta: Optional[float] = None,
                         seed: int = 0, iterations: Optional[int] = None, workers: Optional[int] = None,
                         penalty: Optional[float] = None, threshold: Optional[float] = None) -> SearchResult:
    """
    Look for a mixture Q of order <= order(P), at least delta away from P
    (permutation-aware), minimizing ||V_n(Q) - V_n(P)||^2.

    Restart r draws its start from the RNG stream keyed by (seed, r) and
    searches order m - (r mod m); results do not depend on the worker count.

    :param P: Target mixture
    :param n: Group size
    :param restarts: Number of starts (search.restarts)
    :param delta: Exclusion radius (search.delta)
    :param seed: Base seed
    :param iterations: Iterations per start (search.iterations)
    :param workers: Threads running restarts (search.workers)
    :param penalty: Weight of the exclusion penalty (search.penalty)
    :param threshold: Objective counted as confusable (search.threshold)
    """
    restarts = int(restarts if restarts is not None else setting('search.restarts', 64))
    delta = float(delta if delta is not None else setting('search.delta', 0.05))
    iterations = int(iterations if iterations is not None else setting('search.iterations', 500))
    workers = int(workers if workers is not None else setting('search.workers', 1))
    penalty = float(penalty if penalty is not None else setting('search.penalty', 1000.0))
    threshold = float(threshold if threshold is not None else setting('search.threshold', 1e-8))
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")

    problem = _Problem(P, n, delta, penalty)
    m = P.order

    def run(r: int):
        rng = np.random.default_rng([seed, r])
        return _restart(problem, m - (r % m), rng, iterations)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            outcomes = list(executor.map(run, range(restarts)))
    else:
        outcomes = [run(r) for r in range(restarts)]

    # first minimum wins, so the merge is independent of scheduling
    best_index = min(range(restarts), key=lambda r: (outcomes[r][0], r))
    _, w, C, _ = outcomes[best_index]
    if math.isinf(outcomes[best_index][0]):
        logger.warning(f"search n={n}: no restart reached separation {delta}; "
                       f"returning an infeasible start point")
    alternative = canonicalize(w.tolist(), [DiscreteMeasure(row.tolist(), exact=False) for row in C])
    objective = tensor_distance(group_law(alternative, n, SYM), group_law(problem.target, n, SYM))[1] ** 2
    separation = mixture_distance(alternative, problem.target)
    logger.debug(f"search n={n}: best restart {best_index}, objective {objective:.3e}, "
                 f"separation {separation:.4f}")
    return SearchResult(alternative, float(objective), float(separation), restarts, seed, n, delta, threshold)
