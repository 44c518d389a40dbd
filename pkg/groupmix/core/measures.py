"""
Discrete probability measures and finite mixtures of them.

A measure lives on atoms 0..d-1. Two numeric backends share one code
path: exact rationals (Fraction entries in numpy object arrays) and
float64. A Mixture is always held in minimal representation and in
canonical (lexicographic) component order, so structurally equal
mixtures compare equal.
"""
import itertools
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from groupmix.core.config import setting
from groupmix.util.number_type import format_scalar, is_exact, parse_scalar

# Above this many components the separation falls back to the Hungarian algorithm
ENUMERATION_LIMIT = 6


def _as_array(values: Iterable, exact: bool) -> np.ndarray:
    if exact:
        arr = np.array([Fraction(v) for v in values], dtype=object)
    else:
        arr = np.array([float(v) for v in values], dtype=np.float64)
    arr.flags.writeable = False
    return arr


def _all_exact(values: Iterable) -> bool:
    return all(is_exact(v) for v in values)


def round_simplex(values: Sequence, max_denominator: Optional[int] = None) -> List[Fraction]:
    """
    Convert a float probability vector to Fractions summing to exactly 1.

    Entries are rounded independently and clamped at 0. A deficit goes to
    the largest entry; an excess is taken from the largest entries down,
    so no entry goes negative.
    """
    fracs = [Fraction(float(v)) for v in values]
    if max_denominator is not None:
        fracs = [f.limit_denominator(max_denominator) for f in fracs]
    fracs = [max(f, Fraction(0)) for f in fracs]
    excess = sum(fracs, Fraction(0)) - 1
    order = sorted(range(len(fracs)), key=lambda i: fracs[i], reverse=True)
    if excess < 0:
        fracs[order[0]] -= excess
    else:
        for i in order:
            if excess == 0:
                break
            take = min(fracs[i], excess)
            fracs[i] -= take
            excess -= take
    return fracs


class DiscreteMeasure:
    """
    Probability vector over d >= 2 atoms.
    """
    __slots__ = ('_probs', '_exact')

    def __init__(self, probs: Sequence, exact: Optional[bool] = None):
        """
        :param probs: Mass per atom
        :param exact: Force the backend; by default exact iff every entry is
            an int or Fraction
        """
        probs = list(probs.tolist() if isinstance(probs, np.ndarray) else probs)
        if exact is None:
            exact = _all_exact(probs)
        elif exact and not _all_exact(probs):
            raise ValueError("Exact measure requires int or Fraction entries; use to_exact() to convert floats")
        self._exact = bool(exact)
        self._probs = _as_array(probs, self._exact)
        self._validate()

    def _validate(self):
        if self.d < 2:
            raise ValueError(f"A measure needs at least 2 atoms, got d={self.d}")
        if any(p < 0 for p in self._probs):
            raise ValueError(f"Negative mass in measure {self._format()}")
        total = sum(self._probs)
        if self._exact:
            if total != 1:
                raise ValueError(f"Measure masses sum to {total}, expected exactly 1")
        else:
            if not np.all(np.isfinite(self._probs)):
                raise ValueError("Non-finite mass in measure")
            if abs(math.fsum(self._probs) - 1.0) > setting('tolerance.sum', 1e-12):
                raise ValueError(f"Measure masses sum to {math.fsum(self._probs)!r}, expected 1")

    @classmethod
    def dirac(cls, d: int, atom: int) -> 'DiscreteMeasure':
        """Point mass at one atom (exact)"""
        if not 0 <= atom < d:
            raise ValueError(f"Atom {atom} out of range for d={d}")
        return cls([Fraction(int(a == atom)) for a in range(d)])

    @classmethod
    def uniform(cls, d: int) -> 'DiscreteMeasure':
        """Uniform measure (exact)"""
        return cls([Fraction(1, d)] * d)

    @property
    def probs(self) -> np.ndarray:
        """Read-only mass vector (object dtype when exact)"""
        return self._probs

    @property
    def d(self) -> int:
        return len(self._probs)

    @property
    def exact(self) -> bool:
        return self._exact

    def key(self) -> Tuple:
        """Sort key: the mass vector as a tuple"""
        return tuple(self._probs.tolist())

    def to_float(self) -> 'DiscreteMeasure':
        """Float copy; Fraction -> float rounds half to even"""
        if not self._exact:
            return self
        return DiscreteMeasure([float(p) for p in self._probs], exact=False)

    def to_exact(self, max_denominator: Optional[int] = None) -> 'DiscreteMeasure':
        """
        Exact copy. Floats convert to their exact binary value, or to the
        nearest fraction with bounded denominator, then repaired to sum to
        exactly 1 (see round_simplex).
        """
        if self._exact:
            return self
        return DiscreteMeasure(round_simplex(self._probs, max_denominator), exact=True)

    def max_abs(self, other: 'DiscreteMeasure'):
        """Largest per-atom difference"""
        if self.d != other.d:
            raise ValueError(f"Dimension mismatch: d={self.d} vs d={other.d}")
        return max(abs(a - b) for a, b in zip(self._probs, other._probs))

    def _format(self) -> str:
        return '(' + ', '.join(str(format_scalar(p)) for p in self._probs) + ')'

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"DiscreteMeasure{self._format()}"


def _promote(components: Sequence[DiscreteMeasure], weights: Sequence) -> Tuple[bool, List, List]:
    """Bring weights and components onto one backend (float wins)"""
    exact = all(c.exact for c in components) and _all_exact(weights)
    if exact:
        return True, [Fraction(w) for w in weights], list(components)
    return False, [float(w) for w in weights], [c.to_float() for c in components]


def merge_tolerance(exact: bool):
    """Default merge tolerance for a backend"""
    if exact:
        return Fraction(setting('tolerance.merge_exact', 0))
    return float(setting('tolerance.merge_float', 1e-10))


class Mixture:
    """
    Finite mixture sum_i w_i delta_{mu_i} in minimal representation:
    positive weights summing to 1, pairwise distinct components, stored in
    lexicographic component order.
    """

    def __init__(self, weights: Sequence, components: Sequence[DiscreteMeasure]):
        """
        :param weights: Positive mixing weights
        :param components: Distinct DiscreteMeasure objects over one d
        """
        if len(weights) != len(components):
            raise ValueError(f"Length mismatch: {len(weights)} weights vs {len(components)} components")
        if not components:
            raise ValueError("empty mixture")
        components = [c if isinstance(c, DiscreteMeasure) else DiscreteMeasure(c) for c in components]
        dims = {c.d for c in components}
        if len(dims) != 1:
            raise ValueError(f"Components live on different atom counts: {sorted(dims)}")

        exact, weights, components = _promote(components, list(weights))
        order = sorted(range(len(components)), key=lambda i: (components[i].key(), weights[i]))
        self._exact = exact
        self._components = tuple(components[i] for i in order)
        self._weights = _as_array([weights[i] for i in order], exact)
        self._validate()

    def _validate(self):
        if any(w <= 0 for w in self._weights):
            raise ValueError("Mixture weights must be strictly positive")
        total = sum(self._weights)
        if self._exact:
            if total != 1:
                raise ValueError(f"Mixture weights sum to {total}, expected exactly 1")
        elif abs(math.fsum(self._weights) - 1.0) > setting('tolerance.sum', 1e-12):
            raise ValueError(f"Mixture weights sum to {math.fsum(self._weights)!r}, expected 1")
        tol = merge_tolerance(self._exact)
        for a, b in itertools.combinations(self._components, 2):
            if a.max_abs(b) <= tol:
                raise ValueError(f"Components {a} and {b} are not distinct; canonicalize() merges them")

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def components(self) -> Tuple[DiscreteMeasure, ...]:
        return self._components

    @property
    def order(self) -> int:
        """Number of components m"""
        return len(self._components)

    @property
    def d(self) -> int:
        return self._components[0].d

    @property
    def exact(self) -> bool:
        return self._exact

    def component_matrix(self) -> np.ndarray:
        """Components stacked as an (m, d) array"""
        dtype = object if self._exact else np.float64
        return np.array([c.probs for c in self._components], dtype=dtype)

    def to_float(self) -> 'Mixture':
        if not self._exact:
            return self
        return Mixture([float(w) for w in self._weights], [c.to_float() for c in self._components])

    def to_exact(self, max_denominator: Optional[int] = None) -> 'Mixture':
        """Exact copy; weights rounding to 0 are dropped and coinciding components merged"""
        if self._exact:
            return self
        return canonicalize(round_simplex(self._weights, max_denominator),
                            [c.to_exact(max_denominator) for c in self._components])

    def __iter__(self):
        return iter(zip(self._weights, self._components))

    def __len__(self) -> int:
        return self.order

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mixture):
            return NotImplemented
        return (self.order == other.order
                and list(self._weights) == list(other._weights)
                and self._components == other._components)

    def __hash__(self) -> int:
        return hash((tuple(self._weights.tolist()), self._components))

    def __repr__(self) -> str:
        terms = ', '.join(f"{format_scalar(w)}: {c._format()}" for w, c in self)
        return f"Mixture{{{terms}}}"


class SignedMixture:
    """
    Signed combination sum_i c_i delta_{mu_i} with distinct components; the
    elements of the span of Dirac masses before normalization.
    """

    def __init__(self, coeffs: Sequence, components: Sequence[DiscreteMeasure]):
        if len(coeffs) != len(components):
            raise ValueError(f"Length mismatch: {len(coeffs)} coefficients vs {len(components)} components")
        exact, coeffs, components = _promote(list(components), list(coeffs))
        for a, b in itertools.combinations(components, 2):
            if a == b:
                raise ValueError(f"Repeated component {a} in signed mixture")
        self.exact = exact
        self.coeffs = _as_array(coeffs, exact)
        self.components = tuple(components)

    def positive_part(self) -> List[Tuple]:
        return [(c, mu) for c, mu in zip(self.coeffs, self.components) if c > 0]

    def negative_part(self) -> List[Tuple]:
        return [(-c, mu) for c, mu in zip(self.coeffs, self.components) if c < 0]

    def __repr__(self) -> str:
        terms = ', '.join(f"{format_scalar(c)}: {mu._format()}" for c, mu in zip(self.coeffs, self.components))
        return f"SignedMixture{{{terms}}}"


def canonicalize(raw_weights: Sequence, raw_components: Sequence, merge_tol=None) -> Mixture:
    """
    Reduce an arbitrary weighted list of measures to its minimal representation.

    Zero-weight terms are dropped, components within merge_tol (max-abs) of
    an earlier representative are merged into it with weights summed, and
    the weights are renormalized.

    :param raw_weights: Nonnegative weights
    :param raw_components: DiscreteMeasure objects or probability vectors
    :param merge_tol: Merge radius; default 0 for exact input, 1e-10 for floats
    :return: Mixture
    """
    if len(raw_weights) != len(raw_components):
        raise ValueError(f"Length mismatch: {len(raw_weights)} weights vs {len(raw_components)} components")
    components = [c if isinstance(c, DiscreteMeasure) else DiscreteMeasure(c) for c in raw_components]
    exact, weights, components = _promote(components, [parse_scalar(w) if isinstance(w, str) else w
                                                       for w in raw_weights])
    if any(w < 0 for w in weights):
        raise ValueError("Mixture weights must be nonnegative")
    if merge_tol is None:
        merge_tol = merge_tolerance(exact)

    terms = sorted(((c, w) for c, w in zip(components, weights) if w != 0),
                   key=lambda t: (t[0].key(), t[1]))
    if not terms:
        raise ValueError("empty mixture")

    reps: List[DiscreteMeasure] = []
    masses: List = []
    for comp, w in terms:
        for idx, rep in enumerate(reps):
            if comp.max_abs(rep) <= merge_tol:
                masses[idx] += w
                break
        else:
            reps.append(comp)
            masses.append(w)

    if exact:
        total = sum(masses, Fraction(0))
        masses = [w / total for w in masses]
    else:
        total = math.fsum(masses)
        if abs(total - 1.0) > setting('tolerance.sum', 1e-12):
            masses = [w / total for w in masses]
    return Mixture(masses, reps)


def optimal_assignment(cost: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Minimum-cost perfect matching on a square cost matrix.

    :return: (col index per row, total cost)
    """
    k = cost.shape[0]
    if k <= ENUMERATION_LIMIT:
        best_perm, best = None, math.inf
        for perm in itertools.permutations(range(k)):
            total = sum(cost[i, perm[i]] for i in range(k))
            if total < best:
                best_perm, best = perm, total
        return np.array(best_perm, dtype=int), best
    rows, cols = linear_sum_assignment(cost)
    return cols[np.argsort(rows)], float(cost[rows, cols].sum())


def separation_cost(w_a: np.ndarray, c_a: np.ndarray, w_b: np.ndarray, c_b: np.ndarray) -> np.ndarray:
    """
    Padded cost matrix between two mixtures given as (weights, components) arrays.

    Entry (i, j) is max-abs(component distance) + |weight difference|; a
    component matched to padding costs its weight plus 1, the largest
    possible component distance.
    """
    k = max(len(w_a), len(w_b))
    cost = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i < len(w_a) and j < len(w_b):
                cost[i, j] = np.max(np.abs(c_a[i] - c_b[j])) + abs(w_a[i] - w_b[j])
            elif i < len(w_a):
                cost[i, j] = w_a[i] + 1.0
            elif j < len(w_b):
                cost[i, j] = w_b[j] + 1.0
    return cost


def mixture_distance(P: Mixture, Q: Mixture) -> float:
    """
    Permutation-aware separation between two mixtures (float).

    Minimum over component assignments of the summed separation costs;
    zero iff the mixtures are equal.
    """
    if P.d != Q.d:
        raise ValueError(f"Dimension mismatch: d={P.d} vs d={Q.d}")
    Pf, Qf = P.to_float(), Q.to_float()
    cost = separation_cost(Pf.weights, Pf.component_matrix(), Qf.weights, Qf.component_matrix())
    return optimal_assignment(cost)[1]


def mixtures_equal(P: Mixture, Q: Mixture, tol=0) -> bool:
    """
    True iff P and Q have the same order and some permutation matches
    components and weights within tol (max-abs).

    :param tol: Matching tolerance; 0 means exact equality
    """
    if P.d != Q.d:
        raise ValueError(f"Dimension mismatch: d={P.d} vs d={Q.d}")
    if P.order != Q.order:
        return False

    def close(i: int, j: int) -> bool:
        return (P.components[i].max_abs(Q.components[j]) <= tol
                and abs(P.weights[i] - Q.weights[j]) <= tol)

    if all(close(i, i) for i in range(P.order)):
        return True
    if tol == 0:
        return False

    # Canonical order can flip between near-equal components
    # only components within 2*tol can swap places, so only then search assignments
    near = any(a.max_abs(b) <= 2 * tol
               for mix in (P, Q) for a, b in itertools.combinations(mix.components, 2))
    near = near or any(P.components[i].max_abs(Q.components[j]) <= tol
                       for i in range(P.order) for j in range(Q.order) if i != j)
    if not near:
        return False
    feasible = np.array([[0.0 if close(i, j) else 1.0 for j in range(Q.order)] for i in range(P.order)])
    return optimal_assignment(feasible)[1] == 0.0


def match_components(P: Mixture, Q: Mixture, tol=None) -> List[Tuple[int, int]]:
    """
    Pairs (i, j) with P.components[i] within tol (max-abs) of Q.components[j];
    each component is used at most once, first match wins.

    :param tol: Match radius; default the merge tolerance of the coarser backend
    """
    if P.d != Q.d:
        raise ValueError(f"Dimension mismatch: d={P.d} vs d={Q.d}")
    if tol is None:
        tol = merge_tolerance(P.exact and Q.exact)
    pairs, used = [], set()
    for i, a in enumerate(P.components):
        for j, b in enumerate(Q.components):
            if j not in used and a.max_abs(b) <= tol:
                pairs.append((i, j))
                used.add(j)
                break
    return pairs


def signed_combination(P: Mixture, Q: Mixture, tol=None) -> SignedMixture:
    """
    P - Q as a signed combination of Dirac masses.

    Matched components keep P's representative with coefficient w_P - w_Q;
    terms that cancel are dropped.
    """
    pairs = match_components(P, Q, tol)
    matched_p = {i: j for i, j in pairs}
    matched_q = set(matched_p.values())
    coeffs, comps = [], []
    for i, (w, mu) in enumerate(P):
        c = w - Q.weights[matched_p[i]] if i in matched_p else w
        if c != 0:
            coeffs.append(c)
            comps.append(mu)
    for j, (w, nu) in enumerate(Q):
        if j not in matched_q:
            coeffs.append(-w)
            comps.append(nu)
    return SignedMixture(coeffs, comps)


def random_mixture(d: int, m: int, seed: int) -> Mixture:
    """
    Random float mixture: components and weights drawn from flat Dirichlet
    distributions, redrawn on near-duplicate components.

    :param d: Atom count (>= 2)
    :param m: Order (>= 1)
    :param seed: RNG seed; equal seeds give equal mixtures
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    tol = merge_tolerance(False)
    while True:
        comps = rng.dirichlet(np.ones(d), size=m)
        weights = rng.dirichlet(np.ones(m)) if m > 1 else np.ones(1)
        distinct = all(np.max(np.abs(comps[i] - comps[j])) > tol
                       for i, j in itertools.combinations(range(m), 2))
        if distinct and np.all(weights > 0):
            break
    weights = weights / math.fsum(weights)
    components = []
    for row in comps:
        row = row / math.fsum(row)
        components.append(DiscreteMeasure(row.tolist(), exact=False))
    return Mixture(weights.tolist(), components)


def mixture_to_json(P: Mixture) -> dict:
    """JSON payload {"d", "weights", "components"}; rationals as "p/q" strings"""
    return {
        'd': P.d,
        'weights': [format_scalar(w) for w in P.weights],
        'components': [[format_scalar(p) for p in c.probs] for c in P.components],
    }


def mixture_from_json(data: dict) -> Mixture:
    """
    Build a Mixture from its JSON payload.

    :raises ValueError: on missing keys, bad scalars or violated invariants
    """
    if not isinstance(data, dict):
        raise ValueError("Mixture JSON must be an object")
    missing = [k for k in ('d', 'weights', 'components') if k not in data]
    if missing:
        raise ValueError(f"Mixture JSON missing keys: {missing}")
    d = data['d']
    if not isinstance(d, int) or isinstance(d, bool):
        raise ValueError(f"Mixture JSON 'd' must be an integer, got {d!r}")
    comps = data['components']
    if not isinstance(comps, list) or not isinstance(data['weights'], list):
        raise ValueError("Mixture JSON 'weights' and 'components' must be lists")
    for row in comps:
        if not isinstance(row, list) or len(row) != d:
            raise ValueError(f"Every component must be a list of d={d} masses")
    weights = [parse_scalar(w) for w in data['weights']]
    components = [[parse_scalar(p) for p in row] for row in comps]
    exact = _all_exact(weights) and all(_all_exact(row) for row in components)
    return Mixture(weights, [DiscreteMeasure(row, exact=exact) for row in components])


def load_mixture(path) -> Mixture:
    """Read a mixture JSON file"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mixture file not found: {path}")
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"Malformed JSON in {path}: {e}") from e
    return mixture_from_json(data)


def save_mixture(P: Mixture, path):
    """Write a mixture JSON file"""
    with open(path, 'w') as f:
        json.dump(mixture_to_json(P), f, indent=2)
        f.write('\n')
