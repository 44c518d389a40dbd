"""
Tight counterexamples to (2m-2)-identifiability.

For 2m distinct eps_i in [0, 1] the components
mu_i = eps_i * base_p + (1 - eps_i) * base_q lie on a segment, so their
order-(2m-2) tensor powers live in a (2m-1)-dimensional space and admit a
single linear relation sum_i alpha_i mu_i^{(x)2m-2} = 0. Splitting alpha by
sign and normalizing gives two different m-component mixtures with equal
order-(2m-2) group laws. All arithmetic is exact.
"""
import math
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from groupmix.core.measures import DiscreteMeasure, Mixture, mixture_to_json, mixtures_equal
from groupmix.core.tensor import SYM, group_law, tensor_distance, tensor_to_json
from groupmix.util.logger import logger
from groupmix.util.number_type import format_scalar, is_exact
from groupmix.util.rational import nullspace


def default_epsilons(m: int) -> List[Fraction]:
    """
    2m equally spaced nodes i/(2m-1), i = 0..2m-1.

    :param m: Mixture order (>= 1)
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return [Fraction(i, 2 * m - 1) for i in range(2 * m)]


def random_epsilons(m: int, seed: int) -> List[Fraction]:
    """
    2m distinct sorted rationals k/D with D = 8m, k drawn without replacement.

    :param m: Mixture order (>= 1)
    :param seed: RNG seed
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    denom = 8 * m
    picks = sorted(int(k) for k in rng.choice(denom + 1, size=2 * m, replace=False))
    return [Fraction(k, denom) for k in picks]


def random_base_pair(d: int, seed: int, max_count: int = 9):
    """
    Two distinct exact measures with full support over d atoms.

    Masses are random integer counts in [1, max_count] normalized to 1.

    :return: (base_p, base_q)
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    rng = np.random.default_rng(seed)
    while True:
        counts = rng.integers(1, max_count + 1, size=(2, d))
        p, q = (DiscreteMeasure([Fraction(int(c), int(row.sum())) for c in row]) for row in counts)
        if p != q:
            return p, q


def _check_epsilons(epsilons: Sequence):
    if len(set(epsilons)) != len(epsilons):
        raise ValueError(f"Epsilons must be pairwise distinct, got {[format_scalar(e) for e in epsilons]}")
    if any(e < 0 or e > 1 for e in epsilons):
        raise ValueError("Epsilons must lie in [0, 1]")


class CounterexampleSpec:
    """
    Inputs of one construction: order m, the base pair and 2m nodes.
    """

    def __init__(self, m: int, base_p: Optional[DiscreteMeasure] = None,
                 base_q: Optional[DiscreteMeasure] = None,
                 epsilons: Optional[Sequence] = None, d: int = 2):
        """
        :param m: Mixture order (>= 1)
        :param base_p: Measure carrying weight eps (default: point mass at atom 1)
        :param base_q: Measure carrying weight 1-eps (default: point mass at atom 0)
        :param epsilons: 2m distinct values in [0, 1] (default: equally spaced)
        :param d: Atom count used for the default bases
        """
        if m < 1:
            raise ValueError(f"m must be >= 1, got {m}")
        self.m = m
        self.base_p = base_p if base_p is not None else DiscreteMeasure.dirac(d, 1)
        self.base_q = base_q if base_q is not None else DiscreteMeasure.dirac(d, 0)
        self.epsilons = list(epsilons) if epsilons is not None else default_epsilons(m)

        if self.base_p.d != self.base_q.d:
            raise ValueError(f"Base measures live on different atom counts: {self.base_p.d} vs {self.base_q.d}")
        if self.base_p == self.base_q:
            raise ValueError("Base measures must be distinct")
        if len(self.epsilons) != 2 * m:
            raise ValueError(f"Need 2m = {2 * m} epsilons, got {len(self.epsilons)}")
        _check_epsilons(self.epsilons)

    @property
    def d(self) -> int:
        return self.base_p.d

    def component(self, eps) -> DiscreteMeasure:
        """eps * base_p + (1 - eps) * base_q"""
        probs = [eps * p + (1 - eps) * q for p, q in zip(self.base_p.probs, self.base_q.probs)]
        exact = is_exact(eps) and self.base_p.exact and self.base_q.exact
        return DiscreteMeasure(probs, exact=exact)

    def to_json(self) -> dict:
        return {
            'm': self.m,
            'd': self.d,
            'base_p': [format_scalar(x) for x in self.base_p.probs],
            'base_q': [format_scalar(x) for x in self.base_q.probs],
            'epsilons': [format_scalar(e) for e in self.epsilons],
        }


class CounterexamplePair:
    """
    Two distinct m-component mixtures with equal order-(2m-2) laws and
    different order-(2m-1) laws, with the witnesses that built them.
    """

    def __init__(self, spec: CounterexampleSpec, P: Mixture, Q: Mixture, alpha: List, r, betas: List,
                 residual_equal, gap):
        self.spec = spec
        self.P = P
        self.Q = Q
        self.alpha = alpha
        self.r = r
        self.betas = betas
        self.residual_equal = residual_equal
        self.gap = gap

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def equal_order(self) -> int:
        """Group size with equal laws, 2m-2"""
        return 2 * self.spec.m - 2

    @property
    def gap_order(self) -> int:
        """Group size where the laws separate, 2m-1"""
        return 2 * self.spec.m - 1

    def __repr__(self) -> str:
        return (f"CounterexamplePair(m={self.m}, residual_equal={format_scalar(self.residual_equal)}, "
                f"gap={format_scalar(self.gap)})")


def veronese_matrix(epsilons: Sequence, degree: int) -> np.ndarray:
    """
    (degree+1) x len(epsilons) matrix with entry (k, i) = eps_i^k (1-eps_i)^(degree-k):
    the coordinates of p_i^{(x)degree} in the monomial basis of the 2-dim span.

    :param epsilons: Nodes
    :param degree: Tensor degree (>= 0)
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    exact = all(is_exact(e) for e in epsilons)
    eps = [Fraction(e) for e in epsilons] if exact else [float(e) for e in epsilons]
    rows = [[e ** k * (1 - e) ** (degree - k) for e in eps] for k in range(degree + 1)]
    return np.array(rows, dtype=object if exact else np.float64).reshape(degree + 1, len(eps))


def nullspace_coefficients(epsilons: Sequence) -> List[Fraction]:
    """
    The relation sum_i alpha_i p_i^{(x)2m-2} = 0 among 2m distinct nodes,
    found by exact elimination and scaled so alpha_0 = -1.

    :param epsilons: 2m >= 2 distinct exact nodes
    :raises ValueError: on repeated or inexact nodes
    :raises ArithmeticError: if the kernel is not one-dimensional or a
        coefficient vanishes
    """
    if len(epsilons) < 2 or len(epsilons) % 2:
        raise ValueError(f"Need an even number (>= 2) of epsilons, got {len(epsilons)}")
    if not all(is_exact(e) for e in epsilons):
        raise ValueError("nullspace_coefficients needs exact (rational) epsilons")
    _check_epsilons(epsilons)
    degree = len(epsilons) - 2
    basis = nullspace(veronese_matrix(epsilons, degree).tolist())
    if len(basis) != 1:
        raise ArithmeticError(f"Veronese kernel has dimension {len(basis)}, expected 1")
    alpha = basis[0]
    if any(a == 0 for a in alpha):
        raise ArithmeticError(f"Kernel vector has a zero coefficient: {[format_scalar(a) for a in alpha]}")
    scale = -alpha[0]
    return [a / scale for a in alpha]


def divided_difference_weights(epsilons: Sequence) -> List[Fraction]:
    """
    Closed form of the same relation: alpha_i proportional to
    1 / prod_{j != i} (eps_i - eps_j), scaled so alpha_0 = -1.

    Signs alternate along sorted nodes, which is why the sign split is
    always m negative against m positive.
    """
    _check_epsilons(epsilons)
    eps = [Fraction(e) for e in epsilons]
    raw = []
    for i, ei in enumerate(eps):
        denom = math.prod((ei - ej for j, ej in enumerate(eps) if j != i), start=Fraction(1))
        raw.append(1 / denom)
    scale = -raw[0]
    return [a / scale for a in raw]


def split_and_normalize(spec: CounterexampleSpec, alpha: Sequence) -> CounterexamplePair:
    """
    Split a kernel vector by sign into two mixtures and certify them.

    Negative coefficients form P with beta_i = -alpha_i / r, positive ones
    form Q with beta_j = alpha_j / r, where r = sum of -alpha over negatives.

    :raises ValueError: "sign-split violation" unless exactly m are negative
    :raises ArithmeticError: if the two sides carry different mass
    """
    m = spec.m
    if len(alpha) != 2 * m:
        raise ValueError(f"Need 2m = {2 * m} coefficients, got {len(alpha)}")
    neg = [i for i, a in enumerate(alpha) if a < 0]
    pos = [i for i, a in enumerate(alpha) if a > 0]
    if len(neg) != m or len(pos) != m:
        raise ValueError(f"sign-split violation: {len(neg)} negative and {len(pos)} positive coefficients, "
                         f"expected {m} and {m}")

    r = sum((-alpha[i] for i in neg), Fraction(0))
    r_pos = sum((alpha[j] for j in pos), Fraction(0))
    if r != r_pos:
        raise ArithmeticError(f"Sides carry different mass: {format_scalar(r)} vs {format_scalar(r_pos)}")

    betas = [abs(a) / r for a in alpha]
    components = [spec.component(e) for e in spec.epsilons]
    P = Mixture([betas[i] for i in neg], [components[i] for i in neg])
    Q = Mixture([betas[j] for j in pos], [components[j] for j in pos])

    low, high = 2 * m - 2, 2 * m - 1
    residual_equal = tensor_distance(group_law(P, low, SYM), group_law(Q, low, SYM))[0]
    gap = tensor_distance(group_law(P, high, SYM), group_law(Q, high, SYM))[0]
    logger.debug(f"m={m}: r={format_scalar(r)}, residual at {low} = {format_scalar(residual_equal)}, "
                 f"gap at {high} = {format_scalar(gap)}")
    return CounterexamplePair(spec, P, Q, list(alpha), r, betas, residual_equal, gap)


def build_counterexample(m: int, d: int = 2, seed: Optional[int] = None,
                         random_base: bool = False) -> CounterexamplePair:
    """
    Construct and certify a pair of m-component mixtures over d atoms that
    are indistinguishable from groups of size 2m-2.

    :param m: Order (>= 1)
    :param d: Atom count (>= 2)
    :param seed: When given, nodes are drawn at random (seeded); otherwise equally spaced
    :param random_base: Draw two random full-support base measures instead of
        the point masses at atoms 1 and 0
    :raises ArithmeticError: if the certificate fails
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    epsilons = default_epsilons(m) if seed is None else random_epsilons(m, seed)
    base_p = base_q = None
    if random_base:
        base_p, base_q = random_base_pair(d, 0 if seed is None else seed)
    spec = CounterexampleSpec(m, base_p, base_q, epsilons, d=d)

    alpha = nullspace_coefficients(spec.epsilons)
    pair = split_and_normalize(spec, alpha)

    if pair.residual_equal != 0:
        raise ArithmeticError(f"Order-{pair.equal_order} laws differ by {format_scalar(pair.residual_equal)}")
    if not pair.gap > 0:
        raise ArithmeticError(f"Order-{pair.gap_order} laws coincide; the pair is not separated")
    if mixtures_equal(pair.P, pair.Q):
        raise ArithmeticError("Constructed mixtures are equal")
    return pair


def counterexample_report(pair: CounterexamplePair) -> dict:
    """JSON payload for a certified pair; the shared order-(2m-2) law is printed once"""
    return {
        'spec': pair.spec.to_json(),
        'alpha': [format_scalar(a) for a in pair.alpha],
        'r': format_scalar(pair.r),
        'betas': [format_scalar(b) for b in pair.betas],
        'P': mixture_to_json(pair.P),
        'Q': mixture_to_json(pair.Q),
        'equal_order': pair.equal_order,
        'gap_order': pair.gap_order,
        'residual_equal': format_scalar(pair.residual_equal),
        'gap': format_scalar(pair.gap),
        'shared_law': tensor_to_json(group_law(pair.P, pair.equal_order, SYM)),
    }
