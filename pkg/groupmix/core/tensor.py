"""
Moment-tensor algebra for group laws.

The order-n group law of a mixture over d atoms is the symmetric tensor
sum_i w_i mu_i^{(x)n}. Tensors come in two layouts:

* dense: numpy array of shape (d,)*n, row-major multi-index
* sym:   one entry per multiset index (sorted multi-index), in
         itertools.combinations_with_replacement order, with multinomial
         multiplicities recording how many dense entries each stands for

Exact tensors hold Fraction entries in object arrays; float tensors hold
float64. Every operation keeps the backend of its input.
"""
import itertools
import math
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Dict, List, Sequence, Tuple

import numpy as np

from groupmix.core.config import setting
from groupmix.core.measures import DiscreteMeasure, Mixture
from groupmix.util.number_type import format_scalar, is_exact, parse_scalar
from groupmix.util.rational import exact_rank

DENSE = 'dense'
SYM = 'sym'
LAYOUTS = (DENSE, SYM)


@lru_cache(maxsize=None)
def sym_basis(d: int, n: int) -> Tuple[Tuple[Tuple[int, ...], ...], Dict[Tuple[int, ...], int], Tuple[int, ...]]:
    """
    Multiset indices of order n over d atoms.

    :return: (multisets in canonical order, position of each multiset,
              multinomial multiplicity of each multiset)
    """
    multisets = tuple(itertools.combinations_with_replacement(range(d), n))
    position = {ms: i for i, ms in enumerate(multisets)}
    mults = tuple(multiplicity(ms) for ms in multisets)
    return multisets, position, mults


def multiplicity(multiset: Sequence[int]) -> int:
    """Number of distinct orderings of a multi-index"""
    counts = {}
    for a in multiset:
        counts[a] = counts.get(a, 0) + 1
    result = math.factorial(len(multiset))
    for c in counts.values():
        result //= math.factorial(c)
    return result


def sym_size(d: int, n: int) -> int:
    """C(d+n-1, n): dimension of the symmetric order-n tensors over d atoms"""
    return math.comb(d + n - 1, n)


def check_dense_cap(d: int, n: int):
    cap = int(setting('tensor.dense_cap', 10 ** 7))
    if d ** n > cap:
        raise ValueError(f"dense entry cap exceeded: d**n = {d}**{n} > {cap}; use layout='sym'")


def _vector(v) -> np.ndarray:
    if isinstance(v, DiscreteMeasure):
        return v.probs
    values = list(v.tolist() if isinstance(v, np.ndarray) else v)
    if all(is_exact(x) for x in values):
        return np.array([Fraction(x) for x in values], dtype=object)
    return np.array([float(x) for x in values], dtype=np.float64)


def _one(exact: bool):
    return Fraction(1) if exact else 1.0


class MomentTensor:
    """
    Order-n tensor over d atoms in dense or sym layout.
    """

    def __init__(self, entries, order: int, dim: int, layout: str = DENSE):
        """
        :param entries: Dense array of shape (dim,)*order, or 1-D sym entries
        :param order: Tensor order n >= 0
        :param dim: Atom count d
        :param layout: 'dense' or 'sym'
        """
        if layout not in LAYOUTS:
            raise ValueError(f"Unknown layout '{layout}', expected one of {LAYOUTS}")
        if order < 0:
            raise ValueError(f"Tensor order must be >= 0, got {order}")
        entries = np.asarray(entries)
        expected = (dim,) * order if layout == DENSE else (sym_size(dim, order),)
        if entries.shape != expected:
            raise ValueError(f"{layout} tensor of order {order} over d={dim} needs shape {expected}, "
                             f"got {entries.shape}")
        self.entries = entries
        self.order = order
        self.dim = dim
        self.layout = layout

    @property
    def exact(self) -> bool:
        return self.entries.dtype == object

    @property
    def shape(self) -> Tuple[int, int]:
        return self.order, self.dim

    @property
    def multiplicities(self) -> np.ndarray:
        """Multinomial multiplicities (sym layout); all ones for dense"""
        if self.layout == DENSE:
            return np.ones(self.entries.shape, dtype=np.int64)
        return np.array(sym_basis(self.dim, self.order)[2], dtype=np.int64)

    def mass(self):
        """Total mass: sum of dense entries, multiplicity-weighted in sym layout"""
        if self.layout == DENSE:
            return self.entries.sum() if self.order else self.entries[()]
        mults = sym_basis(self.dim, self.order)[2]
        return sum((m * e for m, e in zip(mults, self.entries)), _one(self.exact) * 0)

    def to_float(self) -> 'MomentTensor':
        if not self.exact:
            return self
        return MomentTensor(self.entries.astype(np.float64), self.order, self.dim, self.layout)

    def dense(self) -> 'MomentTensor':
        """This tensor in dense layout"""
        return self if self.layout == DENSE else decompress(self)

    def sym(self) -> 'MomentTensor':
        """This tensor in sym layout"""
        return self if self.layout == SYM else sym_compress(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MomentTensor):
            return NotImplemented
        return (self.shape == other.shape and self.layout == other.layout
                and bool(np.all(self.entries == other.entries)))

    def __repr__(self) -> str:
        kind = 'exact' if self.exact else 'float'
        return f"MomentTensor(order={self.order}, dim={self.dim}, layout={self.layout}, {kind})"


def tensor_power(v, n: int, layout: str = DENSE) -> MomentTensor:
    """
    n-fold tensor power v (x) v (x) ... (x) v; n = 0 gives the scalar 1.

    :param v: Vector (sequence, array or DiscreteMeasure)
    :param n: Power
    :param layout: 'dense' or 'sym'
    """
    if n < 0:
        raise ValueError(f"Tensor power must be >= 0, got {n}")
    vec = _vector(v)
    d = len(vec)
    exact = vec.dtype == object
    if layout == SYM:
        multisets = sym_basis(d, n)[0]
        entries = np.array([reduce(lambda acc, a: acc * vec[a], ms, _one(exact)) for ms in multisets],
                           dtype=vec.dtype)
        return MomentTensor(entries, n, d, SYM)
    if layout != DENSE:
        raise ValueError(f"Unknown layout '{layout}', expected one of {LAYOUTS}")
    check_dense_cap(d, n)
    entries = reduce(np.multiply.outer, [vec] * n, np.array(_one(exact), dtype=vec.dtype))
    return MomentTensor(np.asarray(entries, dtype=vec.dtype), n, d, DENSE)


def group_law(P: Mixture, n: int, layout: str = DENSE) -> MomentTensor:
    """
    Law of a random group of size n: sum_i w_i mu_i^{(x)n}.

    :param P: Mixture
    :param n: Group size (>= 0)
    :param layout: 'dense' or 'sym'
    """
    if n < 0:
        raise ValueError(f"Group size must be >= 0, got {n}")
    comps = P.component_matrix()
    weights = P.weights
    if layout == SYM:
        multisets = sym_basis(P.d, n)[0]
        # prod over the multiset's atoms of each component, dotted with the weights
        entries = np.array([np.dot(weights, np.prod(comps[:, list(ms)], axis=1)) if ms else weights.sum()
                            for ms in multisets], dtype=comps.dtype)
        return MomentTensor(entries, n, P.d, SYM)
    check_dense_cap(P.d, n)
    total = None
    for w, comp in zip(weights, comps):
        term = tensor_power(comp, n).entries * w
        total = term if total is None else total + term
    return MomentTensor(np.asarray(total, dtype=comps.dtype), n, P.d, DENSE)


def marginalize(T: MomentTensor, q: int) -> MomentTensor:
    """
    Sum out the last order-q axes, leaving the law of the first q coordinates.

    :param T: Tensor of order n
    :param q: 0 <= q <= n
    """
    if not 0 <= q <= T.order:
        raise ValueError(f"Marginal order q={q} out of range [0, {T.order}]")
    if q == T.order:
        return T
    if T.layout == DENSE:
        summed = T.entries.sum(axis=tuple(range(q, T.order)))
        return MomentTensor(np.asarray(summed, dtype=T.entries.dtype), q, T.dim, DENSE)

    # sym: a q-multiset s collects every ordered completion t of length n-q
    _, position, _ = sym_basis(T.dim, T.order)
    tails = sym_basis(T.dim, T.order - q)
    zero = _one(T.exact) * 0
    entries = []
    for s in sym_basis(T.dim, q)[0]:
        acc = zero
        for t, mult in zip(tails[0], tails[2]):
            acc += mult * T.entries[position[tuple(sorted(s + t))]]
        entries.append(acc)
    return MomentTensor(np.array(entries, dtype=T.entries.dtype), q, T.dim, SYM)


def _sorted_index_grid(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Every dense multi-index and its sorted version, as (d**n, n) arrays"""
    idx = np.indices((d,) * n).reshape(n, -1).T
    return idx, np.sort(idx, axis=1)


def max_asymmetry(T: MomentTensor) -> Tuple[object, Tuple[int, ...]]:
    """
    Largest |T[i] - T[sorted(i)]| over dense multi-indices.

    :return: (max deviation, multi-index where it occurs)
    """
    if T.layout == SYM or T.order < 2:
        return _one(T.exact) * 0, tuple([0] * T.order)
    idx, srt = _sorted_index_grid(T.dim, T.order)
    flat = T.entries.reshape(-1)
    strides = np.array([T.dim ** (T.order - 1 - k) for k in range(T.order)])
    dev = np.abs(flat - flat[srt @ strides])
    worst = int(np.argmax(dev))
    return dev[worst], tuple(int(a) for a in idx[worst])


def sym_compress(T: MomentTensor, tol=None) -> MomentTensor:
    """
    Compress a symmetric dense tensor to one entry per multiset index.

    :param T: Dense tensor
    :param tol: Allowed asymmetry; default 0 for exact tensors, tolerance.symmetry for floats
    :raises ValueError: if T is not symmetric within tol
    """
    if T.layout == SYM:
        return T
    if tol is None:
        tol = 0 if T.exact else float(setting('tolerance.symmetry', 1e-10))
    worst, where = max_asymmetry(T)
    if worst > tol:
        raise ValueError(f"Tensor is not symmetric: deviation {format_scalar(worst)} at index {where} "
                         f"exceeds {tol}")
    multisets = sym_basis(T.dim, T.order)[0]
    if T.order == 0:
        entries = np.array([T.entries[()]], dtype=T.entries.dtype)
    else:
        entries = np.array([T.entries[ms] for ms in multisets], dtype=T.entries.dtype)
    return MomentTensor(entries, T.order, T.dim, SYM)


def decompress(T: MomentTensor) -> MomentTensor:
    """Expand a sym tensor to the dense layout"""
    if T.layout == DENSE:
        return T
    check_dense_cap(T.dim, T.order)
    if T.order == 0:
        return MomentTensor(np.array(T.entries[0], dtype=T.entries.dtype), 0, T.dim, DENSE)
    _, position, _ = sym_basis(T.dim, T.order)
    _, srt = _sorted_index_grid(T.dim, T.order)
    picks = [position[tuple(row)] for row in srt.tolist()]
    entries = T.entries[picks].reshape((T.dim,) * T.order)
    return MomentTensor(entries, T.order, T.dim, DENSE)


def symmetrize(T: MomentTensor) -> MomentTensor:
    """
    Average of T over all axis permutations: the orthogonal projection onto
    symmetric tensors. Sym-layout tensors are already symmetric.
    """
    if T.layout == SYM or T.order < 2:
        return T
    perms = list(itertools.permutations(range(T.order)))
    total = None
    for perm in perms:
        term = np.transpose(T.entries, perm)
        total = term.copy() if total is None else total + term
    divisor = Fraction(len(perms)) if T.exact else float(len(perms))
    return MomentTensor(np.asarray(total / divisor, dtype=T.entries.dtype), T.order, T.dim, DENSE)


def _align(T1: MomentTensor, T2: MomentTensor) -> Tuple[MomentTensor, MomentTensor]:
    if T1.shape != T2.shape:
        raise ValueError(f"Shape mismatch: (order, dim) {T1.shape} vs {T2.shape}")
    if T1.layout != T2.layout:
        return T1.sym(), T2.sym()
    return T1, T2


def inner(T1: MomentTensor, T2: MomentTensor):
    """Frobenius inner product; computed with multiplicities in sym layout"""
    T1, T2 = _align(T1, T2)
    prod = T1.entries * T2.entries
    if T1.layout == SYM:
        mults = sym_basis(T1.dim, T1.order)[2]
        return sum((m * p for m, p in zip(mults, prod)), _one(T1.exact and T2.exact) * 0)
    return prod.sum() if T1.order else prod[()]


def tensor_distance(T1: MomentTensor, T2: MomentTensor) -> Tuple[object, float]:
    """
    Entrywise max-abs and Euclidean (l2) distance.

    Sym tensors use multiplicity-weighted l2, which equals the dense l2.
    The max-abs is exact on the rational path; l2 is a float.

    :return: (max_abs, l2)
    """
    T1, T2 = _align(T1, T2)
    diff = np.atleast_1d(T1.entries - T2.entries)
    max_abs = max(abs(x) for x in diff.reshape(-1))
    if T1.layout == SYM:
        mults = sym_basis(T1.dim, T1.order)[2]
        sq = sum((m * x * x for m, x in zip(mults, diff)), 0)
    else:
        sq = sum((x * x for x in diff.reshape(-1)), 0)
    return max_abs, math.sqrt(sq)


def power_matrix(vectors: Sequence, power: int, weighted: bool = True) -> np.ndarray:
    """
    Columns are the sym-compressed power-th tensor powers of the vectors.

    With weighted=True rows are scaled by sqrt(multiplicity) so the Gram
    matrix equals that of the dense tensor powers (float only).
    """
    columns = [tensor_power(v, power, layout=SYM).entries for v in vectors]
    matrix = np.stack(columns, axis=1)
    if weighted:
        d = len(_vector(vectors[0]))
        scale = np.sqrt(np.array(sym_basis(d, power)[2], dtype=np.float64))
        matrix = matrix.astype(np.float64) * scale[:, None]
    return matrix


def rank_of_powers(vectors: Sequence, power: int, rtol=None) -> int:
    """
    Rank of {v^{(x)power}} over the given vectors.

    Exact elimination when every vector is exact (row scaling by
    multiplicities does not change the rank, so unweighted sym columns
    suffice); otherwise singular values above rtol * sigma_max.

    :param vectors: Equal-length vectors
    :param power: Tensor power (>= 1)
    :param rtol: Relative singular value cutoff (float path)
    """
    if not len(vectors):
        raise ValueError("rank_of_powers needs at least one vector")
    if power < 1:
        raise ValueError(f"power must be >= 1, got {power}")
    arrays = [_vector(v) for v in vectors]
    if len({len(a) for a in arrays}) != 1:
        raise ValueError("All vectors must have the same dimension")
    if all(a.dtype == object for a in arrays):
        return exact_rank(power_matrix(arrays, power, weighted=False).tolist())
    if rtol is None:
        rtol = float(setting('tolerance.rank_rtol', 1e-9))
    matrix = power_matrix([a.astype(np.float64) for a in arrays], power, weighted=True)
    singular = np.linalg.svd(matrix, compute_uv=False)
    if singular.size == 0 or singular[0] == 0:
        return 0
    return int(np.sum(singular > rtol * singular[0]))


class DensityContext:
    """
    A domination measure xi (unnormalized) with a density per input
    measure: mu_i[a] = densities[i][a] * xi[a] at every atom.
    """

    def __init__(self, xi: np.ndarray, densities: List[np.ndarray]):
        """
        :param xi: Nonnegative vector dominating every measure
        :param densities: Entrywise quotients mu_i / xi, 0 where xi is 0
        """
        self.xi = xi
        self.densities = densities
        for k, dens in enumerate(densities):
            if len(dens) != len(xi):
                raise ValueError(f"Density {k} has length {len(dens)}, xi has {len(xi)}")
            for a, (x, p) in enumerate(zip(xi, dens)):
                if x == 0 and p != 0:
                    raise ValueError(f"xi does not dominate measure {k} at atom {a}")
                if p < 0 or p > 1:
                    raise ValueError(f"Density {k} is {p} at atom {a}, outside [0, 1]")

    @property
    def exact(self) -> bool:
        return self.xi.dtype == object

    def measure(self, k: int) -> np.ndarray:
        """Recover measure k as densities[k] * xi"""
        return self.densities[k] * self.xi


def density_context(measures: Sequence[DiscreteMeasure]) -> DensityContext:
    """
    Build xi = sum of all measures and the density of each against it.

    :param measures: DiscreteMeasure objects over one d
    """
    if not measures:
        raise ValueError("density_context needs at least one measure")
    arrays = [_vector(mu) for mu in measures]
    exact = all(a.dtype == object for a in arrays)
    if not exact:
        arrays = [a.astype(np.float64) for a in arrays]
    xi = reduce(lambda acc, a: acc + a, arrays[1:], arrays[0].copy())
    zero = _one(exact) * 0
    densities = []
    for a in arrays:
        dens = np.array([p / x if x != 0 else zero for p, x in zip(a, xi)], dtype=xi.dtype)
        densities.append(dens)
    return DensityContext(xi, densities)


def law_from_densities(ctx: DensityContext, weights: Sequence, n: int) -> MomentTensor:
    """
    Group law built from densities: sum_i w_i * densities_i^{(x)n} * xi^{(x)n}.

    :param ctx: DensityContext over the mixture's components
    :param weights: One weight per density
    :param n: Group size
    """
    if len(weights) != len(ctx.densities):
        raise ValueError(f"Need one weight per density: {len(weights)} vs {len(ctx.densities)}")
    xi_power = tensor_power(ctx.xi, n).entries
    total = None
    for w, dens in zip(weights, ctx.densities):
        term = tensor_power(dens, n).entries * xi_power * w
        total = term if total is None else total + term
    return MomentTensor(np.asarray(total, dtype=ctx.xi.dtype), n, len(ctx.xi), DENSE)


def _multi_key(ms: Sequence[int]) -> str:
    return '.'.join(str(a) for a in ms)


def tensor_to_json(T: MomentTensor) -> dict:
    """
    {order, dim, layout, entries}: dense entries row-major, sym entries keyed
    by sorted multi-index "i1.i2...in"; rationals as "p/q" strings.
    """
    if T.layout == DENSE:
        entries = [format_scalar(x) for x in np.atleast_1d(T.entries).reshape(-1)]
    else:
        multisets = sym_basis(T.dim, T.order)[0]
        entries = {_multi_key(ms): format_scalar(x) for ms, x in zip(multisets, T.entries)}
    return {'order': T.order, 'dim': T.dim, 'layout': T.layout, 'entries': entries}


def tensor_from_json(data: dict) -> MomentTensor:
    """Inverse of tensor_to_json"""
    try:
        order, dim, layout, raw = data['order'], data['dim'], data['layout'], data['entries']
    except (KeyError, TypeError) as e:
        raise ValueError(f"Tensor JSON missing field: {e}") from e
    if layout == DENSE:
        values = [parse_scalar(x) for x in raw]
        shape = (dim,) * order
    elif layout == SYM:
        multisets = sym_basis(dim, order)[0]
        try:
            values = [parse_scalar(raw[_multi_key(ms)]) for ms in multisets]
        except KeyError as e:
            raise ValueError(f"Tensor JSON missing sym entry {e}") from e
        shape = (len(multisets),)
    else:
        raise ValueError(f"Unknown layout '{layout}'")
    exact = all(is_exact(v) for v in values)
    arr = np.array(values, dtype=object if exact else np.float64)
    if arr.size != math.prod(shape):
        raise ValueError(f"Tensor JSON has {arr.size} entries, expected {math.prod(shape)}")
    return MomentTensor(arr.reshape(shape), order, dim, layout)
