"""
Random groups drawn from a mixture, their empirical laws, and the
two-atom reduction to mixtures of binomials.
"""
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from scipy.stats import binom

from groupmix.core.config import setting
from groupmix.core.measures import Mixture
from groupmix.core.tensor import DENSE, MomentTensor, check_dense_cap, sym_basis


class GroupDataset:
    """
    N groups of n atom indices each.
    """

    def __init__(self, groups, d: int, seed: Optional[int] = None, source: Optional[Mixture] = None):
        """
        :param groups: (N, n) integer array, one group per row
        :param d: Atom count
        :param seed: Seed the groups were drawn with, if any
        :param source: Mixture the groups were drawn from, if known
        """
        groups = np.asarray(groups)
        if groups.ndim != 2:
            raise ValueError(f"Groups must form an (N, n) array, got shape {groups.shape}")
        if groups.size and not np.issubdtype(groups.dtype, np.integer):
            raise ValueError(f"Atom indices must be integers, got dtype {groups.dtype}")
        if groups.size and (groups.min() < 0 or groups.max() >= d):
            raise ValueError(f"Atom index out of range [0, {d})")
        self.groups = groups.astype(np.int64)
        self.d = d
        self.seed = seed
        self.source = source

    @property
    def n(self) -> int:
        """Group size"""
        return self.groups.shape[1]

    def __len__(self) -> int:
        return self.groups.shape[0]

    def __repr__(self) -> str:
        return f"GroupDataset(N={len(self)}, n={self.n}, d={self.d}, seed={self.seed})"


def sample_groups(P: Mixture, n: int, N: int, seed: int, block_size: Optional[int] = None) -> GroupDataset:
    """
    Draw N groups: a component by the mixing weights, then n iid atoms from it.

    Groups are generated in blocks; block b uses the RNG stream keyed by
    (seed, b), so a dataset is reproducible whatever order blocks run in.

    :param P: Mixture to sample from
    :param n: Group size (>= 1)
    :param N: Number of groups (>= 1)
    :param seed: RNG seed
    :param block_size: Groups per RNG stream (simulate.block_size)
    """
    if n < 1:
        raise ValueError(f"Group size must be >= 1, got {n}")
    if N < 1:
        raise ValueError(f"Number of groups must be >= 1, got {N}")
    block_size = int(block_size or setting('simulate.block_size', 1024))
    Pf = P.to_float()
    weights = Pf.weights / Pf.weights.sum()
    cdf = np.cumsum(Pf.component_matrix(), axis=1)

    blocks = []
    for b in range(math.ceil(N / block_size)):
        rng = np.random.default_rng([seed, b])
        count = min(block_size, N - b * block_size)
        comp = rng.choice(Pf.order, size=count, p=weights)
        u = rng.random((count, n))
        # inverse CDF: number of cumulative masses at or below u
        atoms = np.sum(u[:, :, None] >= cdf[comp][:, None, :], axis=2)
        blocks.append(np.minimum(atoms, P.d - 1))
    return GroupDataset(np.concatenate(blocks, axis=0), P.d, seed=seed, source=P)


def empirical_moment(data: GroupDataset, exact: bool = False) -> MomentTensor:
    """
    Frequency tensor of the ordered groups (dense, order n, mass 1).

    :param exact: Hold frequencies as Fractions count/N
    """
    if len(data) == 0:
        raise ValueError("Empirical moment of an empty dataset")
    check_dense_cap(data.d, data.n)
    shape = (data.d,) * data.n
    flat = np.ravel_multi_index(tuple(data.groups.T), shape)
    counts = np.bincount(flat, minlength=data.d ** data.n)
    if exact:
        entries = np.array([Fraction(int(c), len(data)) for c in counts], dtype=object)
    else:
        entries = counts / len(data)
    return MomentTensor(entries.reshape(shape), data.n, data.d, DENSE)


def _atom_one_masses(P: Mixture):
    if P.d != 2:
        raise ValueError(f"Binomial reduction needs d = 2, got d={P.d}")
    return [c.probs[1] for c in P.components]


def bernoulli_reduce(P: Mixture, n: int) -> np.ndarray:
    """
    pmf of the group sum: sum_i w_i Binomial(n, eps_i), eps_i the atom-1 mass
    of component i.

    :param P: Mixture over d = 2 atoms
    :param n: Group size (>= 0)
    :return: Length n+1 pmf (Fractions when P is exact)
    """
    eps = _atom_one_masses(P)
    if n < 0:
        raise ValueError(f"Group size must be >= 0, got {n}")
    if P.exact:
        pmf = [sum((w * math.comb(n, k) * e ** k * (1 - e) ** (n - k) for w, e in zip(P.weights, eps)),
                   Fraction(0)) for k in range(n + 1)]
        return np.array(pmf, dtype=object)
    ks = np.arange(n + 1)
    return sum(w * binom.pmf(ks, n, e) for w, e in zip(P.weights, eps))


def mixing_moments(P: Mixture, n: int) -> np.ndarray:
    """(sum_i w_i eps_i^k) for k = 0..n, eps_i the atom-1 mass (d = 2)"""
    eps = _atom_one_masses(P)
    moments = [sum((w * e ** k for w, e in zip(P.weights, eps)), 0 * P.weights[0]) for k in range(n + 1)]
    return np.array(moments, dtype=object if P.exact else np.float64)


def sum_pushforward(T: MomentTensor) -> np.ndarray:
    """
    Law of the number of atom-1 coordinates under a d = 2 tensor.
    Works on dense (possibly asymmetric) and sym tensors.
    """
    if T.dim != 2:
        raise ValueError(f"Sum statistic needs d = 2, got d={T.dim}")
    zero = T.entries.dtype.type(0) if not T.exact else Fraction(0)
    pmf = [zero] * (T.order + 1)
    if T.layout == DENSE:
        ones = np.indices((2,) * T.order).sum(axis=0) if T.order else np.array(0)
        for k in range(T.order + 1):
            pmf[k] = T.entries[ones == k].sum() if T.order else T.entries[()]
    else:
        multisets, _, mults = sym_basis(2, T.order)
        for ms, mult, entry in zip(multisets, mults, T.entries):
            pmf[sum(ms)] += mult * entry
    return np.array(pmf, dtype=object if T.exact else np.float64)


def save_dataset(data: GroupDataset, path):
    """
    Write a dataset as CSV (header x1..xn) or JSON-lines ({"group": [...]}),
    chosen by the .csv / .jsonl suffix.
    """
    path = Path(path)
    if path.suffix == '.csv':
        frame = pd.DataFrame(data.groups, columns=[f"x{i + 1}" for i in range(data.n)])
        frame.to_csv(path, index=False)
    elif path.suffix == '.jsonl':
        with open(path, 'w') as f:
            for row in data.groups.tolist():
                f.write(json.dumps({'group': row}) + '\n')
    else:
        raise ValueError(f"Unknown dataset format '{path.suffix}', expected .csv or .jsonl")


def load_dataset(path, d: Optional[int] = None) -> GroupDataset:
    """
    Read a dataset written by save_dataset.

    :param d: Atom count; inferred as max index + 1 (at least 2) when omitted
    :raises ValueError: on malformed rows or out-of-range atoms
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Dataset file not found: {path}")
    if path.suffix == '.csv':
        frame = pd.read_csv(path)
        expected = [f"x{i + 1}" for i in range(frame.shape[1])]
        if list(frame.columns) != expected:
            raise ValueError(f"CSV header must be {','.join(expected)}, got {','.join(map(str, frame.columns))}")
        if frame.isnull().values.any():
            raise ValueError(f"Missing values in {path}")
        groups = frame.to_numpy()
    elif path.suffix == '.jsonl':
        rows = []
        with open(path, 'r') as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    rows.append(json.loads(line)['group'])
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ValueError(f"{path}:{lineno}: expected {{\"group\": [...]}}: {e}") from e
        if len({len(r) for r in rows}) > 1:
            raise ValueError(f"Groups in {path} have different sizes")
        groups = np.array(rows)
    else:
        raise ValueError(f"Unknown dataset format '{path.suffix}', expected .csv or .jsonl")

    if groups.size == 0:
        raise ValueError(f"Dataset {path} is empty")
    if d is None:
        d = max(2, int(groups.max()) + 1)
    return GroupDataset(groups, d)
