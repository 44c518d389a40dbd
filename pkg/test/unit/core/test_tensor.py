"""
Tests for tensor.py - group laws, layouts, marginals and ranks
"""
import unittest
import sys
import os
import math
from fractions import Fraction as F

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', '..'))

import numpy as np

from groupmix.core.config import GroupMixConfig
from groupmix.core.measures import DiscreteMeasure, Mixture, canonicalize, random_mixture
from groupmix.core.tensor import (DENSE, SYM, MomentTensor, decompress, density_context, group_law, inner,
                                  law_from_densities, marginalize, max_asymmetry, multiplicity,
                                  power_matrix, rank_of_powers, sym_basis, sym_compress, sym_size,
                                  symmetrize, tensor_distance, tensor_from_json, tensor_power,
                                  tensor_to_json)


def mu(*probs):
    return DiscreteMeasure(list(probs))


def half_half():
    return Mixture([F(1)], [mu(F(1, 2), F(1, 2))])


def exact_mixture(seed, d, m):
    """Random exact mixture with small denominators"""
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(m):
        counts = rng.integers(1, 10, size=d)
        comps.append(mu(*[F(int(c), int(counts.sum())) for c in counts]))
    weights = rng.integers(1, 10, size=m)
    return canonicalize([F(int(w), int(weights.sum())) for w in weights], comps)


class TestSymBasis(unittest.TestCase):
    """Tests for multiset indexing"""

    def test_sizes(self):
        """Test C(d+n-1, n) entries and multiplicities summing to d**n"""
        for d in range(2, 5):
            for n in range(0, 5):
                multisets, position, mults = sym_basis(d, n)
                self.assertEqual(len(multisets), sym_size(d, n))
                self.assertEqual(sum(mults), d ** n)
                self.assertEqual(position[multisets[-1]], len(multisets) - 1)

    def test_multiplicity(self):
        """Test multinomial multiplicities"""
        self.assertEqual(multiplicity((0, 0, 1)), 3)
        self.assertEqual(multiplicity((0, 1, 2)), 6)
        self.assertEqual(multiplicity(()), 1)


class TestGroupLaw(unittest.TestCase):
    """Tests for tensor_power and group_law"""

    def test_order_zero(self):
        """Test V_0 is the scalar 1"""
        P = half_half()
        self.assertEqual(group_law(P, 0).entries[()], 1)
        self.assertEqual(group_law(P, 0, SYM).entries.tolist(), [1])

    def test_fair_coin(self):
        """Test the law of two fair flips"""
        T = group_law(half_half(), 2)
        self.assertEqual(T.entries.tolist(), [[F(1, 4), F(1, 4)], [F(1, 4), F(1, 4)]])
        self.assertTrue(T.exact)
        self.assertEqual(T.mass(), 1)

    def test_tensor_power(self):
        """Test outer powers in both layouts"""
        T = tensor_power([F(1, 3), F(2, 3)], 2)
        self.assertEqual(T.entries[0, 1], F(2, 9))
        S = tensor_power([F(1, 3), F(2, 3)], 2, SYM)
        self.assertEqual(S.entries.tolist(), [F(1, 9), F(2, 9), F(4, 9)])
        self.assertEqual(S.mass(), 1)

    def test_layouts_agree(self):
        """Test sym group laws decompress to the dense law"""
        for seed in range(5):
            P = exact_mixture(seed, 3, 2)
            for n in range(4):
                self.assertEqual(decompress(group_law(P, n, SYM)), group_law(P, n, DENSE))
                self.assertEqual(sym_compress(group_law(P, n, DENSE)), group_law(P, n, SYM))

    def test_float_mass(self):
        """Test float laws have unit mass"""
        P = random_mixture(3, 3, 7)
        for layout in (DENSE, SYM):
            self.assertAlmostEqual(float(group_law(P, 4, layout).mass()), 1.0, places=12)

    def test_dense_cap(self):
        """Test the dense cap points to the sym layout"""
        config = GroupMixConfig.get_instance()
        old = config.get('tensor.dense_cap')
        config.set('tensor.dense_cap', 100)
        try:
            with self.assertRaisesRegex(ValueError, "dense entry cap exceeded"):
                group_law(half_half(), 7)
            self.assertEqual(group_law(half_half(), 7, SYM).entries.shape, (8,))
        finally:
            config.set('tensor.dense_cap', old)

    def test_bad_shapes(self):
        """Test MomentTensor validates its shape and layout"""
        with self.assertRaises(ValueError):
            MomentTensor(np.zeros((2, 3)), 2, 2)
        with self.assertRaises(ValueError):
            MomentTensor(np.zeros(3), 2, 2, layout='packed')
        with self.assertRaises(ValueError):
            group_law(half_half(), -1)


class TestMarginalize(unittest.TestCase):
    """Tests for marginal consistency"""

    def test_exact_consistency(self):
        """Test marginals of V_n equal V_q exactly in both layouts"""
        P = Mixture([F(1, 3), F(2, 3)], [mu(F(1, 2), F(1, 4), F(1, 4)), mu(0, F(1, 3), F(2, 3))])
        for n in range(5):
            for q in range(n + 1):
                for layout in (DENSE, SYM):
                    self.assertEqual(marginalize(group_law(P, n, layout), q), group_law(P, q, layout))

    def test_float_consistency(self):
        """Test float marginals within 1e-12"""
        P = random_mixture(2, 3, 3)
        T = marginalize(group_law(P, 5), 2)
        self.assertLessEqual(tensor_distance(T, group_law(P, 2))[0], 1e-12)

    def test_random_mixtures(self):
        """Test every marginal of many random laws up to n = 5"""
        for seed in range(100):
            P = random_mixture(2 + seed % 2, 1 + seed % 3, seed)
            laws = [group_law(P, n) for n in range(6)]
            for n in range(6):
                for q in range(n + 1):
                    gap = tensor_distance(marginalize(laws[n], q), laws[q])[0]
                    self.assertLessEqual(gap, 1e-12, f"seed {seed}, n={n}, q={q}")

    def test_range(self):
        """Test q outside [0, n] is rejected"""
        with self.assertRaises(ValueError):
            marginalize(group_law(half_half(), 2), 3)


class TestSymmetry(unittest.TestCase):
    """Tests for compression and symmetrization"""

    def asymmetric(self):
        entries = np.array([[F(1, 2), F(1, 4)], [F(0), F(1, 4)]], dtype=object)
        return MomentTensor(entries, 2, 2)

    def test_compress_rejects_asymmetric(self):
        """Test the error names the offending index"""
        T = self.asymmetric()
        worst, where = max_asymmetry(T)
        self.assertEqual(worst, F(1, 4))
        with self.assertRaisesRegex(ValueError, "not symmetric"):
            sym_compress(T)

    def test_symmetrize(self):
        """Test symmetrization averages mirrored entries and keeps mass"""
        S = symmetrize(self.asymmetric())
        self.assertEqual(S.entries[0, 1], F(1, 8))
        self.assertEqual(S.entries[1, 0], F(1, 8))
        self.assertEqual(S.mass(), 1)
        self.assertEqual(max_asymmetry(S)[0], 0)

    def test_symmetrize_fixes_symmetric(self):
        """Test symmetric tensors are unchanged"""
        T = group_law(half_half(), 3)
        self.assertEqual(symmetrize(T), T)


class TestDistanceAndInner(unittest.TestCase):
    """Tests for tensor_distance and inner"""

    def test_distance(self):
        """Test max-abs is exact and l2 matches the dense norm"""
        P = Mixture([F(1)], [mu(1, 0)])
        Q = half_half()
        max_abs, l2 = tensor_distance(group_law(P, 2), group_law(Q, 2))
        self.assertEqual(max_abs, F(3, 4))
        self.assertAlmostEqual(l2, math.sqrt(F(9, 16) + 3 * F(1, 16)))
        sym = tensor_distance(group_law(P, 2, SYM), group_law(Q, 2, SYM))
        self.assertEqual(sym[0], max_abs)
        self.assertAlmostEqual(sym[1], l2)

    def test_mixed_layouts(self):
        """Test mixed layouts compare in sym layout"""
        P = half_half()
        self.assertEqual(tensor_distance(group_law(P, 3), group_law(P, 3, SYM))[0], 0)

    def test_shape_mismatch(self):
        """Test different orders cannot be compared"""
        with self.assertRaises(ValueError):
            tensor_distance(group_law(half_half(), 2), group_law(half_half(), 3))

    def test_inner(self):
        """Test sym inner product equals the dense one"""
        P = exact_mixture(11, 3, 2)
        Q = exact_mixture(12, 3, 2)
        dense = inner(group_law(P, 3), group_law(Q, 3))
        self.assertEqual(inner(group_law(P, 3, SYM), group_law(Q, 3, SYM)), dense)


class TestRank(unittest.TestCase):
    """Tests for power_matrix and rank_of_powers"""

    def test_noncollinear_full_rank(self):
        """Test k pairwise non-collinear vectors have independent (k-1)-th powers"""
        vectors = [[1, 0], [0, 1], [1, 1], [1, 2]]
        self.assertEqual(rank_of_powers(vectors, 3), 4)
        self.assertEqual(rank_of_powers(vectors, 2), 3)

    def test_collinear(self):
        """Test collinear vectors share one power direction"""
        self.assertEqual(rank_of_powers([[1, 2, 3], [2, 4, 6]], 4), 1)

    def test_segment_rank(self):
        """Test 2m points of a segment span 2m-1 dimensions at power 2m-2"""
        vectors = [[1 - F(i, 5), F(i, 5)] for i in range(6)]
        self.assertEqual(rank_of_powers(vectors, 4), 5)

    def test_float_path(self):
        """Test SVD rank agrees on well-conditioned input"""
        vectors = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0]]
        self.assertEqual(rank_of_powers(vectors, 2), 3)
        self.assertEqual(rank_of_powers(vectors, 1), 2)

    def test_weighted_gram(self):
        """Test sqrt-multiplicity scaling reproduces dense inner products"""
        u, v = [0.2, 0.3, 0.5], [0.6, 0.1, 0.3]
        M = power_matrix([u, v], 3)
        dense = np.sum(tensor_power(u, 3).entries * tensor_power(v, 3).entries)
        self.assertAlmostEqual(M[:, 0] @ M[:, 1], dense)

    def test_errors(self):
        """Test bad rank inputs"""
        with self.assertRaises(ValueError):
            rank_of_powers([], 2)
        with self.assertRaises(ValueError):
            rank_of_powers([[1, 0]], 0)
        with self.assertRaises(ValueError):
            rank_of_powers([[1, 0], [1, 0, 0]], 1)


class TestDensities(unittest.TestCase):
    """Tests for density_context and law_from_densities"""

    def test_densities(self):
        """Test xi dominates and densities recover the measures"""
        measures = [mu(1, 0, 0), mu(F(1, 2), F(1, 2), 0)]
        ctx = density_context(measures)
        self.assertEqual(ctx.xi.tolist(), [F(3, 2), F(1, 2), 0])
        self.assertEqual(ctx.densities[0].tolist(), [F(2, 3), 0, 0])
        self.assertEqual(ctx.measure(1).tolist(), [F(1, 2), F(1, 2), 0])

    def test_law_from_densities(self):
        """Test the density product form equals the group law"""
        P = Mixture([F(1, 3), F(2, 3)], [mu(1, 0, 0), mu(0, F(1, 2), F(1, 2))])
        ctx = density_context(list(P.components))
        for n in range(4):
            self.assertEqual(law_from_densities(ctx, list(P.weights), n), group_law(P, n))


class TestTensorJson(unittest.TestCase):
    """Tests for tensor_to_json / tensor_from_json"""

    def test_sym_keys(self):
        """Test sym entries are keyed by sorted multi-index"""
        payload = tensor_to_json(group_law(half_half(), 2, SYM))
        self.assertEqual(payload['entries'], {'0.0': '1/4', '0.1': '1/4', '1.1': '1/4'})
        self.assertEqual(tensor_from_json(payload), group_law(half_half(), 2, SYM))

    def test_dense(self):
        """Test dense payloads read back"""
        T = group_law(half_half(), 3)
        self.assertEqual(tensor_from_json(tensor_to_json(T)), T)

    def test_malformed(self):
        """Test bad payloads"""
        with self.assertRaises(ValueError):
            tensor_from_json({'order': 2})
        with self.assertRaises(ValueError):
            tensor_from_json({'order': 1, 'dim': 2, 'layout': 'sym', 'entries': {'0': '1'}})
        with self.assertRaises(ValueError):
            tensor_from_json({'order': 1, 'dim': 2, 'layout': 'dense', 'entries': ['1']})


if __name__ == '__main__':
    unittest.main()
