"""
Tests for rational.py - exact elimination, rank and kernels
"""
import unittest
import sys
import os
from fractions import Fraction

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', '..'))

from groupmix.util.rational import as_fraction_rows, exact_rank, mat_vec, nullspace, row_echelon


class TestRowEchelon(unittest.TestCase):
    """Tests for Gauss-Jordan elimination"""

    def test_identity(self):
        """Test the identity is its own rref"""
        rref, pivots = row_echelon([[1, 0], [0, 1]])
        self.assertEqual(rref, [[1, 0], [0, 1]])
        self.assertEqual(pivots, [0, 1])

    def test_fraction_exact(self):
        """Test elimination stays exact"""
        rref, pivots = row_echelon([[3, 1], [1, Fraction(1, 3)]])
        self.assertEqual(pivots, [0])
        self.assertEqual(rref[0], [Fraction(1), Fraction(1, 3)])
        self.assertEqual(rref[1], [0, 0])

    def test_row_swap(self):
        """Test a zero leading entry forces a swap"""
        rref, pivots = row_echelon([[0, 2], [4, 0]])
        self.assertEqual(pivots, [0, 1])
        self.assertEqual(rref, [[1, 0], [0, 1]])

    def test_ragged(self):
        """Test ragged input is rejected"""
        with self.assertRaises(ValueError):
            as_fraction_rows([[1, 2], [3]])


class TestRankAndKernel(unittest.TestCase):
    """Tests for exact_rank and nullspace"""

    def test_rank(self):
        """Test rank of small matrices"""
        self.assertEqual(exact_rank([[1, 2], [2, 4]]), 1)
        self.assertEqual(exact_rank([[1, 2, 3], [4, 5, 6], [7, 8, 10]]), 3)
        self.assertEqual(exact_rank([[0, 0], [0, 0]]), 0)
        self.assertEqual(exact_rank([]), 0)

    def test_rank_is_exact_where_floats_fail(self):
        """Test a rank decided by a 1e-30 perturbation"""
        tiny = Fraction(1, 10 ** 30)
        self.assertEqual(exact_rank([[1, 1], [1, 1 + tiny]]), 2)

    def test_nullspace_single_vector(self):
        """Test the kernel of an all-ones row"""
        basis = nullspace([[1, 1]])
        self.assertEqual(basis, [[-1, 1]])

    def test_nullspace_annihilates(self):
        """Test kernel vectors are mapped to zero"""
        matrix = [[1, 2, 3, 4], [0, 1, 1, 2], [1, 3, 4, 6]]
        basis = nullspace(matrix)
        self.assertEqual(len(basis), 4 - exact_rank(matrix))
        for vec in basis:
            self.assertEqual(mat_vec(matrix, vec), [0, 0, 0])

    def test_full_rank_has_trivial_kernel(self):
        """Test invertible matrices have no kernel basis"""
        self.assertEqual(nullspace([[2, 1], [1, 1]]), [])


if __name__ == '__main__':
    unittest.main()
