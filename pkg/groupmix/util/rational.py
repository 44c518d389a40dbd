"""
Exact linear algebra over the rationals.

Matrices are lists of rows of Fraction (ints are promoted). Elimination is
fraction-exact, so ranks and kernels are certificates rather than
estimates.
"""
from fractions import Fraction
from typing import List, Sequence, Tuple


def as_fraction_rows(matrix: Sequence[Sequence]) -> List[List[Fraction]]:
    """
    Copy a matrix into fresh rows of Fraction.

    :param matrix: Sequence of rows with int/Fraction entries
    :return: New list of lists of Fraction
    """
    rows = [[Fraction(x) for x in row] for row in matrix]
    if rows:
        n_cols = len(rows[0])
        for row in rows:
            if len(row) != n_cols:
                raise ValueError("Ragged matrix: rows have different lengths")
    return rows


def row_echelon(matrix: Sequence[Sequence]) -> Tuple[List[List[Fraction]], List[int]]:
    """
    Reduced row echelon form by exact Gauss-Jordan elimination.

    :param matrix: Rows of exact values
    :return: (rref rows, pivot column per pivot row)
    """
    rows = as_fraction_rows(matrix)
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    pivots = []
    piv_r = 0
    for piv_c in range(n_cols):
        if piv_r == n_rows:
            break
        for i_row in range(piv_r, n_rows):
            if rows[i_row][piv_c] != 0:
                break
        else:
            continue
        if i_row != piv_r:
            rows[piv_r], rows[i_row] = rows[i_row], rows[piv_r]
        fp = rows[piv_r][piv_c]
        rows[piv_r] = [x / fp for x in rows[piv_r]]
        for r in range(n_rows):
            if r == piv_r:
                continue
            fr = rows[r][piv_c]
            if fr == 0:
                continue
            rows[r] = [a - fr * b for a, b in zip(rows[r], rows[piv_r])]
        pivots.append(piv_c)
        piv_r += 1
    return rows, pivots


def exact_rank(matrix: Sequence[Sequence]) -> int:
    """
    Rank of a rational matrix.

    :param matrix: Rows of exact values
    :return: Exact rank
    """
    if not matrix or not len(matrix[0]):
        return 0
    return len(row_echelon(matrix)[1])


def nullspace(matrix: Sequence[Sequence]) -> List[List[Fraction]]:
    """
    Basis of the right kernel {x : A x = 0}.

    One basis vector per free column, with that column set to 1.

    :param matrix: Rows of exact values
    :return: List of kernel basis vectors
    """
    rref, pivots = row_echelon(matrix)
    n_cols = len(rref[0]) if rref else 0
    free_cols = [c for c in range(n_cols) if c not in set(pivots)]
    basis = []
    for free in free_cols:
        vec = [Fraction(0)] * n_cols
        vec[free] = Fraction(1)
        for r, c in enumerate(pivots):
            vec[c] = -rref[r][free]
        basis.append(vec)
    return basis


def mat_vec(matrix: Sequence[Sequence], vec: Sequence) -> List[Fraction]:
    """Exact matrix-vector product."""
    return [sum((Fraction(a) * Fraction(b) for a, b in zip(row, vec)), Fraction(0)) for row in matrix]
