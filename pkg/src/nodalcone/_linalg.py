"""Exact linear algebra over the rationals (fraction-free elimination)."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence


def _integer_row(row: Sequence[Fraction]) -> list[int]:
    den = math.lcm(*(Fraction(v).denominator for v in row)) if row else 1
    ints = [int(Fraction(v) * den) for v in row]
    g = math.gcd(*ints)
    return [v // g for v in ints] if g > 1 else ints


def rref_pivots(rows: list[list[int]], ncols: int) -> tuple[list[list[int]], list[int]]:
    """Integer row echelon form, reduced so each pivot column is zero elsewhere.

    Rows are kept primitive (content divided out) to contain coefficient growth.
    """
    rows = [list(r) for r in rows if any(r)]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pr = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if pr is None:
            continue
        rows[r], rows[pr] = rows[pr], rows[r]
        prow = rows[r]
        p = prow[col]
        for i in range(len(rows)):
            if i == r:
                continue
            a = rows[i][col]
            if a:
                row = rows[i]
                new = [p * x - a * y for x, y in zip(row, prow)]
                g = math.gcd(*new)
                rows[i] = [v // g for v in new] if g > 1 else new
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return rows[:r], pivots


def nullspace(matrix: Sequence[Sequence], ncols: int) -> list[list[Fraction]]:
    """Basis of ``{v : matrix @ v = 0}`` over the rationals."""
    rows = [_integer_row(r) for r in matrix]
    reduced, pivots = rref_pivots(rows, ncols)
    free = [c for c in range(ncols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, pc in zip(reduced, pivots):
            v[pc] = Fraction(-row[f], row[pc])
        basis.append(v)
    return basis
