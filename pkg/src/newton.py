"""
Newton polytope helpers for choosing Gram bases.

Membership of a lattice point in the convex hull of a polynomial's support is decided exactly
by a phase-one simplex over Fractions (Bland's rule, so it always terminates).
"""

import itertools
from fractions import Fraction

from src.exactmath import grlex_key


def in_convex_hull(point, vertices):
    """
    Decide exactly whether ``point`` is a convex combination of ``vertices``.

    Solves the phase-one problem: minimize the sum of artificial variables subject to
    sum_i lambda_i v_i = point, sum_i lambda_i = 1, lambda >= 0.

    Args:
    point (tuple): Integer or rational coordinates.
    vertices (list): Points of the same dimension.

    Returns:
    bool: True iff the point lies in the hull.
    """
    vertices = [tuple(v) for v in vertices]
    if not vertices:
        return False
    if tuple(point) in set(vertices):
        return True
    dim = len(point)
    cols = len(vertices)
    rows = []
    for r in range(dim):
        rows.append([Fraction(v[r]) for v in vertices] + [Fraction(point[r])])
    rows.append([Fraction(1)] * cols + [Fraction(1)])
    for row in rows:
        if row[-1] < 0:
            row[:] = [-x for x in row]
    height = len(rows)
    # artificial columns cols..cols+height-1 start in the basis
    tableau = []
    for r, row in enumerate(rows):
        artificial = [Fraction(1) if k == r else Fraction(0) for k in range(height)]
        tableau.append(row[:-1] + artificial + [row[-1]])
    width = cols + height
    cost = [-sum(tableau[r][j] for r in range(height)) for j in range(cols)]
    cost += [Fraction(0)] * height + [-sum(tableau[r][-1] for r in range(height))]
    basis = [cols + r for r in range(height)]

    while True:
        entering = next((j for j in range(width) if cost[j] < 0), None)
        if entering is None:
            break
        best = None
        for r in range(height):
            a = tableau[r][entering]
            if a > 0:
                ratio = tableau[r][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:
            # unbounded direction cannot occur for a bounded phase-one objective
            break
        pivot_row = best[1]
        pivot = tableau[pivot_row][entering]
        tableau[pivot_row] = [x / pivot for x in tableau[pivot_row]]
        for r in range(height):
            if r != pivot_row and tableau[r][entering]:
                factor = tableau[r][entering]
                tableau[r] = [x - factor * y for x, y in zip(tableau[r], tableau[pivot_row])]
        factor = cost[entering]
        cost = [x - factor * y for x, y in zip(cost, tableau[pivot_row])]
        basis[pivot_row] = entering
    return cost[-1] == 0


def half_degree_candidates(support):
    """Lattice points u whose doubles pass the bounding-box and degree filters of ``support``."""
    support = list(support)
    dim = len(support[0])
    low = [min(m[i] for m in support) for i in range(dim)]
    high = [max(m[i] for m in support) for i in range(dim)]
    deg_low = min(sum(m) for m in support)
    deg_high = max(sum(m) for m in support)
    ranges = [range((low[i] + 1) // 2, high[i] // 2 + 1) for i in range(dim)]
    for u in itertools.product(*ranges):
        if deg_low <= 2 * sum(u) <= deg_high:
            yield tuple(u)


def half_newton_points(support):
    """
    Lattice points u with 2u in the Newton polytope of ``support``.

    Args:
    support (Iterable[tuple]): Exponent vectors of the polynomial.

    Returns:
    list: Points in ascending graded-lex order.
    """
    support = list(support)
    if not support:
        return []
    support_set = set(support)
    points = []
    for u in half_degree_candidates(support):
        doubled = tuple(2 * e for e in u)
        if doubled in support_set or in_convex_hull(doubled, support):
            points.append(u)
    return sorted(points, key=grlex_key)


def full_basis(dim, half_degree):
    """All exponent vectors of total degree at most ``half_degree``, graded-lex ordered."""
    points = [u for u in itertools.product(range(half_degree + 1), repeat=dim) if sum(u) <= half_degree]
    return sorted(points, key=grlex_key)


def prune_diagonal(basis, support):
    """
    Drop basis points whose Gram diagonal entry is forced to zero.

    A point u goes when 2u is not in the support and is not u_i + u_j for two distinct remaining
    points; repeated until nothing changes.
    """
    support = set(support)
    basis = list(basis)
    while True:
        sums = set()
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                sums.add(tuple(a + b for a, b in zip(basis[i], basis[j])))
        keep = [u for u in basis if tuple(2 * e for e in u) in support or tuple(2 * e for e in u) in sums]
        if len(keep) == len(basis):
            return keep
        basis = keep
