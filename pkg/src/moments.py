"""
Mixed moments of centered Gaussian vectors.

A vector is described by a ``Construction``: X_k = sum_j x_kj U_j over independent standard
Gaussians U_j, where each x_kj is a named variable or a rational constant. Moments are computed
three ways:

* ``moment_by_coefficient``: coefficient extraction from a power of the covariance form,
* ``moment_by_wick``: pairing enumeration, used as an independent oracle,
* ``symbolic_moment``: one exponent kept symbolic, normalized by (2m-1)!!.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Tuple, Union

from src.errors import DomainError, ResourceError, StructuralError
from src.exactmath import MultiPoly, coefficient_poly, poly_pow, to_fraction

Cell = Union[str, Fraction]

DEFAULT_PAIRING_BUDGET = 24


def exponent_vector(values):
    """
    Validate an exponent vector (m_1, ..., m_n); X_j is raised to 2*m_j.

    Args:
    values (Iterable[int]): Exponents.

    Returns:
    tuple: The exponents as a tuple of ints.
    """
    result = tuple(values)
    if not result:
        raise DomainError("exponent vector must not be empty")
    for value in result:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise DomainError(f"exponents must be positive integers, got {result}")
    return result


def double_factorial(k):
    """
    k!! for odd k >= -1, with (-1)!! = 1.

    Args:
    k (int): Odd integer, at least -1.

    Returns:
    int: The double factorial.
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < -1 or k % 2 == 0:
        raise DomainError(f"double factorial needs an odd integer >= -1, got {k!r}")
    result = 1
    for i in range(k, 0, -2):
        result *= i
    return result


def _fresh_names(prefix, count, taken):
    names = []
    for i in range(1, count + 1):
        name = f"{prefix}{i}"
        while name in taken:
            name = "_" + name
        names.append(name)
    return tuple(names)


@dataclass(frozen=True)
class Construction:
    """
    Coefficient grid of X_k = sum_j rows[k][j] * U_j.

    Cells are variable names (str) or rational constants. Every name occurs in exactly one cell;
    the ring is the tuple of names in row-major order.
    """

    rows: Tuple[Tuple[Cell, ...], ...]

    def __post_init__(self):
        n = len(self.rows)
        if n == 0:
            raise StructuralError("a construction needs at least one row")
        cleaned = []
        seen = set()
        for row in self.rows:
            if len(row) != n:
                raise StructuralError(f"construction must be {n}x{n}, got a row of {len(row)}")
            cells = []
            for cell in row:
                if isinstance(cell, str):
                    if cell in seen:
                        raise StructuralError(f"variable {cell!r} used in two cells")
                    seen.add(cell)
                    cells.append(cell)
                else:
                    cells.append(to_fraction(cell))
            cleaned.append(tuple(cells))
        object.__setattr__(self, "rows", tuple(cleaned))

    @classmethod
    def lower_triangular(cls, n):
        """Full-rank construction X_1 = U_1, X_i = sum_{j<i} x_ij U_j + U_i."""
        rows = []
        for i in range(1, n + 1):
            row = []
            for j in range(1, n + 1):
                if j < i:
                    row.append(f"x{i}{j}" if n < 10 else f"x{i}_{j}")
                else:
                    row.append(Fraction(1) if i == j else Fraction(0))
            rows.append(tuple(row))
        return cls(tuple(rows))

    @property
    def n(self):
        return len(self.rows)

    @property
    def ring(self):
        return tuple(cell for row in self.rows for cell in row if isinstance(cell, str))

    def entry(self, k, j, ring=None):
        ring = self.ring if ring is None else ring
        cell = self.rows[k][j]
        if isinstance(cell, str):
            return MultiPoly.variable(ring, cell)
        return MultiPoly.constant(ring, cell)

    def is_pure_row(self, k):
        return all(cell == (1 if j == k else 0) and not isinstance(cell, str)
                   for j, cell in enumerate(self.rows[k]))

    def linear_form(self, k, basis_names, ring):
        """X_k as a polynomial in the construction variables and the given U names."""
        form = MultiPoly.zero(ring)
        for j, cell in enumerate(self.rows[k]):
            if isinstance(cell, str) or cell:
                form = form + self.entry(k, j, ring) * MultiPoly.variable(ring, basis_names[j])
        return form

    def describe(self):
        lines = []
        for k, row in enumerate(self.rows):
            parts = []
            for j, cell in enumerate(row):
                if isinstance(cell, str):
                    parts.append(f"{cell}*U{j + 1}")
                elif cell == 1:
                    parts.append(f"U{j + 1}")
                elif cell:
                    parts.append(f"{cell}*U{j + 1}")
            lines.append(f"X{k + 1} = " + (" + ".join(parts) if parts else "0"))
        return ", ".join(lines)


@dataclass(frozen=True)
class CovarianceForm:
    """Symmetric matrix of covariance polynomials Lambda_kl over ``ring``."""

    ring: Tuple[str, ...]
    entries: Tuple[Tuple[MultiPoly, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        for k, row in enumerate(self.entries):
            if len(row) != n:
                raise StructuralError("covariance form must be square")
            for l, value in enumerate(row):
                if value.ring != tuple(self.ring):
                    raise StructuralError("covariance entries must share the form's ring")
                if value != self.entries[l][k]:
                    raise StructuralError(f"covariance form not symmetric at ({k}, {l})")

    @property
    def n(self):
        return len(self.entries)


def covariance(c):
    """Lambda_kl = sum_j x_kj x_lj for a construction."""
    ring = c.ring
    cells = [[c.entry(k, j, ring) for j in range(c.n)] for k in range(c.n)]
    entries = []
    for k in range(c.n):
        row = []
        for l in range(c.n):
            total = MultiPoly.zero(ring)
            for j in range(c.n):
                total = total + cells[k][j] * cells[l][j]
            row.append(total)
        entries.append(tuple(row))
    return CovarianceForm(ring=ring, entries=tuple(entries))


def moment_by_coefficient(cov, m):
    """
    E[prod X_j^(2 m_j)] by coefficient extraction.

    The moment equals prod (2 m_j)! / (2^M M!) times the coefficient of prod t_j^(2 m_j) in
    (sum_kl Lambda_kl t_k t_l)^M, where M = sum m_j.

    Args:
    cov (CovarianceForm): Covariance polynomials.
    m (Sequence[int]): Exponent vector.

    Returns:
    MultiPoly: The moment over ``cov.ring``.
    """
    m = exponent_vector(m)
    if len(m) != cov.n:
        raise StructuralError(f"exponent vector of length {len(m)} for a {cov.n}-dimensional form")
    t_names = _fresh_names("t", cov.n, set(cov.ring))
    ring = tuple(cov.ring) + t_names
    form = MultiPoly.zero(ring)
    for k in range(cov.n):
        for l in range(k, cov.n):
            exps = [0] * len(ring)
            exps[len(cov.ring) + k] += 1
            exps[len(cov.ring) + l] += 1
            weight = 1 if k == l else 2
            form = form + cov.entries[k][l].with_ring(ring) * MultiPoly.monomial(ring, exps, weight)
    total = sum(m)
    targets = {t_names[j]: 2 * m[j] for j in range(cov.n)}
    power = poly_pow(form, total, cap=targets)
    numerator = 1
    for mj in m:
        numerator *= factorial(2 * mj)
    scale = Fraction(numerator, 2 ** total * factorial(total))
    return coefficient_poly(power, targets).with_ring(cov.ring).scale(scale)


def gaussian_moment(cov, powers, budget=DEFAULT_PAIRING_BUDGET):
    """
    E[prod X_j^powers_j] by pairing enumeration.

    Perfect matchings are enumerated by always pairing the first unpaired factor, grouped by the
    multiset of remaining factors, so each distinct multiset is expanded once.

    Args:
    cov (CovarianceForm): Covariance polynomials.
    powers (Sequence[int]): Non-negative powers, any parity.
    budget (int): Maximum number of Gaussian factors.

    Returns:
    MultiPoly: The moment over ``cov.ring``.
    """
    powers = tuple(int(p) for p in powers)
    if len(powers) != cov.n:
        raise StructuralError(f"{len(powers)} powers for a {cov.n}-dimensional form")
    if any(p < 0 for p in powers):
        raise DomainError(f"powers must be non-negative, got {powers}")
    if sum(powers) > budget:
        raise ResourceError(f"{sum(powers)} factors exceed the pairing budget of {budget}")
    zero = MultiPoly.zero(cov.ring)
    if sum(powers) % 2:
        return zero
    memo = {(0,) * cov.n: MultiPoly.constant(cov.ring, 1)}

    def pairings(counts):
        if counts in memo:
            return memo[counts]
        first = next(i for i, c in enumerate(counts) if c)
        rest = list(counts)
        rest[first] -= 1
        total = zero
        for j, multiplicity in enumerate(rest):
            if not multiplicity or cov.entries[first][j].is_zero():
                continue
            remaining = list(rest)
            remaining[j] -= 1
            total = total + cov.entries[first][j] * pairings(tuple(remaining)) * multiplicity
        memo[counts] = total
        return total

    return pairings(powers)


def moment_by_wick(c, m, budget=DEFAULT_PAIRING_BUDGET):
    """
    E[prod X_j^(2 m_j)] for a construction, via ``gaussian_moment``.

    Args:
    c (Construction): Construction of the vector.
    m (Sequence[int]): Exponent vector.
    budget (int): Maximum number of Gaussian factors (2 * sum m).

    Returns:
    MultiPoly: The moment over ``c.ring``.
    """
    m = exponent_vector(m)
    if len(m) != c.n:
        raise StructuralError(f"exponent vector of length {len(m)} for {c.n} rows")
    if 2 * sum(m) > budget:
        raise ResourceError(f"{2 * sum(m)} factors exceed the pairing budget of {budget}")
    return gaussian_moment(covariance(c), [2 * mj for mj in m], budget)


@dataclass(frozen=True)
class SymbolicExponent:
    """The coordinate (0-based) carrying the symbolic exponent m; output divided by (2m-1)!!."""

    coordinate: int = 0
    normalized: bool = True


def normalized_power_moment(k, ring, symbol="m"):
    """E[U^(2m+2k)] / (2m-1)!! = prod_{i=1..k} (2m + 2i - 1) as a polynomial in ``symbol``."""
    m = MultiPoly.variable(ring, symbol)
    result = MultiPoly.constant(ring, 1)
    for i in range(1, k + 1):
        result = result * (m * 2 + (2 * i - 1))
    return result


def symbolic_moment(c, m, s, symbol="m"):
    """
    Normalized moment with one symbolic exponent.

    Computes E[X_s^(2m) prod_{j != s} X_j^(2 m_j)] / (2m-1)!! as a polynomial in the construction
    variables and ``symbol``. Row ``s.coordinate`` must be the pure row U_s; the entry of ``m`` at
    that coordinate is ignored.

    Args:
    c (Construction): Construction of the vector.
    m (Sequence[int]): Exponents; the symbolic slot is a placeholder.
    s (SymbolicExponent): Which coordinate is symbolic.
    symbol (str): Name of the symbolic exponent variable.

    Returns:
    MultiPoly: Polynomial over ``c.ring + (symbol,)``.
    """
    if not s.normalized:
        raise DomainError("the unnormalized symbolic moment is not a polynomial in m")
    m = tuple(m)
    if len(m) != c.n:
        raise StructuralError(f"exponent vector of length {len(m)} for {c.n} rows")
    k0 = s.coordinate
    if not 0 <= k0 < c.n:
        raise DomainError(f"symbolic coordinate {k0} outside 0..{c.n - 1}")
    others = [v for j, v in enumerate(m) if j != k0]
    if others:
        exponent_vector(others)
    if not c.is_pure_row(k0):
        raise DomainError(f"row {k0 + 1} must be the pure basis row U{k0 + 1}")
    if symbol in c.ring:
        raise DomainError(f"symbol {symbol!r} clashes with a construction variable")

    u_names = _fresh_names("U", c.n, set(c.ring) | {symbol})
    work_ring = c.ring + u_names
    product = MultiPoly.constant(work_ring, 1)
    for j in range(c.n):
        if j != k0:
            product = product * poly_pow(c.linear_form(j, u_names, work_ring), 2 * m[j])

    out_ring = c.ring + (symbol,)
    width = len(c.ring)
    factors = {}
    result = MultiPoly.zero(out_ring)
    for monomial, coeff in product.items():
        u_exps = monomial[width:]
        if any(e % 2 for e in u_exps):
            continue
        weight = coeff
        for j, e in enumerate(u_exps):
            if j != k0:
                weight *= double_factorial(e - 1)
        half = u_exps[k0] // 2
        if half not in factors:
            factors[half] = normalized_power_moment(half, out_ring, symbol)
        head = MultiPoly.monomial(out_ring, monomial[:width] + (0,), weight)
        result = result + head * factors[half]
    return result
