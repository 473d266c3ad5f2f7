"""
Exact rational arithmetic for gpicert.

Sparse multivariate polynomials over the rationals (``MultiPoly``), dense rational matrices
(``RationalMatrix``) and the two pieces of exact linear algebra the certification pipeline needs:
a pivoted LDL^T factorization and a minimum-norm linear solve. Nothing in this module ever
converts a coefficient to a float.
"""

from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping, Optional, Sequence, Tuple, Union

from src.errors import StructuralError

BigRational = Fraction
Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction]


def grlex_key(monomial):
    """
    Sort key for graded lexicographic order.

    Ascending order puts lower total degree first; within one degree the monomial with the larger
    exponent on the earliest declared variable comes last.

    Args:
    monomial (tuple): Exponent vector.

    Returns:
    tuple: (total degree, exponents).
    """
    return (sum(monomial), tuple(monomial))


def monomial_to_string(monomial, ring):
    """
    Render an exponent vector as ``a^3*b`` (or ``1`` for the constant monomial).

    Args:
    monomial (tuple): Exponent vector.
    ring (tuple): Variable names.

    Returns:
    str: Canonical spelling of the monomial.
    """
    factors = []
    for name, exponent in zip(ring, monomial):
        if exponent == 1:
            factors.append(name)
        elif exponent > 1:
            factors.append(f"{name}^{exponent}")
    return "*".join(factors) if factors else "1"


def to_fraction(value):
    """Coerce an int, Fraction or ``"num/den"`` string to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise StructuralError("booleans are not rational numbers")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise StructuralError(f"cannot use {value!r} as an exact rational")


class MultiPoly:
    """
    Immutable sparse polynomial with rational coefficients over a declared ring.

    ``ring`` is the ordered tuple of variable names; ``terms`` maps exponent tuples (one slot per
    variable) to non-zero Fractions. Two polynomials are equal iff they share the ring and the
    term map.
    """

    __slots__ = ("ring", "_terms")

    def __init__(self, ring, terms=None):
        ring = tuple(ring)
        if len(set(ring)) != len(ring):
            raise StructuralError(f"duplicate variable in ring {ring}")
        clean = {}
        for monomial, coeff in (terms or {}).items():
            monomial = tuple(int(e) for e in monomial)
            if len(monomial) != len(ring):
                raise StructuralError(f"monomial {monomial} does not fit ring {ring}")
            if any(e < 0 for e in monomial):
                raise StructuralError(f"negative exponent in {monomial}")
            coeff = to_fraction(coeff)
            if coeff:
                clean[monomial] = coeff
        self.ring = ring
        self._terms = clean

    @classmethod
    def _raw(cls, ring, terms):
        # trusted constructor: terms already canonical (tuple keys, non-zero Fractions)
        poly = cls.__new__(cls)
        poly.ring = ring
        poly._terms = terms
        return poly

    @classmethod
    def zero(cls, ring):
        return cls._raw(tuple(ring), {})

    @classmethod
    def constant(cls, ring, value):
        ring = tuple(ring)
        value = to_fraction(value)
        return cls._raw(ring, {(0,) * len(ring): value} if value else {})

    @classmethod
    def variable(cls, ring, name):
        ring = tuple(ring)
        if name not in ring:
            raise StructuralError(f"unknown variable {name!r} for ring {ring}")
        monomial = tuple(1 if v == name else 0 for v in ring)
        return cls._raw(ring, {monomial: Fraction(1)})

    @classmethod
    def monomial(cls, ring, exponents, coeff=1):
        return cls(ring, {tuple(exponents): coeff})

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    def items(self):
        """Terms as (monomial, coefficient) pairs in ascending graded-lex order."""
        return sorted(self._terms.items(), key=lambda item: grlex_key(item[0]))

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self.items())

    def is_zero(self):
        return not self._terms

    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def degree_in(self, name):
        index = self._index(name)
        return max((m[index] for m in self._terms), default=-1)

    def is_constant(self):
        return all(not any(m) for m in self._terms)

    def constant_term(self):
        return self._terms.get((0,) * len(self.ring), Fraction(0))

    def _index(self, name):
        try:
            return self.ring.index(name)
        except ValueError:
            raise StructuralError(f"unknown variable {name!r} for ring {self.ring}") from None

    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.ring != self.ring:
                raise StructuralError(f"ring mismatch: {self.ring} vs {other.ring}")
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return MultiPoly.constant(self.ring, other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        terms = dict(self._terms)
        for monomial, coeff in other._terms.items():
            value = terms.get(monomial, 0) + coeff
            if value:
                terms[monomial] = value
            else:
                terms.pop(monomial, None)
        return MultiPoly._raw(self.ring, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly._raw(self.ring, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(other)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return poly_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, k):
        return poly_pow(self, k)

    def scale(self, factor):
        factor = to_fraction(factor)
        if not factor:
            return MultiPoly.zero(self.ring)
        return MultiPoly._raw(self.ring, {m: c * factor for m, c in self._terms.items()})

    def __eq__(self, other):
        if isinstance(other, MultiPoly):
            return self.ring == other.ring and self._terms == other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self._terms == MultiPoly.constant(self.ring, other)._terms
        return NotImplemented

    def __hash__(self):
        return hash((self.ring, frozenset(self._terms.items())))

    def evaluate(self, point):
        """
        Evaluate exactly at a point.

        Args:
        point (Mapping or Sequence): Values by variable name, or positionally in ring order.

        Returns:
        Fraction: The value of the polynomial.
        """
        if isinstance(point, Mapping):
            missing = [v for v in self.ring if v not in point]
            if missing:
                raise StructuralError(f"no value for variables {missing}")
            values = [to_fraction(point[v]) for v in self.ring]
        else:
            values = [to_fraction(v) for v in point]
            if len(values) != len(self.ring):
                raise StructuralError(f"expected {len(self.ring)} values, got {len(values)}")
        total = Fraction(0)
        for monomial, coeff in self._terms.items():
            term = coeff
            for value, exponent in zip(values, monomial):
                if exponent:
                    term *= value ** exponent
            total += term
        return total

    def partial_evaluate(self, values):
        """Fix some variables to rational values; the result lives on the remaining variables."""
        fixed = {self._index(name): to_fraction(v) for name, v in values.items()}
        keep = [i for i in range(len(self.ring)) if i not in fixed]
        terms = {}
        for monomial, coeff in self._terms.items():
            for index, value in fixed.items():
                if monomial[index]:
                    coeff = coeff * value ** monomial[index]
            if not coeff:
                continue
            reduced = tuple(monomial[i] for i in keep)
            terms[reduced] = terms.get(reduced, 0) + coeff
        return MultiPoly(tuple(self.ring[i] for i in keep), terms)

    def with_ring(self, ring):
        """
        Re-embed into another ring.

        Variables may be reordered, added, or dropped as long as the dropped ones do not occur.
        """
        ring = tuple(ring)
        if ring == self.ring:
            return self
        positions = []
        for index, name in enumerate(self.ring):
            if name in ring:
                positions.append((index, ring.index(name)))
            elif any(m[index] for m in self._terms):
                raise StructuralError(f"variable {name!r} occurs but is missing from ring {ring}")
        terms = {}
        for monomial, coeff in self._terms.items():
            target = [0] * len(ring)
            for source, dest in positions:
                target[dest] = monomial[source]
            terms[tuple(target)] = coeff
        return MultiPoly(ring, terms)

    def variables(self):
        """Names of the variables that actually occur, in ring order."""
        return tuple(v for i, v in enumerate(self.ring) if any(m[i] for m in self._terms))

    def to_string(self):
        if not self._terms:
            return "0"
        pieces = []
        for monomial, coeff in self.items():
            sign = "-" if coeff < 0 else "+"
            magnitude = abs(coeff)
            body = monomial_to_string(monomial, self.ring)
            if body == "1":
                text = str(magnitude)
            elif magnitude == 1:
                text = body
            else:
                text = f"{magnitude}*{body}"
            pieces.append((sign, text))
        first_sign, first_text = pieces[0]
        out = ("-" if first_sign == "-" else "") + first_text
        for sign, text in pieces[1:]:
            out += f" {sign} {text}"
        return out

    def __str__(self):
        return self.to_string()

    def __repr__(self):
        return f"MultiPoly({self.ring!r}, {self.to_string()!r})"


def _cap_pairs(ring, cap):
    if not cap:
        return ()
    pairs = []
    for name, limit in cap.items():
        if name not in ring:
            raise StructuralError(f"cap names unknown variable {name!r}")
        pairs.append((ring.index(name), int(limit)))
    return tuple(pairs)


def _multiply_terms(left, right, caps=()):
    out = {}
    for m1, c1 in left.items():
        for m2, c2 in right.items():
            monomial = tuple(x + y for x, y in zip(m1, m2))
            if caps and any(monomial[i] > limit for i, limit in caps):
                continue
            out[monomial] = out.get(monomial, 0) + c1 * c2
    return {m: c for m, c in out.items() if c}


def poly_mul(p, q):
    """
    Exact product of two polynomials over the same ring.

    Args:
    p (MultiPoly): Left factor.
    q (MultiPoly): Right factor.

    Returns:
    MultiPoly: p*q in canonical form.
    """
    if p.ring != q.ring:
        raise StructuralError(f"ring mismatch: {p.ring} vs {q.ring}")
    return MultiPoly._raw(p.ring, _multiply_terms(p._terms, q._terms))


def poly_pow(p, k, cap=None):
    """
    Raise a polynomial to a non-negative integer power.

    Args:
    p (MultiPoly): Base.
    k (int): Exponent, k >= 0.
    cap (dict, optional): Variable name -> maximum exponent. Monomials exceeding a cap are dropped
        as they appear; no later multiplication can lower an exponent, so the kept terms are exact.

    Returns:
    MultiPoly: p**k, truncated by ``cap`` if given.
    """
    if k < 0:
        raise StructuralError(f"negative power {k}")
    caps = _cap_pairs(p.ring, cap)
    one = {(0,) * len(p.ring): Fraction(1)}
    if caps:
        result = one
        for _ in range(k):
            result = _multiply_terms(result, p._terms, caps)
            if not result:
                break
        return MultiPoly._raw(p.ring, result)
    result, base = one, p._terms
    while k:
        if k & 1:
            result = _multiply_terms(result, base)
        k >>= 1
        if k:
            base = _multiply_terms(base, base)
    return MultiPoly._raw(p.ring, result)


def coefficient_of(p, monomial):
    """Stored coefficient of ``monomial`` in ``p`` (zero when absent)."""
    monomial = tuple(monomial)
    if len(monomial) != len(p.ring):
        raise StructuralError(f"monomial {monomial} does not fit ring {p.ring}")
    return p._terms.get(monomial, Fraction(0))


def coefficient_poly(p, fixed):
    """
    Collect the coefficient of a partial monomial.

    Args:
    p (MultiPoly): Polynomial.
    fixed (dict): Variable name -> exponent, e.g. {"t1": 2, "t2": 4}.

    Returns:
    MultiPoly: Polynomial over the remaining variables whose terms are those of ``p`` carrying
        exactly the given exponents.
    """
    indices = {p._index(name): int(e) for name, e in fixed.items()}
    keep = [i for i in range(len(p.ring)) if i not in indices]
    terms = {}
    for monomial, coeff in p._terms.items():
        if all(monomial[i] == e for i, e in indices.items()):
            terms[tuple(monomial[i] for i in keep)] = coeff
    return MultiPoly._raw(tuple(p.ring[i] for i in keep), terms)


def substitute(p, var, replacement):
    """
    Replace a variable by a polynomial and expand.

    The result lives on ``replacement.ring``, which must contain every variable of ``p`` other
    than ``var``.

    Args:
    p (MultiPoly): Polynomial to rewrite.
    var (str): Variable being replaced.
    replacement (MultiPoly): Expression substituted for ``var``.

    Returns:
    MultiPoly: The expanded polynomial.
    """
    index = p._index(var)
    ring = replacement.ring
    missing = [v for v in p.ring if v != var and v not in ring]
    if missing:
        raise StructuralError(f"replacement ring {ring} lacks variables {missing}")
    positions = [(i, ring.index(v)) for i, v in enumerate(p.ring) if i != index]
    powers = {0: MultiPoly.constant(ring, 1)}
    result = {}
    for monomial, coeff in p._terms.items():
        e = monomial[index]
        if e not in powers:
            powers[e] = poly_pow(replacement, e)
        shift = [0] * len(ring)
        for source, dest in positions:
            shift[dest] = monomial[source]
        for m, c in powers[e]._terms.items():
            target = tuple(x + y for x, y in zip(m, shift))
            result[target] = result.get(target, 0) + coeff * c
    return MultiPoly._raw(ring, {m: c for m, c in result.items() if c})


class RationalMatrix:
    """Dense immutable matrix of Fractions."""

    __slots__ = ("rows", "cols", "_entries")

    def __init__(self, entries):
        entries = tuple(tuple(to_fraction(v) for v in row) for row in entries)
        widths = {len(row) for row in entries}
        if len(widths) > 1:
            raise StructuralError("ragged matrix rows")
        self.rows = len(entries)
        self.cols = widths.pop() if widths else 0
        self._entries = entries

    @classmethod
    def zeros(cls, rows, cols):
        return cls([[0] * cols for _ in range(rows)])

    @classmethod
    def identity(cls, n):
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, values):
        values = list(values)
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __getitem__(self, index):
        i, j = index
        return self._entries[i][j]

    def row(self, i):
        return self._entries[i]

    def column(self, j):
        return tuple(row[j] for row in self._entries)

    def to_lists(self):
        return [list(row) for row in self._entries]

    def transpose(self):
        return RationalMatrix([self.column(j) for j in range(self.cols)])

    def __matmul__(self, other):
        if isinstance(other, RationalMatrix):
            if self.cols != other.rows:
                raise StructuralError(f"cannot multiply {self.shape} by {other.shape}")
            columns = [other.column(j) for j in range(other.cols)]
            return RationalMatrix([[sum((a * b for a, b in zip(row, col)), Fraction(0))
                                    for col in columns] for row in self._entries])
        vector = [to_fraction(v) for v in other]
        if len(vector) != self.cols:
            raise StructuralError(f"cannot multiply {self.shape} by a vector of {len(vector)}")
        return tuple(sum((a * b for a, b in zip(row, vector)), Fraction(0)) for row in self._entries)

    def __sub__(self, other):
        if self.shape != other.shape:
            raise StructuralError(f"cannot subtract {other.shape} from {self.shape}")
        return RationalMatrix([[a - b for a, b in zip(r1, r2)]
                               for r1, r2 in zip(self._entries, other._entries)])

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self._entries == other._entries and self.shape == other.shape

    def __hash__(self):
        return hash(self._entries)

    def is_zero(self):
        return all(not v for row in self._entries for v in row)

    def is_symmetric(self):
        if self.rows != self.cols:
            return False
        return all(self._entries[i][j] == self._entries[j][i]
                   for i in range(self.rows) for j in range(i + 1, self.cols))

    def symmetric_permutation(self, perm):
        """Return P^T A P, i.e. the matrix with entries A[perm[i]][perm[j]]."""
        return RationalMatrix([[self._entries[pi][pj] for pj in perm] for pi in perm])

    def quadratic_form(self, x):
        x = [to_fraction(v) for v in x]
        return sum((x[i] * self._entries[i][j] * x[j]
                    for i in range(self.rows) for j in range(self.cols)), Fraction(0))

    def __repr__(self):
        return f"RationalMatrix({[[str(v) for v in row] for row in self._entries]})"


@dataclass(frozen=True)
class LdltResult:
    """
    Outcome of ``ldlt``: P^T A P = L diag(d) L^T.

    ``complete`` is False only when elimination stopped on an all-zero diagonal with a non-zero
    off-diagonal entry; the verdict is then ``indefinite`` and the factors cover the processed
    leading block only.
    """

    permutation: Tuple[int, ...]
    L: RationalMatrix
    d: Tuple[Fraction, ...]
    verdict: str
    complete: bool = True

    @property
    def is_psd(self):
        return self.verdict == "PSD"


def ldlt(A):
    """
    Exact symmetric LDL^T with diagonal pivoting on the largest remaining diagonal entry.

    Args:
    A (RationalMatrix): Symmetric matrix.

    Returns:
    LdltResult: Permutation, unit lower-triangular L, pivots d and the PSD/indefinite verdict.
    """
    if not A.is_symmetric():
        raise StructuralError("ldlt needs a symmetric matrix")
    n = A.rows
    work = A.to_lists()
    perm = list(range(n))
    lower = [[Fraction(1) if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    d = []
    indefinite = False
    complete = True

    for k in range(n):
        best = max(range(k, n), key=lambda i: (work[i][i], -i))
        if work[best][best] < 0:
            indefinite = True
        elif work[best][best] == 0:
            residual = any(work[i][j] for i in range(k, n) for j in range(k, n) if i != j)
            negative = [i for i in range(k, n) if work[i][i] < 0]
            if not residual and not negative:
                d.extend([Fraction(0)] * (n - k))
                break
            indefinite = True
            if not negative:
                complete = False
                d.extend([Fraction(0)] * (n - k))
                break
            best = min(negative, key=lambda i: (work[i][i], i))

        if best != k:
            work[k], work[best] = work[best], work[k]
            for row in work:
                row[k], row[best] = row[best], row[k]
            perm[k], perm[best] = perm[best], perm[k]
            for c in range(k):
                lower[k][c], lower[best][c] = lower[best][c], lower[k][c]

        pivot = work[k][k]
        d.append(pivot)
        for i in range(k + 1, n):
            lower[i][k] = work[i][k] / pivot
        for i in range(k + 1, n):
            factor = lower[i][k]
            if not factor:
                continue
            for j in range(k + 1, i + 1):
                work[i][j] -= factor * work[k][j]
                work[j][i] = work[i][j]

    return LdltResult(
        permutation=tuple(perm),
        L=RationalMatrix(lower),
        d=tuple(d),
        verdict="indefinite" if indefinite else "PSD",
        complete=complete,
    )


@dataclass(frozen=True)
class LinearSolution:
    """Result of ``solve_linear``; ``x`` is None exactly when the system is inconsistent."""

    x: Optional[Tuple[Fraction, ...]]
    consistent: bool
    rank: int


def _solve_nonsingular(matrix, rhs):
    n = len(matrix)
    rows = [list(matrix[i]) + [rhs[i]] for i in range(n)]
    for c in range(n):
        p = next(i for i in range(c, n) if rows[i][c] != 0)
        rows[c], rows[p] = rows[p], rows[c]
        inv = 1 / rows[c][c]
        rows[c] = [v * inv for v in rows[c]]
        for i in range(n):
            if i != c and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return [rows[i][n] for i in range(n)]


def solve_linear(A, b):
    """
    Solve A x = b exactly, returning the minimum-norm solution when underdetermined.

    The system is reduced to row echelon form R x = c with R of full row rank; the minimum-norm
    solution is then x = R^T y with (R R^T) y = c.

    Args:
    A (RationalMatrix): Coefficient matrix (m x n).
    b (Sequence): Right-hand side of length m.

    Returns:
    LinearSolution: Solution and rank, or an inconsistency verdict.
    """
    b = [to_fraction(v) for v in b]
    m, n = A.rows, A.cols
    if len(b) != m:
        raise StructuralError(f"right-hand side has {len(b)} entries, expected {m}")
    rows = [list(A.row(i)) + [b[i]] for i in range(m)]
    rank = 0
    for c in range(n):
        if rank == m:
            break
        p = next((i for i in range(rank, m) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[rank], rows[p] = rows[p], rows[rank]
        inv = 1 / rows[rank][c]
        rows[rank] = [v * inv for v in rows[rank]]
        for i in range(m):
            if i != rank and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * r for a, r in zip(rows[i], rows[rank])]
        rank += 1
    if any(rows[i][n] for i in range(rank, m)):
        return LinearSolution(x=None, consistent=False, rank=rank)
    reduced = [row[:n] for row in rows[:rank]]
    rhs = [row[n] for row in rows[:rank]]
    gram = [[sum((a * c for a, c in zip(reduced[i], reduced[j])), Fraction(0))
             for j in range(rank)] for i in range(rank)]
    y = _solve_nonsingular(gram, rhs) if rank else []
    x = tuple(sum((reduced[i][j] * y[i] for i in range(rank)), Fraction(0)) for j in range(n))
    return LinearSolution(x=x, consistent=True, rank=rank)
