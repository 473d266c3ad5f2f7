"""
Gap polynomials of the Gaussian product inequality.

For exponents (m_1, ..., m_n) and a construction X_k = sum_j x_kj U_j the gap polynomial is

    F = E[prod X_j^(2 m_j)] - prod (2 m_j - 1)!! Lambda_jj^(m_j)

in the free construction variables. This module builds F (concretely, or with the first exponent
symbolic and m = p^2 + 1), lists the degenerate constructions that the reduction to a dependent
last coordinate has to cover, and builds the H polynomial over the full lower-triangular
construction.
"""

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple, Union

from src.errors import DomainError, StructuralError
from src.exactmath import MultiPoly, substitute
from src.moments import (
    Construction,
    CovarianceForm,
    SymbolicExponent,
    covariance,
    double_factorial,
    exponent_vector,
    moment_by_coefficient,
    symbolic_moment,
)

# m, p, t and u are reserved for exponents and basis names
FREE_NAMES = "abcdefghijklnoqrsvwxyz"
SYMBOL = "m"
SQUARE_ROOT = "p"
SYMBOLIC_NORMALIZATION = "2(2m-1)!!"


@dataclass(frozen=True)
class GapInstance:
    """
    One certification subproblem.

    ``exponents`` holds a placeholder 1 in the symbolic slot when ``symbolic`` is set.
    ``depth`` is 0 for the requested inequality and grows along the chain of k = 0 references.
    """

    exponents: Tuple[int, ...]
    construction: Construction
    case_id: int = 1
    reduction_k: Optional[int] = None
    symbolic: Optional[SymbolicExponent] = None
    strict_required: bool = False
    depth: int = 0

    @property
    def exponent_text(self):
        return format_exponents(self.exponents, self.symbolic)

    @property
    def label(self):
        return f"F[{self.exponent_text}] case {self.case_id}"

    @property
    def file_stem(self):
        return "F_" + self.exponent_text.replace(",", "_") + f"_case{self.case_id}"


@dataclass(frozen=True)
class ChainReference:
    """The k = 0 subproblem: the same inequality one dimension down."""

    exponents: Tuple[int, ...]
    symbolic: Optional[SymbolicExponent] = None

    @property
    def label(self):
        return f"chain ({format_exponents(self.exponents, self.symbolic)})"


@dataclass(frozen=True)
class GapPolynomial:
    """``kind`` is "F" for gap polynomials and "H" for the conjecture polynomial."""

    instance: GapInstance
    poly: MultiPoly
    normalization: str = "1"
    kind: str = "F"


def format_exponents(exponents, symbolic=None):
    return ",".join(
        SYMBOL if symbolic is not None and i == symbolic.coordinate else str(e)
        for i, e in enumerate(exponents)
    )


def parse_exponents(text):
    """
    Read an exponent list such as ``4,3,2`` or ``m,1,1,1``.

    Args:
    text (str): Comma separated exponents; ``m`` is allowed in the first slot only.

    Returns:
    tuple: (exponents with placeholder 1 in a symbolic slot, SymbolicExponent or None).
    """
    values = []
    symbolic = None
    for index, raw in enumerate(part.strip() for part in text.split(",")):
        if raw == SYMBOL:
            if index != 0:
                raise DomainError("only the first exponent may be symbolic")
            symbolic = SymbolicExponent(coordinate=0)
            values.append(1)
            continue
        try:
            values.append(int(raw))
        except ValueError:
            raise DomainError(f"bad exponent {raw!r} in {text!r}") from None
    return exponent_vector(values), symbolic


def _namer(count):
    if count <= len(FREE_NAMES):
        pool = iter(FREE_NAMES)
        return lambda k, j: next(pool)
    return lambda k, j: f"x{k + 1}_{j + 1}"


def _case_rows(n, r, last_new):
    # "new" rows open U_k; "repeat" rows reuse U_r with free coefficients on U_1..U_{r-1}
    shapes = []
    for k in range(n - 1):
        if k < r:
            shapes.append(("new", k))
        else:
            shapes.append(("repeat", r - 1))
    shapes.append(("new", r) if last_new else ("repeat", r - 1))
    count = sum(unit for _, unit in shapes)
    name = _namer(count)
    rows = []
    for k, (_, unit) in enumerate(shapes):
        row = []
        for j in range(n):
            if j < unit:
                row.append(name(k, j))
            elif j == unit:
                row.append(Fraction(1))
            else:
                row.append(Fraction(0))
        rows.append(tuple(row))
    return Construction(tuple(rows))


def enumerate_cases(n):
    """
    Degenerate constructions with X_n a linear combination of X_1, ..., X_{n-1}.

    The rank r of span(X_1, ..., X_{n-1}) runs from n-1 down to 2. Rows 1..r open a new basis
    direction each; rows r+1..n-1 repeat direction U_r. X_n either opens U_{r+1} (possible only
    when r <= n-2) or repeats U_r. For n = 2 the single construction is X_2 = a U_1.

    Args:
    n (int): Dimension, n >= 2.

    Returns:
    list: Constructions in case order (case 1 first).
    """
    if n < 2:
        raise DomainError(f"case enumeration needs n >= 2, got {n}")
    if n == 2:
        return [Construction(((Fraction(1), Fraction(0)), ("a", Fraction(0))))]
    cases = []
    for r in range(n - 1, 1, -1):
        for last_new in (True, False):
            if last_new and r > n - 2:
                continue
            cases.append(_case_rows(n, r, last_new))
    return cases


def build_gap(exponents, c, case_id=1, reduction_k=None):
    """
    Concrete gap polynomial F for a construction.

    Args:
    exponents (Sequence[int]): (m_1, ..., m_n).
    c (Construction): Construction with n rows.
    case_id (int): Case index recorded on the instance.
    reduction_k (int, optional): Reduction index recorded on the instance.

    Returns:
    GapPolynomial: Unnormalized F.
    """
    m = exponent_vector(exponents)
    if len(m) != c.n:
        raise StructuralError(f"{len(m)} exponents for a construction with {c.n} rows")
    cov = covariance(c)
    moment = moment_by_coefficient(cov, m)
    product = MultiPoly.constant(cov.ring, 1)
    for k, mk in enumerate(m):
        product = product * cov.entries[k][k] ** mk * double_factorial(2 * mk - 1)
    instance = GapInstance(exponents=m, construction=c, case_id=case_id, reduction_k=reduction_k)
    return GapPolynomial(instance=instance, poly=moment - product, normalization="1")


def build_gap_symbolic(exponents, c, case_id=1, reduction_k=None):
    """
    F / (2 (2m-1)!!) with the first exponent symbolic, then m = p^2 + 1.

    Args:
    exponents (Sequence[int]): Exponents; slot 0 is a placeholder for m.
    c (Construction): Construction whose first row is the pure row U_1.

    Returns:
    GapPolynomial: Polynomial over the construction variables and p.
    """
    exponents = tuple(exponents)
    if len(exponents) != c.n:
        raise StructuralError(f"{len(exponents)} exponents for a construction with {c.n} rows")
    s = SymbolicExponent(coordinate=0)
    normalized = symbolic_moment(c, exponents, s, symbol=SYMBOL)
    cov = covariance(c)
    product = MultiPoly.constant(cov.ring, 1)
    for k in range(1, c.n):
        mk = exponents[k]
        product = product * cov.entries[k][k] ** mk * double_factorial(2 * mk - 1)
    in_m = (normalized - product.with_ring(normalized.ring)) / 2
    ring = c.ring + (SQUARE_ROOT,)
    root = MultiPoly.variable(ring, SQUARE_ROOT)
    poly = substitute(in_m, SYMBOL, root * root + 1)
    instance = GapInstance(exponents=(1,) + exponents[1:], construction=c, case_id=case_id,
                           reduction_k=reduction_k, symbolic=s)
    return GapPolynomial(instance=instance, poly=poly, normalization=SYMBOLIC_NORMALIZATION)


def build_instance(instance):
    """Gap polynomial of an instance, keeping the instance's flags."""
    if instance.symbolic is not None:
        gap = build_gap_symbolic(instance.exponents, instance.construction)
    else:
        gap = build_gap(instance.exponents, instance.construction)
    return GapPolynomial(instance=instance, poly=gap.poly, normalization=gap.normalization)


def specialize_symbolic(gap, m_value):
    """
    Undo the symbolic normalization at a concrete exponent.

    Replaces p^(2k) by (m_value - 1)^k and multiplies by 2 (2 m_value - 1)!!.

    Args:
    gap (GapPolynomial): Output of ``build_gap_symbolic``.
    m_value (int): Concrete exponent, at least 1.

    Returns:
    MultiPoly: The concrete gap polynomial over the construction variables.
    """
    if gap.instance.symbolic is None:
        raise DomainError("only symbolic gap polynomials can be specialized")
    if m_value < 1:
        raise DomainError(f"exponent must be positive, got {m_value}")
    poly = gap.poly
    index = poly.ring.index(SQUARE_ROOT)
    ring = tuple(v for v in poly.ring if v != SQUARE_ROOT)
    terms = {}
    for monomial, coeff in poly.items():
        if monomial[index] % 2:
            raise DomainError("odd power of p in a symbolic gap polynomial")
        reduced = monomial[:index] + monomial[index + 1:]
        value = coeff * Fraction(m_value - 1) ** (monomial[index] // 2)
        terms[reduced] = terms.get(reduced, 0) + value
    return MultiPoly(ring, terms).scale(2 * double_factorial(2 * m_value - 1))


def enumerate_subproblems(exponents, symbolic=None, depth=0):
    """
    Subproblems that together imply the inequality for ``exponents``.

    For every case construction and every k in 1..m_n an instance with last exponent k is
    emitted; k = m_n carries the strictness requirement. For n >= 3 a ``ChainReference`` to the
    first n-1 exponents stands for k = 0.

    Args:
    exponents (Sequence[int]): (m_1, ..., m_n), with a placeholder in a symbolic slot.
    symbolic (SymbolicExponent, optional): Symbolic first coordinate.
    depth (int): Chain depth recorded on the instances.

    Returns:
    list: GapInstance entries followed by at most one ChainReference.
    """
    m = exponent_vector(exponents)
    n = len(m)
    if n < 2:
        raise DomainError(f"subproblems need n >= 2, got {n}")
    items: List[Union[GapInstance, ChainReference]] = []
    for case_id, construction in enumerate(enumerate_cases(n), start=1):
        for k in range(1, m[-1] + 1):
            items.append(GapInstance(
                exponents=m[:-1] + (k,),
                construction=construction,
                case_id=case_id,
                reduction_k=k,
                symbolic=symbolic,
                strict_required=(k == m[-1]),
                depth=depth,
            ))
    if n > 2:
        items.append(ChainReference(exponents=m[:-1], symbolic=symbolic))
    return items


def expand_chain(exponents, symbolic=None):
    """Flatten ``enumerate_subproblems`` by following chain references down to n = 2."""
    work = []
    depth = 0
    current = tuple(exponents)
    while True:
        pending = None
        for item in enumerate_subproblems(current, symbolic, depth):
            if isinstance(item, ChainReference):
                pending = item
            else:
                work.append(item)
        if pending is None:
            return work
        current = pending.exponents
        depth += 1


def build_conjecture_H(n, exponents):
    """
    H = E[U_1^(2 m_1) prod_{i>=2} X_i^(2 m_i)] - (2 m_1 - 1)!! prod_{i>=2} E[X_i^(2 m_i)]

    over the full lower-triangular construction X_i = sum_{j<i} x_ij U_j + U_i.

    Args:
    n (int): Dimension, n >= 3.
    exponents (Sequence[int]): (m_1, ..., m_n).

    Returns:
    MultiPoly: H over the n(n-1)/2 variables x_ij.
    """
    if n < 3:
        raise DomainError(f"H is defined for n >= 3, got {n}")
    m = exponent_vector(exponents)
    if len(m) != n:
        raise StructuralError(f"{len(m)} exponents for n = {n}")
    cov = covariance(Construction.lower_triangular(n))
    moment = moment_by_coefficient(cov, m)
    rest = MultiPoly.constant(cov.ring, double_factorial(2 * m[0] - 1))
    for i in range(1, n):
        single = CovarianceForm(ring=cov.ring, entries=((cov.entries[i][i],),))
        rest = rest * moment_by_coefficient(single, (m[i],))
    return moment - rest


def screen_nonnegative(poly, samples=1000, seed=0):
    """
    Evaluate at seeded random rational points.

    Args:
    poly (MultiPoly): Polynomial to screen.
    samples (int): Number of points.
    seed (int): Seed for ``random.Random``.

    Returns:
    dict or None: The first point with a negative value, or None.
    """
    rng = random.Random(seed)
    for _ in range(samples):
        point = {v: Fraction(rng.randint(-30, 30), rng.randint(1, 10)) for v in poly.ring}
        if poly.evaluate(point) < 0:
            return point
    return None
