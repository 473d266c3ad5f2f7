"""
Exact sums-of-squares certification.

The pipeline: pick a Gram basis from the Newton polytope, assemble the Gram constraints, solve
the SDP in floating point, round to rationals and project exactly back onto the constraints,
check PSD with an exact LDL^T, read off the squares and verify the identity exactly.
"""

import hashlib
import time
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Mapping, Optional, Tuple

import numpy as np

from src import sdp
from src.console import print_message
from src.errors import (
    BasisInsufficientError,
    DomainError,
    IndeterminateError,
    NotSosError,
    ResourceError,
    StructuralError,
)
from src.exactmath import MultiPoly, RationalMatrix, grlex_key, ldlt, monomial_to_string, solve_linear
from src.newton import full_basis, half_newton_points, prune_diagonal


@dataclass(frozen=True)
class GramBasis:
    ring: Tuple[str, ...]
    monomials: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(set(self.monomials)) != len(self.monomials):
            raise StructuralError("duplicate monomial in Gram basis")
        if list(self.monomials) != sorted(self.monomials, key=grlex_key):
            raise StructuralError("Gram basis must be graded-lex ordered")

    def __len__(self):
        return len(self.monomials)

    def as_polys(self):
        return [MultiPoly.monomial(self.ring, m) for m in self.monomials]

    def labels(self):
        return [monomial_to_string(m, self.ring) for m in self.monomials]


@dataclass(frozen=True)
class GramSystem:
    """
    z^T G z = F holds iff, for every product monomial mu,
    sum over pairs (i, j), i <= j, with z_i z_j = mu of (2 - delta_ij) G_ij equals rhs[mu].
    """

    basis: GramBasis
    pairs: Mapping[Tuple[int, ...], Tuple[Tuple[int, int], ...]]
    rhs: Mapping[Tuple[int, ...], Fraction]

    def product_monomials(self):
        return sorted(self.pairs, key=grlex_key)

    def residuals(self, G):
        out = {}
        for mu, plist in self.pairs.items():
            value = sum(((1 if i == j else 2) * G[i, j] for i, j in plist), Fraction(0))
            if value != self.rhs[mu]:
                out[mu] = self.rhs[mu] - value
        return out

    def is_satisfied_by(self, G):
        return G.is_symmetric() and not self.residuals(G)

    def to_sdp_problem(self, scale=Fraction(1)):
        n = len(self.basis)
        constraints = []
        for mu in self.product_monomials():
            matrix = np.zeros((n, n))
            for i, j in self.pairs[mu]:
                matrix[i, j] = 1.0
                matrix[j, i] = 1.0
            constraints.append((matrix, float(self.rhs[mu] / scale)))
        return sdp.SdpProblem(dim=n, constraints=constraints)


@dataclass(frozen=True)
class SosCertificate:
    """F = sum c_i f_i^2 with every c_i > 0."""

    target_fingerprint: str
    terms: Tuple[Tuple[Fraction, MultiPoly], ...]
    basis: Optional[GramBasis] = None
    provenance: Mapping[str, str] = field(default_factory=dict)

    def expand(self, ring):
        total = MultiPoly.zero(ring)
        for coeff, f in self.terms:
            f = f.with_ring(ring)
            total = total + (f * f).scale(coeff)
        return total

    def constant_squares(self):
        return [(c, f) for c, f in self.terms if f.is_constant() and not f.is_zero()]


class StrictnessKind(str, Enum):
    CONSTANT_SQUARE = "strict_constant_square"
    EPSILON_SHIFT = "strict_epsilon_shift"
    NONNEG_ONLY = "nonneg_only"


@dataclass(frozen=True)
class StrictnessVerdict:
    kind: StrictnessKind
    epsilon: Optional[Fraction] = None

    @property
    def is_strict(self):
        return self.kind is not StrictnessKind.NONNEG_ONLY

    def describe(self):
        if self.kind is StrictnessKind.EPSILON_SHIFT:
            return f"{self.kind.value}({self.epsilon})"
        return self.kind.value


@dataclass(frozen=True)
class Verification:
    ok: bool
    reason: str = ""
    monomial: Optional[str] = None

    def __bool__(self):
        return self.ok


@dataclass(frozen=True)
class CertifyOptions:
    denominator_bounds: Tuple[int, ...] = (10 ** 3, 10 ** 6, 10 ** 9, 10 ** 12)
    tolerances: Tuple[float, ...] = (1e-9, 1e-11)
    use_newton: bool = True
    solver: sdp.SolverSettings = sdp.SolverSettings()
    epsilon_floor: Fraction = Fraction(1, 10 ** 6)
    time_budget: Optional[float] = None
    verbose: bool = False

    @classmethod
    def from_settings(cls, settings, **overrides):
        options = cls(
            denominator_bounds=settings.denominator_bounds,
            tolerances=settings.solver_tolerances,
            use_newton=settings.newton_polytope,
            solver=sdp.SolverSettings(tol=settings.sdp_tolerance, max_iterations=settings.max_iterations,
                                      step_fraction=settings.step_fraction, max_dim=settings.max_gram_size),
            epsilon_floor=settings.epsilon_floor,
            time_budget=settings.time_budget,
        )
        return replace(options, **overrides)


def fingerprint(F):
    """sha256 over the canonical spelling of ring and terms."""
    text = ",".join(F.ring) + "|" + ";".join(
        f"{monomial_to_string(m, F.ring)}:{c.numerator}/{c.denominator}" for m, c in F.items())
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def select_basis(F, use_newton=True):
    """
    Gram basis for ``F``.

    With ``use_newton`` the basis is every lattice point u with 2u in the Newton polytope of F,
    minus points whose diagonal Gram entry is forced to zero. Without it, all monomials of
    degree at most deg(F)/2.

    Args:
    F (MultiPoly): Target polynomial.
    use_newton (bool): Use the Newton polytope filter.

    Returns:
    GramBasis: Basis in graded-lex order.

    Raises:
    NotSosError: odd total degree, or an odd extreme degree in some variable.
    """
    if F.is_zero():
        return GramBasis(F.ring, ())
    degree = F.degree()
    if degree % 2:
        raise NotSosError(f"odd total degree {degree}")
    support = list(F.terms)
    for index, name in enumerate(F.ring):
        exps = [m[index] for m in support]
        if max(exps) % 2 or min(exps) % 2:
            raise NotSosError(f"odd extreme degree in {name}")
    if use_newton:
        points = prune_diagonal(half_newton_points(support), support)
    else:
        points = full_basis(len(F.ring), degree // 2)
    return GramBasis(F.ring, tuple(points))


def build_gram_system(F, z):
    """
    Gram constraints of ``F`` over basis ``z``.

    Raises:
    BasisInsufficientError: a monomial of F is not z_i * z_j for any pair.
    """
    if F.ring != z.ring:
        raise StructuralError(f"ring mismatch: {F.ring} vs {z.ring}")
    pairs = defaultdict(list)
    for i, left in enumerate(z.monomials):
        for j in range(i, len(z.monomials)):
            mu = tuple(a + b for a, b in zip(left, z.monomials[j]))
            pairs[mu].append((i, j))
    for mu, _ in F.items():
        if mu not in pairs:
            raise BasisInsufficientError(monomial_to_string(mu, F.ring))
    rhs = {mu: F.terms.get(mu, Fraction(0)) for mu in pairs}
    return GramSystem(basis=z, pairs={mu: tuple(p) for mu, p in pairs.items()}, rhs=rhs)


def round_and_project(Gfloat, sys, denom_bound):
    """
    Round a float Gram matrix to rationals and project it exactly onto the Gram constraints.

    Entries are approximated with denominators at most ``denom_bound``. The projection is the
    minimum Frobenius-norm correction. Each constraint touches its own set of entries, so the
    correction is solved constraint by constraint over the ordered entries it involves.

    Args:
    Gfloat (array-like): Symmetric float matrix of the basis size.
    sys (GramSystem): Constraints.
    denom_bound (int): Largest denominator in the rounding step.

    Returns:
    RationalMatrix: Symmetric rational matrix satisfying ``sys`` exactly.
    """
    G = np.asarray(Gfloat, dtype=float)
    n = len(sys.basis)
    if G.shape != (n, n):
        raise StructuralError(f"Gram matrix has shape {G.shape}, basis has {n} monomials")
    if not np.all(np.isfinite(G)):
        raise StructuralError("Gram matrix has non-finite entries")
    G = (G + G.T) / 2
    entries = [[Fraction(float(G[i, j])).limit_denominator(denom_bound) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            entries[i][j] = entries[j][i]
    for mu, plist in sys.pairs.items():
        current = sum(((1 if i == j else 2) * entries[i][j] for i, j in plist), Fraction(0))
        gap = sys.rhs[mu] - current
        if not gap:
            continue
        ordered = sum(1 if i == j else 2 for i, j in plist)
        solution = solve_linear(RationalMatrix([[1] * ordered]), [gap])
        if not solution.consistent:
            raise StructuralError(f"projection inconsistent at {monomial_to_string(mu, sys.basis.ring)}")
        delta = solution.x[0]
        for i, j in plist:
            entries[i][j] += delta
            if i != j:
                entries[j][i] += delta
    return RationalMatrix(entries)


def extract_sos(G, z):
    """
    Squares from a PSD rational Gram matrix: z^T G z = sum d_c f_c^2.

    With P^T G P = L diag(d) L^T, f_c = sum_k L[k][c] z[perm[k]] for every non-zero pivot d_c.
    """
    result = ldlt(G)
    if not result.is_psd:
        raise DomainError("Gram matrix is indefinite")
    polys = z.as_polys()
    ring = z.ring
    terms = []
    for c, pivot in enumerate(result.d):
        if not pivot:
            continue
        f = MultiPoly.zero(ring)
        for k in range(c, len(polys)):
            weight = result.L[k, c]
            if weight:
                f = f + polys[result.permutation[k]].scale(weight)
        terms.append((pivot, f))
    return SosCertificate(target_fingerprint="", terms=tuple(terms), basis=z,
                          provenance={"source": "gram"})


def verify_certificate(cert, F):
    """
    Exact check of F = sum c_i f_i^2 with all c_i > 0.

    Returns:
    Verification: Truthy on success; otherwise ``reason`` names the first mismatching monomial.
    """
    for coeff, f in cert.terms:
        if coeff <= 0:
            return Verification(False, f"non-positive coefficient {coeff}")
        try:
            f.with_ring(F.ring)
        except StructuralError as error:
            return Verification(False, f"square outside the target ring: {error}")
    difference = cert.expand(F.ring) - F
    if difference.is_zero():
        return Verification(True)
    monomial, _ = difference.items()[0]
    spelled = monomial_to_string(monomial, F.ring)
    got = F.terms.get(monomial, Fraction(0)) + difference.terms[monomial]
    expected = F.terms.get(monomial, Fraction(0))
    return Verification(False, f"mismatch at {spelled}: certificate gives {got}, target has {expected}", spelled)


def check_strictness(cert, F, options=None):
    """
    Decide whether the certificate, or a shifted one, proves F > 0.

    A non-zero constant square gives ``strict_constant_square``. Otherwise F - eps is certified
    for eps = 1, 1/10, ... down to the floor, skipping eps above F(0).
    """
    if cert.constant_squares():
        return StrictnessVerdict(StrictnessKind.CONSTANT_SQUARE)
    options = options or CertifyOptions()
    quiet = replace(options, verbose=False)
    at_origin = F.constant_term()
    epsilon = Fraction(1)
    while epsilon >= options.epsilon_floor:
        if epsilon <= at_origin:
            try:
                certify(F - epsilon, quiet)
                return StrictnessVerdict(StrictnessKind.EPSILON_SHIFT, epsilon)
            except (NotSosError, IndeterminateError):
                pass
        epsilon /= 10
    return StrictnessVerdict(StrictnessKind.NONNEG_ONLY)


def _note(options, message):
    if options.verbose:
        print_message(message, "cyan")


def certify(F, options=None):
    """
    Find and verify a rational SOS certificate for ``F``.

    Args:
    F (MultiPoly): Target polynomial.
    options (CertifyOptions, optional): Budgets and solver parameters.

    Returns:
    SosCertificate: A certificate that passed ``verify_certificate``.

    Raises:
    NotSosError: F provably has no SOS certificate (degree parity, Newton polytope, or a dual
        certificate from the SDP).
    IndeterminateError: rounding failed at every denominator bound and tolerance, or a budget ran out.
    """
    options = options or CertifyOptions()
    started = time.monotonic()
    target = fingerprint(F)

    def check_clock():
        if options.time_budget is not None and time.monotonic() - started > options.time_budget:
            raise IndeterminateError(f"time budget of {options.time_budget:g}s exceeded")

    if F.is_zero():
        return SosCertificate(target_fingerprint=target, terms=(), basis=GramBasis(F.ring, ()),
                              provenance={"source": "trivial"})
    basis = select_basis(F, options.use_newton)
    try:
        system = build_gram_system(F, basis)
    except BasisInsufficientError as error:
        raise NotSosError(f"outside the half Newton polytope: {error}") from error
    _note(options, f"Gram basis of {len(basis)} monomials, {len(system.pairs)} constraints")

    scale = max(abs(c) for c in F.terms.values())
    problem = system.to_sdp_problem(scale)
    for tol in options.tolerances:
        check_clock()
        try:
            solution = sdp.solve(problem, tol=tol, settings=options.solver)
        except ResourceError as error:
            raise IndeterminateError(str(error)) from error
        _note(options, f"SDP {solution.status.value}: margin {solution.t:.3g}, "
                       f"{solution.iterations} iterations")
        if solution.status is sdp.SdpStatus.INFEASIBLE:
            if solution.dual_margin is None:
                raise NotSosError("inconsistent Gram constraints")
            raise NotSosError(f"SDP dual certificate, normalized margin {solution.dual_margin:.3g}")
        gram = solution.G * float(scale)
        for bound in options.denominator_bounds:
            check_clock()
            rational = round_and_project(gram, system, bound)
            if not system.is_satisfied_by(rational):
                raise StructuralError("projection left a constraint unsatisfied")
            if not ldlt(rational).is_psd:
                _note(options, f"rounded Gram matrix not PSD at denominator bound {bound}")
                continue
            cert = extract_sos(rational, basis)
            cert = replace(cert, target_fingerprint=target, provenance={
                "source": "sdp",
                "basis_size": str(len(basis)),
                "denominator_bound": str(bound),
                "solver_status": solution.status.value,
                "iterations": str(solution.iterations),
            })
            check = verify_certificate(cert, F)
            if not check:
                raise StructuralError(f"extracted certificate failed verification: {check.reason}")
            return cert
    raise IndeterminateError("rational-certificate-not-found: no rational PSD Gram matrix at any denominator bound")
