"""
The ``.gpicert`` certificate format.

A certificate file is UTF-8 JSON with sorted keys and two-space indentation. Every number is a
string: rationals are ``"num/den"`` in lowest terms, monomials are spelled ``a^2*b`` with ``1``
for the constant monomial, and term lists are in ascending graded-lex order. Emitting is
deterministic, so equal certificates give equal bytes.

Reading a file needs nothing beyond exact arithmetic; the SDP solver is never involved.
"""

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Tuple

from src import __version__
from src.errors import CertificateParseError, StructuralError, UnverifiedCertificateError
from src.exactmath import MultiPoly, grlex_key, monomial_to_string
from src.soscert import GramBasis, SosCertificate, fingerprint, verify_certificate

FORMAT_VERSION = "1"
TOP_LEVEL_KEYS = {"format_version", "metadata", "ring", "target", "terms"}

_RATIONAL = re.compile(r"-?(0|[1-9][0-9]*)/[1-9][0-9]*")
_LENIENT_RATIONAL = re.compile(r"-?[0-9]+(/[0-9]+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class CertificateFile:
    format_version: str
    ring: Tuple[str, ...]
    target: MultiPoly
    terms: Tuple[Tuple[Fraction, MultiPoly], ...]
    metadata: Dict[str, Any] = field(default_factory=dict)


def format_rational(value):
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def _term_list(poly):
    return [[monomial_to_string(m, poly.ring), format_rational(c)] for m, c in poly.items()]


def emit(cert, target_gap, strictness=None):
    """
    Serialize a verified certificate.

    Args:
    cert (SosCertificate): Certificate for ``target_gap.poly``.
    target_gap (GapPolynomial): Target, with the instance it came from.
    strictness (StrictnessVerdict, optional): Recorded in the metadata.

    Returns:
    bytes: Canonical file contents.

    Raises:
    UnverifiedCertificateError: the certificate does not verify against the target.
    """
    target = target_gap.poly
    expected = fingerprint(target)
    if cert.target_fingerprint and cert.target_fingerprint != expected:
        raise UnverifiedCertificateError("certificate was produced for a different target")
    check = verify_certificate(cert, target)
    if not check:
        raise UnverifiedCertificateError(check.reason)

    instance = target_gap.instance
    descriptor = {
        "case": str(instance.case_id),
        "exponents": instance.exponent_text,
        "target": target_gap.kind,
    }
    if instance.reduction_k is not None:
        descriptor["reduction_k"] = str(instance.reduction_k)
    metadata = {
        "fingerprint": expected,
        "instance": descriptor,
        "normalization": target_gap.normalization,
        "provenance": {str(k): str(v) for k, v in cert.provenance.items()},
        "toolchain": {"name": "gpicert", "version": __version__},
    }
    if cert.basis is not None:
        metadata["basis"] = cert.basis.labels()
    if strictness is not None:
        metadata["strictness"] = strictness.describe()
    document = {
        "format_version": FORMAT_VERSION,
        "metadata": metadata,
        "ring": list(target.ring),
        "target": _term_list(target),
        "terms": [{"c": format_rational(c), "f": _term_list(f.with_ring(target.ring))}
                  for c, f in cert.terms],
    }
    return (json.dumps(document, indent=2, sort_keys=True) + "\n").encode("utf-8")


class _Reader:
    """Validation state for one file: the raw text, the strictness mode and a read position."""

    def __init__(self, text, strict):
        self.text = text
        self.strict = strict
        self.anchor = 0

    def _find(self, needle, start):
        position = self.text.find(needle, start)
        return position if position >= 0 else self.text.find(needle)

    def seek(self, needle):
        """Move the read position past the current one, to the next ``needle`` in the raw text."""
        position = self._find(needle, self.anchor + 1)
        if position >= 0:
            self.anchor = position

    def enter(self, key):
        """Move the read position to the top-level list stored under ``key``."""
        pattern = re.compile(re.escape(json.dumps(key)) + r"\s*:\s*\[")
        match = pattern.search(self.text, self.anchor) or pattern.search(self.text)
        if match:
            self.anchor = match.start()

    def fail(self, message, token=None):
        position = self.anchor
        if token is not None:
            found = self._find(json.dumps(token), self.anchor)
            position = found if found >= 0 else 0
        raise CertificateParseError(message, len(self.text[:position].encode("utf-8")))

    def rational(self, raw):
        if isinstance(raw, bool) or isinstance(raw, float):
            self.fail(f"rational expected, got {raw!r}", raw)
        if isinstance(raw, int) and not self.strict:
            return Fraction(raw)
        if not isinstance(raw, str):
            self.fail(f"rational must be a string, got {raw!r}", raw)
        pattern = _RATIONAL if self.strict else _LENIENT_RATIONAL
        if not pattern.fullmatch(raw):
            self.fail(f"malformed rational {raw!r}", raw)
        numerator, _, denominator = raw.partition("/")
        if denominator and int(denominator) == 0:
            self.fail(f"zero denominator in {raw!r}", raw)
        if self.strict and math.gcd(int(numerator), int(denominator)) != 1:
            self.fail(f"rational {raw!r} is not in lowest terms", raw)
        return Fraction(raw)

    def monomial(self, raw, ring):
        if not isinstance(raw, str):
            self.fail(f"monomial must be a string, got {raw!r}", raw)
        exponents = [0] * len(ring)
        if raw != "1":
            for factor in raw.split("*"):
                name, _, power = factor.partition("^")
                if name not in ring:
                    self.fail(f"unknown variable {name!r} in {raw!r}", raw)
                if power and not power.isdigit():
                    self.fail(f"malformed exponent in {raw!r}", raw)
                exponents[ring.index(name)] += int(power) if power else 1
        exponents = tuple(exponents)
        if self.strict and monomial_to_string(exponents, ring) != raw:
            self.fail(f"monomial {raw!r} is not in canonical form", raw)
        return exponents

    def term_list(self, raw, ring, what):
        if not isinstance(raw, list):
            self.fail(f"{what} must be a list of [monomial, rational] pairs")
        terms = {}
        previous = None
        for entry in raw:
            if not isinstance(entry, list) or len(entry) != 2:
                self.fail(f"{what} entries must be [monomial, rational] pairs", entry)
            if isinstance(entry[0], str):
                self.seek(json.dumps(entry[0]))
            monomial = self.monomial(entry[0], ring)
            coeff = self.rational(entry[1])
            if self.strict:
                if not coeff:
                    self.fail(f"zero coefficient stored in {what}", entry[0])
                if monomial in terms:
                    self.fail(f"duplicate monomial {entry[0]!r} in {what}", entry[0])
                if previous is not None and grlex_key(monomial) <= grlex_key(previous):
                    self.fail(f"{what} is not sorted in graded-lex order", entry[0])
            previous = monomial
            terms[monomial] = terms.get(monomial, Fraction(0)) + coeff
        return MultiPoly(ring, terms)


def load(data, strict=True):
    """
    Read a certificate file.

    Args:
    data (bytes or str): File contents.
    strict (bool): Require canonical spelling and ordering. Lenient mode accepts integer
        coefficients, unsorted and repeated terms, for hand-transcribed files.

    Returns:
    CertificateFile: The parsed contents.

    Raises:
    CertificateParseError: with the byte offset of the problem.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as error:
            raise CertificateParseError(f"not UTF-8: {error.reason}", error.start) from None
    else:
        text = data
    try:
        document = json.loads(text)
    except json.JSONDecodeError as error:
        raise CertificateParseError(error.msg, len(text[:error.pos].encode("utf-8"))) from None

    reader = _Reader(text, strict)
    if not isinstance(document, dict):
        reader.fail("certificate must be a JSON object")
    version = document.get("format_version")
    if version is None:
        reader.fail("missing format_version")
    if version != FORMAT_VERSION:
        reader.fail(f"unsupported format_version {version!r}", "format_version")
    for key in ("ring", "target", "terms"):
        if key not in document:
            reader.fail(f"missing {key}")
    if strict:
        unknown = sorted(set(document) - TOP_LEVEL_KEYS)
        if unknown:
            reader.fail(f"unknown top-level key {unknown[0]!r}", unknown[0])

    ring = document["ring"]
    if not isinstance(ring, list) or not all(isinstance(v, str) and _NAME.fullmatch(v) for v in ring):
        reader.fail("ring must be a list of variable names", "ring")
    if len(set(ring)) != len(ring):
        reader.fail("duplicate variable in ring", "ring")
    ring = tuple(ring)

    reader.enter("target")
    target = reader.term_list(document["target"], ring, "target")
    if not isinstance(document["terms"], list):
        reader.fail("terms must be a list", "terms")
    reader.enter("terms")
    terms = []
    for entry in document["terms"]:
        reader.seek("{")
        if not isinstance(entry, dict) or "c" not in entry or "f" not in entry:
            reader.fail("each square needs a coefficient 'c' and a polynomial 'f'", "terms")
        terms.append((reader.rational(entry["c"]), reader.term_list(entry["f"], ring, "square")))

    reader.anchor = 0
    metadata = document.get("metadata", {})
    if not isinstance(metadata, dict):
        reader.fail("metadata must be an object", "metadata")
    recorded = metadata.get("fingerprint")
    if strict and recorded is not None and recorded != fingerprint(target):
        reader.fail("fingerprint does not match the target polynomial", recorded)
    return CertificateFile(format_version=version, ring=ring, target=target, terms=tuple(terms),
                           metadata=metadata)


def parse(data, strict=True):
    """
    Read a certificate file into a certificate and its target.

    Returns:
    tuple: (SosCertificate, target MultiPoly).
    """
    loaded = load(data, strict)
    reader = _Reader(data.decode("utf-8") if isinstance(data, bytes) else data, strict)
    basis = None
    labels = loaded.metadata.get("basis")
    if labels is not None:
        if not isinstance(labels, list):
            reader.fail("basis must be a list of monomials", "basis")
        try:
            basis = GramBasis(loaded.ring, tuple(reader.monomial(label, loaded.ring) for label in labels))
        except StructuralError as error:
            reader.fail(str(error), "basis")
    provenance = loaded.metadata.get("provenance", {})
    if not isinstance(provenance, dict):
        reader.fail("provenance must be an object", "provenance")
    cert = SosCertificate(
        target_fingerprint=fingerprint(loaded.target),
        terms=loaded.terms,
        basis=basis,
        provenance={str(k): str(v) for k, v in provenance.items()},
    )
    return cert, loaded.target
