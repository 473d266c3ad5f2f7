class GpiError(Exception):
    """Base class for every error raised by gpicert."""


class StructuralError(GpiError):
    """Shapes do not fit: ring or dimension mismatch, non-symmetric input, unknown variable."""


class DomainError(GpiError):
    """An argument lies outside the domain of the operation."""


class ResourceError(GpiError):
    """A configured budget (pairings, Gram size) would be exceeded."""


class BasisInsufficientError(StructuralError):
    """A monomial of the target cannot be written as a product of two basis monomials."""

    def __init__(self, monomial):
        super().__init__(f"monomial {monomial} is not a product of two basis monomials")
        self.monomial = monomial


class NotSosError(GpiError):
    """Definitive refusal: the target provably has no SOS certificate."""


class IndeterminateError(GpiError):
    """No certificate was found, but nothing was proven either."""


class CertificateParseError(GpiError):
    """A certificate file could not be read. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnverifiedCertificateError(GpiError):
    """Refusal to serialize a certificate that does not verify against its target."""
