"""Exception types shared across the package.

Everything derives from ParahermError so callers (and the CLI) can catch one
base class.  Each exception carries an optional ``payload`` dict with
machine-readable context; the CLI serializes it into the error report.
"""


class ParahermError(Exception):
    """Base class for all errors raised by this package."""

    def __init__(self, message, **payload):
        super().__init__(message)
        self.payload = dict(payload)


# --- input / validation problems -------------------------------------------

class ShapeError(ParahermError):
    """Array or matrix dimensions do not match what the operation needs."""


class ParseError(ParahermError):
    """Malformed JSON / CSV input."""


class RangeError(ParahermError):
    """Argument outside the supported range (e.g. Landau numbers above 20)."""


class NotPalindromic(ParahermError):
    """Coefficients fail the P_i = P_{g-i}^* symmetry."""


class NotRegular(ParahermError):
    """det P(z) vanishes identically; the polynomial has no finite spectrum."""


class MinusOneEigenvalue(ParahermError):
    """An eigenvalue sits on the branch cut (z = -1 by default); the sign
    machinery is not defined there."""


# --- structural checks that fail -------------------------------------------

class NotHermitian(ParahermError):
    """A matrix expected to be (para-)Hermitian is not, beyond tolerance."""


class NotIsometry(ParahermError):
    """Columns expected to be orthonormal on the circle are not."""


class NotEigenvector(ParahermError):
    """Residual ||P(lam) v|| too large for v to count as an eigenvector."""


class NearDegenerate(ParahermError):
    """Pointwise eigenvalue gap too small for the simple-eigenvalue formula."""


# --- numerical failures in the core algorithms -----------------------------

class AliasError(ParahermError):
    """Fourier recovery saw mass at the boundary of the coefficient window:
    the grid is too coarse, or the function is not in the claimed class."""


class ContinuationError(ParahermError):
    """Eigenvalue branches could not be matched across neighbouring grid
    nodes, even after local refinement."""


class PeriodUndetected(ParahermError):
    """No period permutation within the allowed max_period."""


class OrbitError(ParahermError):
    """Inconsistent orbit structure in the detected period permutation."""


class GaugeError(ParahermError):
    """Wraparound mismatch not unitary / phase correction failed."""


class ResidualError(ParahermError):
    """A reconstruction residual exceeded its tolerance."""


class StructureError(ParahermError):
    """An algebraic structure check failed (e.g. pseudo-circulant block
    coupling identities)."""


class PairingError(ParahermError):
    """+/- eigenvalue branches of the doubled embedding could not be paired."""


class DegenerateFit(ParahermError):
    """Local Taylor fit could not resolve the order of vanishing."""
