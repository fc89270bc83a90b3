"""Exception hierarchy for eisenlab.

Numeric failure modes are explicit: we never return NaN from a kernel.
Every error that carries partial data exposes it as attributes so callers
can degrade gracefully (e.g. report a partial integral with its estimate).
"""

from __future__ import annotations


class EisenlabError(Exception):
    """Base class for all package errors."""


class ConfigError(EisenlabError):
    """Invalid run configuration (CLI exit code 2)."""


# ---- special function kernels ----

class PoleAtNonpositiveInteger(EisenlabError):
    """Gamma/digamma/trigamma evaluated at a nonpositive integer."""


class PoleAtOne(EisenlabError):
    """zeta evaluated at its pole s = 1."""


class NearZeroOfZeta(EisenlabError):
    """Logarithmic derivative requested too close to a zero of zeta."""


class NearZeroOfXi(EisenlabError):
    """Ratio requested too close to a zero of xi."""


class PoleOnPath(EisenlabError):
    """A xi-ratio was requested at (or too near) a pole of the expression."""


class BudgetExceeded(EisenlabError):
    """Refinement budget exhausted before the tolerance was met.

    Carries the partial value and the current error estimate.
    """

    def __init__(self, message: str, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class TailNotDecaying(EisenlabError):
    """Line integral tail failed to decay under repeated extension."""


# ---- Eisenstein / regularization ----

class UncertifiedTruncation(EisenlabError):
    """Eisenstein series evaluated below the height its truncation was certified for."""


class AlphaEqualsOne(EisenlabError):
    """Growth-profile term with exponent 1; the explicit antiderivative formula fails."""


class ExponentCollision(EisenlabError):
    """Constant-term product produced an exponent equal to 1."""


class NotRenormalizable(EisenlabError):
    """Cusp integral of F - Phi failed to converge within budget."""


class InsufficientCoefficients(EisenlabError):
    """Not enough Hecke eigenvalues for the requested L-value accuracy."""


# ---- dataset ingestion ----

class SchemaError(EisenlabError):
    """Maass-form dataset does not match the documented CSV/JSON schema."""


class HeckeViolation(EisenlabError):
    """Hecke multiplicativity residual above the data tolerance."""


class ParityError(EisenlabError):
    """Parity field outside {+1, -1}."""
