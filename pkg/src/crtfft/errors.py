"""Exception types shared across the package."""


class CrtFftError(Exception):
    """Base class for all library errors."""


class NotCoprimeError(CrtFftError):
    """Two moduli (or a value and its modulus) share a common factor."""


class SearchExhaustedError(CrtFftError):
    """No qualifying moduli set exists within the bounded search radius."""


class NonFiniteError(CrtFftError):
    """A buffer contains NaN or infinite samples."""


class OracleCapExceededError(CrtFftError):
    """A dense computation was requested above the configured size budget."""


class ParseError(CrtFftError):
    """A serialized artifact (spectrum, certificate, config) is malformed."""


class DuplicateFrequencyError(CrtFftError):
    """A sparse spectrum lists the same frequency twice."""


class OutOfRangeError(CrtFftError):
    """A frequency lies outside the grid it was declared on."""


class DenseRegimeError(CrtFftError):
    """The sparsity ratio is too high for a fast-path plan."""


class StrideMismatchError(CrtFftError):
    """A view modulus does not divide the working grid length."""


class DuplicateConflictError(CrtFftError):
    """A frequency was re-detected with an inconsistent coefficient."""


class GridMismatchError(CrtFftError):
    """A signal's grid length does not match the plan it is paired with."""
