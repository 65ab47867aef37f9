"""Exception types shared across the pipeline.

Every contract violation raises a named exception so callers (CLI, HTTP
service) can map failures to exit codes / status codes without string
matching.
"""

from __future__ import annotations


class TelecareError(Exception):
    """Base class for all package-specific errors."""


# --- signal layer ---------------------------------------------------------


class SignalError(TelecareError):
    pass


class MismatchedLength(SignalError):
    pass


class MismatchedRate(SignalError):
    pass


class NonFiniteSample(SignalError, ValueError):
    pass


class InvalidCutoff(SignalError, ValueError):
    pass


class TooShort(SignalError, ValueError):
    pass


class LagTooLarge(SignalError, ValueError):
    pass


class NotAPressureTrace(SignalError, ValueError):
    pass


# --- pulse analysis -------------------------------------------------------


class NoPeaks(TelecareError):
    pass


class OutOfPhysiologicalRange(TelecareError, ValueError):
    pass


class InvalidBand(TelecareError, ValueError):
    pass


class LayoutMismatch(TelecareError, ValueError):
    pass


# --- thermal features -----------------------------------------------------


class OutOfBounds(TelecareError, ValueError):
    pass


class DimensionMismatch(TelecareError, ValueError):
    pass


class RoiTooSmall(TelecareError, ValueError):
    pass


class ImplausibleTemperature(TelecareError, ValueError):
    pass


# --- evaluation -----------------------------------------------------------


class SchemaMismatch(TelecareError, ValueError):
    pass


class LengthMismatch(TelecareError, ValueError):
    pass


class EmptyInput(TelecareError, ValueError):
    pass


class ZeroVariance(TelecareError, ValueError):
    pass


class BadK(TelecareError, ValueError):
    pass


class MissingClass(TelecareError, ValueError):
    pass


# --- simulator ------------------------------------------------------------


class InvalidParams(TelecareError, ValueError):
    pass


class InvalidSize(TelecareError, ValueError):
    pass


class BadMix(TelecareError, ValueError):
    pass


# --- session store / service ----------------------------------------------


class StoreError(TelecareError):
    pass


class DuplicateId(StoreError):
    pass


class StorageFailure(StoreError):
    pass


class NotFound(StoreError):
    pass


class CorruptRecord(StoreError):
    pass


class EmptyAnnotation(StoreError, ValueError):
    pass


class AnalysisFailure(StoreError):
    """Analysis of a stored session failed; ``__cause__`` holds the reason."""
