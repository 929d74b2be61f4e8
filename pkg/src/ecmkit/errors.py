"""Exception types shared across the toolkit."""


class EcmkitError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(EcmkitError):
    """A document does not conform to the expected schema (missing key, wrong
    type, unknown key in strict mode)."""


class InvariantError(EcmkitError):
    """A structurally valid document violates a semantic invariant; the message
    names the offending field and the rule."""


class LookupError_(EcmkitError):
    """An exact lookup failed; carries nearest-match suggestions when known."""

    def __init__(self, message: str, suggestions: list[str] | None = None):
        if suggestions:
            message = f"{message} (nearest: {', '.join(suggestions)})"
        super().__init__(message)
        self.suggestions = suggestions or []


class CapabilityError(EcmkitError):
    """An executor lacks a capability the requested probe needs."""


class UnitMismatchError(EcmkitError):
    """Two quantities cannot be compared without additional context (e.g. B/cy
    against GB/s with no frequency)."""


class MeasurementError(EcmkitError):
    """Raw measurement inputs are inconsistent (e.g. non-positive denominator
    in a derived bandwidth)."""
