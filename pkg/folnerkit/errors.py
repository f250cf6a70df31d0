"""Exception hierarchy.

Everything the library raises on purpose derives from ``FolnerKitError`` so the
CLI can turn it into exit status 1 with a single diagnostic line, except
resource exhaustion, which ends a run with status 2 and a partial report. Outcomes that
are expected use (a search not reaching its target, verification violations)
are returned as report data instead.
"""

from typing import Any, Dict, Optional


class FolnerKitError(Exception):
    """Base class for workbench errors."""


class ModelMismatchError(FolnerKitError, ValueError):
    """Operands belong to different group models."""


class ElementParseError(FolnerKitError, ValueError):
    """An element encoding or rational string could not be parsed."""


class WindowLimitError(FolnerKitError):
    """A finite window would exceed the configured size cap."""


class SupportTooLargeError(FolnerKitError):
    """An exact LP was requested on a support above the configured cap."""


class MissingValueError(FolnerKitError, KeyError):
    """A function table lacks a value the computation needs."""


class PreconditionError(FolnerKitError, ValueError):
    """An operation was called outside its documented domain."""


class ResourceExhaustedError(FolnerKitError):
    """A budgeted construction stopped early; ``partial`` holds what it had reached."""

    def __init__(self, message: str, partial: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.partial = dict(partial or {})


class SupplyExhaustedError(ResourceExhaustedError):
    """A point supply is too coarse for the requested construction."""


class BudgetExhaustedError(ResourceExhaustedError):
    """A construction ran out of its search or step budget."""


class ConstructionError(FolnerKitError):
    """A construction could not be completed on the given window."""


class NotWobblingError(FolnerKitError):
    """A permutation is not piecewise a translation by pool elements."""

    def __init__(self, message: str, witness: Any):
        super().__init__(message)
        self.witness = witness


class ClassifierError(FolnerKitError):
    """A piece classifier is malformed or not applicable to an element."""


class ScenarioError(FolnerKitError):
    """A scenario file is malformed."""

    def __init__(self, message: str, field_path: str = ""):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path
