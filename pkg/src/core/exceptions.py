"""
ESTA Exceptions
===============

Exception hierarchy shared by every toolkit, parser, node and the CLI.

Errors caused by bad input (configuration, files, degenerate geometry) also
derive from ``ValueError`` so generic callers can catch them as such.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple


class EstaError(Exception):
    """Root of every error raised by ESTA"""


# ==================== INPUT ERRORS ====================

class ConfigError(EstaError, ValueError):
    """Invalid configuration value (names the offending field)"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        prefix = f"{field}: " if field else ""
        super().__init__(f"{prefix}{message}")


class InvalidRotationError(EstaError, ValueError):
    """Matrix is not a proper rotation"""


class InvalidIntrinsicsError(EstaError, ValueError):
    """Camera intrinsics are not invertible or have non-positive focal lengths"""


class InvalidAxisError(EstaError, ValueError):
    """Rotation axis has zero (or non-finite) norm"""


class FormatError(EstaError, ValueError):
    """Text file does not follow its declared format"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}")


class CatalogParseError(FormatError):
    """Catalog row could not be parsed or is out of range"""


class DuplicateStarError(CatalogParseError):
    """Two catalog rows share the same star id"""


class DegenerateConfigurationError(EstaError, ValueError):
    """Geometry does not constrain the requested estimate (rank deficiency)"""


# ==================== ESTIMATION ERRORS ====================

class IdentificationFailedError(EstaError):
    """No star-identification hypothesis survived verification"""


class RegistrationFailedError(EstaError):
    """Trimmed ICP could not produce a relative rotation"""


class UnanchoredSegmentError(EstaError):
    """Part of the measurement graph is not connected to the anchor node"""

    def __init__(self, segments: Sequence[Tuple[int, int]]):
        self.segments: List[Tuple[int, int]] = [tuple(s) for s in segments]
        listed = ", ".join(f"[{a}..{b}]" for a, b in self.segments)
        super().__init__(f"frames not connected to any absolute rotation: {listed}")


class AnchorFreeError(EstaError):
    """No absolute rotation is available to anchor the averaging"""


class UnchainedSegmentError(EstaError):
    """Chaining hit a frame that no relative rotation reaches"""

    def __init__(self, frame: int):
        self.frame = frame
        super().__init__(f"no relative rotation reaches frame {frame}")


class NumericalFailureError(EstaError):
    """Optimizer produced a non-finite cost"""

    def __init__(self, message: str, dump: Optional[Dict[str, Any]] = None):
        self.dump = dump or {}
        super().__init__(message)


class EvaluationError(EstaError, ValueError):
    """Estimates and ground truth do not cover the same frames"""

    def __init__(self, missing: Sequence[int], label: str = "estimate"):
        self.missing = sorted(int(m) for m in missing)
        preview = self.missing[:20]
        more = "" if len(self.missing) <= 20 else f" (+{len(self.missing) - 20} more)"
        super().__init__(f"{label} is missing frames {preview}{more}")


class StageError(EstaError):
    """A pipeline stage failed; carries the stage name"""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")
