"""
Base Parser
===========

Abstract base class for all file-format parsers.

Every ESTA text format is comma-separated with a fixed header line; a
parser declares its header and is selected by it.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Iterator, List, Optional, Tuple

from src.core.exceptions import FormatError


class BaseParser(ABC):
    """
    Abstract base for file parsers.

    Subclasses set ``header`` (the exact column names) and implement ``parse``.
    """

    header: List[str] = []
    name: str = "base"
    error_class = FormatError

    def can_parse(self, path: Path) -> bool:
        """True when the file's first line is this parser's header"""
        try:
            return self._read_header(Path(path)) == self.header
        except (OSError, UnicodeDecodeError):
            return False

    def validate(self, path: Path) -> Tuple[bool, str]:
        """
        Check that the file exists and starts with the expected header.

        Returns:
            (is_valid, error_message)
        """
        path = Path(path)
        if not path.is_file():
            return False, f"{path} does not exist"
        try:
            found = self._read_header(path)
        except (OSError, UnicodeDecodeError) as e:
            return False, f"{path}: {e}"
        if found != self.header:
            return False, f"{path}: expected header {','.join(self.header)}, found {','.join(found or [])}"
        return True, ""

    @abstractmethod
    def parse(self, path: Path) -> Any:
        """
        Parse the file.

        Raises:
            FormatError: malformed header or row (with line number)
        """
        pass

    # ==================== HELPERS ====================

    @staticmethod
    def _read_header(path: Path) -> Optional[List[str]]:
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                stripped = line.strip()
                if stripped:
                    return [c.strip() for c in stripped.split(",")]
        return None

    def _check_header(self, path: Path) -> None:
        ok, error = self.validate(path)
        if not ok:
            raise self.error_class(error, path=str(path), line=1)

    def _rows(self, path: Path) -> Iterator[Tuple[int, List[str]]]:
        """(line number, fields) of every data row; blank lines are skipped"""
        self._check_header(path)
        n_cols = len(self.header)
        with open(path, "r", encoding="utf-8") as f:
            header_seen = False
            for line_no, line in enumerate(f, start=1):
                stripped = line.strip()
                if not stripped:
                    continue
                if not header_seen:
                    header_seen = True
                    continue
                fields = [c.strip() for c in stripped.split(",")]
                if len(fields) != n_cols:
                    raise self.error_class(
                        f"expected {n_cols} fields, found {len(fields)}", path=str(path), line=line_no
                    )
                yield line_no, fields

    def _number(self, value: str, kind, path: Path, line: int, column: str):
        try:
            return kind(value)
        except ValueError:
            raise self.error_class(
                f"column '{column}': cannot read '{value}' as {kind.__name__}", path=str(path), line=line
            ) from None
