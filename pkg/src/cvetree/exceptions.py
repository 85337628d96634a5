from typing import Sequence

# ----------------------------------------------------------------------------


class CveTreeError(Exception):
    """Generic error."""


class ArgumentError(CveTreeError, ValueError):
    """Error if arguments are incorrectly supplied or values are out of
    their allowed range."""


class ConfigError(CveTreeError, ValueError):
    """Error if a pipeline configuration is invalid (unknown attribute,
    threshold outside ``[0, 1]``, ...)."""


# ------------------------------------
# dataset ingestion


class SchemaError(CveTreeError):
    """Input CSV is missing a required column."""

    def __init__(self, column: str):
        super().__init__(f"Missing required column: {column}")
        self.column = column


class RowError(CveTreeError):
    """Malformed CSV line (wrong number of fields, empty numeric cells, ...).

    The raw `cells` of the line, if known, are echoed in the message.
    """

    def __init__(self, line_number: int, message: str, cells: Sequence[str] = ()):
        text = f"Line {line_number}: {message}"
        if cells:
            text += "\n  row: " + ",".join(cells)
        super().__init__(text)
        self.line_number = line_number
        self.cells = tuple(cells)


class DatasetEncodingError(CveTreeError):
    """Input is not valid UTF-8."""


class DatasetSourceError(CveTreeError):
    """Dataset location could not be opened (missing file, HTTP error)."""


class VocabularyError(CveTreeError, ValueError):
    """Categorical token is not in the vocabulary of its field."""

    def __init__(self, field: str, token: str):
        super().__init__(f"Unknown token {token!r} for field {field!r}")
        self.field = field
        self.token = token


class DateParseError(CveTreeError, ValueError):
    """Published date could not be parsed."""


class EmptyDatasetError(CveTreeError):
    """Dataset without rows. Frequency fitting is undefined."""


# ------------------------------------
# event trees


class EmptyEventError(CveTreeError):
    """Event column without values."""


class CapacityError(CveTreeError):
    """Joint outcome space too large (overflow or above enumeration cap)."""

    def __init__(self, k: int, message: str = ""):
        super().__init__(message or f"Joint outcome space too large: k={k}")
        self.k = k


class UnseenOutcomeError(CveTreeError, KeyError):
    """Path assigns an outcome without fitted probability."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UnseenPrefixError(CveTreeError, KeyError):
    """Conditional chain was never fitted for the outcome prefix of a path."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


# ------------------------------------
# reports / register


class MissingScoreError(CveTreeError):
    """Register entry without a computed risk score."""

    def __init__(self, cve_id: str):
        super().__init__(f"No score for {cve_id}")
        self.cve_id = cve_id


class SchemaVersionError(CveTreeError):
    """Document has an unsupported ``schema_version``."""


class DocumentParseError(CveTreeError):
    """Document is no valid JSON or misses required fields."""


class UnknownCveError(CveTreeError, KeyError):
    """CVE id not in a report. Carries the nearest known ids."""

    def __init__(self, cve_id: str, nearest=()):
        super().__init__(cve_id)
        self.cve_id = cve_id
        self.nearest = list(nearest)

    def __str__(self):
        msg = f"Unknown CVE id: {self.cve_id}"
        if self.nearest:
            msg += " (did you mean: " + ", ".join(self.nearest) + "?)"
        return msg


# ----------------------------------------------------------------------------
