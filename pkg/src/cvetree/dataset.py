import csv
import io
import logging
import random
import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from dataclasses import field
from datetime import datetime
from datetime import timedelta
from datetime import timezone
from typing import BinaryIO
from typing import Dict
from typing import Iterable
from typing import Iterator
from typing import List
from typing import Optional
from typing import Sequence
from typing import TextIO
from typing import Tuple
from typing import Union

import requests

from . import __version__
from .exceptions import ArgumentError
from .exceptions import DatasetEncodingError
from .exceptions import DatasetSourceError
from .exceptions import DateParseError
from .exceptions import EmptyDatasetError
from .exceptions import RowError
from .exceptions import SchemaError
from .exceptions import VocabularyError

# ----------------------------------------------------------------------------


__all__ = [
    "COLUMNS",
    "VOCABULARIES",
    "RawCveRow",
    "CveRecord",
    "DatasetStats",
    "parse_raw_csv",
    "encode_row",
    "decode_field",
    "validate_dataset",
    "filter_by_date",
    "filter_by_field",
    "balance_by_kev",
    "open_source",
    "read_encoded_csv",
    "load_records",
    "write_encoded_csv",
]

LOGGER = logging.getLogger(__name__)


# ----------------------------------------------------------------------------

#: Canonical column names of the consolidated CVE/EPSS/KEV dataset, in
#: export order.
COLUMNS = (
    "cve_id",
    "base_severity",
    "base_score",
    "exploitability_score",
    "impact_score",
    "epss_score",
    "epss_percentile",
    "cisa_kev",
    "attack_vector",
    "attack_complexity",
    "privileges_required",
    "user_interaction",
    "scope",
    "confidentiality_impact",
    "integrity_impact",
    "availability_impact",
    "published_date",
)

#: Categorical vocabularies. The code of a token is its position.
VOCABULARIES: Dict[str, Tuple[str, ...]] = {
    "base_severity": ("LOW", "MEDIUM", "HIGH", "CRITICAL"),
    "cisa_kev": ("FALSE", "TRUE"),
    "attack_vector": ("PHYSICAL", "LOCAL", "ADJACENT_NETWORK", "NETWORK"),
    "attack_complexity": ("LOW", "HIGH"),
    "privileges_required": ("NONE", "LOW", "HIGH"),
    "user_interaction": ("NONE", "REQUIRED"),
    "scope": ("UNCHANGED", "CHANGED"),
    "confidentiality_impact": ("NONE", "LOW", "HIGH"),
    "integrity_impact": ("NONE", "LOW", "HIGH"),
    "availability_impact": ("NONE", "LOW", "HIGH"),
}

#: Inclusive bounds of the numeric score columns.
NUMERIC_BOUNDS: Dict[str, Tuple[float, float]] = {
    "base_score": (0.0, 10.0),
    "exploitability_score": (0.0, 10.0),
    "impact_score": (0.0, 10.0),
    "epss_score": (0.0, 1.0),
    "epss_percentile": (0.0, 1.0),
}

CIA_FIELDS = ("confidentiality_impact", "integrity_impact", "availability_impact")

CVE_ID_PATTERN = re.compile(r"^CVE-\d{4}-\d{4,}$")

_DATE_PATTERN = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})"
    r"(?:[Tt ](\d{2}):(\d{2})(?::(\d{2})(?:\.(\d+))?)?)?"
    r"\s*(Z|z|[+-]\d{2}:?\d{2})?$"
)


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RawCveRow:
    """One data line of the consolidated CSV, categoricals still as tokens."""

    cve_id: str
    base_severity: str
    base_score: float
    exploitability_score: float
    impact_score: float
    epss_score: float
    epss_percentile: float
    cisa_kev: str
    attack_vector: str
    attack_complexity: str
    privileges_required: str
    user_interaction: str
    scope: str
    confidentiality_impact: str
    integrity_impact: str
    availability_impact: str
    published_date: str
    #: Physical line in the source (header is line 1).
    line_number: int = 0
    #: Cells as read, echoed in error messages.
    raw: Tuple[str, ...] = field(default=(), compare=False, repr=False)


@dataclass(frozen=True)
class CveRecord:
    """Encoded vulnerability row, all categoricals as integer codes.

    Raises
    ------
    ArgumentError
        If an ordinal/flag is outside of its vocabulary range or a score
        is not finite or outside its bounds.
    """

    cve_id: str
    base_severity: int
    base_score: float
    exploitability_score: float
    impact_score: float
    epss_score: float
    epss_percentile: float
    cisa_kev: int
    attack_vector: int
    attack_complexity: int
    privileges_required: int
    user_interaction: int
    scope: int
    #: (confidentiality, integrity, availability) ordinals ``0..2``
    cia_impacts: Tuple[int, int, int]
    published_date: datetime

    def __post_init__(self):
        for name, vocab in VOCABULARIES.items():
            code = self.value(name)
            if not 0 <= code < len(vocab):
                raise ArgumentError(f"{self.cve_id}: {name}={code} out of range")
        for name, (low, high) in NUMERIC_BOUNDS.items():
            value = getattr(self, name)
            # NaN fails both comparisons
            if not low <= value <= high:
                raise ArgumentError(f"{self.cve_id}: {name}={value} out of bounds")

    # --------------------------------

    @property
    def exploited(self) -> bool:
        """Listed in the known exploited vulnerabilities catalogue."""
        return self.cisa_kev == 1

    def value(self, field: str) -> Union[int, float, str, datetime]:
        """Value of a dataset column by its canonical name.

        The CIA columns are resolved into the :attr:`cia_impacts` triple.

        Parameters
        ----------
        field : str
            canonical column name, see :data:`COLUMNS`

        Returns
        -------
        Union[int, float, str, datetime]
            column value

        Raises
        ------
        KeyError
            If `field` is no dataset column.
        """
        if field in CIA_FIELDS:
            return self.cia_impacts[CIA_FIELDS.index(field)]
        if field not in COLUMNS:
            raise KeyError(field)
        return getattr(self, field)

    def as_row(self) -> List[str]:
        """Encoded CSV cells in :data:`COLUMNS` order."""
        cells = []
        for name in COLUMNS:
            value = self.value(name)
            if name == "published_date":
                cells.append(format_date(value))
            else:
                cells.append(str(value))
        return cells


@dataclass(frozen=True)
class DatasetStats:
    row_count: int
    exploited_count: int
    #: field -> (min, max) over all rows
    per_field_min_max: Dict[str, Tuple[float, float]]
    duplicate_id_count: int

    @property
    def non_exploited_count(self) -> int:
        return self.row_count - self.exploited_count


# ----------------------------------------------------------------------------


def normalize_token(token: str) -> str:
    """Canonical token form: stripped, upper case, ``-`` and blanks as ``_``."""
    return re.sub(r"[\s\-]+", "_", token.strip()).upper()


def encode_token(field: str, token: str, allow_codes: bool = False) -> int:
    """Map a categorical `token` of `field` to its integer code.

    Parameters
    ----------
    field : str
        categorical column name, key of :data:`VOCABULARIES`
    token : str
        raw token, case-insensitive, surrounding whitespace stripped
    allow_codes : bool, optional
        accept already encoded integer codes, by default False

    Returns
    -------
    int
        code of the token

    Raises
    ------
    VocabularyError
        If `token` is not in the vocabulary of `field`.
    """
    vocab = VOCABULARIES[field]
    norm = normalize_token(token)
    if allow_codes and norm.isdigit() and int(norm) < len(vocab):
        return int(norm)
    try:
        return vocab.index(norm)
    except ValueError:
        raise VocabularyError(field, token) from None


def decode_field(field: str, code: int) -> str:
    """Canonical vocabulary token for the integer `code` of `field`.

    Raises
    ------
    VocabularyError
        If `code` is outside of the vocabulary.
    """
    vocab = VOCABULARIES[field]
    if not 0 <= code < len(vocab):
        raise VocabularyError(field, str(code))
    return vocab[code]


def parse_date(text: str) -> datetime:
    """Parse ``YYYY-MM-DDThh:mmZ``, full RFC-3339 or a plain date.

    Timestamps without offset are read as UTC. The result is always
    timezone aware (UTC).

    Raises
    ------
    DateParseError
        If `text` is no such timestamp.
    """
    match = _DATE_PATTERN.match(text.strip())
    if not match:
        raise DateParseError(f"Unparseable date: {text!r}")
    year, month, day, hour, minute, second, frac, offset = match.groups()
    tz = timezone.utc
    if offset and offset not in ("Z", "z"):
        sign = -1 if offset[0] == "-" else 1
        digits = offset[1:].replace(":", "")
        tz = timezone(sign * timedelta(hours=int(digits[:2]), minutes=int(digits[2:])))
    micros = int((frac or "0")[:6].ljust(6, "0"))
    try:
        dt = datetime(
            int(year),
            int(month),
            int(day),
            int(hour or 0),
            int(minute or 0),
            int(second or 0),
            micros,
            tzinfo=tz,
        )
    except ValueError as ex:
        raise DateParseError(f"Invalid date: {text!r}") from ex
    return dt.astimezone(timezone.utc)


def format_date(dt: datetime) -> str:
    """Format as ``YYYY-MM-DDThh:mmZ`` (seconds only if non-zero)."""
    dt = dt.astimezone(timezone.utc)
    if dt.second or dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S") + (
            f".{dt.microsecond:06d}Z" if dt.microsecond else "Z"
        )
    return dt.strftime("%Y-%m-%dT%H:%MZ")


# ----------------------------------------------------------------------------


def _header_index(header: Sequence[str]) -> Dict[str, int]:
    names = [h.strip().lower() for h in header]
    index = {}
    for column in COLUMNS:
        try:
            index[column] = names.index(column)
        except ValueError:
            raise SchemaError(column) from None
    return index


def parse_raw_csv(source: BinaryIO) -> Iterator[RawCveRow]:
    """Stream `source` (UTF-8 CSV with header) as :class:`RawCveRow`.

    Columns are matched by name (case-insensitive, any order); additional
    columns are ignored. Blank lines are skipped. Only the current line is
    held in memory.

    Parameters
    ----------
    source : BinaryIO
        binary stream

    Yields
    ------
    RawCveRow
        one row per data line, in input order

    Raises
    ------
    SchemaError
        If the header misses a required column.
    RowError
        If a line has the wrong number of fields or invalid numeric cells.
    DatasetEncodingError
        If the stream is not UTF-8.
    EmptyDatasetError
        If the stream is completely empty (not even a header).
    """
    text = io.TextIOWrapper(source, encoding="utf-8-sig", newline="")
    reader = csv.reader(text)
    try:
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDatasetError("empty dataset") from None
        index = _header_index(header)

        for cells in reader:
            if not cells or not any(c.strip() for c in cells):
                continue
            yield _make_raw_row(cells, index, len(header), reader.line_num)
    except UnicodeDecodeError as ex:
        raise DatasetEncodingError(f"Input is not UTF-8: {ex}") from ex
    finally:
        # do not close the caller's stream
        text.detach()


def _make_raw_row(
    cells: List[str], index: Dict[str, int], width: int, line_number: int
) -> RawCveRow:
    if len(cells) != width:
        raise RowError(line_number, f"expected {width} fields, got {len(cells)}", cells)

    values = {}
    for column, pos in index.items():
        cell = cells[pos].strip()
        if column in NUMERIC_BOUNDS:
            if not cell:
                raise RowError(line_number, f"empty numeric cell {column!r}", cells)
            try:
                values[column] = float(cell)
            except ValueError:
                raise RowError(line_number, f"{column}={cell!r} is not numeric", cells) from None
            low, high = NUMERIC_BOUNDS[column]
            if not low <= values[column] <= high:
                raise RowError(line_number, f"{column}={cell} outside [{low}, {high}]", cells)
        else:
            values[column] = cell
    return RawCveRow(line_number=line_number, raw=tuple(cells), **values)


def encode_row(row: RawCveRow, allow_codes: bool = False) -> CveRecord:
    """Apply the categorical-to-numeric encodings to a raw row.

    Parameters
    ----------
    row : RawCveRow
        parsed row
    allow_codes : bool, optional
        accept categoricals that are already integer encoded,
        by default False

    Returns
    -------
    CveRecord

    Raises
    ------
    VocabularyError
        If a categorical token (or the CVE id) is invalid.
    DateParseError
        If the published date can not be parsed.
    ArgumentError
        If a numeric score is out of bounds.
    """
    cve_id = row.cve_id.strip().upper()
    if not CVE_ID_PATTERN.match(cve_id):
        raise VocabularyError("cve_id", row.cve_id)

    codes = {
        name: encode_token(name, getattr(row, name), allow_codes=allow_codes)
        for name in VOCABULARIES
    }
    cia = tuple(codes.pop(name) for name in CIA_FIELDS)

    return CveRecord(
        cve_id=cve_id,
        base_score=row.base_score,
        exploitability_score=row.exploitability_score,
        impact_score=row.impact_score,
        epss_score=row.epss_score,
        epss_percentile=row.epss_percentile,
        cia_impacts=cia,
        published_date=parse_date(row.published_date),
        **codes,
    )


# ----------------------------------------------------------------------------


#: Fields summarized in :attr:`DatasetStats.per_field_min_max`.
STAT_FIELDS = tuple(c for c in COLUMNS if c not in ("cve_id", "published_date"))


def validate_dataset(records: Iterable[CveRecord]) -> DatasetStats:
    """Count rows, exploited rows, duplicate ids and per-field ranges.

    Duplicates are only counted, never removed.

    Raises
    ------
    EmptyDatasetError
        If there are no records.
    """
    row_count = 0
    exploited = 0
    seen = set()
    minmax: Dict[str, Tuple[float, float]] = dict()

    for record in records:
        row_count += 1
        exploited += record.cisa_kev
        seen.add(record.cve_id)
        for name in STAT_FIELDS:
            value = record.value(name)
            if name in minmax:
                low, high = minmax[name]
                minmax[name] = (min(low, value), max(high, value))
            else:
                minmax[name] = (value, value)

    if not row_count:
        raise EmptyDatasetError("empty dataset")

    duplicates = row_count - len(seen)
    if duplicates:
        LOGGER.warning("Dataset contains %d duplicate CVE ids (kept)", duplicates)

    return DatasetStats(
        row_count=row_count,
        exploited_count=exploited,
        per_field_min_max=minmax,
        duplicate_id_count=duplicates,
    )


def filter_by_date(
    records: Iterable[CveRecord], date_from: datetime, date_to: datetime
) -> List[CveRecord]:
    """Records published within ``[date_from, date_to]`` (inclusive), order kept.

    Raises
    ------
    ArgumentError
        If `date_from` is after `date_to`.
    """
    if date_from.tzinfo is None:
        date_from = date_from.replace(tzinfo=timezone.utc)
    if date_to.tzinfo is None:
        date_to = date_to.replace(tzinfo=timezone.utc)
    if date_from > date_to:
        raise ArgumentError(f"Invalid date range: {date_from} > {date_to}")
    return [r for r in records if date_from <= r.published_date <= date_to]


def filter_by_field(
    records: Iterable[CveRecord], field: str, values: Iterable[Union[str, int, float]]
) -> List[CveRecord]:
    """Records whose `field` takes one of `values` (filtering by *area*).

    Categorical `values` may be given as tokens or integer codes.

    Raises
    ------
    ArgumentError
        If `field` is no dataset column.
    VocabularyError
        If a categorical token is invalid.
    """
    if field not in COLUMNS or field == "published_date":
        raise ArgumentError(f"Can not filter by field: {field!r}")

    if field in VOCABULARIES:
        wanted = {
            v if isinstance(v, int) else encode_token(field, v, allow_codes=True)
            for v in values
        }
    elif field in NUMERIC_BOUNDS:
        wanted = {float(v) for v in values}
    else:
        wanted = {str(v).strip().upper() for v in values}

    return [r for r in records if r.value(field) in wanted]


def balance_by_kev(records: Sequence[CveRecord], seed: int = 0) -> List[CveRecord]:
    """Balanced subset with equally many exploited and non-exploited rows.

    The majority class is undersampled with a seeded RNG; input order is
    kept.

    Raises
    ------
    EmptyDatasetError
        If one of the two classes has no rows.
    """
    exploited = [i for i, r in enumerate(records) if r.exploited]
    others = [i for i, r in enumerate(records) if not r.exploited]
    if not exploited or not others:
        raise EmptyDatasetError("Can not balance: one class has no rows")

    minority, majority = sorted((exploited, others), key=len)
    keep = set(minority)
    keep.update(random.Random(seed).sample(majority, len(minority)))
    LOGGER.info(
        "Balanced dataset: %d of %d rows (seed=%d)", len(keep), len(records), seed
    )
    return [r for i, r in enumerate(records) if i in keep]


# ----------------------------------------------------------------------------


class RemoteDataset:
    """Streaming download of a consolidated dataset CSV.

    Attributes
    ----------
    session : requests.Session
        :mod:`requests` session object (stores ``User-Agent``)
    """

    def __init__(self, url: str, timeout: Optional[float] = 60.0):
        self.url = url
        self.timeout = timeout

        self.session = requests.Session()
        self.session.headers.update({"User-Agent": f"cvetree/{__version__}"})

    def __del__(self):
        self.session.close()

    def open(self) -> BinaryIO:
        """Start the download and return the (undecoded) body stream.

        Raises
        ------
        DatasetSourceError
            On connection or HTTP errors.
        """
        LOGGER.info("Downloading dataset from %s", self.url)
        try:
            resp = self.session.get(self.url, stream=True, timeout=self.timeout)
            resp.raise_for_status()
        except requests.RequestException as ex:
            raise DatasetSourceError(f"Could not download {self.url}: {ex}") from ex
        # transparently gunzip on transfer-encoding
        resp.raw.decode_content = True
        return resp.raw


@contextmanager
def open_source(location: str) -> Iterator[BinaryIO]:
    """Open a dataset location as binary stream.

    Search order:

    1. ``-`` reads from standard input,
    2. ``http://`` / ``https://`` URLs are streamed with :class:`RemoteDataset`,
    3. everything else is a local file path.

    Raises
    ------
    DatasetSourceError
        If the location can not be opened.
    """
    location = str(location)
    if location == "-":
        yield sys.stdin.buffer
    elif location.lower().startswith(("http://", "https://")):
        remote = RemoteDataset(location)
        stream = remote.open()
        try:
            yield stream
        finally:
            stream.close()
    else:
        try:
            fp = open(location, "rb")
        except OSError as ex:
            raise DatasetSourceError(f"Could not open {location}: {ex}") from ex
        with fp:
            yield fp


def read_encoded_csv(source: BinaryIO) -> Iterator[CveRecord]:
    """Parse and encode `source`, raw tokens and integer codes are both
    accepted.

    Raises
    ------
    RowError
        If a line is malformed or holds an invalid token, id or date, the
        message names the line.
    """
    for row in parse_raw_csv(source):
        try:
            yield encode_row(row, allow_codes=True)
        except (VocabularyError, DateParseError) as ex:
            raise RowError(row.line_number, str(ex), row.raw) from ex


def load_records(location: str) -> List[CveRecord]:
    """Read a raw or already encoded dataset from `location`."""
    with open_source(location) as stream:
        records = list(read_encoded_csv(stream))
    LOGGER.info("Loaded %d records from %s", len(records), location)
    return records


def write_encoded_csv(records: Iterable[CveRecord], sink: TextIO, decode: bool = False) -> int:
    """Write records with the canonical header and integer categoricals.

    With `decode`, categoricals are written as vocabulary tokens instead.

    Returns
    -------
    int
        number of rows written
    """
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(COLUMNS)
    count = 0
    for record in records:
        row = record.as_row()
        if decode:
            row = [
                decode_field(name, int(cell)) if name in VOCABULARIES else cell
                for name, cell in zip(COLUMNS, row)
            ]
        writer.writerow(row)
        count += 1
    return count


# ----------------------------------------------------------------------------
