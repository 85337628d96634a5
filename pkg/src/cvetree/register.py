"""Risk register: qualitative annotations joined with quantitative scores.

Qualitative assessment outputs (context, risk factors, consequences) are
free text and stored as is. Registers are exchanged as versioned JSON
documents.
"""
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from datetime import datetime
from datetime import timezone
from os import PathLike
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Iterator
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

from wrapt import synchronized

from .dataset import CVE_ID_PATTERN
from .dataset import format_date
from .dataset import parse_date
from .exceptions import ArgumentError
from .exceptions import DocumentParseError
from .exceptions import MissingScoreError
from .exceptions import SchemaVersionError
from .risk import RiskScore
from .risk import rank_key

# ----------------------------------------------------------------------------


__all__ = [
    "QualitativeAnnotation",
    "RiskRegisterEntry",
    "AnnotationStore",
    "attach_annotation",
    "build_entries",
    "export_register",
    "import_register",
]

LOGGER = logging.getLogger(__name__)

#: Version of the register / annotation store JSON layout.
REGISTER_SCHEMA_VERSION = 1

_ENTRY_FIELDS = (
    "cve_id",
    "priority",
    "description",
    "category",
    "response_type",
    "response_cost",
    "score",
    "annotation",
)


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class QualitativeAnnotation:
    """Outputs of a (manual) qualitative assessment of one CVE.

    Raises
    ------
    ArgumentError
        If `cve_id` is malformed.
    """

    cve_id: str
    #: Scope label, e.g. ``Software``.
    context: str = ""
    risk_factors: Tuple[str, ...] = ()
    #: Consequences, phrased in terms of confidentiality/integrity/availability.
    consequences: Tuple[str, ...] = ()
    analyst: Optional[str] = None
    recorded_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def __post_init__(self):
        cve_id = (self.cve_id or "").strip().upper()
        if not CVE_ID_PATTERN.match(cve_id):
            raise ArgumentError(f"Malformed CVE id: {self.cve_id!r}")
        object.__setattr__(self, "cve_id", cve_id)
        object.__setattr__(self, "risk_factors", tuple(self.risk_factors or ()))
        object.__setattr__(self, "consequences", tuple(self.consequences or ()))
        if self.recorded_at.tzinfo is None:
            object.__setattr__(self, "recorded_at", self.recorded_at.replace(tzinfo=timezone.utc))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cve_id": self.cve_id,
            "context": self.context,
            "risk_factors": list(self.risk_factors),
            "consequences": list(self.consequences),
            "analyst": self.analyst,
            "recorded_at": format_date(self.recorded_at),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "QualitativeAnnotation":
        return cls(
            cve_id=data["cve_id"],
            context=data.get("context", ""),
            risk_factors=tuple(data.get("risk_factors") or ()),
            consequences=tuple(data.get("consequences") or ()),
            analyst=data.get("analyst"),
            recorded_at=parse_date(data["recorded_at"]),
        )


@dataclass(frozen=True)
class RiskRegisterEntry:
    """One risk register record.

    The `priority` is assigned on export (``0`` means unassigned).
    """

    cve_id: str
    priority: int = 0
    description: str = ""
    category: str = ""
    response_type: str = ""
    #: Opaque, no unit or scale.
    response_cost: Optional[float] = None
    score: Optional[RiskScore] = None
    annotation: Optional[QualitativeAnnotation] = None
    #: Unknown document fields, preserved for export.
    extras: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.extras)
        data.update(
            {
                "cve_id": self.cve_id,
                "priority": self.priority,
                "description": self.description,
                "category": self.category,
                "response_type": self.response_type,
                "response_cost": self.response_cost,
                "score": self.score.to_dict(with_factors=False) if self.score else None,
                "annotation": self.annotation.to_dict() if self.annotation else None,
            }
        )
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RiskRegisterEntry":
        cost = data.get("response_cost")
        return cls(
            cve_id=data["cve_id"],
            priority=int(data.get("priority", 0)),
            description=data.get("description", ""),
            category=data.get("category", ""),
            response_type=data.get("response_type", ""),
            response_cost=float(cost) if cost is not None else None,
            score=RiskScore.from_dict(data["score"]) if data.get("score") else None,
            annotation=(
                QualitativeAnnotation.from_dict(data["annotation"])
                if data.get("annotation")
                else None
            ),
            extras={k: v for k, v in data.items() if k not in _ENTRY_FIELDS},
        )


# ----------------------------------------------------------------------------


def atomic_write_text(path: Union[str, PathLike], text: str) -> Path:
    """Write `text` to a temporary file next to `path`, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent or "."))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _load_json(text: str, what: str) -> Dict[str, Any]:
    try:
        doc = json.loads(text)
    except ValueError as ex:
        raise DocumentParseError(f"Invalid {what} JSON: {ex}") from ex
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise DocumentParseError(f"{what} without schema_version")
    if doc["schema_version"] != REGISTER_SCHEMA_VERSION:
        raise SchemaVersionError(f"Unsupported {what} schema_version: {doc['schema_version']!r}")
    return doc


class AnnotationStore:
    """Qualitative annotations by CVE id, with an audit trail.

    The annotation with the latest ``recorded_at`` is the current one,
    all others are kept in the history. Writes are serialized per
    instance; :meth:`save` replaces the file atomically.
    """

    def __init__(self, path: Optional[Union[str, PathLike]] = None):
        self.path = Path(path) if path else None
        self.__current: Dict[str, QualitativeAnnotation] = dict()
        self.__history: Dict[str, List[QualitativeAnnotation]] = dict()

    # --------------------------------

    @synchronized
    def attach(self, annotation: QualitativeAnnotation) -> "AnnotationStore":
        """Upsert `annotation`, the latest `recorded_at` wins.

        Returns
        -------
        AnnotationStore
            this store
        """
        current = self.__current.get(annotation.cve_id)
        if current is None:
            self.__current[annotation.cve_id] = annotation
        elif annotation.recorded_at >= current.recorded_at:
            self.__history.setdefault(annotation.cve_id, []).append(current)
            self.__current[annotation.cve_id] = annotation
        else:
            self.__history.setdefault(annotation.cve_id, []).append(annotation)
        trail = self.__history.get(annotation.cve_id)
        if trail:
            trail.sort(key=lambda a: a.recorded_at)
        LOGGER.debug("Attached annotation for %s", annotation.cve_id)
        return self

    def get(self, cve_id: str) -> Optional[QualitativeAnnotation]:
        return self.__current.get(cve_id.strip().upper())

    def history(self, cve_id: str) -> List[QualitativeAnnotation]:
        """Superseded annotations of `cve_id`, oldest first."""
        return list(self.__history.get(cve_id.strip().upper(), ()))

    def __contains__(self, cve_id: str) -> bool:
        return cve_id.strip().upper() in self.__current

    def __len__(self) -> int:
        return len(self.__current)

    def __iter__(self) -> Iterator[QualitativeAnnotation]:
        return iter([self.__current[k] for k in sorted(self.__current)])

    # --------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REGISTER_SCHEMA_VERSION,
            "annotations": [a.to_dict() for a in self],
            "history": {
                cve_id: [a.to_dict() for a in trail]
                for cve_id, trail in sorted(self.__history.items())
            },
        }

    @classmethod
    def load(cls, path: Union[str, PathLike]) -> "AnnotationStore":
        """Load a store file; a missing file gives an empty store.

        Raises
        ------
        DocumentParseError
            If the file is no valid store document.
        SchemaVersionError
            If the `schema_version` is not supported.
        """
        store = cls(path)
        path = Path(path)
        if not path.exists():
            return store
        doc = _load_json(path.read_text(encoding="utf-8"), "annotation store")
        try:
            for trail in doc.get("history", {}).values():
                for data in trail:
                    store.attach(QualitativeAnnotation.from_dict(data))
            for data in doc["annotations"]:
                store.attach(QualitativeAnnotation.from_dict(data))
        except (KeyError, TypeError, ValueError) as ex:
            raise DocumentParseError(f"Invalid annotation store {path}: {ex!r}") from ex
        LOGGER.info("Loaded %d annotations from %s", len(store), path)
        return store

    @synchronized
    def save(self, path: Optional[Union[str, PathLike]] = None) -> Path:
        path = Path(path) if path else self.path
        if path is None:
            raise ArgumentError("No path to save the annotation store to")
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"
        atomic_write_text(path, text)
        LOGGER.info("Saved %d annotations to %s", len(self), path)
        return path


def attach_annotation(
    store: AnnotationStore, annotation: QualitativeAnnotation
) -> AnnotationStore:
    """Upsert `annotation` into `store`, see :meth:`AnnotationStore.attach`."""
    return store.attach(annotation)


# ----------------------------------------------------------------------------


def build_entries(
    scores: Sequence[RiskScore],
    store: Optional[AnnotationStore] = None,
    category: str = "vulnerability",
    response_type: str = "undetermined",
) -> List[RiskRegisterEntry]:
    """Join scores with their current annotations into register entries."""
    entries = []
    for score in scores:
        annotation = store.get(score.cve_id) if store is not None else None
        if annotation is not None and annotation.risk_factors:
            description = "; ".join(annotation.risk_factors)
        else:
            description = f"{score.cve_id} ({score.risk_class.label})"
        entries.append(
            RiskRegisterEntry(
                cve_id=score.cve_id,
                description=description,
                category=annotation.context if annotation and annotation.context else category,
                response_type=response_type,
                score=score,
                annotation=annotation,
            )
        )
    return entries


def export_register(
    entries: Sequence[RiskRegisterEntry],
    scores: Union[Mapping[str, RiskScore], Sequence[RiskScore], None] = None,
) -> str:
    """Render a register document with priorities by descending risk.

    Parameters
    ----------
    entries : Sequence[RiskRegisterEntry]
        entries, with or without score
    scores : Union[Mapping[str, RiskScore], Sequence[RiskScore], None], optional
        scores for entries without one, looked up by CVE id

    Returns
    -------
    str
        canonical JSON document

    Raises
    ------
    MissingScoreError
        If an entry has no score.
    """
    if scores is None:
        lookup: Mapping[str, RiskScore] = dict()
    elif isinstance(scores, Mapping):
        lookup = scores
    else:
        lookup = dict()
        for score in scores:
            lookup.setdefault(score.cve_id, score)

    scored = []
    for entry in entries:
        score = entry.score or lookup.get(entry.cve_id)
        if score is None:
            raise MissingScoreError(entry.cve_id)
        scored.append(replace(entry, score=score))

    ordered = sorted(scored, key=lambda e: rank_key(e.score))
    doc = {
        "schema_version": REGISTER_SCHEMA_VERSION,
        "entries": [
            replace(entry, priority=priority).to_dict()
            for priority, entry in enumerate(ordered, start=1)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def import_register(document: str) -> List[RiskRegisterEntry]:
    """Parse a register document, unknown entry fields are preserved.

    Raises
    ------
    DocumentParseError
        If `document` is no valid (or a truncated) JSON register.
    SchemaVersionError
        If the `schema_version` is not supported.
    """
    doc = _load_json(document, "register")
    try:
        return [RiskRegisterEntry.from_dict(data) for data in doc["entries"]]
    except (KeyError, TypeError, ValueError) as ex:
        raise DocumentParseError(f"Invalid register entry: {ex!r}") from ex


# ----------------------------------------------------------------------------
