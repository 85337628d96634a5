"""Impact, risk scores, normalization and classification.

:func:`score_dataset` runs the complete pipeline over a dataset:

1. fit one frequency table per likelihood attribute (or a conditional
   chain) over the whole dataset,
2. per row, the likelihood is the probability of the row's path,
3. the impact is the dataset impact score or the CIA composite,
4. likelihood and impact are min-max normalized over the dataset,
5. the risk is likelihood x impact (raw or normalized inputs),
6. the risk is min-max normalized and classified by a threshold.
"""
import csv
import difflib
import enum
import hashlib
import io
import json
import logging
import math
import time
from dataclasses import dataclass
from dataclasses import field
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

import numpy as np

from .config import DEFAULT_CIA_WEIGHTS
from .config import PipelineConfig
from .dataset import CveRecord
from .dataset import format_date
from .dataset import parse_date
from .eventtree import EventBase
from .eventtree import FrequencyTable
from .eventtree import Outcome
from .eventtree import Quantizer
from .eventtree import build_outcome_space
from .eventtree import combine_factors
from .eventtree import enumerate_paths
from .eventtree import fit_conditional_chain
from .eventtree import fit_marginal
from .eventtree import total_probability
from .exceptions import ArgumentError
from .exceptions import ConfigError
from .exceptions import DocumentParseError
from .exceptions import EmptyDatasetError
from .exceptions import SchemaVersionError
from .exceptions import UnknownCveError

# ----------------------------------------------------------------------------


__all__ = [
    "ImpactVector",
    "NormalizationBounds",
    "RiskClass",
    "RiskScore",
    "RiskReport",
    "impact_from_cia",
    "cia_ordinals_to_vector",
    "normalize_minmax",
    "risk_score",
    "classify",
    "score_dataset",
    "PathMass",
    "check_path_mass",
    "rank",
    "report_digest",
    "write_report",
    "read_report",
]

LOGGER = logging.getLogger(__name__)

#: Version of the JSON report layout.
REPORT_SCHEMA_VERSION = 1

#: Report columns, in output order.
REPORT_COLUMNS = (
    "cve_id",
    "likelihood_raw",
    "likelihood_norm",
    "impact_raw",
    "impact_norm",
    "risk_raw",
    "risk_norm",
    "risk_class",
    "published_date",
)


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ImpactVector:
    """Confidentiality, integrity and availability impact weights.

    Raises
    ------
    ArgumentError
        If a component is outside of ``[0, 1]``.
    """

    c: float
    g: float
    a: float

    def __post_init__(self):
        for name in ("c", "g", "a"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ArgumentError(f"Impact component {name}={value} outside [0, 1]")


@dataclass(frozen=True)
class NormalizationBounds:
    """Dataset-wide min / max used by min-max normalization."""

    min_t: float
    max_t: float

    def __post_init__(self):
        if not self.min_t <= self.max_t:
            raise ArgumentError(f"Invalid bounds: {self.min_t} > {self.max_t}")

    @property
    def degenerate(self) -> bool:
        """:obj:`True` if all values were equal (everything maps to 0)."""
        return self.min_t == self.max_t

    def to_dict(self) -> Dict[str, Any]:
        return {"min_t": self.min_t, "max_t": self.max_t, "degenerate": self.degenerate}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NormalizationBounds":
        return cls(float(data["min_t"]), float(data["max_t"]))


class RiskClass(enum.IntEnum):
    NON_RISKY = 0
    RISKY = 1

    @property
    def label(self) -> str:
        return "Risky" if self is RiskClass.RISKY else "NonRisky"

    @classmethod
    def from_label(cls, label: str) -> "RiskClass":
        for member in cls:
            if member.label.lower() == label.strip().lower() or str(member.value) == label.strip():
                return member
        raise ValueError(f"Unknown risk class: {label!r}")


@dataclass(frozen=True)
class Factor:
    """One event of a scored path: the row's outcome and its probability."""

    attribute: str
    outcome: Outcome
    probability: float


@dataclass(frozen=True)
class RiskScore:
    cve_id: str
    likelihood_raw: float
    likelihood_norm: float
    impact_raw: float
    impact_norm: float
    risk_raw: float
    risk_norm: float
    risk_class: RiskClass
    published_date: Optional[datetime] = None
    #: Per-event outcome probabilities, their product is `likelihood_raw`.
    factors: Tuple[Factor, ...] = ()
    #: Likelihood product underflowed to zero.
    underflow: bool = False

    def to_dict(self, with_factors: bool = True) -> Dict[str, Any]:
        data = {
            "cve_id": self.cve_id,
            "likelihood_raw": self.likelihood_raw,
            "likelihood_norm": self.likelihood_norm,
            "impact_raw": self.impact_raw,
            "impact_norm": self.impact_norm,
            "risk_raw": self.risk_raw,
            "risk_norm": self.risk_norm,
            "risk_class": self.risk_class.label,
            "published_date": format_date(self.published_date) if self.published_date else None,
        }
        if with_factors:
            data["factors"] = [
                {"attribute": f.attribute, "outcome": f.outcome, "probability": f.probability}
                for f in self.factors
            ]
            data["underflow"] = self.underflow
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RiskScore":
        published = data.get("published_date")
        return cls(
            cve_id=str(data["cve_id"]),
            likelihood_raw=float(data["likelihood_raw"]),
            likelihood_norm=float(data["likelihood_norm"]),
            impact_raw=float(data["impact_raw"]),
            impact_norm=float(data["impact_norm"]),
            risk_raw=float(data["risk_raw"]),
            risk_norm=float(data["risk_norm"]),
            risk_class=RiskClass.from_label(str(data["risk_class"])),
            published_date=parse_date(published) if published else None,
            factors=tuple(
                Factor(f["attribute"], f["outcome"], float(f["probability"]))
                for f in data.get("factors", ())
            ),
            underflow=bool(data.get("underflow", False)),
        )


@dataclass
class RiskReport:
    """Scored dataset, a sequence of :class:`RiskScore` in input order,
    plus the metadata needed to interpret the scores."""

    scores: List[RiskScore]
    config: PipelineConfig
    likelihood_bounds: NormalizationBounds
    impact_bounds: NormalizationBounds
    risk_bounds: NormalizationBounds
    generated_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))
    runtime_seconds: float = 0.0

    def __len__(self) -> int:
        return len(self.scores)

    def __iter__(self) -> Iterator[RiskScore]:
        return iter(self.scores)

    def __getitem__(self, index: int) -> RiskScore:
        return self.scores[index]

    @property
    def row_count(self) -> int:
        return len(self.scores)

    @property
    def risky_count(self) -> int:
        return sum(1 for s in self.scores if s.risk_class is RiskClass.RISKY)

    def find(self, cve_id: str) -> RiskScore:
        """First score of `cve_id`.

        Raises
        ------
        UnknownCveError
            If `cve_id` is not in the report, with the nearest ids.
        """
        wanted = cve_id.strip().upper()
        for score in self.scores:
            if score.cve_id == wanted:
                return score
        raise UnknownCveError(cve_id, nearest_ids(wanted, (s.cve_id for s in self.scores)))

    # --------------------------------

    def metadata(self) -> Dict[str, Any]:
        return {
            "config_digest": self.config.digest(),
            "config": self.config.to_dict(),
            "bounds": {
                "likelihood": self.likelihood_bounds.to_dict(),
                "impact": self.impact_bounds.to_dict(),
                "risk": self.risk_bounds.to_dict(),
            },
            "row_count": self.row_count,
            "run": {
                "generated_at": self.generated_at.isoformat(),
                "runtime_seconds": self.runtime_seconds,
            },
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "metadata": self.metadata(),
            "rows": [s.to_dict() for s in self.scores],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "RiskReport":
        """Inverse of :meth:`to_dict`.

        Raises
        ------
        SchemaVersionError
            If the `schema_version` is not supported.
        DocumentParseError
            If fields are missing or invalid.
        """
        if not isinstance(doc, Mapping) or "schema_version" not in doc:
            raise DocumentParseError("Report without schema_version")
        if doc["schema_version"] != REPORT_SCHEMA_VERSION:
            raise SchemaVersionError(f"Unsupported report schema_version: {doc['schema_version']!r}")
        try:
            meta = doc["metadata"]
            bounds = meta["bounds"]
            run = meta.get("run", {})
            generated = run.get("generated_at")
            return cls(
                scores=[RiskScore.from_dict(row) for row in doc["rows"]],
                config=PipelineConfig.from_dict(meta["config"]),
                likelihood_bounds=NormalizationBounds.from_dict(bounds["likelihood"]),
                impact_bounds=NormalizationBounds.from_dict(bounds["impact"]),
                risk_bounds=NormalizationBounds.from_dict(bounds["risk"]),
                generated_at=datetime.fromisoformat(generated) if generated else datetime.now(timezone.utc),
                runtime_seconds=float(run.get("runtime_seconds", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as ex:
            raise DocumentParseError(f"Invalid report: {ex!r}") from ex

    def digest(self) -> str:
        """SHA-256 over the report without its run metadata (timestamp,
        runtime, cycles). Equal inputs and config give equal digests."""
        doc = self.to_dict()
        del doc["metadata"]["run"]
        del doc["metadata"]["config"]["cycles"]
        payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# ----------------------------------------------------------------------------


def impact_from_cia(v: ImpactVector) -> float:
    """Composite impact of confidentiality, integrity and availability.

    .. math::

        \\gamma = 1 - (1 - C)(1 - G)(1 - A)

    Returns
    -------
    float
        impact in ``[0, 1]``, monotone non-decreasing in each component
    """
    # sorted, the result does not depend on the argument order
    x, y, z = sorted((v.c, v.g, v.a))
    return 1.0 - (1.0 - x) * (1.0 - y) * (1.0 - z)


def cia_ordinals_to_vector(
    cia: Sequence[int], mapping: Optional[Mapping[int, float]] = None
) -> ImpactVector:
    """Map (none/low/high) CIA ordinals through a weight table.

    Parameters
    ----------
    cia : Sequence[int]
        confidentiality, integrity, availability ordinals ``0..2``
    mapping : Optional[Mapping[int, float]], optional
        ordinal -> weight, by default the CVSS v3.1 constants
        ``{0: 0.0, 1: 0.22, 2: 0.56}``

    Raises
    ------
    ArgumentError
        If an ordinal is outside of ``0..2`` or not three are given.
    """
    if mapping is None:
        mapping = DEFAULT_CIA_WEIGHTS
    if len(cia) != 3:
        raise ArgumentError(f"Expected three CIA ordinals, got {len(cia)}")
    for ordinal in cia:
        if ordinal not in (0, 1, 2):
            raise ArgumentError(f"CIA ordinal {ordinal!r} outside 0..2")
    c, g, a = (mapping[o] for o in cia)
    return ImpactVector(c, g, a)


def normalize_minmax(values: Sequence[float]) -> Tuple[List[float], NormalizationBounds]:
    """Affine map of `values` onto ``[0, 1]``.

    Constant input (``max == min``) maps to all zeros, the returned bounds
    are then flagged :attr:`~NormalizationBounds.degenerate`.

    Raises
    ------
    ArgumentError
        If `values` is empty or contains non-finite numbers.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ArgumentError("Can not normalize an empty sequence")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError("Can not normalize non-finite values")

    low, high = float(arr.min()), float(arr.max())
    bounds = NormalizationBounds(low, high)
    if bounds.degenerate:
        LOGGER.warning("Degenerate normalization bounds (all values %s), mapping to 0", low)
        return [0.0] * arr.size, bounds

    normed = np.clip((arr - low) / (high - low), 0.0, 1.0)
    return [float(x) for x in normed], bounds


def risk_score(likelihood: float, impact: float) -> float:
    """Risk as likelihood x impact.

    Raises
    ------
    ArgumentError
        If `likelihood` is outside ``[0, 1]`` or `impact` is negative.
    """
    if not 0.0 <= likelihood <= 1.0:
        raise ArgumentError(f"Likelihood {likelihood} outside [0, 1]")
    if not impact >= 0.0:
        raise ArgumentError(f"Impact {impact} is negative")
    return likelihood * impact


def classify(risk_norm: float, threshold: float = 0.5) -> RiskClass:
    """*Risky* iff ``risk_norm >= threshold``.

    Raises
    ------
    ConfigError
        If `threshold` is outside ``[0, 1]``.
    ArgumentError
        If `risk_norm` is outside ``[0, 1]``.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"threshold must be in [0, 1], got {threshold}")
    if not 0.0 <= risk_norm <= 1.0:
        raise ArgumentError(f"Normalized risk {risk_norm} outside [0, 1]")
    return RiskClass.RISKY if risk_norm >= threshold else RiskClass.NON_RISKY


def rank_key(score: RiskScore) -> Tuple[float, str]:
    """Sort key: descending normalized risk, then ascending CVE id."""
    return (-score.risk_norm, score.cve_id)


def rank(scores: Sequence[RiskScore], top_k: Optional[int] = None) -> List[RiskScore]:
    """Scores by descending normalized risk, ties by ascending CVE id.

    Raises
    ------
    ArgumentError
        If `top_k` is smaller than 1.
    """
    if top_k is not None and top_k < 1:
        raise ArgumentError(f"top_k must be >= 1, got {top_k}")
    ordered = sorted(scores, key=rank_key)
    return ordered if top_k is None else ordered[:top_k]


def nearest_ids(cve_id: str, known: Sequence[str], n: int = 3) -> List[str]:
    """Known ids closest to `cve_id` (by difflib similarity)."""
    return difflib.get_close_matches(cve_id, sorted(set(known)), n=n, cutoff=0.6)


# ----------------------------------------------------------------------------


def _event_columns(
    records: Sequence[CveRecord], config: PipelineConfig
) -> Dict[str, List[Outcome]]:
    return {
        name: [r.value(name) for r in records] for name in config.likelihood_attributes
    }


class _LikelihoodModel:
    """Fitted per-row likelihood factors, independent or chained."""

    def __init__(self, config: PipelineConfig, fit_columns, score_columns):
        self.config = config
        self.order = list(config.likelihood_attributes)
        self.marginals: Dict[str, FrequencyTable] = dict()
        self.chain = None

        if config.likelihood_model == "conditional":
            self.chain = fit_conditional_chain(fit_columns, self.order, smoothing=config.smoothing)
        else:
            for name in self.order:
                self.marginals[name] = fit_marginal(
                    fit_columns[name],
                    name,
                    smoothing=config.smoothing,
                    outcomes=score_columns[name],
                )
                LOGGER.debug(
                    "Fitted %s: %d outcomes", name, len(self.marginals[name].probabilities)
                )

    def factors(self, outcomes: Sequence[Outcome]) -> Tuple[Factor, ...]:
        if self.chain is not None:
            probs = [
                self.chain.table(j, tuple(outcomes[:j])).probability(outcomes[j])
                for j in range(len(self.order))
            ]
        else:
            probs = [
                self.marginals[name].probability(outcome)
                for name, outcome in zip(self.order, outcomes)
            ]
        return tuple(Factor(n, o, p) for n, o, p in zip(self.order, outcomes, probs))


def _apply_binning(
    config: PipelineConfig,
    fit_columns: Dict[str, List[Outcome]],
    score_columns: Dict[str, List[Outcome]],
):
    for name, spec in config.binning.items():
        quantizer = Quantizer.fit(fit_columns[name], spec)
        LOGGER.debug("Binning %s into %d bins (%s)", name, quantizer.bins, spec.method)
        fit_columns[name] = quantizer.apply(fit_columns[name])
        score_columns[name] = quantizer.apply(score_columns[name])


def _impact_raw(record: CveRecord, config: PipelineConfig) -> float:
    if config.impact_source == "cia-composite":
        vector = cia_ordinals_to_vector(record.cia_impacts, config.cia_weight_table)
        return impact_from_cia(vector)
    return record.impact_score


def _score_once(
    records: Sequence[CveRecord],
    config: PipelineConfig,
    reference: Optional[Sequence[CveRecord]],
) -> RiskReport:
    score_columns = _event_columns(records, config)
    fit_columns = _event_columns(reference, config) if reference is not None else dict(score_columns)
    _apply_binning(config, fit_columns, score_columns)

    model = _LikelihoodModel(config, fit_columns, score_columns)

    factors: List[Tuple[Factor, ...]] = []
    likelihoods: List[float] = []
    underflows: List[bool] = []
    for i in range(len(records)):
        row_factors = model.factors([score_columns[n][i] for n in model.order])
        value, underflow = combine_factors(
            (f.probability for f in row_factors), log_space=config.log_space
        )
        factors.append(row_factors)
        likelihoods.append(value)
        underflows.append(underflow)

    impacts = [_impact_raw(r, config) for r in records]
    likelihood_norm, likelihood_bounds = normalize_minmax(likelihoods)
    impact_norm, impact_bounds = normalize_minmax(impacts)

    if config.pipeline_variant == "normalized-inputs":
        risks = [risk_score(p, g) for p, g in zip(likelihood_norm, impact_norm)]
    else:
        risks = [risk_score(p, g) for p, g in zip(likelihoods, impacts)]
    risk_norm, risk_bounds = normalize_minmax(risks)

    scores = [
        RiskScore(
            cve_id=record.cve_id,
            likelihood_raw=likelihoods[i],
            likelihood_norm=likelihood_norm[i],
            impact_raw=impacts[i],
            impact_norm=impact_norm[i],
            risk_raw=risks[i],
            risk_norm=risk_norm[i],
            risk_class=classify(risk_norm[i], config.threshold),
            published_date=record.published_date,
            factors=factors[i],
            underflow=underflows[i],
        )
        for i, record in enumerate(records)
    ]
    if any(underflows):
        LOGGER.warning("%d likelihoods underflowed to 0", sum(underflows))

    return RiskReport(
        scores=scores,
        config=config,
        likelihood_bounds=likelihood_bounds,
        impact_bounds=impact_bounds,
        risk_bounds=risk_bounds,
    )


def score_dataset(
    records: Sequence[CveRecord],
    config: Optional[PipelineConfig] = None,
    reference: Optional[Sequence[CveRecord]] = None,
) -> RiskReport:
    """Score every record: likelihood, impact, risk, normalized, classified.

    Parameters
    ----------
    records : Sequence[CveRecord]
        dataset to score (and, without `reference`, to fit on)
    config : Optional[PipelineConfig], optional
        pipeline configuration, by default :class:`PipelineConfig` defaults
    reference : Optional[Sequence[CveRecord]], optional
        separate dataset to fit the frequency tables on; outcomes of
        `records` not seen in `reference` raise unless add-one smoothing
        is configured, by default None

    Returns
    -------
    RiskReport
        scores in input order with normalization bounds

    Raises
    ------
    EmptyDatasetError
        If `records` (or `reference`) is empty.
    ConfigError
        If the configuration is invalid.
    UnseenOutcomeError
        If a scored outcome has no fitted probability.
    """
    config = config or PipelineConfig()
    config.validate()
    records = list(records)
    if not records:
        raise EmptyDatasetError("empty dataset")
    if reference is not None:
        reference = list(reference)
        if not reference:
            raise EmptyDatasetError("empty reference dataset")

    timings = []
    report = None
    for cycle in range(config.cycles):
        start = time.perf_counter()
        report = _score_once(records, config, reference)
        timings.append(time.perf_counter() - start)
        LOGGER.debug("Cycle %d took %.4f s", cycle + 1, timings[-1])

    report.runtime_seconds = math.fsum(timings) / len(timings)
    LOGGER.info(
        "Scored %d rows (%d risky) in %.3f s",
        report.row_count,
        report.risky_count,
        report.runtime_seconds,
    )
    return report


@dataclass(frozen=True)
class PathMass:
    """Probability mass over all paths of a fitted event base."""

    #: Number of enumerated paths, the joint cardinality.
    path_count: int
    #: Sum of all path probabilities, ``1`` up to rounding.
    total: float


def check_path_mass(
    records: Sequence[CveRecord], config: Optional[PipelineConfig] = None
) -> PathMass:
    """Fit the likelihood model on `records` and sum the probabilities of
    every path of the joint outcome space.

    Paths with unobserved outcome combinations count as ``0``. At most
    :attr:`PipelineConfig.enumeration_cap` paths are enumerated.

    Raises
    ------
    EmptyDatasetError
        If `records` is empty.
    CapacityError
        If the joint cardinality exceeds the enumeration cap.
    """
    config = config or PipelineConfig()
    records = list(records)
    if not records:
        raise EmptyDatasetError("empty dataset")

    columns = _event_columns(records, config)
    _apply_binning(config, columns, dict(columns))
    model = _LikelihoodModel(config, columns, columns)
    base = EventBase(tuple(build_outcome_space(name, columns[name]) for name in model.order))

    fitted = model.chain if model.chain is not None else [model.marginals[n] for n in model.order]
    probabilities = [
        total_probability(path, fitted) for path in enumerate_paths(base, cap=config.enumeration_cap)
    ]
    mass = PathMass(len(probabilities), math.fsum(probabilities))
    LOGGER.info("Summed %d paths to %.12g", mass.path_count, mass.total)
    return mass


# ----------------------------------------------------------------------------


def report_digest(report: RiskReport) -> str:
    """Determinism hash of `report`, see :meth:`RiskReport.digest`."""
    return report.digest()


def format_sig(value: float, digits: int = 6) -> str:
    """Format with a fixed number of significant digits."""
    return f"{value:.{digits}g}"


def _csv_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, datetime):
        return format_date(value)
    return "" if value is None else str(value)


def write_report(report: RiskReport, path: Union[str, PathLike]) -> Path:
    """Write `report` as JSON (``.json``) or CSV (everything else).

    CSV reports carry the metadata as leading ``#`` comment lines and
    cannot be used with ``explain`` (no per-attribute factors).
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        text = json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"
    else:
        buf = io.StringIO()
        header = {"schema_version": REPORT_SCHEMA_VERSION, "metadata": report.metadata()}
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for score in report.scores:
            row = score.to_dict(with_factors=False)
            writer.writerow([_csv_value(row[c]) for c in REPORT_COLUMNS])
        text = buf.getvalue()

    path.write_text(text, encoding="utf-8")
    LOGGER.info("Wrote report with %d rows to %s", report.row_count, path)
    return path


def read_report(path: Union[str, PathLike]) -> RiskReport:
    """Read a report written by :func:`write_report`.

    Raises
    ------
    DocumentParseError
        If the file is no valid report.
    SchemaVersionError
        If the report has an unsupported schema version.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as ex:
        raise DocumentParseError(f"Could not read report {path}: {ex}") from ex

    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(text)
        except ValueError as ex:
            raise DocumentParseError(f"Invalid JSON report {path}: {ex}") from ex
        return RiskReport.from_dict(doc)

    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise DocumentParseError(f"CSV report {path} without metadata line")
    try:
        doc = json.loads(lines[0][2:])
        doc["rows"] = list(csv.DictReader(lines[1:]))
    except (ValueError, TypeError) as ex:
        raise DocumentParseError(f"Invalid CSV report {path}: {ex}") from ex
    return RiskReport.from_dict(doc)


# ----------------------------------------------------------------------------
