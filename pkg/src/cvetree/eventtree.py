"""Event trees: outcome spaces, frequency fitting and path likelihoods.

An *event* is a dataset attribute with a finite set of distinct outcomes.
A *path* picks one outcome per event of an event base; its probability is
either the product of the marginal outcome probabilities (events assumed
independent) or the product of chained conditional probabilities.
"""
import itertools
import json
import logging
import math
from collections import Counter
from collections import defaultdict
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import Iterable
from typing import Iterator
from typing import List
from typing import Mapping
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import numpy as np

from .exceptions import ArgumentError
from .exceptions import CapacityError
from .exceptions import ConfigError
from .exceptions import DocumentParseError
from .exceptions import EmptyEventError
from .exceptions import UnseenOutcomeError
from .exceptions import UnseenPrefixError

# ----------------------------------------------------------------------------


__all__ = [
    "OutcomeSpace",
    "EventBase",
    "FrequencyTable",
    "PathAssignment",
    "ConditionalChainModel",
    "BinSpec",
    "Quantizer",
    "build_outcome_space",
    "joint_space_cardinality",
    "fit_marginal",
    "combine_factors",
    "path_probability_independent",
    "fit_conditional_chain",
    "path_probability_conditional",
    "total_probability",
    "enumerate_paths",
    "model_to_json",
    "model_from_json",
]

LOGGER = logging.getLogger(__name__)

Outcome = Union[int, float, str]

#: Tolerance for probabilities summing up to one.
PROBABILITY_TOLERANCE = 1e-9

#: Default maximum number of paths :func:`enumerate_paths` will generate.
DEFAULT_ENUMERATION_CAP = 10 ** 6

#: Joint cardinalities above this are reported as overflow (``int64``).
MAX_CARDINALITY = 2 ** 63 - 1

#: Supported smoothing modes.
SMOOTHING_MODES = ("none", "add-one")


# ----------------------------------------------------------------------------


def _plain(value: Any) -> Outcome:
    # numpy scalars -> python scalars, to keep dict keys / json simple
    return value.item() if isinstance(value, np.generic) else value


def _unique_counts(column: Sequence[Outcome]) -> Tuple[List[Outcome], List[int]]:
    values, counts = np.unique(np.asarray(column), return_counts=True)
    return [_plain(v) for v in values], [int(c) for c in counts]


@dataclass(frozen=True)
class OutcomeSpace:
    """Ordered set of distinct outcomes of one event.

    Raises
    ------
    EmptyEventError
        If there are no outcomes.
    ArgumentError
        If outcomes are not distinct.
    """

    event_name: str
    outcomes: Tuple[Outcome, ...]

    def __post_init__(self):
        if not self.outcomes:
            raise EmptyEventError(f"Event {self.event_name!r} has no outcomes")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ArgumentError(f"Event {self.event_name!r} has duplicate outcomes")

    @property
    def cardinality(self) -> int:
        return len(self.outcomes)

    def __contains__(self, outcome: Outcome) -> bool:
        return outcome in self.outcomes


@dataclass(frozen=True)
class EventBase:
    """Ordered list of events whose outcomes describe the domain."""

    events: Tuple[OutcomeSpace, ...]

    def __post_init__(self):
        if not self.events:
            raise EmptyEventError("Event base without events")
        names = [e.event_name for e in self.events]
        if len(set(names)) != len(names):
            raise ArgumentError(f"Event names not unique: {names}")

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(e.event_name for e in self.events)

    @property
    def joint_cardinality(self) -> int:
        return joint_space_cardinality(self)


@dataclass(frozen=True)
class FrequencyTable:
    """Empirical outcome probabilities of one event.

    Outcomes are kept in ascending order.

    Raises
    ------
    ArgumentError
        If a probability is outside of ``[0, 1]`` or they do not sum up
        to one.
    """

    event_name: str
    probabilities: Dict[Outcome, float]
    #: Number of observations the table was fitted on.
    support_count: int

    def __post_init__(self):
        if not self.probabilities:
            raise EmptyEventError(f"Event {self.event_name!r} has no outcomes")
        for outcome, p in self.probabilities.items():
            if not 0.0 <= p <= 1.0:
                raise ArgumentError(
                    f"P[{self.event_name}={outcome!r}]={p} outside [0, 1]"
                )
        total = math.fsum(self.probabilities.values())
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ArgumentError(
                f"Probabilities of {self.event_name!r} sum to {total}, not 1"
            )

    @property
    def outcomes(self) -> Tuple[Outcome, ...]:
        return tuple(self.probabilities.keys())

    def probability(self, outcome: Outcome) -> float:
        """Fitted probability of `outcome`.

        Raises
        ------
        UnseenOutcomeError
            If `outcome` was not part of the fitted outcome space.
        """
        try:
            return self.probabilities[outcome]
        except KeyError:
            raise UnseenOutcomeError(
                f"Outcome {outcome!r} of event {self.event_name!r} was never observed"
            ) from None

    def to_space(self) -> OutcomeSpace:
        return OutcomeSpace(self.event_name, self.outcomes)


@dataclass(frozen=True)
class PathAssignment:
    """One outcome per event, a single branch sequence of an event tree."""

    assignments: Dict[str, Outcome]

    def __getitem__(self, event_name: str) -> Outcome:
        try:
            return self.assignments[event_name]
        except KeyError:
            raise ArgumentError(f"Path assigns no outcome to {event_name!r}") from None

    def key(self, event_order: Sequence[str]) -> Tuple[Outcome, ...]:
        """Outcomes as tuple in `event_order`."""
        return tuple(self[name] for name in event_order)

    def check(self, base: EventBase):
        """Ensure exactly one in-space outcome per event of `base`.

        Raises
        ------
        ArgumentError
            If events are missing / extra or an outcome is not in its space.
        """
        if set(self.assignments) != set(base.names):
            raise ArgumentError(
                f"Path events {sorted(self.assignments)} do not match base {list(base.names)}"
            )
        for space in base.events:
            if self.assignments[space.event_name] not in space:
                raise ArgumentError(
                    f"Outcome {self.assignments[space.event_name]!r} not in space of {space.event_name!r}"
                )


@dataclass(frozen=True)
class ConditionalChainModel:
    """Chained conditional frequency tables.

    ``tables[j]`` maps the outcome tuple of the first ``j`` events of
    `event_order` (the *prefix*) to the frequency table of event ``j``
    among the rows with that prefix. ``tables[0]`` has the single empty
    prefix and holds the marginal of the first event.
    """

    event_order: Tuple[str, ...]
    tables: Tuple[Dict[Tuple[Outcome, ...], FrequencyTable], ...]
    smoothing: str = "none"

    def table(self, position: int, prefix: Tuple[Outcome, ...]) -> FrequencyTable:
        """Conditional table of event `position` given `prefix`.

        Raises
        ------
        UnseenPrefixError
            If `prefix` was never observed.
        """
        try:
            return self.tables[position][prefix]
        except KeyError:
            raise UnseenPrefixError(
                f"Prefix {prefix!r} before event {self.event_order[position]!r} was never observed"
            ) from None


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BinSpec:
    """Quantization of a near-continuous attribute into bins."""

    #: ``fixed-width`` or ``quantile``
    method: str = "fixed-width"
    bins: int = 10

    def __post_init__(self):
        if self.method not in ("fixed-width", "quantile"):
            raise ConfigError(f"Unknown binning method: {self.method!r}")
        if int(self.bins) < 1:
            raise ConfigError(f"Number of bins must be >= 1, got {self.bins}")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "BinSpec":
        return cls(method=data.get("method", "fixed-width"), bins=int(data.get("bins", 10)))

    def to_dict(self) -> Dict[str, Any]:
        return {"method": self.method, "bins": self.bins}


@dataclass(frozen=True)
class Quantizer:
    """Fitted bin edges, maps values to bin indices ``0..n-1``."""

    edges: Tuple[float, ...] = field(default_factory=tuple)

    @classmethod
    def fit(cls, column: Sequence[float], spec: BinSpec) -> "Quantizer":
        values = np.asarray(column, dtype=float)
        if values.size == 0:
            raise EmptyEventError("Can not fit bins on an empty column")
        if spec.method == "quantile":
            edges = np.quantile(values, np.linspace(0.0, 1.0, spec.bins + 1))
        else:
            edges = np.linspace(values.min(), values.max(), spec.bins + 1)
        edges = np.unique(edges)
        LOGGER.debug("Fitted %d bin edges (%s)", len(edges), spec.method)
        return cls(tuple(float(e) for e in edges))

    @property
    def bins(self) -> int:
        return max(1, len(self.edges) - 1)

    def apply(self, column: Sequence[float]) -> List[int]:
        """Bin index per value, values outside the fitted range are
        clipped into the first/last bin."""
        inner = np.asarray(self.edges[1:-1], dtype=float)
        return [int(i) for i in np.searchsorted(inner, np.asarray(column, dtype=float), side="right")]


def quantize(column: Sequence[float], spec: BinSpec) -> List[int]:
    """Bin labels of `column` for a freshly fitted :class:`Quantizer`."""
    return Quantizer.fit(column, spec).apply(column)


# ----------------------------------------------------------------------------


def build_outcome_space(event_name: str, column: Sequence[Outcome]) -> OutcomeSpace:
    """Sorted distinct values of `column`.

    Raises
    ------
    EmptyEventError
        If `column` is empty.
    """
    if len(column) == 0:
        raise EmptyEventError(f"Event {event_name!r} has an empty column")
    outcomes, _ = _unique_counts(column)
    return OutcomeSpace(event_name, tuple(outcomes))


def joint_space_cardinality(base: EventBase, limit: int = MAX_CARDINALITY) -> int:
    """Number of paths, the product of per-event cardinalities.

    Raises
    ------
    CapacityError
        If the product exceeds `limit`.
    """
    k = 1
    for space in base.events:
        k *= space.cardinality
        if k > limit:
            raise CapacityError(k, f"Joint cardinality overflows limit {limit}")
    return k


def fit_marginal(
    column: Sequence[Outcome],
    event_name: str = "",
    smoothing: str = "none",
    outcomes: Iterable[Outcome] = (),
) -> FrequencyTable:
    """Empirical frequency table, ``count(x) / len(column)`` per distinct value.

    Parameters
    ----------
    column : Sequence[Outcome]
        observed values of the event
    event_name : str, optional
        name of the event, by default ""
    smoothing : str, optional
        ``none`` or ``add-one``, by default "none"
    outcomes : Iterable[Outcome], optional
        additional outcomes of the space which may be unobserved in
        `column`, only relevant with add-one smoothing

    Returns
    -------
    FrequencyTable

    Raises
    ------
    EmptyEventError
        If `column` is empty.
    ConfigError
        If `smoothing` is unknown.

    Notes
    -----

    With add-one smoothing, for :math:`K` outcomes in the space:

    .. math::

        P[x] = \\frac{count(x) + 1}{n + K}
    """
    if smoothing not in SMOOTHING_MODES:
        raise ConfigError(f"Unknown smoothing mode: {smoothing!r}")
    n = len(column)
    if n == 0:
        raise EmptyEventError(f"Event {event_name!r} has an empty column")

    values, counts = _unique_counts(column)
    return _table_from_counts(event_name, dict(zip(values, counts)), smoothing, outcomes)


def _table_from_counts(
    event_name: str,
    counter: Mapping[Outcome, int],
    smoothing: str = "none",
    outcomes: Iterable[Outcome] = (),
) -> FrequencyTable:
    n = sum(counter.values())
    counts = dict(counter)
    if smoothing == "add-one":
        for outcome in outcomes:
            counts.setdefault(_plain(outcome), 0)
        total = n + len(counts)
        probabilities = {x: (counts[x] + 1) / total for x in sorted(counts)}
    else:
        probabilities = {x: counts[x] / n for x in sorted(counts)}
    return FrequencyTable(event_name, probabilities, n)


def combine_factors(factors: Iterable[float], log_space: bool = False) -> Tuple[float, bool]:
    """Product of probability factors.

    Parameters
    ----------
    factors : Iterable[float]
        probabilities in ``[0, 1]``
    log_space : bool, optional
        accumulate ``sum(log p)`` and return ``exp`` of it, by default False

    Returns
    -------
    Tuple[float, bool]
        the product and whether it underflowed to zero although every
        factor was positive
    """
    factors = list(factors)
    if any(f == 0.0 for f in factors):
        return 0.0, False

    if log_space:
        log_p = math.fsum(math.log(f) for f in factors)
        value = math.exp(log_p) if log_p > -745.2 else 0.0
    else:
        value = 1.0
        for f in factors:
            value *= f

    underflow = value == 0.0
    if underflow:
        LOGGER.warning("Path probability underflow over %d factors, clamped to 0", len(factors))
    return value, underflow


def path_probability_independent(
    path: PathAssignment, marginals: Sequence[FrequencyTable], log_space: bool = False
) -> float:
    """Probability of a path assuming independent events.

    .. math::

        P[\\pi] = \\prod_{j} P[e_{jx}]

    Raises
    ------
    UnseenOutcomeError
        If an outcome of the path has no fitted probability.
    ArgumentError
        If the path assigns no outcome to an event of `marginals`.
    """
    factors = [table.probability(path[table.event_name]) for table in marginals]
    value, _ = combine_factors(factors, log_space=log_space)
    return value


def _row_tuples(
    data: Mapping[str, Sequence[Outcome]], event_order: Sequence[str]
) -> List[Tuple[Outcome, ...]]:
    try:
        columns = [data[name] for name in event_order]
    except KeyError as ex:
        raise ConfigError(f"Unknown event attribute: {ex.args[0]!r}") from None
    if not columns or len(columns[0]) == 0:
        raise EmptyEventError("Can not fit conditional chain on an empty dataset")
    if len({len(c) for c in columns}) != 1:
        raise ArgumentError("Event columns differ in length")
    return [tuple(_plain(v) for v in row) for row in zip(*columns)]


def fit_conditional_chain(
    data: Mapping[str, Sequence[Outcome]],
    event_order: Sequence[str],
    smoothing: str = "none",
) -> ConditionalChainModel:
    """Fit empirical conditional tables along `event_order`.

    For position ``j`` and each observed prefix, the table holds the
    frequencies of event ``j`` outcomes among the rows matching the
    prefix (maximum likelihood estimate).

    Parameters
    ----------
    data : Mapping[str, Sequence[Outcome]]
        event name -> column (all of equal length)
    event_order : Sequence[str]
        order of events in the chain
    smoothing : str, optional
        ``none`` or ``add-one`` (over the outcomes observed for the
        event anywhere in the data), by default "none"

    Returns
    -------
    ConditionalChainModel

    Raises
    ------
    EmptyEventError
        If the dataset is empty.
    ConfigError
        If an event name is not a column of `data`.
    """
    if smoothing not in SMOOTHING_MODES:
        raise ConfigError(f"Unknown smoothing mode: {smoothing!r}")
    rows = _row_tuples(data, event_order)

    tables = []
    for j, name in enumerate(event_order):
        groups: Dict[Tuple[Outcome, ...], Counter] = defaultdict(Counter)
        for row in rows:
            groups[row[:j]][row[j]] += 1

        space = sorted({row[j] for row in rows})
        level = dict()
        for prefix in sorted(groups):
            level[prefix] = _table_from_counts(name, groups[prefix], smoothing, space)
        tables.append(level)
        LOGGER.debug("Conditional level %d (%s): %d prefixes", j, name, len(level))

    return ConditionalChainModel(tuple(event_order), tuple(tables), smoothing)


def path_probability_conditional(
    path: PathAssignment, model: ConditionalChainModel, log_space: bool = False
) -> float:
    """Probability of a path as chained conditional probabilities.

    .. math::

        P[\\pi] = P[e_{1x}] \\times P[e_{2x} | e_{1x}] \\times \\cdots

    Raises
    ------
    UnseenPrefixError
        If a prefix of the path was never observed.
    UnseenOutcomeError
        If an outcome was never observed after its prefix.
    """
    outcomes = path.key(model.event_order)
    factors = [
        model.table(j, outcomes[:j]).probability(outcomes[j])
        for j in range(len(outcomes))
    ]
    value, _ = combine_factors(factors, log_space=log_space)
    return value


def total_probability(
    path: PathAssignment,
    model: Union[ConditionalChainModel, Sequence[FrequencyTable]],
) -> float:
    """Like the path probability functions, but unobserved outcome
    combinations have probability ``0`` instead of raising."""
    try:
        if isinstance(model, ConditionalChainModel):
            return path_probability_conditional(path, model)
        return path_probability_independent(path, model)
    except (UnseenPrefixError, UnseenOutcomeError):
        return 0.0


def enumerate_paths(
    base: EventBase, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[PathAssignment]:
    """All paths of the joint outcome space, in lexicographic order.

    Raises
    ------
    CapacityError
        If the joint cardinality is above `cap`.
    """
    k = joint_space_cardinality(base)
    if k > cap:
        raise CapacityError(k, f"{k} paths exceed enumeration cap {cap}")
    names = base.names
    for combination in itertools.product(*(e.outcomes for e in base.events)):
        yield PathAssignment(dict(zip(names, combination)))


# ----------------------------------------------------------------------------


def _outcome_key(outcome: Outcome) -> str:
    return json.dumps(outcome)


def _table_to_dict(table: FrequencyTable) -> Dict[str, float]:
    return {_outcome_key(x): p for x, p in table.probabilities.items()}


def _table_from_dict(name: str, data: Mapping[str, float], support: int) -> FrequencyTable:
    return FrequencyTable(name, {json.loads(k): float(p) for k, p in data.items()}, int(support))


def model_to_json(
    marginals: Sequence[FrequencyTable],
    chain: Optional[ConditionalChainModel] = None,
    indent: Optional[int] = None,
) -> str:
    """Serialize fitted models.

    Outcomes (and prefix tuples) are rendered as canonical JSON strings,
    so ``3.9``, ``3`` and ``"LOW"`` round-trip with their type.
    """
    doc: Dict[str, Any] = {
        "event_order": [t.event_name for t in marginals],
        "marginals": {t.event_name: _table_to_dict(t) for t in marginals},
        "support_counts": {t.event_name: t.support_count for t in marginals},
        "conditionals": None,
    }
    if chain is not None:
        doc["conditionals"] = {
            "event_order": list(chain.event_order),
            "smoothing": chain.smoothing,
            "levels": [
                {
                    json.dumps(list(prefix)): {
                        "support": table.support_count,
                        "probabilities": _table_to_dict(table),
                    }
                    for prefix, table in level.items()
                }
                for level in chain.tables
            ],
        }
    return json.dumps(doc, indent=indent, sort_keys=False)


def model_from_json(
    text: str,
) -> Tuple[List[FrequencyTable], Optional[ConditionalChainModel]]:
    """Inverse of :func:`model_to_json`.

    Raises
    ------
    DocumentParseError
        If `text` is no valid model document.
    """
    try:
        doc = json.loads(text)
        marginals = [
            _table_from_dict(name, doc["marginals"][name], doc["support_counts"][name])
            for name in doc["event_order"]
        ]
        chain = None
        cond = doc.get("conditionals")
        if cond:
            order = cond["event_order"]
            levels = []
            for j, level in enumerate(cond["levels"]):
                levels.append(
                    {
                        tuple(json.loads(prefix)): _table_from_dict(
                            order[j], entry["probabilities"], entry["support"]
                        )
                        for prefix, entry in level.items()
                    }
                )
            chain = ConditionalChainModel(tuple(order), tuple(levels), cond.get("smoothing", "none"))
    except (ValueError, KeyError, TypeError) as ex:
        raise DocumentParseError(f"Invalid model document: {ex}") from ex
    return marginals, chain


# ----------------------------------------------------------------------------
