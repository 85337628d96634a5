import hashlib
import json
import logging
import os
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from os import PathLike
from pathlib import Path
from typing import Any
from typing import Dict
from typing import Mapping
from typing import Optional
from typing import Tuple
from typing import Union

from .dataset import COLUMNS
from .eventtree import DEFAULT_ENUMERATION_CAP
from .eventtree import SMOOTHING_MODES
from .eventtree import BinSpec
from .exceptions import ConfigError

# ----------------------------------------------------------------------------


__all__ = ["PipelineConfig", "load_config"]

LOGGER = logging.getLogger(__name__)

#: Environment variable with the default config file path.
CONFIG_ENV_VAR = "CVETREE_CONFIG"

#: Config file name looked up in directories / the working directory.
CONFIG_FILENAME = "cvetree.json"

#: Likelihood influencing attributes, each one event of the event tree.
DEFAULT_LIKELIHOOD_ATTRIBUTES = (
    "base_score",
    "exploitability_score",
    "epss_percentile",
    "attack_vector",
    "attack_complexity",
    "privileges_required",
    "user_interaction",
    "scope",
)

#: CIA ordinal (none/low/high) to impact weight, CVSS v3.1 constants.
DEFAULT_CIA_WEIGHTS = {0: 0.0, 1: 0.22, 2: 0.56}

IMPACT_SOURCES = ("cvss-column", "cia-composite")
PIPELINE_VARIANTS = ("raw", "normalized-inputs")
#: Alternative option names, mapped onto the values above.
IMPACT_SOURCE_ALIASES = {"eq9-cia": "cia-composite"}
PIPELINE_VARIANT_ALIASES = {"algorithm1-raw": "raw"}
LIKELIHOOD_MODELS = ("independent", "conditional")

#: Columns usable as events.
EVENT_COLUMNS = tuple(c for c in COLUMNS if c not in ("cve_id", "published_date"))


def _canonical(value: Any, aliases: Mapping[str, str]) -> Any:
    return aliases.get(value, value) if isinstance(value, str) else value


# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs of the scoring pipeline.

    Raises
    ------
    ConfigError
        If a value is invalid, see :meth:`validate`.
    """

    #: Dataset columns used as events for the likelihood.
    likelihood_attributes: Tuple[str, ...] = DEFAULT_LIKELIHOOD_ATTRIBUTES
    #: ``cvss-column`` (dataset impact score) or ``cia-composite`` (alias ``eq9-cia``)
    #: (``1 - (1-c)(1-g)(1-a)`` over weighted CIA ordinals)
    impact_source: str = "cvss-column"
    cia_weight_table: Dict[int, float] = field(
        default_factory=lambda: dict(DEFAULT_CIA_WEIGHTS)
    )
    #: ``raw`` (raw likelihood x raw impact, alias ``algorithm1-raw``) or ``normalized-inputs``
    #: (normalized likelihood x normalized impact)
    pipeline_variant: str = "raw"
    #: ``independent`` (product of marginals) or ``conditional`` (chain)
    likelihood_model: str = "independent"
    #: Normalized risk at or above is classified *Risky*.
    threshold: float = 0.5
    #: attribute -> quantization, unlisted attributes use exact values
    binning: Dict[str, BinSpec] = field(default_factory=dict)
    #: ``none`` or ``add-one``
    smoothing: str = "none"
    #: Accumulate path products as sum of logarithms.
    log_space: bool = False
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    #: Repetitions of the pipeline, for timing only.
    cycles: int = 1

    def __post_init__(self):
        object.__setattr__(self, "likelihood_attributes", tuple(self.likelihood_attributes))
        object.__setattr__(self, "impact_source", _canonical(self.impact_source, IMPACT_SOURCE_ALIASES))
        object.__setattr__(
            self, "pipeline_variant", _canonical(self.pipeline_variant, PIPELINE_VARIANT_ALIASES)
        )
        self.validate()

    # --------------------------------

    def validate(self):
        """Check all values.

        Raises
        ------
        ConfigError
            If attributes are empty/unknown/duplicated, `threshold` is
            outside ``[0, 1]``, or an option value is unknown.
        """
        attrs = self.likelihood_attributes
        if not attrs:
            raise ConfigError("likelihood_attributes must not be empty")
        for name in attrs:
            if name not in EVENT_COLUMNS:
                raise ConfigError(f"Unknown likelihood attribute: {name!r}")
        if len(set(attrs)) != len(attrs):
            raise ConfigError(f"Duplicate likelihood attributes: {list(attrs)}")

        if self.impact_source not in IMPACT_SOURCES:
            raise ConfigError(f"Unknown impact_source: {self.impact_source!r}")
        if self.pipeline_variant not in PIPELINE_VARIANTS:
            raise ConfigError(f"Unknown pipeline_variant: {self.pipeline_variant!r}")
        if self.likelihood_model not in LIKELIHOOD_MODELS:
            raise ConfigError(f"Unknown likelihood_model: {self.likelihood_model!r}")
        if self.smoothing not in SMOOTHING_MODES:
            raise ConfigError(f"Unknown smoothing: {self.smoothing!r}")

        if not isinstance(self.threshold, (int, float)) or not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {self.threshold!r}")

        if set(self.cia_weight_table) != {0, 1, 2}:
            raise ConfigError("cia_weight_table needs weights for ordinals 0, 1 and 2")
        for ordinal, weight in self.cia_weight_table.items():
            if not 0.0 <= weight <= 1.0:
                raise ConfigError(f"CIA weight for {ordinal} outside [0, 1]: {weight}")

        for name, spec in self.binning.items():
            if name not in attrs:
                raise ConfigError(f"Binning for non-likelihood attribute: {name!r}")
            if not isinstance(spec, BinSpec):
                raise ConfigError(f"Invalid binning spec for {name!r}")

        if self.enumeration_cap < 1:
            raise ConfigError("enumeration_cap must be >= 1")
        if self.cycles < 1:
            raise ConfigError("cycles must be >= 1")

    # --------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PipelineConfig":
        """Build from a JSON document (mapping).

        Raises
        ------
        ConfigError
            If keys are unknown or values invalid.
        """
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")

        kwargs = dict(data)
        try:
            if "cia_weight_table" in kwargs:
                kwargs["cia_weight_table"] = {
                    int(k): float(v) for k, v in kwargs["cia_weight_table"].items()
                }
            if "binning" in kwargs:
                kwargs["binning"] = {
                    name: BinSpec.from_dict(spec) for name, spec in kwargs["binning"].items()
                }
            for key, conv in (("threshold", float), ("enumeration_cap", int), ("cycles", int)):
                if key in kwargs:
                    kwargs[key] = conv(kwargs[key])
        except (AttributeError, TypeError, ValueError) as ex:
            raise ConfigError(f"Invalid config value: {ex}") from ex
        return cls(**kwargs)

    def to_dict(self) -> Dict[str, Any]:
        """Canonical JSON compatible mapping (string keys)."""
        return {
            "likelihood_attributes": list(self.likelihood_attributes),
            "impact_source": self.impact_source,
            "cia_weight_table": {str(k): v for k, v in sorted(self.cia_weight_table.items())},
            "pipeline_variant": self.pipeline_variant,
            "likelihood_model": self.likelihood_model,
            "threshold": self.threshold,
            "binning": {k: v.to_dict() for k, v in sorted(self.binning.items())},
            "smoothing": self.smoothing,
            "log_space": self.log_space,
            "enumeration_cap": self.enumeration_cap,
            "cycles": self.cycles,
        }

    def digest(self) -> str:
        """SHA-256 over the canonical JSON form, excluding `cycles`."""
        data = self.to_dict()
        del data["cycles"]
        payload = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def replace(self, **overrides) -> "PipelineConfig":
        """Copy with `overrides` applied (``None`` values are ignored)."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides)


# ----------------------------------------------------------------------------


def load_config(path: Optional[Union[str, PathLike]] = None) -> PipelineConfig:
    """Load a :class:`PipelineConfig` JSON file.

    Search order:

    1. `path` if file, then load directly,
    2. `path` is folder, append ``cvetree.json`` and load,
    3. no `path`, use the path from environment variable ``CVETREE_CONFIG``,
    4. no `path`, try ``cvetree.json`` in the working directory,
    5. nothing found, use the defaults.

    Parameters
    ----------
    path : Optional[PathLike], optional
        Path to config file or folder, by default None

    Returns
    -------
    PipelineConfig

    Raises
    ------
    ConfigError
        If an explicitly given file does not exist or any file is invalid.
    """
    explicit = path is not None or bool(os.environ.get(CONFIG_ENV_VAR))
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR) or CONFIG_FILENAME
    path = Path(path)
    if path.is_dir():
        path = path / CONFIG_FILENAME

    if not path.exists():
        if explicit:
            raise ConfigError(f"Config file not found: {path}")
        LOGGER.debug("No config file, using defaults")
        return PipelineConfig()

    LOGGER.info("Loading config from %s", path)
    try:
        with path.open("r", encoding="utf-8") as fp:
            data = json.load(fp)
    except (OSError, ValueError) as ex:
        raise ConfigError(f"Invalid config file {path}: {ex}") from ex
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a JSON object")
    return PipelineConfig.from_dict(data)


# ----------------------------------------------------------------------------
