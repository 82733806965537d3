"""
This module defines the run configuration of an experiment and its file format.

Configuration files are flat UTF-8 `key = value` lines. `#` starts a comment, blank
lines are ignored and keys are `RunConfig` field names (dashes may replace
underscores):

    # 8-bit parity, plain baseline
    task = parity
    bits = 8
    baseline = plain
    seeds = 1, 2, 3

Values are parsed by the type of their field: booleans accept true/false, yes/no and
1/0, `seeds` is a comma-separated list and optional fields accept `none`.

Defaults are overridden by the file, which is overridden by command-line flags.
"""

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union, get_type_hints

from mollify.activations.kinds import ActivationKind
from mollify.annealing.schedule import AverageKind
from mollify.numerics.optimizers import OptimizerKind
from mollify.recurrent.cells import CellKind
from mollify.exceptions.harness import ConfigError

__all__ = [
    "TASKS",
    "BASELINES",
    "RunConfig",
    "parse_value",
    "parse_config_text",
    "load_config",
]

TASKS = ("parity", "toy-regression", "seq-copy")
BASELINES = ("mollified", "plain", "residual-plain")
ANNEAL_LOSSES = ("train", "valid")


@dataclass(frozen=True)
class RunConfig:
    """
    Everything an experiment depends on besides its seed.

    Examples:
        >>> cfg = RunConfig(layers=4)
        >>> cfg.delta
        0.2
        >>> cfg.is_mollified
        True
    """

    task: str = "parity"
    bits: int = 8
    examples: int = 1000
    layers: int = 6
    hidden: int = 200
    activation: str = "sigmoid"
    optimizer: str = "sgd-momentum"
    learning_rate: float = 1e-3
    momentum: float = 0.92
    nesterov: bool = True
    rms_decay: float = 0.9
    k: float = 1000.0
    beta: float = 0.9
    delta: Optional[float] = None
    average: str = "exponential"
    window: int = 10
    anneal_loss: str = "train"
    c: float = 1.0
    a_range: float = 2.0
    residual: bool = False
    seeds: Tuple[int, ...] = (1, 2, 3, 4, 5)
    epochs: int = 200
    batch_size: int = 32
    baseline: str = "mollified"
    out: str = "runs"
    workers: int = 1
    record_wall_time: bool = False
    target_accuracy: float = 0.99
    plot: bool = False
    plot_columns: str = "train_loss,valid_loss"
    regression_noise: float = 0.1
    cell: str = "gru"
    seq_length: int = 12
    vocab: int = 4
    lag: int = 2
    bptt: int = 6

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(self.seeds))
        choices = {
            "task": TASKS,
            "baseline": BASELINES,
            "anneal_loss": ANNEAL_LOSSES,
            "activation": tuple(kind.value for kind in ActivationKind),
            "optimizer": tuple(kind.value for kind in OptimizerKind),
            "average": tuple(kind.value for kind in AverageKind),
            "cell": tuple(kind.value for kind in CellKind),
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(
                    f"cannot create RunConfig; {name} must be one of "
                    f"{', '.join(allowed)}, got {getattr(self, name)!r}. "
                )
        positive = (
            "bits",
            "examples",
            "layers",
            "hidden",
            "window",
            "batch_size",
            "workers",
            "seq_length",
            "vocab",
            "bptt",
        )
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(
                    f"cannot create RunConfig; {name} must be positive, got "
                    f"{getattr(self, name)}. "
                )
        if self.epochs < 0 or not self.seeds:
            raise ConfigError(
                "cannot create RunConfig; epochs must be non-negative and at least one "
                "seed is required. "
            )
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(
                f"cannot create RunConfig; duplicate seeds: {self.seeds}. "
            )
        if not self.learning_rate > 0 or not 0 <= self.momentum < 1:
            raise ConfigError(
                "cannot create RunConfig; learning rate must be positive and momentum "
                "in [0, 1). "
            )
        if not 0 < self.rms_decay < 1 or not 0 <= self.beta < 1:
            raise ConfigError(
                "cannot create RunConfig; rms_decay must be in (0, 1) and beta in "
                "[0, 1). "
            )
        if self.k < 0 or self.c < 0 or self.a_range < 0 or self.regression_noise < 0:
            raise ConfigError(
                "cannot create RunConfig; k, c, a_range and regression_noise must be "
                "non-negative. "
            )
        if not 0 <= self.target_accuracy <= 1:
            raise ConfigError(
                "cannot create RunConfig; target_accuracy must be in [0, 1], got "
                f"{self.target_accuracy}. "
            )
        if not 0 <= self.lag < self.seq_length:
            raise ConfigError(
                f"cannot create RunConfig; lag must be in [0, seq_length), got "
                f"{self.lag}. "
            )
        if self.delta is None:
            object.__setattr__(self, "delta", 0.05 * self.anneal_layers)
        elif self.delta < 0:
            raise ConfigError(
                "cannot create RunConfig; delta must be non-negative, got "
                f"{self.delta}. "
            )

    @property
    def is_mollified(self) -> bool:
        return self.baseline == "mollified"

    @property
    def anneal_layers(self) -> int:
        """
        Number of annealed layers: the hidden layers, or 1 for the recurrent cell.
        """
        return 1 if self.task == "seq-copy" else self.layers

    def replace(self, **changes: Any) -> "RunConfig":
        return dataclasses.replace(self, **changes)


_TRUE = ("true", "yes", "1")
_FALSE = ("false", "no", "0")


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ValueError(f"expected one of {', '.join(_TRUE + _FALSE)}")


def _parse_seeds(text: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in text.split(",") if item.strip())


def _parse_optional_float(text: str) -> Optional[float]:
    return None if text.lower() == "none" else float(text)


_parsers: Dict[Any, Callable[[str], Any]] = {
    int: int,
    float: float,
    str: str,
    bool: _parse_bool,
    Tuple[int, ...]: _parse_seeds,
    Optional[float]: _parse_optional_float,
}


def _field_types() -> Dict[str, Any]:
    return get_type_hints(RunConfig)


def parse_value(key: str, text: str) -> Any:
    """
    Parse `text` as the value of field `key`.

    Raises `ConfigError` if the key is unknown or the value cannot be parsed.

    Examples:
        >>> parse_value("seeds", "1, 2,3")
        (1, 2, 3)
        >>> parse_value("record-wall-time", "yes")
        True
    """
    name = key.strip().replace("-", "_")
    types = _field_types()
    if name not in types:
        raise ConfigError(f"cannot parse config; unknown key: {key!r}. ")
    try:
        return _parsers[types[name]](text.strip())
    except ValueError as exc:
        raise ConfigError(
            f"cannot parse config; invalid value {text!r} for {name}: {exc}. "
        ) from None


def parse_config_text(text: str) -> Dict[str, Any]:
    """
    Parse the contents of a configuration file into field values.

    Raises `ConfigError` naming the line of the first malformed line, unknown key or
    unparsable value.

    Examples:
        >>> parse_config_text("task = parity  # the default\\n\\nlayers = 3\\n")
        {'task': 'parity', 'layers': 3}
    """
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        if not separator or not key.strip():
            raise ConfigError(
                f"cannot parse config; line {number} is not a `key = value` line. "
            )
        try:
            values[key.strip().replace("-", "_")] = parse_value(key, value)
        except ConfigError as exc:
            raise ConfigError(f"line {number}: {exc}") from None
    return values


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Build a run configuration from defaults, the file at `path` and `overrides`, in
    increasing precedence. Overrides set to None are ignored.

    Raises `ConfigError` if the file cannot be read or holds invalid settings.
    """
    values: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}; {exc}. ") from None
        values.update(parse_config_text(text))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key.replace("-", "_")] = value
    unknown = sorted(set(values) - set(_field_types()))
    if unknown:
        raise ConfigError(f"cannot create RunConfig; unknown keys: {unknown}. ")
    return RunConfig(**values)
