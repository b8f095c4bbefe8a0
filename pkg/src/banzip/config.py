"""Training configuration and plain key=value config files."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .params import PredictorArch


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs besides the corpus.

    The learning rate is not a free knob: it is exactly 1/epochs.
    ``attention_descent`` selects the sign with which the attention gradient
    is applied; the default follows the update rules as written, the flipped
    setting ascends the test-probability direction instead (the verification
    report documents which direction raises the exact predictive).
    """

    epochs: int = 50
    batch_size: int = 32
    seed: int = 0
    ctx_len: int = 8
    latent_dim: int = 8
    embed_dim: int = 16
    hidden_dim: int = 64
    alphabet: int = 256
    attention_descent: bool = True
    mean_scale: float = 0.05
    init_precision: float = 1.0
    weight_precision: float = 100.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 2:
            raise ConfigError("batch size must be >= 2 (one pseudo-test plus training samples)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")

    @property
    def learning_rate(self) -> float:
        return 1.0 / self.epochs

    @property
    def arch(self) -> PredictorArch:
        return PredictorArch(
            ctx_len=self.ctx_len,
            latent_dim=self.latent_dim,
            alphabet=self.alphabet,
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _coerce(name: str, raw: str):
    t = _FIELD_TYPES[name]
    if t in ("bool", bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {name}: expected a boolean, got {raw!r}")
    try:
        if t in ("int", int):
            return int(raw)
        if t in ("float", float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {name}: cannot parse {raw!r}") from None
    return raw


def parse_config_file(path: str | Path) -> dict:
    """Read ``key=value`` lines into TrainConfig overrides.

    Blank lines and ``#`` comments are ignored; unknown keys are an error.
    """
    overrides = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        overrides[key] = _coerce(key, raw)
    return overrides
