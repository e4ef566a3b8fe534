"""
Configuration settings for czgrid experiments
"""
import logging
from pathlib import Path
from typing import Annotated, Any, Dict, List, Optional

from pydantic import ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict

from .errors import ConfigError

logger = logging.getLogger(__name__)

_LIST_FIELDS = ("p_list", "alpha_grid", "j_list", "b_list", "c_list")


class ExperimentConfig(BaseSettings):
    """Experiment settings shared by every czgrid command"""

    # Grid
    n: int = 1
    j_lo: int = -8
    j_hi: int = 12
    t_extent: float = 8.0

    # Randomness
    seed: int = 0
    trials: int = 1000

    # Sweeps
    p_list: Annotated[List[float], NoDecode] = [1.5, 2.0, 3.0]
    alpha_grid: Annotated[List[float], NoDecode] = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9]
    j_list: Annotated[List[int], NoDecode] = [-5, -10, -20]
    b_list: Annotated[List[float], NoDecode] = [0.5, 0.75, 0.9]
    c_list: Annotated[List[float], NoDecode] = [0.05, 0.1, 0.25]

    # Windows and random functions
    window_depth: int = 3
    base_depth: int = 4
    density: float = 0.7
    outer_levels: int = 4
    require_stability: bool = True

    # Monte Carlo
    mc_samples: int = 100_000

    # Output
    out: Path = Path("results")
    csv: bool = True
    log_level: str = "WARNING"

    model_config = SettingsConfigDict(env_prefix="CZGRID_", case_sensitive=False)

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def split_comma_list(cls, v: Any) -> Any:
        """Accept comma-separated strings from files and the environment"""
        if isinstance(v, str):
            return [item.strip() for item in v.split(",") if item.strip()]
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.strip().upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {v}")
        return level

    @model_validator(mode="after")
    def validate_ranges(self) -> "ExperimentConfig":
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.j_lo <= 0 <= self.j_hi:
            raise ValueError(f"Need j_lo <= 0 <= j_hi, got j_lo={self.j_lo}, j_hi={self.j_hi}")
        for name in _LIST_FIELDS:
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if any(p <= 0 for p in self.p_list):
            raise ValueError("every p must be positive")
        if any(a <= 0 for a in self.alpha_grid):
            raise ValueError("every alpha multiplier must be positive")
        if any(ell >= 0 for ell in self.j_list):
            raise ValueError("every counterexample scale must be a negative integer")
        if any(not 0 < b < 1 for b in self.b_list):
            raise ValueError("every b must lie in (0, 1)")
        if any(c <= 0 for c in self.c_list):
            raise ValueError("every c must be positive")
        if self.window_depth < 0 or self.base_depth < 1 or self.outer_levels < 0:
            raise ValueError("window_depth, outer_levels must be >= 0 and base_depth >= 1")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if self.t_extent <= 0:
            raise ValueError("t_extent must be positive")
        if self.mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        return self


def parse_config_file(path: Path) -> Dict[str, str]:
    """
    Parse a flat `key = value` file

    Blank lines and `#` comments are ignored; keys are matched case-insensitively.

    Raises:
        ConfigError: If the file is missing, a line is malformed or a key is unknown
    """
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    known = set(ExperimentConfig.model_fields)
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config(
    path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """
    Build the experiment configuration

    Priority, highest first: overrides (CLI flags), config file,
    CZGRID_* environment variables, defaults.

    Raises:
        ConfigError: If any source holds an invalid value
    """
    values: Dict[str, Any] = {}
    if path is not None:
        values.update(parse_config_file(Path(path)))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})

    try:
        config = ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e

    logger.debug(f"Loaded configuration: {config.model_dump()}")
    return config
