"""Project configuration: JSON file with strict key validation.

JSON was chosen over TOML so the config round-trips with the same stdlib
tooling as the manifests. Unknown keys are rejected — a typo in a tolerance
or seed must not silently fall back to a default — and any referenced
device paths must resolve at load time.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigurationError

DEFAULT_RH_LEVELS = [0.0, 6.0, 12.0, 18.0, 24.0, 30.0, 36.0, 42.0, 48.1]


@dataclass
class GridConfig:
    height: int = 16
    width: int = 16


@dataclass
class DevicesConfig:
    preset: str = "desk"
    dark_scale: float = 1.0
    # explicit device description files override the preset
    paths: dict = field(default_factory=dict)


@dataclass
class ModelConfig:
    kind: str = "mlr"
    ridge_lambda: float = 1e-8
    alpha: float = 0.1
    learning_rate: float = 1e-3
    max_epochs: int = 1000
    patience: int = 10
    min_delta: float = 1e-4


@dataclass
class CalibrationConfig:
    clip_max: float = 1.5
    epsilon_denom: float = 1e-6


@dataclass
class IndicesConfig:
    ndvi: list = field(default_factory=lambda: [901.0, 661.0])
    smc: list = field(default_factory=lambda: [1300.0, 1119.0])


@dataclass
class AugmentationConfig:
    replication: int = 3
    scale_spread: float = 0.1
    zero_probability: float = 0.1


@dataclass
class SynthConfig:
    scene: str = "moisture"  # "moisture" | "terrain"
    samples: int = 96
    snr_db: float | None = 40.0
    illumination: str = "solar_like"
    intensity_min: float = 0.25
    intensity_max: float = 1.0
    rh_levels: list = field(default_factory=lambda: list(DEFAULT_RH_LEVELS))
    cell_px: int = 4
    margin_px: int = 2
    vignette_strength: float = 0.3


@dataclass
class ProjectConfig:
    seed: int = 0
    grid: GridConfig = field(default_factory=GridConfig)
    devices: DevicesConfig = field(default_factory=DevicesConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    indices: IndicesConfig = field(default_factory=IndicesConfig)
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "grid": GridConfig,
    "devices": DevicesConfig,
    "model": ModelConfig,
    "calibration": CalibrationConfig,
    "indices": IndicesConfig,
    "augmentation": AugmentationConfig,
    "synth": SynthConfig,
}


def _build_section(cls, doc: dict, section: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {sorted(unknown)} in config section {section!r}; "
            f"allowed: {sorted(allowed)}"
        )
    return cls(**doc)


def load_config(path) -> ProjectConfig:
    """Load and validate a JSON project config."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config root must be a JSON object")
    allowed = {"seed"} | set(_SECTIONS)
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigurationError(
            f"{path}: unknown top-level key(s) {sorted(unknown)}; allowed: {sorted(allowed)}"
        )
    cfg = ProjectConfig(seed=int(doc.get("seed", 0)))
    for name, cls in _SECTIONS.items():
        if name in doc:
            section = doc[name]
            if not isinstance(section, dict):
                raise ConfigurationError(f"{path}: section {name!r} must be a JSON object")
            setattr(cfg, name, _build_section(cls, section, name))
    _validate(cfg, path.parent)
    return cfg


def save_config(cfg: ProjectConfig, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _validate(cfg: ProjectConfig, base_dir: Path) -> None:
    if cfg.model.kind not in ("mlr", "mlp"):
        raise ConfigurationError(f"model.kind must be 'mlr' or 'mlp', got {cfg.model.kind!r}")
    if cfg.devices.preset not in ("desk",):
        raise ConfigurationError(f"unknown devices.preset {cfg.devices.preset!r}")
    if cfg.synth.scene not in ("moisture", "terrain"):
        raise ConfigurationError(f"synth.scene must be 'moisture' or 'terrain', got {cfg.synth.scene!r}")
    if cfg.synth.illumination not in ("flat", "solar_like", "dim"):
        raise ConfigurationError(f"unknown synth.illumination {cfg.synth.illumination!r}")
    if not 0 < cfg.synth.intensity_min <= cfg.synth.intensity_max:
        raise ConfigurationError("synth intensity range must satisfy 0 < min <= max")
    for role, rel in cfg.devices.paths.items():
        resolved = (base_dir / rel).resolve()
        if not resolved.exists():
            raise ConfigurationError(
                f"devices.paths[{role!r}] -> {resolved} does not exist"
            )
        cfg.devices.paths[role] = str(resolved)
