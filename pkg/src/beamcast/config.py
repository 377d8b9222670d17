"""Scenario configuration: Table-style simulation defaults and the key=value config file.

All dBm values are converted to watts here, at the boundary; everything
downstream works in linear units.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_PER_HZ = -174.0


class ConfigError(ValueError):
    """Raised for unparseable or inconsistent scenario configuration."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(watts) + 30.0


def noise_power_dbm(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise floor: -174 dBm/Hz + 10*log10(B) + noise figure."""
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


@dataclasses.dataclass
class ScenarioConfig:
    """Simulation parameters; defaults follow the standard 60 GHz setting.

    Key physical defaults: 60 GHz carrier, 100 MHz bandwidth, 8x8 transmit
    UPA observed through a 4x4 low-resolution grid, 25 propagation paths,
    -6 dB reflection gain, 9.5 dB noise figure, BS at 10 m height, frames
    0.1 s apart.
    """

    # rf / array
    carrier_frequency_hz: float = 60e9
    bandwidth_hz: float = 100e6
    m_v: int = 8
    m_h: int = 8
    m_v_low: int = 4
    m_h_low: int = 4
    # scenario
    k_ues: int = 4
    l_p: int = 25
    bs_height_m: float = 10.0
    ue_height_m: float = 1.5
    ue_speed_mps: float = 1.0
    heading_sigma_rad: float = 0.5
    area_half_width_m: float = 50.0
    ue_min_distance_m: float = 5.0
    frame_interval_s: float = 0.1
    frames: int = 30
    ray_spacing_m: float = 5e-4  # parsed for completeness; unused by the synthetic model
    # power / noise
    p_max_dbm: float = 12.0
    p_max_sweep_dbm: tuple[float, ...] = (-10.0, -4.5, 1.0, 6.5, 12.0)
    sweep_power_dbm: float | None = None  # beam-sweeping pilot power; defaults to p_max_dbm
    noise_figure_db: float = 9.5
    reflection_gain_db: float = -6.0
    sir_db: float = 10.0
    # pipeline
    window_s: int = 3
    top_m: int = 10
    seeds: tuple[int, ...] = (0,)
    lowres_mode: str = "subsample"  # or "wide_beam"
    interference_model: str = "own_channel"  # or "printed"
    sign_mode: str = "preserve"  # or "paper"
    inner_mtx_scaling: bool = True  # drop the per-path sqrt(M_tx) factor when False
    ue_positions: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self) -> None:
        if self.m_v < 1 or self.m_h < 1:
            raise ConfigError("antenna grid must be at least 1x1")
        if self.m_v_low > self.m_v or self.m_h_low > self.m_h:
            raise ConfigError("low-resolution grid cannot exceed the antenna grid")
        if self.window_s < 1:
            raise ConfigError("window_s must be >= 1")
        if self.top_m < 1:
            raise ConfigError("top_m must be >= 1")
        if self.k_ues < 1:
            raise ConfigError("k_ues must be >= 1")
        if self.l_p < 1:
            raise ConfigError("l_p must be >= 1")
        if self.frames < 2:
            raise ConfigError("need at least 2 frames (one window plus one target)")
        if self.frame_interval_s <= 0:
            raise ConfigError("frame_interval_s must be positive")
        if self.lowres_mode not in ("subsample", "wide_beam"):
            raise ConfigError(f"unknown lowres_mode {self.lowres_mode!r}")
        if self.interference_model not in ("own_channel", "printed"):
            raise ConfigError(f"unknown interference_model {self.interference_model!r}")
        if self.sign_mode not in ("preserve", "paper"):
            raise ConfigError(f"unknown sign_mode {self.sign_mode!r}")

    # derived linear-unit quantities

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency_hz

    @property
    def m_tx(self) -> int:
        return self.m_v * self.m_h

    @property
    def p_max_w(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def sweep_power_w(self) -> float:
        dbm = self.p_max_dbm if self.sweep_power_dbm is None else self.sweep_power_dbm
        return dbm_to_watts(dbm)

    @property
    def noise_power_w(self) -> float:
        return dbm_to_watts(noise_power_dbm(self.bandwidth_hz, self.noise_figure_db))

    @property
    def reflection_gain_linear(self) -> float:
        return 10.0 ** (self.reflection_gain_db / 10.0)

    @property
    def sir_amplitude_scale(self) -> float:
        """Extra damping applied to scattered-path amplitudes.

        Interpretive use of the signal-to-interference power ratio setting:
        scattered paths bounce off reflectors shared by all UEs and are what
        couples one UE's beams to another's, so they are attenuated by the
        configured ratio (amplitude convention for a power ratio).
        """
        return 10.0 ** (-self.sir_db / 20.0)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScenarioConfig":
        return cls(**_parse_config_file(Path(path)))


_LIST_FIELDS = {"p_max_sweep_dbm", "seeds"}
_BOOL_FIELDS = {"inner_mtx_scaling"}
_STR_FIELDS = {"lowres_mode", "interference_model", "sign_mode"}
_INT_FIELDS = {
    "m_v", "m_h", "m_v_low", "m_h_low", "k_ues", "l_p", "frames",
    "window_s", "top_m",
}
_FIELD_NAMES = {f.name for f in dataclasses.fields(ScenarioConfig)}


def _parse_scalar(key: str, raw: str):
    if key in _STR_FIELDS:
        return raw
    if key in _BOOL_FIELDS:
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"bad boolean for {key}: {raw!r}")
    if key in _INT_FIELDS:
        return int(raw)
    return float(raw)


def _parse_config_file(path: Path) -> dict:
    """Parse a `key = value` text file; '#' starts a comment.

    Lists use comma-separated values (`seeds = 0, 1, 2`). ue_positions uses
    semicolon-separated x,y,z triples.
    """
    values: dict = {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _FIELD_NAMES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "ue_positions":
            triples = []
            for chunk in raw.split(";"):
                parts = [p for p in chunk.split(",") if p.strip()]
                if len(parts) != 3:
                    raise ConfigError(f"{path}:{lineno}: ue_positions wants x,y,z triples")
                triples.append(tuple(float(p) for p in parts))
            values[key] = tuple(triples)
        elif key in _LIST_FIELDS:
            items = [p.strip() for p in raw.split(",") if p.strip()]
            caster = int if key == "seeds" else float
            values[key] = tuple(caster(p) for p in items)
        elif key == "sweep_power_dbm":
            values[key] = None if raw.lower() == "none" else float(raw)
        else:
            values[key] = _parse_scalar(key, raw)
    return values


def write_default_config(path: str | Path) -> None:
    """Write a config file populated with the defaults, as a starting point."""
    cfg = ScenarioConfig()
    lines = ["# beamcast scenario configuration (all defaults)"]
    for f in dataclasses.fields(ScenarioConfig):
        val = getattr(cfg, f.name)
        if f.name == "ue_positions":
            continue
        if isinstance(val, tuple):
            rendered = ", ".join(str(v) for v in val)
        elif val is None:
            rendered = "none"
        else:
            rendered = str(val)
        lines.append(f"{f.name} = {rendered}")
    Path(path).write_text("\n".join(lines) + "\n")
