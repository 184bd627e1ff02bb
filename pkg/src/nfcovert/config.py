"""Scenario configuration: physical layout, powers, covertness level, solver knobs.

All powers are stored in linear watts internally; dBm / dB only appear at the
config file boundary (key names carry the unit suffix).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watts_to_dbm(x: float) -> float:
    return 10.0 * math.log10(x) + 30.0


class ConfigError(ValueError):
    """A config field violates its documented constraint."""


@dataclass(frozen=True)
class PolarPosition:
    """Position on the xy-plane as (range, azimuth) around the surface center."""

    range_m: float
    azimuth_rad: float

    def __post_init__(self):
        if self.range_m <= 0:
            raise ConfigError(f"range_m must be > 0, got {self.range_m}")

    def to_xy(self):
        return (self.range_m * math.cos(self.azimuth_rad),
                self.range_m * math.sin(self.azimuth_rad))


@dataclass
class SystemConfig:
    """One complete covert-communication scenario.

    Default values reproduce the reference urban mmWave deployment: a 64-antenna
    transmitter 50 m from a 90x8 reflecting surface, 4-antenna receivers at
    15 m (intended) and 10 m (warden) on the same azimuth, 28 GHz carrier.
    """

    # array sizes
    m_a: int = 64             # transmit antennas (ULA)
    m_b: int = 4              # intended receiver antennas (ULA)
    m_w: int = 4              # warden antennas (ULA)
    m_rf: int = 4             # transmit RF chains
    n_streams: int = 2        # data streams L
    n_y: int = 90             # surface elements, horizontal
    n_z: int = 8              # surface elements, vertical

    # far-field multipath between transmitter and surface
    n_clusters: int = 5
    n_rays: int = 10

    # carrier / noise / powers
    carrier_hz: float = 28e9
    sigma_b_dbm: float = -110.0       # receiver noise power
    sigma_w_dbm: float = -110.0       # warden nominal noise power
    rho_db: float = 3.0               # warden noise uncertainty
    kappa: float = 0.01               # covertness level
    p_max_dbm: float = 40.0           # transmit power budget

    # element spacings as fractions of the carrier wavelength
    d_a_frac: float = 0.5             # transmitter ULA
    d_x_frac: float = 0.5             # surface UPA (receivers reuse this)

    # geometry (polar around the surface center, xy-plane)
    alice: PolarPosition = field(default_factory=lambda: PolarPosition(50.0, -math.pi / 4))
    bob: PolarPosition = field(default_factory=lambda: PolarPosition(15.0, math.pi / 4))
    willie: PolarPosition = field(default_factory=lambda: PolarPosition(10.0, math.pi / 4))

    # solver tolerances
    wmmse_eps: float = 1e-4
    wmmse_max_iter: int = 100
    hybrid_eps: float = 1e-4
    hybrid_max_iter: int = 30
    admm_eps: float = 1e-4
    admm_max_iter: int = 300
    ao_eps: float = 1e-3
    ao_max_iter: int = 30

    # experiment control
    seed: int = 0
    realizations: int = 100

    def __post_init__(self):
        self.validate()

    # -- derived quantities ------------------------------------------------

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_hz

    @property
    def d_a(self) -> float:
        """Transmitter element spacing in meters."""
        return self.d_a_frac * self.wavelength_m

    @property
    def d_x(self) -> float:
        """Surface element spacing in meters."""
        return self.d_x_frac * self.wavelength_m

    @property
    def n_elements(self) -> int:
        return self.n_y * self.n_z

    @property
    def n_paths(self) -> int:
        return self.n_clusters * self.n_rays

    @property
    def sigma_b_sq(self) -> float:
        return dbm_to_watts(self.sigma_b_dbm)

    @property
    def sigma_w_sq(self) -> float:
        return dbm_to_watts(self.sigma_w_dbm)

    @property
    def rho(self) -> float:
        return db_to_linear(self.rho_db)

    @property
    def p_max(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    # -- validation / serialization ----------------------------------------

    def validate(self):
        counts = {
            "m_a": self.m_a, "m_b": self.m_b, "m_w": self.m_w,
            "m_rf": self.m_rf, "n_streams": self.n_streams,
            "n_y": self.n_y, "n_z": self.n_z,
            "n_clusters": self.n_clusters, "n_rays": self.n_rays,
            "realizations": self.realizations,
        }
        for name, value in counts.items():
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        if not (self.n_streams <= self.m_rf <= self.m_a):
            raise ConfigError(
                f"need n_streams <= m_rf <= m_a, got "
                f"n_streams={self.n_streams}, m_rf={self.m_rf}, m_a={self.m_a}")
        if self.carrier_hz <= 0:
            raise ConfigError(f"carrier_hz must be > 0, got {self.carrier_hz}")
        if self.rho_db <= 0:
            raise ConfigError(f"rho_db must be > 0, got {self.rho_db}")
        if not (0.0 <= self.kappa < 1.0):
            raise ConfigError(f"kappa must be in [0, 1), got {self.kappa}")
        for name in ("d_a_frac", "d_x_frac"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("wmmse_eps", "hybrid_eps", "admm_eps", "ao_eps"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["alice"] = [self.alice.range_m, self.alice.azimuth_rad]
        d["bob"] = [self.bob.range_m, self.bob.azimuth_rad]
        d["willie"] = [self.willie.range_m, self.willie.azimuth_rad]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        kwargs = dict(d)
        for key in ("alice", "bob", "willie"):
            if key in kwargs and not isinstance(kwargs[key], PolarPosition):
                r, az = kwargs[key]
                kwargs[key] = PolarPosition(float(r), float(az))
        return cls(**kwargs)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def config_hash(self) -> str:
        """Short stable hash of the scenario, recorded in every result row."""
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def desk_scale(self) -> "SystemConfig":
        """Reduced profile: 240 surface elements and 10 realizations.

        The horizontal axis is kept wide (120 x 2 split) because the range
        resolution between same-azimuth receivers scales with the fourth power
        of the horizontal aperture; an even split would collapse the
        near-field/far-field contrast that the reduced profile exists to show.
        Trends in the element count are monotone, so scheme orderings are
        preserved at desk timescales.
        """
        return self.replace(n_y=120, n_z=2, realizations=10)


def load_config(path: str) -> SystemConfig:
    """Load a JSON config file; absent keys fall back to the defaults.

    An empty file yields the full default scenario.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read().strip()
    if not text:
        return SystemConfig()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    return SystemConfig.from_dict(data)


def save_config(cfg: SystemConfig, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
