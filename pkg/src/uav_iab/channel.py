"""Radio link primitives: LoS probability, path loss, SNR and Shannon rate.

Every function here is a pure scalar computation. All dB <-> linear
conversions live in this module; the rest of the package works with linear
SNR ratios and rates in bit/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT_MPS = 299_792_458.0

# Indices into RadioParams.tx_power_mw.
LINK_DIRECT = 0
LINK_FRONTHAUL = 1
LINK_BACKHAUL = 2


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    if p_mw <= 0.0:
        raise ValueError(f"power must be positive, got {p_mw} mW")
    return 10.0 * math.log10(p_mw)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0.0:
        raise ValueError(f"ratio must be positive, got {x}")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class RadioParams:
    """All channel constants, powers, bandwidths and thresholds.

    tx_power_mw holds one transmit power per link class, indexed by
    (LINK_DIRECT, LINK_FRONTHAUL, LINK_BACKHAUL).
    """

    theta_env: float = 4.88
    xi_env: float = 0.43
    delta_exp: float = 2.0
    eta_los_db: float = 0.1
    eta_nlos_db: float = 21.0
    f_access_hz: float = 2.0e9
    f_a2a_hz: float = 2.4e9
    c_mps: float = SPEED_OF_LIGHT_MPS
    tx_power_mw: tuple[float, float, float] = (1000.0, 1000.0, 1000.0)
    noise_mw: float = 10.0 ** -9.6  # -96 dBm
    bw_access_hz: float = 25.0e6
    bw_bs_hz: float = 25.0e6
    snr_threshold: float = 3.0
    comm_range_m: float = 500.0
    min_distance_m: float = 1.0

    def __post_init__(self) -> None:
        for name in ("f_access_hz", "f_a2a_hz", "c_mps", "noise_mw",
                     "bw_access_hz", "bw_bs_hz"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if len(self.tx_power_mw) != 3 or any(p <= 0.0 for p in self.tx_power_mw):
            raise ValueError("tx_power_mw must hold three strictly positive powers")
        if self.delta_exp < 1.0:
            raise ValueError("delta_exp must be >= 1")
        if not (self.eta_nlos_db >= self.eta_los_db >= 0.0):
            raise ValueError("eta losses must satisfy eta_nlos_db >= eta_los_db >= 0")
        if self.min_distance_m <= 0.0:
            raise ValueError("min_distance_m must be strictly positive")
        if self.comm_range_m <= 0.0:
            raise ValueError("comm_range_m must be strictly positive")
        if self.snr_threshold <= 0.0:
            raise ValueError("snr_threshold must be strictly positive")

    @property
    def tx_direct_mw(self) -> float:
        return self.tx_power_mw[LINK_DIRECT]

    @property
    def tx_fronthaul_mw(self) -> float:
        return self.tx_power_mw[LINK_FRONTHAUL]

    @property
    def tx_backhaul_mw(self) -> float:
        return self.tx_power_mw[LINK_BACKHAUL]


@dataclass(frozen=True)
class Position:
    """A point in meters; z is altitude above the ground plane."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("position coordinates must be finite")
        if self.z < 0.0:
            raise ValueError("altitude must be non-negative")

    def distance_to(self, other: "Position") -> float:
        return math.sqrt((self.x - other.x) ** 2
                         + (self.y - other.y) ** 2
                         + (self.z - other.z) ** 2)

    def horizontal_distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def elevation_angle(a: Position, b: Position) -> float:
    """Elevation angle of the link between a and b, in [0, pi/2].

    atan2(|dz|, horizontal distance); exactly pi/2 for a vertical link and 0
    for a coplanar one.
    """
    dz = abs(a.z - b.z)
    horiz = a.horizontal_distance_to(b)
    return math.atan2(dz, horiz)


def los_probability(elevation_rad: float, params: RadioParams) -> float:
    """Probability of a line-of-sight path at the given elevation angle.

    Sigmoid in the elevation angle (degrees): 1 / (1 + theta *
    exp(-xi * deg + theta)), strictly increasing, in (0, 1).
    """
    if not 0.0 <= elevation_rad <= math.pi / 2.0 + 1e-12:
        raise ValueError(f"elevation angle {elevation_rad} outside [0, pi/2]")
    deg = elevation_rad * (180.0 / math.pi)
    return 1.0 / (1.0 + params.theta_env * math.exp(-params.xi_env * deg + params.theta_env))


def atg_path_loss_db(d_m: float, elevation_rad: float, params: RadioParams) -> float:
    """Air/tower-to-ground path loss in dB for BS-to-user and UAV-to-user links.

    Free-space core with exponent delta plus the LoS/NLoS excess losses
    weighted by the LoS probability.
    """
    if d_m <= 0.0:
        raise ValueError(f"distance must be positive, got {d_m}")
    p_los = los_probability(elevation_rad, params)
    free_space = 10.0 * math.log10(
        (4.0 * math.pi * params.f_access_hz * d_m / params.c_mps) ** params.delta_exp)
    return free_space + p_los * params.eta_los_db + (1.0 - p_los) * params.eta_nlos_db


def fspl_db(d_m: float, params: RadioParams) -> float:
    """Free-space path loss in dB for air-to-air (UAV-UAV, BS-UAV) links."""
    if d_m <= 0.0:
        raise ValueError(f"distance must be positive, got {d_m}")
    return 20.0 * math.log10(4.0 * math.pi * params.f_a2a_hz * d_m / params.c_mps)


def snr_linear(tx_mw: float, path_loss_db: float, noise_mw: float) -> float:
    """Linear SNR of a link: received power over noise power, both in mW."""
    if tx_mw <= 0.0 or noise_mw <= 0.0:
        raise ValueError("tx and noise powers must be strictly positive")
    return (tx_mw / 10.0 ** (path_loss_db / 10.0)) / noise_mw


def shannon_rate_bps(bandwidth_hz: float, snr: float) -> float:
    """Shannon capacity B * log2(1 + SNR) in bit/s."""
    if bandwidth_hz <= 0.0:
        raise ValueError("bandwidth must be strictly positive")
    if snr < 0.0:
        raise ValueError("SNR must be non-negative")
    return bandwidth_hz * math.log2(1.0 + snr)
