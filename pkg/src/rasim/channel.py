"""Free-space link budget, thermal noise and analytic 16-QAM bit-error rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import raise_if

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class LinkParams:
    carrier_hz: float = 5.8e9
    tx_power_dbm: float = 10.0
    bit_rate_bps: float = 2e6
    bits_per_symbol: int = 4
    noise_figure_db: float = 6.0
    rx_bandwidth_hz: Optional[float] = None  # None -> symbol rate

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self):
        out = []
        if not self.carrier_hz > 0:
            out.append((("carrier_hz",), f"must be > 0, got {self.carrier_hz!r}"))
        if not math.isfinite(self.tx_power_dbm):
            out.append((("tx_power_dbm",), "must be finite"))
        if not self.bit_rate_bps > 0:
            out.append((("bit_rate_bps",), f"must be > 0, got {self.bit_rate_bps!r}"))
        if not (isinstance(self.bits_per_symbol, int) and self.bits_per_symbol >= 1):
            out.append((("bits_per_symbol",), f"must be an integer >= 1, got {self.bits_per_symbol!r}"))
        if not math.isfinite(self.noise_figure_db):
            out.append((("noise_figure_db",), "must be finite"))
        if self.rx_bandwidth_hz is not None and not self.rx_bandwidth_hz > 0:
            out.append((("rx_bandwidth_hz",), f"must be > 0, got {self.rx_bandwidth_hz!r}"))
        return out

    @property
    def symbol_rate(self) -> float:
        return self.bit_rate_bps / self.bits_per_symbol

    @property
    def bandwidth_hz(self) -> float:
        return self.rx_bandwidth_hz if self.rx_bandwidth_hz is not None else self.symbol_rate


def fspl_db(carrier_hz: float, distance_m: float) -> float:
    """Friis free-space loss, ``20 log10(4 pi d f / c)``."""
    if not distance_m > 0 or not carrier_hz > 0:
        raise ValueError(f"distance and carrier must be positive (d={distance_m!r}, f={carrier_hz!r})")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz / SPEED_OF_LIGHT)


def received_power_dbm(link: LinkParams, tx_gain_dbi: float, rx_gain_dbi: float, distance_m: float) -> float:
    return link.tx_power_dbm + tx_gain_dbi + rx_gain_dbi - fspl_db(link.carrier_hz, distance_m)


def noise_floor_dbm(link: LinkParams) -> float:
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(link.bandwidth_hz) + link.noise_figure_db


def snr_db(link: LinkParams, prx_dbm: float) -> float:
    return prx_dbm - noise_floor_dbm(link)


def ebn0_db(link: LinkParams, snr: float) -> float:
    """Convert SNR over the receive bandwidth to energy per bit over N0."""
    return snr + 10.0 * math.log10(link.bandwidth_hz / link.bit_rate_bps)


def ber_16qam(ebn0: float) -> float:
    """Gray-coded square 16-QAM bit-error rate, ``(3/8) erfc(sqrt(0.4 Eb/N0))``.

    Nearest-neighbour approximation; ``ebn0`` is in dB and ``-inf`` is accepted
    as the zero-energy limit.
    """
    if math.isnan(ebn0):
        raise ValueError("Eb/N0 must not be NaN")
    if ebn0 == -math.inf:
        return 0.375
    gamma = 10.0 ** (ebn0 / 10.0)
    return 0.375 * math.erfc(math.sqrt(0.4 * gamma))
