"""Antenna gain models.

The directional element uses a parabolic-in-dB main lobe clipped at a floor::

    G(psi) = peak - min(12 * (psi / hpbw)**2, floor_attenuation_db)

which places the half-power point exactly at ``psi = hpbw / 2``. The pattern is
rotationally symmetric about boresight, so gain depends on the off-boresight
angle ``psi`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import raise_if


def _check_psi(psi: float) -> None:
    if not (0.0 <= psi <= math.pi):
        raise ValueError(f"off-boresight angle must lie in [0, pi], got {psi!r}")


@dataclass(frozen=True)
class RadiationPattern:
    peak_gain_dbi: float = 10.0
    hpbw: float = math.radians(60.0)
    floor_attenuation_db: float = 20.0

    def __post_init__(self):
        raise_if(self.problems())

    def problems(self) -> list[tuple[tuple[str, ...], str]]:
        out = []
        if not math.isfinite(self.peak_gain_dbi):
            out.append((("peak_gain_dbi",), "must be finite"))
        if not (0.0 < self.hpbw <= math.pi):
            out.append((("hpbw",), f"must lie in (0, 180] deg, got {math.degrees(self.hpbw):.6g} deg"))
        if not self.floor_attenuation_db > 0.0:
            out.append((("floor_attenuation_db",), f"must be > 0 dB, got {self.floor_attenuation_db!r}"))
        return out

    def gain_dbi(self, psi: float) -> float:
        _check_psi(psi)
        rolloff = 12.0 * (psi / self.hpbw) ** 2
        return self.peak_gain_dbi - min(rolloff, self.floor_attenuation_db)


@dataclass(frozen=True)
class IsotropicPattern:
    def gain_dbi(self, psi: float) -> float:
        _check_psi(psi)
        return 0.0


def gain_dbi(pattern: RadiationPattern, psi: float) -> float:
    return pattern.gain_dbi(psi)


def isotropic_gain_dbi(psi: float) -> float:
    return IsotropicPattern().gain_dbi(psi)

