"""Physical device bookkeeping: mode table, couplings, drives, pulse shapes.

Unit boundary: user-facing frequencies are GHz, rates are MHz, times are
seconds. Quoted MHz rate values enter the dynamics as plain rate constants
(MHz x 1e6 -> 1/s); see the module constant MHZ.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

__all__ = [
    "MHZ",
    "GHZ",
    "US",
    "Mode",
    "DeviceParams",
    "EffectiveRates",
    "PulseKind",
    "PulseSegment",
    "DispersiveRegimeError",
    "DegenerateModesError",
    "NoCouplingPathError",
    "hybridization",
    "effective_coupling",
    "required_drive",
    "pulse_envelope",
    "envelope_magnitude",
]

MHZ = 1e6   # quoted MHz rate -> 1/s
GHZ = 1e9
US = 1e-6

# Combinatorial factors of the cubic expansion: degenerate (single-mode)
# processes pick up 3 permutations, non-degenerate ones 6.
MULTIPLICITY_DEGENERATE = 3
MULTIPLICITY_NON_DEGENERATE = 6


class DispersiveRegimeError(ValueError):
    """Hybridization too large for the dispersive approximation."""


class DegenerateModesError(ValueError):
    """Two modes coincide where a finite detuning is required."""


class NoCouplingPathError(ValueError):
    """A requested parametric process has zero hybridization product."""


@dataclass(frozen=True)
class Mode:
    name: str
    omega_ghz: float
    gamma_mhz: float

    def __post_init__(self):
        if self.gamma_mhz <= 0:
            raise ValueError(f"mode {self.name}: gamma must be positive")


@dataclass(frozen=True)
class DeviceParams:
    """Mode table plus dispersive shift, nonlinearity and constraint ceilings."""

    modes: tuple[Mode, Mode, Mode] = (
        Mode("readout", 6.0, 0.1),
        Mode("snail", 4.0, 1.0),
        Mode("output", 7.5, 20.0),
    )
    chi_mhz: float = 3.0
    g3_mhz: float = 30.0
    hybridizations: dict = field(default_factory=lambda: {
        ("readout", "snail"): 0.1,
        ("output", "snail"): 0.1,
    })
    n_crit: float = 100.0
    g_crit_mhz: dict = field(default_factory=lambda: {
        "squeeze_readout": 15.0,
        "convert_readout_snail": 15.0,
        "amplify_snail": 15.0,
        "convert_snail_output": 15.0,
    })
    t1_us: float = 50.0

    def __post_init__(self):
        omegas = [m.omega_ghz for m in self.modes]
        if len(set(omegas)) != len(omegas):
            raise ValueError("mode frequencies must be distinct")
        if self.chi_mhz <= 0:
            raise ValueError("chi must be positive")
        if self.n_crit <= 0 or any(g <= 0 for g in self.g_crit_mhz.values()):
            raise ValueError("constraint ceilings must be positive")
        if self.t1_us <= 0:
            raise ValueError("t1 must be positive")
        for pair, lam in self.hybridizations.items():
            if not 0.0 < lam < 0.5:
                raise DispersiveRegimeError(
                    f"hybridization {pair} = {lam} outside (0, 0.5)")

    def mode(self, name: str) -> Mode:
        for m in self.modes:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def gamma_rates(self) -> np.ndarray:
        """Energy decay rates in 1/s, mode order (readout, snail, output)."""
        return np.array([m.gamma_mhz * MHZ for m in self.modes])

    @property
    def chi(self) -> float:
        """Dispersive shift in 1/s."""
        return self.chi_mhz * MHZ


@dataclass(frozen=True)
class EffectiveRates:
    """Pump-induced quadratic coupling rates (MHz)."""

    squeeze_readout: float = 6.0
    convert_readout_snail: float = 10.0
    amplify_snail: float = 4.0
    convert_snail_output: float = 10.0

    def __post_init__(self):
        for name in ("squeeze_readout", "convert_readout_snail",
                     "amplify_snail", "convert_snail_output"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def as_dict(self) -> dict:
        return {
            "squeeze_readout": self.squeeze_readout,
            "convert_readout_snail": self.convert_readout_snail,
            "amplify_snail": self.amplify_snail,
            "convert_snail_output": self.convert_snail_output,
        }


class PulseKind(enum.Enum):
    SQUEEZE_READOUT = "squeeze_readout"
    DISPLACE_READOUT = "displace_readout"
    CONVERT_READOUT_SNAIL = "convert_readout_snail"
    AMPLIFY_SNAIL = "amplify_snail"
    CONVERT_SNAIL_OUTPUT = "convert_snail_output"
    IDLE = "idle"


@dataclass(frozen=True)
class PulseSegment:
    """One parametric pulse: erfc-edged plateau with fixed phase."""

    kind: PulseKind
    amplitude_mhz: float
    phase: float
    t_start: float
    t_end: float
    rise_rate: float = 5e8
    fall_rate: float = 5e8

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.amplitude_mhz < 0:
            raise ValueError("amplitude must be non-negative")
        if self.rise_rate <= 0 or self.fall_rate <= 0:
            raise ValueError("rise/fall rates must be positive")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def hybridization(g_mhz: float, delta_mhz: float) -> float:
    """lambda = g / |omega_i - omega_s|."""
    if delta_mhz == 0:
        raise DegenerateModesError("zero detuning between coupled modes")
    return g_mhz / abs(delta_mhz)


def effective_coupling(multiplicity: int, lam_i: float, lam_j: float,
                       g3_mhz: float, pump_amp: float) -> float:
    """Pump-activated coupling C * lam_i * lam_j * g3 * |pump| in MHz."""
    if multiplicity < 1:
        raise ValueError("multiplicity must be >= 1")
    return multiplicity * lam_i * lam_j * g3_mhz * abs(pump_amp)


def required_drive(g_target_mhz: float, g3_mhz: float, delta_sp_mhz: float,
                   lam_i: float, lam_j: float) -> float:
    """Drive amplitude |eps| = (g/g3) |omega_s - omega_p| / (lam_i lam_j), MHz."""
    if lam_i * lam_j == 0:
        raise NoCouplingPathError("zero hybridization product")
    if g3_mhz <= 0 or delta_sp_mhz <= 0:
        raise ValueError("g3 and pump detuning must be positive")
    return (g_target_mhz / g3_mhz) * abs(delta_sp_mhz) / (lam_i * lam_j)


def envelope_magnitude(seg: PulseSegment, t):
    """Real envelope magnitude in MHz (phase handled by the generator block)."""
    t = np.asarray(t, dtype=float)
    return 0.25 * seg.amplitude_mhz * erfc(-seg.rise_rate * (t - seg.t_start)) \
        * erfc(seg.fall_rate * (t - seg.t_end))


def pulse_envelope(seg: PulseSegment, t):
    """Complex envelope (a e^{-i phi}/4) erfc(-nu1 (t - t1)) erfc(nu2 (t - t2)).

    Magnitude in MHz, smooth in t; deep in the plateau it equals a e^{-i phi}.
    """
    return envelope_magnitude(seg, t) * np.exp(-1j * seg.phase)
