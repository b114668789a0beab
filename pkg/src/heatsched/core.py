"""Shared domain types for heat pump scheduling.

Prices are kept as integers in milli-currency-units per kWh so that cost
comparisons and tie-breaking are exact. Energies and powers are floats.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

#: absolute tolerance on storage bounds, kWh
EPS_FEAS = 1e-6

#: milli-currency-units per currency unit
PRICE_SCALE = 1000

DEFAULT_MT = 1000
DEFAULT_VT_RATIO = 1.5
#: low-tariff hours: 22:00-06:00
DEFAULT_MT_HOURS = (0, 1, 2, 3, 4, 5, 22, 23)


class TerminalMode(str, enum.Enum):
    """How the storage balance is closed at the end of the horizon.

    ``PAPER`` applies the balance for t = 0..H-2 only, so the last hour's
    demand never enters a constraint. ``EXTENDED`` also applies it at
    t = H-1 and bounds the terminal state S_H.
    """

    PAPER = "paper"
    EXTENDED = "extended"


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Tariff:
    """Hourly electricity prices in milli-currency-units per kWh."""

    prices: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.prices)
        if raw.ndim != 1 or raw.size == 0:
            raise ValueError("prices must be a non-empty 1-d sequence")
        if not np.all(np.equal(np.mod(raw, 1), 0)):
            raise ValueError("prices must be integers (milli-units per kWh)")
        prices = _frozen_array(raw, np.int64)
        if np.any(prices <= 0):
            raise ValueError("all prices must be > 0")
        object.__setattr__(self, "prices", prices)

    @classmethod
    def default(cls, mt: int = DEFAULT_MT, vt_ratio: float = DEFAULT_VT_RATIO,
                mt_hours=DEFAULT_MT_HOURS, horizon: int = 24) -> "Tariff":
        vt = mt * vt_ratio
        if vt != int(vt):
            raise ValueError(f"VT = {vt} is not an integer number of milli-units")
        prices = [mt if h in set(mt_hours) else int(vt) for h in range(horizon)]
        return cls(prices)

    @property
    def horizon(self) -> int:
        return len(self.prices)

    def in_currency(self) -> np.ndarray:
        return self.prices / PRICE_SCALE

    def __eq__(self, other):
        return isinstance(other, Tariff) and np.array_equal(self.prices, other.prices)

    def __hash__(self):
        return hash(self.prices.tobytes())


@dataclass(frozen=True)
class PumpConfig:
    """Physical parameters of the heat pump and its storage tank.

    Defaults reproduce the reference set-up: 100 kW electric, COP 1.6,
    200 kWh storage starting half full.
    """

    p_max: float = 100.0
    cop: float = 1.6
    s_min: float = 0.0
    s_max: float = 200.0
    s0: float = 100.0
    horizon: int = 24
    terminal_mode: TerminalMode = TerminalMode.PAPER

    def __post_init__(self):
        object.__setattr__(self, "terminal_mode", TerminalMode(self.terminal_mode))
        if not self.p_max > 0:
            raise ValueError("p_max must be > 0")
        if not self.cop > 0:
            raise ValueError("cop must be > 0")
        if not self.s_min <= self.s0 <= self.s_max:
            raise ValueError("need s_min <= s0 <= s_max")
        if not 1 <= self.horizon <= 24:
            raise ValueError("horizon must lie in 1..24")

    @property
    def heat_per_step(self) -> float:
        """Heat delivered by one on-hour, kWh."""
        return self.cop * self.p_max

    @property
    def n_transitions(self) -> int:
        """Number of balance equations applied."""
        if self.terminal_mode is TerminalMode.PAPER:
            return self.horizon - 1
        return self.horizon

    def to_dict(self) -> dict:
        return {
            "p_max": self.p_max,
            "cop": self.cop,
            "s_min": self.s_min,
            "s_max": self.s_max,
            "s0": self.s0,
            "horizon": self.horizon,
            "terminal_mode": self.terminal_mode.value,
        }


@dataclass(frozen=True, eq=False)
class DemandProfile:
    """Hourly building heat demand, kWh."""

    hd: np.ndarray

    def __post_init__(self):
        hd = _frozen_array(self.hd, np.float64)
        if hd.ndim != 1 or hd.size == 0:
            raise ValueError("demand must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(hd)):
            raise ValueError("demand must be finite")
        if np.any(hd < 0):
            raise ValueError("demand must be >= 0")
        object.__setattr__(self, "hd", hd)

    def __len__(self):
        return len(self.hd)

    def __eq__(self, other):
        return isinstance(other, DemandProfile) and np.array_equal(self.hd, other.hd)

    def __hash__(self):
        return hash(self.hd.tobytes())


@dataclass(frozen=True, eq=False)
class Schedule:
    """On/off decisions per hour (1 = pump on at full power)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or not 1 <= bits.size <= 24:
            raise ValueError("schedule must have 1..24 entries")
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("schedule entries must be 0 or 1")
        object.__setattr__(self, "bits", _frozen_array(bits, np.int8))

    @classmethod
    def from_string(cls, s: str) -> "Schedule":
        return cls([int(c) for c in s])

    @property
    def horizon(self) -> int:
        return len(self.bits)

    def to_string(self) -> str:
        return "".join(str(int(b)) for b in self.bits)

    def __len__(self):
        return len(self.bits)

    def __eq__(self, other):
        return isinstance(other, Schedule) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.horizon, encode_schedule(self)))

    def __repr__(self):
        return f"Schedule('{self.to_string()}')"


@dataclass(frozen=True, eq=False)
class StorageTrajectory:
    """Stored heat S_0..S_K and whether every state respects the bounds."""

    s: np.ndarray
    feasible: bool
    first_violation: int | None = None
    direction: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "s", _frozen_array(self.s, np.float64))


@dataclass(frozen=True)
class SolveResult:
    schedule: Schedule
    cost: float
    perturbed_cost_key: int
    trajectory: StorageTrajectory = field(compare=False)


def encode_schedule(s: Schedule) -> int:
    """Pack a schedule into an integer; hour 0 is the least significant bit."""
    return int(sum(int(b) << t for t, b in enumerate(s.bits)))


def decode_schedule(code: int, horizon: int = 24) -> Schedule:
    if not 1 <= horizon <= 24:
        raise ValueError("horizon must lie in 1..24")
    code = int(code)
    if not 0 <= code < (1 << horizon):
        raise ValueError(f"code {code} outside [0, 2^{horizon})")
    return Schedule([(code >> t) & 1 for t in range(horizon)])


def encode_bits(bits: np.ndarray) -> np.ndarray:
    """Vectorised :func:`encode_schedule` for an (n, H) 0/1 array."""
    bits = np.asarray(bits, dtype=np.int64)
    weights = np.left_shift(np.int64(1), np.arange(bits.shape[-1], dtype=np.int64))
    return bits @ weights


def decode_codes(codes, horizon: int = 24) -> np.ndarray:
    """Vectorised :func:`decode_schedule`, returns an (n, H) int8 array."""
    codes = np.asarray(codes, dtype=np.int64)
    if np.any(codes < 0) or np.any(codes >= (1 << horizon)):
        raise ValueError(f"codes outside [0, 2^{horizon})")
    shifts = np.arange(horizon, dtype=np.int64)
    return ((codes[..., None] >> shifts) & 1).astype(np.int8)


def bits_to_string(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def evaluate_cost(s: Schedule, tariff: Tariff, cfg: PumpConfig) -> float:
    """Electricity cost of a schedule in currency units."""
    if not len(s) == tariff.horizon == cfg.horizon:
        raise ValueError("schedule, tariff and config horizons differ")
    scaled = int(np.dot(tariff.prices, s.bits.astype(np.int64)))
    return cfg.p_max * scaled / PRICE_SCALE
