"""Channel, detector, source and memory parameters.

All quantities are SI (seconds, hertz) except distances, which stay in km.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import asdict, dataclass, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "Decoherence",
    "SystemParams",
    "MemoryParams",
    "IntensitySet",
    "channel_transmittance",
    "dark_count_prob",
    "misalignment_half_width",
    "builtin_memory",
    "BUILTIN_MEMORIES",
    "MDI_REPETITION_RATE",
    "DEFAULT_VACUUM",
    "load_config",
    "repetition_rate",
    "X_LABELS",
]

MDI_REPETITION_RATE = 1e9
DEFAULT_VACUUM = 0.5e-3


class Decoherence(str, Enum):
    DEPHASING = "dephasing"
    DEPOLARISING = "depolarising"


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _check_nonneg(name: str, value: float) -> None:
    if not (value >= 0.0) or math.isnan(value):
        raise ValueError(f"{name} must be non-negative, got {value}")


@dataclass(frozen=True)
class SystemParams:
    """Channel and detector settings shared by both protocols.

    ``R_s`` is the memory-assisted clock; ``None`` defers to the memory's
    tabulated rate. The memoryless reference always runs at
    :data:`MDI_REPETITION_RATE` and ignores this field.
    """

    L: float = 0.0
    L_att: float = 22.0
    eta_d: float = 0.93
    gamma_dc: float = 1.0
    e_mis: float = 0.005
    eta_c: float = 1.0
    R_s: float | None = None
    f_ec: float = 1.16

    def __post_init__(self) -> None:
        _check_unit("eta_d", self.eta_d)
        _check_unit("eta_c", self.eta_c)
        for name in ("L", "L_att", "gamma_dc", "f_ec"):
            _check_nonneg(name, getattr(self, name))
        if self.R_s is not None and not self.R_s > 0:
            raise ValueError("R_s must be positive")
        if not (0.0 <= self.e_mis <= 0.5):
            raise ValueError(f"e_mis must lie in [0, 0.5], got {self.e_mis}")

    def at(self, L: float) -> "SystemParams":
        return replace(self, L=float(L))

    def with_(self, **changes: Any) -> "SystemParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class MemoryParams:
    """Quantum-memory figures of merit.

    Only the product of writing and initial reading efficiency is tracked;
    it is applied once, at readout.
    """

    eta_w_eta_r0: float
    T1: float
    T2: float
    tau_int: float
    tau_init: float = 0.0
    decoherence: Decoherence = Decoherence.DEPHASING
    N_r: int = 1
    R_s: float | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        _check_unit("eta_w_eta_r0", self.eta_w_eta_r0)
        if not (self.T1 > 0 and self.T2 > 0):
            raise ValueError("T1 and T2 must be positive")
        _check_nonneg("tau_int", self.tau_int)
        _check_nonneg("tau_init", self.tau_init)
        if int(self.N_r) != self.N_r or self.N_r < 1:
            raise ValueError("N_r must be an integer >= 1")
        object.__setattr__(self, "decoherence", Decoherence(self.decoherence))

    def with_(self, **changes: Any) -> "MemoryParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class IntensitySet:
    """Signal intensity ``z`` plus decoys ``w1 > w2 > v`` and their weights."""

    z: float
    w1: float
    w2: float
    v: float = DEFAULT_VACUUM
    p_z: float = 0.25
    p_w1: float = 0.25
    p_w2: float = 0.25
    p_v: float = 0.25

    def __post_init__(self) -> None:
        probs = self.probabilities
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError("selection probabilities must be non-negative and sum to 1")
        if not (self.z > self.w1 > self.w2 > self.v >= 0.0):
            raise ValueError("intensities must satisfy z > w1 > w2 > v >= 0")

    @property
    def probabilities(self) -> tuple[float, float, float, float]:
        return (self.p_z, self.p_w1, self.p_w2, self.p_v)

    @property
    def intensities(self) -> tuple[float, float, float, float]:
        return (self.z, self.w1, self.w2, self.v)

    def labelled(self) -> dict[str, tuple[float, float]]:
        """Map label -> (intensity, probability)."""
        return {
            "z": (self.z, self.p_z),
            "w1": (self.w1, self.p_w1),
            "w2": (self.w2, self.p_w2),
            "v": (self.v, self.p_v),
        }

    @classmethod
    def signal_only(cls, z: float) -> "IntensitySet":
        """Degenerate set that always sends the signal intensity."""
        return cls(z=z, w1=z / 2, w2=z / 4, v=0.0, p_z=1.0, p_w1=0.0, p_w2=0.0, p_v=0.0)


X_LABELS = ("w1", "w2", "v")


def channel_transmittance(params: SystemParams) -> float:
    """Per-leg transmittance ``exp(-L / (2 L_att))``."""
    return math.exp(-params.L / (2.0 * params.L_att))


def dark_count_prob(params: SystemParams, memory: MemoryParams) -> float:
    """Dark-count probability per detector per round of the memory clock."""
    return params.gamma_dc * memory.tau_int


def misalignment_half_width(params: SystemParams) -> float:
    """Half width of the uniform rotation-angle distribution."""
    return math.sqrt(3.0 * params.e_mis)


BUILTIN_MEMORIES: dict[str, MemoryParams] = {
    "WV": MemoryParams(0.05, 120e-6, 120e-6, 1.43e-9, R_s=518e6, name="WV"),
    "CA": MemoryParams(0.76, 220e-3, 220e-3, 240e-9, R_s=4.2e6, name="CA"),
    "SV": MemoryParams(0.423, 200e-6, 200e-6, 142e-9, R_s=7.04e6, name="SV"),
}


def builtin_memory(tag: str, decoherence: Decoherence | str = Decoherence.DEPHASING) -> MemoryParams:
    """Tabulated memory with ``T2 = T1``."""
    key = str(tag).upper()
    if key not in BUILTIN_MEMORIES:
        raise ValueError(f"unknown memory tag {tag!r}; choose from {sorted(BUILTIN_MEMORIES)}")
    return replace(BUILTIN_MEMORIES[key], decoherence=Decoherence(decoherence))


def repetition_rate(params: SystemParams, memory: MemoryParams) -> float:
    """Memory-assisted clock: explicit ``params.R_s``, else the memory's own."""
    if params.R_s is not None:
        return params.R_s
    if memory.R_s is not None:
        return memory.R_s
    if memory.tau_int > 0:
        return 1.0 / memory.tau_int
    raise ValueError("no repetition rate available")


_SYSTEM_KEYS = {f.name for f in fields(SystemParams)}
_MEMORY_KEYS = {f.name for f in fields(MemoryParams)}


def _coerce(text: str) -> Any:
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def load_config(path: str | Path) -> dict[str, Any]:
    """Read an INI-style ``key = value`` file into a flat dict.

    Section headers are optional and ignored; dashes in keys become
    underscores so flag spellings work too.
    """
    text = Path(path).read_text()
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep case (T1, R_s, ...)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError:
        parser.read_string("[run]\n" + text)
    out: dict[str, Any] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            out[key.strip().replace("-", "_")] = _coerce(value)
    return out


def split_overrides(values: Mapping[str, Any]) -> tuple[dict[str, Any], dict[str, Any]]:
    """Partition a flat mapping into system and memory field overrides."""
    sys_kw = {k: v for k, v in values.items() if k in _SYSTEM_KEYS}
    mem_kw = {k: v for k, v in values.items() if k in _MEMORY_KEYS}
    return sys_kw, mem_kw


def as_dict(obj: Any) -> dict[str, Any]:
    d = asdict(obj)
    for k, v in d.items():
        if isinstance(v, Enum):
            d[k] = v.value
    return d
