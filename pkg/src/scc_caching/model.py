"""Network configuration and shared value types.

Receivers are numbered 1..K in order of improving channel quality: the first
``num_weak`` receivers carry caches, the remaining ``num_strong`` do not.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

# absolute tolerance for comparing rates and memories
ATOL = 1e-9


class ConfigError(ValueError):
    """Base class for rejected configurations."""


class NonMonotoneErasures(ConfigError):
    pass


class TooFewFiles(ConfigError):
    pass


class DegenerateErasure(ConfigError):
    pass


class InvalidIndex(ValueError):
    pass


@dataclass(frozen=True)
class SystemConfig:
    num_weak: int
    num_strong: int
    num_files: int
    packet_bits: int
    erasures: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "erasures", tuple(float(d) for d in self.erasures))

    @property
    def num_receivers(self) -> int:
        return self.num_weak + self.num_strong

    @property
    def weak_erasures(self) -> tuple[float, ...]:
        return self.erasures[: self.num_weak]

    @property
    def strong_erasures(self) -> tuple[float, ...]:
        return self.erasures[self.num_weak :]

    def erasure(self, k: int) -> float:
        """Erasure probability of receiver ``k`` (1-based)."""
        return self.erasures[k - 1]

    @property
    def strong_inverse_sum(self) -> float:
        return sum(1.0 / (1.0 - d) for d in self.strong_erasures)

    def is_homogeneous(self) -> bool:
        w, s = self.weak_erasures, self.strong_erasures
        if not w or not s:
            return False
        return len(set(w)) == 1 and len(set(s)) == 1 and s[0] < w[0]

    def to_dict(self) -> dict:
        return {
            "num_weak": self.num_weak,
            "num_strong": self.num_strong,
            "num_files": self.num_files,
            "packet_bits": self.packet_bits,
            "erasures": list(self.erasures),
        }


@dataclass(frozen=True)
class HomogeneousConfig:
    num_weak: int
    num_strong: int
    num_files: int
    packet_bits: int
    delta_weak: float
    delta_strong: float

    def __post_init__(self):
        if not self.delta_strong < self.delta_weak:
            raise ConfigError(
                f"homogeneous scenario needs delta_strong < delta_weak, "
                f"got {self.delta_strong} >= {self.delta_weak}"
            )

    def expand(self) -> SystemConfig:
        erasures = (self.delta_weak,) * self.num_weak + (self.delta_strong,) * self.num_strong
        return validate_config(
            SystemConfig(self.num_weak, self.num_strong, self.num_files, self.packet_bits, erasures)
        )


@dataclass(frozen=True, order=True)
class SchemeIndex:
    p: int
    q: int

    def check(self, num_weak: int) -> "SchemeIndex":
        if not 0 <= self.p <= self.q <= num_weak:
            raise InvalidIndex(f"need 0 <= p <= q <= {num_weak}, got ({self.p}, {self.q})")
        return self

    @property
    def levels(self) -> range:
        return range(self.p, self.q + 1)


@dataclass(frozen=True)
class MemoryRatePair:
    memory: float
    rate: float
    index: SchemeIndex | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.memory < -ATOL or self.rate < -ATOL:
            raise ValueError(f"negative memory/rate: ({self.memory}, {self.rate})")


@dataclass(frozen=True)
class DemandVector:
    demands: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(int(d) for d in self.demands))

    def check(self, cfg: SystemConfig) -> "DemandVector":
        if len(self.demands) != cfg.num_receivers:
            raise ValueError(f"expected {cfg.num_receivers} demands, got {len(self.demands)}")
        bad = [d for d in self.demands if not 1 <= d <= cfg.num_files]
        if bad:
            raise ValueError(f"demand(s) {bad} outside [1, {cfg.num_files}]")
        return self

    def __getitem__(self, k: int) -> int:
        """Demand of receiver ``k`` (1-based)."""
        return self.demands[k - 1]

    @classmethod
    def all_distinct(cls, cfg: SystemConfig) -> "DemandVector":
        return cls(tuple(range(1, cfg.num_receivers + 1)))

    @classmethod
    def all_equal(cls, cfg: SystemConfig, f: int = 1) -> "DemandVector":
        return cls((f,) * cfg.num_receivers)


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Check a raw configuration and return it unchanged.

    The erasure list must already be sorted non-increasingly; it is never
    re-sorted, since the position of a receiver decides whether it is weak.
    """
    for name in ("num_weak", "num_files", "packet_bits"):
        v = getattr(cfg, name)
        if not isinstance(v, int) or v < 1:
            raise ConfigError(f"{name} must be a positive integer, got {v!r}")
    if not isinstance(cfg.num_strong, int) or cfg.num_strong < 0:
        raise ConfigError(f"num_strong must be a non-negative integer, got {cfg.num_strong!r}")
    K = cfg.num_receivers
    if len(cfg.erasures) != K:
        raise ConfigError(f"expected {K} erasure probabilities, got {len(cfg.erasures)}")
    for k, d in enumerate(cfg.erasures, 1):
        if not 0.0 <= d <= 1.0:
            raise ConfigError(f"erasure of receiver {k} outside [0, 1]: {d}")
        if d == 1.0:
            raise DegenerateErasure(f"receiver {k} has erasure probability 1")
    for k in range(1, K):
        if cfg.erasures[k] > cfg.erasures[k - 1]:
            raise NonMonotoneErasures(
                f"erasures must be non-increasing; delta_{k + 1}={cfg.erasures[k]} "
                f"> delta_{k}={cfg.erasures[k - 1]}"
            )
    if cfg.num_files < K:
        raise TooFewFiles(f"need num_files >= {K} receivers, got {cfg.num_files}")
    return cfg


def config_from_dict(data: dict) -> SystemConfig:
    """Build a validated config from its JSON form.

    Accepts either an explicit ``erasures`` array or the homogeneous shorthand
    ``delta_weak``/``delta_strong`` (scalars).
    """
    try:
        ints = {k: data[k] for k in ("num_weak", "num_strong", "num_files", "packet_bits")}
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc.args[0]!r}") from None
    if "erasures" in data:
        return validate_config(SystemConfig(erasures=tuple(data["erasures"]), **ints))
    if "delta_weak" in data and "delta_strong" in data:
        return HomogeneousConfig(
            delta_weak=float(data["delta_weak"]), delta_strong=float(data["delta_strong"]), **ints
        ).expand()
    raise ConfigError("config needs 'erasures' or both 'delta_weak' and 'delta_strong'")


def load_config(path: str | Path) -> SystemConfig:
    return config_from_dict(json.loads(Path(path).read_text()))


def dump_config(cfg: SystemConfig) -> str:
    return json.dumps(cfg.to_dict(), sort_keys=True)
