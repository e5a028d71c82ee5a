"""Mixed configuration spaces and their [0, 1] encodings."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class Real:
    name: str
    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")
        if self.log and self.lo <= 0:
            raise ValueError(f"{self.name}: log scale needs lo > 0")

    width = 1

    def _t(self, v):
        return math.log(v) if self.log else v

    def encode(self, v) -> list[float]:
        v = float(v)
        if not self.lo <= v <= self.hi:
            raise ValueError(f"{self.name}={v} outside [{self.lo}, {self.hi}]")
        return [(self._t(v) - self._t(self.lo)) / (self._t(self.hi) - self._t(self.lo))]

    def decode(self, u: np.ndarray) -> float:
        u = float(np.clip(u[0], 0.0, 1.0))
        t = self._t(self.lo) + u * (self._t(self.hi) - self._t(self.lo))
        v = math.exp(t) if self.log else t
        return float(min(max(v, self.lo), self.hi))

    def sample(self, rng: np.random.Generator) -> float:
        return self.decode(np.array([rng.random()]))


@dataclass(frozen=True)
class Integer:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: lo must be < hi")

    width = 1

    def encode(self, v) -> list[float]:
        if int(v) != v or not self.lo <= v <= self.hi:
            raise ValueError(f"{self.name}={v} not an integer in [{self.lo}, {self.hi}]")
        return [(int(v) - self.lo) / (self.hi - self.lo)]

    def decode(self, u: np.ndarray) -> int:
        u = float(np.clip(u[0], 0.0, 1.0))
        return int(round(self.lo + u * (self.hi - self.lo)))

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class Categorical:
    name: str
    levels: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(self.levels) < 2:
            raise ValueError(f"{self.name}: need at least two levels")

    @property
    def width(self) -> int:
        return len(self.levels)

    def encode(self, v) -> list[float]:
        if v not in self.levels:
            raise ValueError(f"{self.name}: unknown level {v!r}")
        out = [0.0] * len(self.levels)
        out[self.levels.index(v)] = 1.0
        return out

    def decode(self, u: np.ndarray):
        return self.levels[int(np.argmax(u))]

    def sample(self, rng: np.random.Generator):
        return self.levels[int(rng.integers(len(self.levels)))]


@dataclass(frozen=True)
class Boolean:
    name: str

    width = 1

    def encode(self, v) -> list[float]:
        if v not in (True, False, 0, 1):
            raise ValueError(f"{self.name}: {v!r} is not boolean")
        return [1.0 if v else 0.0]

    def decode(self, u: np.ndarray) -> bool:
        return bool(u[0] > 0.5)

    def sample(self, rng: np.random.Generator) -> bool:
        return bool(rng.integers(2))


Dimension = Real | Integer | Categorical | Boolean


class ConfigurationSpace:
    """Ordered list of dimensions; configurations are name -> value dicts."""

    def __init__(self, dimensions: Sequence[Dimension]):
        if not dimensions:
            raise ValueError("configuration space must be nonempty")
        names = [d.name for d in dimensions]
        if len(set(names)) != len(names):
            raise ValueError("duplicate dimension names")
        self.dimensions = list(dimensions)
        self._slices = []
        start = 0
        for d in self.dimensions:
            self._slices.append(slice(start, start + d.width))
            start += d.width
        self.width = start

    def __len__(self) -> int:
        return len(self.dimensions)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dimensions]

    def _as_dict(self, cfg) -> dict[str, Any]:
        if isinstance(cfg, Mapping):
            missing = set(self.names) - set(cfg)
            if missing:
                raise ValueError(f"configuration missing {sorted(missing)}")
            return dict(cfg)
        cfg = list(cfg)
        if len(cfg) != len(self.dimensions):
            raise ValueError("configuration length does not match the space")
        return dict(zip(self.names, cfg))

    def encode(self, cfg) -> np.ndarray:
        cfg = self._as_dict(cfg)
        out: list[float] = []
        for d in self.dimensions:
            out.extend(d.encode(cfg[d.name]))
        return np.asarray(out)

    def decode(self, u: np.ndarray) -> dict[str, Any]:
        u = np.asarray(u, dtype=float)
        return {d.name: d.decode(u[s]) for d, s in zip(self.dimensions, self._slices)}

    def sample(self, rng: np.random.Generator) -> dict[str, Any]:
        return {d.name: d.sample(rng) for d in self.dimensions}

    def contains(self, cfg) -> bool:
        try:
            self.encode(cfg)
        except ValueError:
            return False
        return True


def encode(space: ConfigurationSpace, cfg) -> np.ndarray:
    return space.encode(cfg)
