"""Frozen random perturbations dH for off-diagonal and on-diagonal disorder.

Each realization draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=(index,))``. A realization therefore depends
only on ``(seed, index)`` and never on which worker computes it or when.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np

DisorderKind = Literal["off-diagonal", "on-diagonal"]
KINDS: tuple[str, ...] = ("off-diagonal", "on-diagonal")

SUBSTREAM_SCHEME = "numpy.SeedSequence(entropy=seed, spawn_key=(index,)) -> PCG64"


def substream(seed: int, index: int) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _open_uniform(rng: np.random.Generator, strength: float, size: int) -> np.ndarray:
    # random() is on [0, 1); redraw the exact 0 so the range is open at both ends
    u = rng.random(size)
    while np.any(u == 0.0):
        zero = u == 0.0
        u[zero] = rng.random(int(zero.sum()))
    return strength * (2.0 * u - 1.0)


@dataclass(frozen=True)
class DisorderRealization:
    kind: str
    strength: float
    n_dimers: int
    values: np.ndarray
    seed: int
    index: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown disorder kind {self.kind!r}")
        expected = self.n_dimers - 1 if self.kind == "off-diagonal" else 2 * self.n_dimers
        if self.values.shape != (expected,):
            raise ValueError(f"{self.kind} disorder needs {expected} values, got {self.values.shape}")
        self.values.setflags(write=False)

    @property
    def n_sites(self) -> int:
        return 2 * self.n_dimers

    def matrix(self) -> np.ndarray:
        n = self.n_sites
        dh = np.zeros((n, n))
        if self.kind == "on-diagonal":
            np.fill_diagonal(dh, self.values)
        else:
            # inter-dimer bonds join 0-based sites (1, 2), (3, 4), ...
            rows = np.arange(1, n - 1, 2)
            dh[rows, rows + 1] = self.values
            dh[rows + 1, rows] = self.values
        return dh

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "strength": self.strength,
            "n_dimers": self.n_dimers,
            "seed": self.seed,
            "index": self.index,
            "values": self.values.tolist(),
            "scheme": SUBSTREAM_SCHEME,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DisorderRealization:
        return cls(
            kind=data["kind"],
            strength=float(data["strength"]),
            n_dimers=int(data["n_dimers"]),
            values=np.asarray(data["values"], dtype=float),
            seed=int(data["seed"]),
            index=int(data["index"]),
        )

    @classmethod
    def from_json(cls, text: str) -> DisorderRealization:
        return cls.from_dict(json.loads(text))


def sample_offdiagonal(strength: float, n_dimers: int, seed: int, index: int) -> DisorderRealization:
    """N - 1 inter-dimer hopping shifts, uniform on (-strength, strength)."""
    if strength < 0:
        raise ValueError(f"disorder strength must be >= 0, got {strength!r}")
    values = _open_uniform(substream(seed, index), strength, n_dimers - 1)
    return DisorderRealization("off-diagonal", strength, n_dimers, values, seed, index)


def sample_diagonal(strength: float, n_dimers: int, seed: int, index: int) -> DisorderRealization:
    """2N site-energy shifts, uniform on (-strength, strength)."""
    if strength < 0:
        raise ValueError(f"disorder strength must be >= 0, got {strength!r}")
    values = _open_uniform(substream(seed, index), strength, 2 * n_dimers)
    return DisorderRealization("on-diagonal", strength, n_dimers, values, seed, index)


def sample(kind: str, strength: float, n_dimers: int, seed: int, index: int) -> DisorderRealization:
    if kind == "off-diagonal":
        return sample_offdiagonal(strength, n_dimers, seed, index)
    if kind == "on-diagonal":
        return sample_diagonal(strength, n_dimers, seed, index)
    raise ValueError(f"unknown disorder kind {kind!r}; expected one of {KINDS}")
