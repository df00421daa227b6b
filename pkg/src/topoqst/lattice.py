"""Rice-Mele / SSH chain Hamiltonian and analytic edge-state quantities.

Sites are 0-based in code. Site ``0`` is the sender (site 1 in 1-based numbering), site
``2N - 1`` the receiver. Even 0-based sites form sublattice A (+delta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

if TYPE_CHECKING:
    from .disorder import DisorderRealization


class GapClosedError(ValueError):
    """Raised when t2/t1 >= 1, where edge-state formulas are singular."""


@dataclass(frozen=True)
class ChainSpec:
    n_dimers: int
    t1: float = 1.0
    t2: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if int(self.n_dimers) != self.n_dimers or self.n_dimers < 1:
            raise ValueError(f"n_dimers must be a positive integer, got {self.n_dimers!r}")
        if not self.t1 > 0:
            raise ValueError(f"t1 must be positive, got {self.t1!r}")
        if self.t2 < 0:
            raise ValueError(f"t2 must be non-negative, got {self.t2!r}")

    @property
    def n_sites(self) -> int:
        return 2 * self.n_dimers

    @property
    def ratio(self) -> float:
        return self.t2 / self.t1


@dataclass(frozen=True)
class EdgeState:
    side: Literal["L", "R"]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        self.amplitudes.setflags(write=False)


def _check_topological(spec: ChainSpec) -> float:
    r = spec.ratio
    if r >= 1.0:
        raise GapClosedError(f"t2/t1 = {r} >= 1: edge states are not localized")
    return r


def sublattice_parity(n_sites: int) -> np.ndarray:
    """Diagonal of the chiral operator, (+1, -1, +1, ...)."""
    return np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0)


def hopping_pattern(n_dimers: int, t1: float, t2: float) -> np.ndarray:
    """Super-diagonal of H: t2 on intra-dimer bonds, t1 between dimers."""
    off = np.full(2 * n_dimers - 1, float(t1))
    off[0::2] = t2
    return off


def build_hamiltonian(
    spec: ChainSpec, perturbation: DisorderRealization | None = None
) -> np.ndarray:
    """Dense 2N x 2N Rice-Mele matrix, optionally with a static dH added.

    >>> build_hamiltonian(ChainSpec(1, 1.0, 0.3, 0.1)).tolist()
    [[0.1, 0.3], [0.3, -0.1]]
    """
    n = spec.n_sites
    h = np.diag(spec.delta * sublattice_parity(n))
    off = hopping_pattern(spec.n_dimers, spec.t1, spec.t2)
    idx = np.arange(n - 1)
    h[idx, idx + 1] = off
    h[idx + 1, idx] = off
    if perturbation is not None:
        dh = perturbation.matrix()
        if dh.shape != h.shape:
            raise ValueError(
                f"perturbation has shape {dh.shape}, chain needs {h.shape}"
            )
        h = h + dh
    return h


def _normalization(r: float, n_dimers: int) -> float:
    # 1 / sqrt(sum_{n<N} r^{2n}); the geometric sum avoids 0/0 at r = 0
    if r == 0.0:
        return 1.0
    return math.sqrt((r * r - 1.0) / (r ** (2 * n_dimers) - 1.0))


def edge_state(side: Literal["L", "R"], spec: ChainSpec) -> EdgeState:
    """Analytic semi-infinite-chain edge mode, normalized on the finite chain."""
    r = _check_topological(spec)
    nd = spec.n_dimers
    norm = _normalization(r, nd)
    amps = np.zeros(spec.n_sites)
    # (-r)**0 == 1 also for r == 0
    powers = np.array([(-r) ** k for k in range(nd)])
    if side == "L":
        amps[0::2] = norm * powers
    elif side == "R":
        amps[1::2] = norm * powers[::-1]
    else:
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    return EdgeState(side, amps)


def coupling_kappa(spec: ChainSpec) -> float:
    """Hybridization coupling of the two edge states (always >= 0)."""
    r = _check_topological(spec)
    return float(kappa_array(np.asarray(r), spec.n_dimers, spec.t1))


def kappa_array(r: np.ndarray, n_dimers: int, t1: float | np.ndarray = 1.0) -> np.ndarray:
    """Vectorized coupling for an array of ratios 0 <= r < 1."""
    r = np.asarray(r, dtype=float)
    if np.any(r >= 1.0):
        raise GapClosedError("t2/t1 >= 1 encountered while evaluating kappa")
    if np.any(r < 0.0):
        raise ValueError("t2/t1 must be non-negative")
    r2n = r ** (2 * n_dimers)
    return t1 * r**n_dimers * (r * r - 1.0) / (r2n - 1.0)


def midgap_splitting(h: np.ndarray) -> float:
    """E+ - E- of the two eigenvalues closest to zero (oracle for 2 kappa)."""
    evals = np.linalg.eigvalsh(h)
    closest = np.sort(evals[np.argsort(np.abs(evals))[:2]])
    return float(closest[1] - closest[0])


def localization_length(spec: ChainSpec) -> float:
    """Edge-state localization length in lattice periods; 0 at t2 = 0."""
    if spec.t2 == 0.0:
        return 0.0
    _check_topological(spec)
    return 1.0 / (2.0 * math.log(spec.t1 / spec.t2))


def rabi_transfer_time(kappa: float) -> float:
    """Static-chain transfer time pi / (2 kappa)."""
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    return math.pi / (2.0 * kappa)


def edge_residual(spec: ChainSpec) -> float:
    """Norm of (H - delta) |L>, the finite-chain boundary leakage of the L mode."""
    h = build_hamiltonian(spec)
    left = edge_state("L", spec).amplitudes
    return float(np.linalg.norm(h @ left - spec.delta * left))
