"""Disorder Monte Carlo, paired protocol comparison, 2-D sweeps and size scaling.

Work items (realizations, grid cells) are independent. They are farmed out
to a thread pool (the propagation kernel releases the GIL) and results are
stored by index, so output never depends on the number of workers.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .disorder import KINDS, SUBSTREAM_SCHEME, sample
from .dynamics import StepControl, propagate_full, propagate_two_level, transfer_probability
from .schedule import LZSchedule, ProtocolSchedule, RabiSchedule


class EnsembleError(RuntimeError):
    """A single realization or grid cell failed; ``where`` identifies it."""

    def __init__(self, where: str, cause: BaseException):
        super().__init__(f"{where} failed: {cause}")
        self.where = where


def default_threads() -> int:
    return os.cpu_count() or 1


def _indexed_map(fn: Callable[[int], float], count: int, threads: int | None, label: str) -> np.ndarray:
    out = np.empty(count)

    def run(i: int) -> None:
        try:
            out[i] = fn(i)
        except Exception as exc:
            raise EnsembleError(f"{label} {i}", exc) from exc

    workers = max(1, threads or default_threads())
    if workers == 1 or count == 1:
        for i in range(count):
            run(i)
        return out
    # a first call on the main thread compiles the kernels once
    run(0)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for fut in [pool.submit(run, i) for i in range(1, count)]:
            fut.result()
    return out


@dataclass(frozen=True)
class EnsembleResult:
    samples: np.ndarray
    bin_edges: np.ndarray
    density: np.ndarray
    summary: dict[str, float]
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def realizations(self) -> int:
        return int(self.samples.size)

    def fraction_above(self, threshold: float) -> float:
        return float(np.mean(self.samples > threshold))

    def write(self, out_dir: str | Path, stem: str = "ensemble", formats: Sequence[str] = ("csv", "json")) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            p = out_dir / f"{stem}_samples.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["realization", "p2N"])
                w.writerows([i, repr(float(v))] for i, v in enumerate(self.samples))
            written.append(p)
            p = out_dir / f"{stem}_histogram.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["bin_left", "bin_right", "density"])
                for lo, hi, d in zip(self.bin_edges[:-1], self.bin_edges[1:], self.density):
                    w.writerow([repr(float(lo)), repr(float(hi)), repr(float(d))])
            written.append(p)
        if "json" in formats:
            p = out_dir / f"{stem}_summary.json"
            p.write_text(json.dumps({"summary": self.summary, "metadata": self.metadata}, indent=2, sort_keys=True))
            written.append(p)
        return written


def summarize(samples: np.ndarray, bins: int = 100) -> tuple[np.ndarray, np.ndarray, dict[str, float]]:
    """Density histogram on [0, 1] plus summary statistics."""
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    density, edges = np.histogram(samples, bins=bins, range=(0.0, 1.0), density=True)
    m = samples.size
    summary = {
        "mean": float(np.mean(samples)),
        "std_error": float(np.std(samples, ddof=1) / np.sqrt(m)) if m > 1 else 0.0,
        "median": float(np.median(samples)),
        "fraction_above_0.9": float(np.mean(samples > 0.9)),
        "fraction_above_0.95": float(np.mean(samples > 0.95)),
        "min": float(np.min(samples)),
        "max": float(np.max(samples)),
    }
    return edges, density, summary


def _realization_probability(
    schedule: ProtocolSchedule, n_dimers: int, kind: str, strength: float,
    seed: int, index: int, step_control: StepControl | None,
) -> float:
    dh = sample(kind, strength, n_dimers, seed, index)
    p = transfer_probability(propagate_full(n_dimers, schedule, dh, step_control=step_control))
    # round-off can push p a few ulps outside [0, 1]
    return min(max(p, 0.0), 1.0)


def run_ensemble(
    protocol: ProtocolSchedule,
    n_dimers: int,
    disorder_kind: str,
    strength: float,
    realizations: int = 1000,
    seed: int = 0,
    bins: int = 100,
    threads: int | None = None,
    step_control: StepControl | None = None,
    index_offset: int = 0,
) -> EnsembleResult:
    """Receiver probability over ``realizations`` frozen disorder draws.

    Realization k uses the substream ``(seed, index_offset + k)``.
    """
    if realizations < 1:
        raise ValueError(f"realizations must be >= 1, got {realizations}")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if disorder_kind not in KINDS:
        raise ValueError(f"unknown disorder kind {disorder_kind!r}")

    samples = _indexed_map(
        lambda k: _realization_probability(
            protocol, n_dimers, disorder_kind, strength, seed, index_offset + k, step_control
        ),
        realizations,
        threads,
        "realization",
    )
    edges, density, summary = summarize(samples, bins)
    metadata = {
        "protocol": protocol.to_dict(),
        "n_dimers": n_dimers,
        "disorder": {"kind": disorder_kind, "strength": strength},
        "seed": seed,
        "index_offset": index_offset,
        "realizations": realizations,
        "bins": bins,
        "rng_scheme": SUBSTREAM_SCHEME,
        "step_budget": (step_control or StepControl()).budget,
        "version": __version__,
    }
    return EnsembleResult(samples, edges, density, summary, metadata)


@dataclass(frozen=True)
class ComparisonResult:
    rabi: EnsembleResult
    lz: EnsembleResult
    paired: bool

    @property
    def differences(self) -> np.ndarray:
        """Per-realization p_LZ - p_Rabi (meaningful in paired mode)."""
        return self.lz.samples - self.rabi.samples


def compare_protocols(
    rabi: ProtocolSchedule,
    lz: ProtocolSchedule,
    n_dimers: int,
    disorder_kind: str,
    strength: float,
    realizations: int = 1000,
    seed: int = 0,
    bins: int = 100,
    threads: int | None = None,
    step_control: StepControl | None = None,
    paired: bool = True,
) -> ComparisonResult:
    """Run both protocols on the same chain.

    In paired mode realization k applies the identical dH to both
    protocols. Otherwise the LZ ensemble draws from disjoint substreams.
    """
    common = dict(
        n_dimers=n_dimers, disorder_kind=disorder_kind, strength=strength,
        realizations=realizations, seed=seed, bins=bins, threads=threads,
        step_control=step_control,
    )
    res_rabi = run_ensemble(rabi, **common)
    res_lz = run_ensemble(lz, index_offset=0 if paired else realizations, **common)
    return ComparisonResult(res_rabi, res_lz, paired)


SWEEP_PARAMS = ("T", "delta0", "epsilon", "tau", "tau_z")
_FAMILY_PARAMS = {"rabi": {"T", "epsilon"}, "lz": set(SWEEP_PARAMS)}


def make_schedule(family: str, params: dict[str, float]) -> ProtocolSchedule:
    """Build a schedule from sweep parameters; for LZ, ``T`` implies tau_z = T - 2 tau."""
    if family == "rabi":
        return RabiSchedule(epsilon=params["epsilon"], T=params["T"])
    if family == "lz":
        p = dict(params)
        if "T" in p:
            if "tau_z" in p:
                raise ValueError("LZ schedule over-determined: give T or tau_z, not both")
            p["tau_z"] = p.pop("T") - 2.0 * p["tau"]
            if p["tau_z"] <= 0:
                raise ValueError(f"T = {params['T']} leaves no sweep stage (tau_z = {p['tau_z']})")
        return LZSchedule(epsilon=p["epsilon"], delta0=p["delta0"], tau=p["tau"], tau_z=p["tau_z"])
    raise ValueError(f"unknown protocol family {family!r}")


@dataclass(frozen=True)
class SweepResult:
    family: str
    axis1: tuple[str, np.ndarray]
    axis2: tuple[str, np.ndarray]
    values: np.ndarray
    fixed: dict[str, float]
    metadata: dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: str | Path, stem: str = "sweep", formats: Sequence[str] = ("csv", "json")) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        if "csv" in formats:
            p = out_dir / f"{stem}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                (n1, g1), (n2, g2) = self.axis1, self.axis2
                w.writerow(["axis1", n1, *map(repr, map(float, g1))])
                w.writerow(["axis2", n2, *map(repr, map(float, g2))])
                for row in self.values:
                    w.writerow([repr(float(v)) for v in row])
            written.append(p)
        p = out_dir / f"{stem}.json"
        p.write_text(json.dumps(self.metadata, indent=2, sort_keys=True))
        written.append(p)
        return written


def sweep2d(
    family: str,
    axis1: tuple[str, Sequence[float]],
    axis2: tuple[str, Sequence[float]],
    fixed: dict[str, float],
    n_dimers: int = 10,
    threads: int | None = None,
    step_control: StepControl | None = None,
    model: str = "full",
) -> SweepResult:
    """Disorder-free receiver probability on a 2-D parameter grid.

    ``values[i, j]`` belongs to ``axis1`` value i and ``axis2`` value j.
    ``model="two-level"`` evaluates the reduced model instead.
    """
    if family not in _FAMILY_PARAMS:
        raise ValueError(f"unknown protocol family {family!r}")
    if model not in ("full", "two-level"):
        raise ValueError(f"model must be 'full' or 'two-level', got {model!r}")
    names = [axis1[0], axis2[0]]
    for name in [*names, *fixed]:
        if name not in _FAMILY_PARAMS[family]:
            raise ValueError(f"unknown parameter {name!r} for {family} sweeps")
    if names[0] == names[1]:
        raise ValueError("sweep axes must name different parameters")
    grids = []
    for name, grid in (axis1, axis2):
        g = np.asarray(grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
            raise ValueError(f"grid for {name!r} must be non-empty and strictly increasing")
        grids.append(g)
    g1, g2 = grids
    fixed = {k: float(v) for k, v in fixed.items() if k not in names}

    def cell(k: int) -> float:
        i, j = divmod(k, g2.size)
        schedule = make_schedule(family, {**fixed, names[0]: g1[i], names[1]: g2[j]})
        if model == "two-level":
            traj = propagate_two_level(schedule, n_dimers, step_control=step_control)
        else:
            traj = propagate_full(n_dimers, schedule, step_control=step_control)
        return min(max(transfer_probability(traj), 0.0), 1.0)

    values = _indexed_map(cell, g1.size * g2.size, threads, "cell").reshape(g1.size, g2.size)
    metadata = {
        "family": family,
        "model": model,
        "n_dimers": n_dimers,
        "axis1": {"name": names[0], "grid": g1.tolist()},
        "axis2": {"name": names[1], "grid": g2.tolist()},
        "fixed": fixed,
        "step_budget": (step_control or StepControl()).budget,
        "version": __version__,
    }
    return SweepResult(family, (names[0], g1), (names[1], g2), values, fixed, metadata)


@dataclass(frozen=True)
class ScalingRow:
    n_dimers: int
    n_sites: int
    p2N: float
    schedule: LZSchedule


def scaling_schedule(
    n_dimers: int, rho: float, T0: float = 240.0, tau0: float = 60.0, n0: int = 10,
    eps_scale: float = 1.0, delta_scale: float = 2.0,
) -> LZSchedule:
    """LZ parameters at chain size N: eps = 1/N, delta0 = 2/N, times scaled by (N/10)^rho."""
    factor = (n_dimers / n0) ** rho
    tau = tau0 * factor
    tau_z = T0 * factor - 2.0 * tau
    if tau_z <= 0:
        raise ValueError(f"derived tau_z = {tau_z} <= 0 at N = {n_dimers}")
    return LZSchedule(epsilon=eps_scale / n_dimers, delta0=delta_scale / n_dimers, tau=tau, tau_z=tau_z)


def scaling_study(
    rho: float,
    sizes: Sequence[int],
    T0: float = 240.0,
    tau0: float = 60.0,
    n0: int = 10,
    threads: int | None = None,
    step_control: StepControl | None = None,
) -> list[ScalingRow]:
    """Disorder-free LZ transfer probability versus chain size."""
    if rho < 1:
        raise ValueError(f"rho must be >= 1, got {rho}")
    if any(n < 2 for n in sizes):
        raise ValueError("chain sizes must be >= 2 dimers")
    schedules = [scaling_schedule(n, rho, T0, tau0, n0) for n in sizes]
    probs = _indexed_map(
        lambda k: transfer_probability(propagate_full(sizes[k], schedules[k], step_control=step_control)),
        len(sizes),
        threads,
        "size",
    )
    return [ScalingRow(n, 2 * n, float(p), s) for n, p, s in zip(sizes, probs, schedules)]
