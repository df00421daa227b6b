"""Command-line front end.

Usage: ``topoqst <experiment> [--config FILE] [--set section.key=value ...]``.
Every run writes data files plus ``manifest.json``; passing that manifest
back as ``--config`` replays the run.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ConfigError, load_file, parse_override, protocol_of, resolve, set_path
from .disorder import SUBSTREAM_SCHEME
from .dynamics import (
    StepControl,
    average_fidelity,
    lz_analytic_probability,
    propagate_full,
    propagate_two_level,
    transfer_probability,
)
from .ensemble import EnsembleError, compare_protocols, run_ensemble, scaling_study, sweep2d
from .lattice import ChainSpec, build_hamiltonian, coupling_kappa, midgap_splitting
from .schedule import LZSchedule, RabiSchedule, area_integral, decoupling_ratio, lz_threshold_time, solve_rabi_area_time

log = logging.getLogger("topoqst")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _write_json(path: Path, payload: Any) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _control(cfg: dict[str, Any]) -> StepControl:
    num = cfg["numerics"]
    return StepControl(num["step_budget"], num["n_samples"])


def _threads(cfg: dict[str, Any]) -> int | None:
    return cfg["numerics"]["threads"] or None


def _lz_report(schedule, n_dimers: int) -> dict[str, float]:
    if not isinstance(schedule, LZSchedule):
        return {}
    kappa_max = coupling_kappa(ChainSpec(n_dimers, 1.0, 1.0 - schedule.epsilon))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ratio = decoupling_ratio(schedule, n_dimers)
    for w in caught:
        log.warning("%s", w.message)
    return {
        "kappa_max": kappa_max,
        "decoupling_ratio": ratio,
        "lz_threshold_tau_z": lz_threshold_time(kappa_max, schedule.delta0),
        "lz_analytic_p2N": lz_analytic_probability(kappa_max, schedule.delta0, schedule.tau_z),
    }


def _run_simulate(cfg: dict[str, Any], out: Path, two_level: bool) -> list[Path]:
    schedule = protocol_of(cfg)
    n = cfg["chain"]["n_dimers"]
    if two_level:
        traj = propagate_two_level(schedule, n, step_control=_control(cfg))
        stem = "two_level"
    else:
        traj = propagate_full(n, schedule, step_control=_control(cfg), record_sites=cfg["numerics"]["record_sites"])
        stem = "trajectory"
    p = transfer_probability(traj)
    result = {
        "model": traj.model,
        "protocol": schedule.to_dict(),
        "n_dimers": n,
        "p2N": p,
        "average_fidelity": average_fidelity(min(1.0, float(np.sqrt(p)))),
        "norm_drift": traj.norm_drift,
        "n_steps": traj.n_steps,
        **_lz_report(schedule, n),
    }
    print(f"p2N(T) = {p:.6f}")
    written = []
    if "csv" in cfg["output"]["formats"]:
        traj.to_csv(out / f"{stem}.csv")
        written.append(out / f"{stem}.csv")
    written.append(_write_json(out / f"{stem}_result.json", result))
    return written


def _run_ensemble(cfg: dict[str, Any], out: Path) -> list[Path]:
    dis, num = cfg["disorder"], cfg["numerics"]
    res = run_ensemble(
        protocol_of(cfg), cfg["chain"]["n_dimers"], dis["kind"], dis["strength"],
        realizations=dis["realizations"], seed=dis["seed"], bins=num["bins"],
        threads=_threads(cfg), step_control=_control(cfg),
    )
    s = res.summary
    print(f"mean = {s['mean']:.6f}  median = {s['median']:.6f}  P(p > 0.9) = {s['fraction_above_0.9']:.4f}")
    return res.write(out, "ensemble", cfg["output"]["formats"])


def _run_compare(cfg: dict[str, Any], out: Path) -> list[Path]:
    dis, num, cmp_ = cfg["disorder"], cfg["numerics"], cfg["compare"]
    res = compare_protocols(
        protocol_of(cfg, "compare.rabi"), protocol_of(cfg, "compare.lz"), cfg["chain"]["n_dimers"],
        dis["kind"], dis["strength"], realizations=dis["realizations"], seed=dis["seed"],
        bins=num["bins"], threads=_threads(cfg), step_control=_control(cfg), paired=cmp_["paired"],
    )
    formats = cfg["output"]["formats"]
    written = res.rabi.write(out, "rabi", formats) + res.lz.write(out, "lz", formats)
    if "csv" in formats:
        path = out / "compare_pairs.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["realization", "p2N_rabi", "p2N_lz"])
            for k, (a, b) in enumerate(zip(res.rabi.samples, res.lz.samples)):
                w.writerow([k, repr(float(a)), repr(float(b))])
        written.append(path)
    diff = res.differences
    summary = {
        "paired": res.paired,
        "rabi": res.rabi.summary,
        "lz": res.lz.summary,
        "mean_difference_lz_minus_rabi": float(np.mean(diff)),
        "fraction_lz_better": float(np.mean(diff > 0)),
    }
    written.append(_write_json(out / "compare.json", summary))
    for name, r in (("rabi", res.rabi), ("lz", res.lz)):
        print(f"{name:5s} median = {r.summary['median']:.6f}  P(p > 0.9) = {r.summary['fraction_above_0.9']:.4f}")
    return written


def _run_sweep(cfg: dict[str, Any], out: Path) -> list[Path]:
    sw = cfg["sweep"]
    res = sweep2d(
        sw["family"],
        (sw["axis1"]["name"], sw["axis1"]["values"]),
        (sw["axis2"]["name"], sw["axis2"]["values"]),
        sw["fixed"],
        n_dimers=cfg["chain"]["n_dimers"],
        threads=_threads(cfg),
        step_control=_control(cfg),
        model=sw["model"],
    )
    print(f"swept {res.values.size} cells; max p2N = {res.values.max():.6f}")
    return res.write(out, "sweep", cfg["output"]["formats"])


def _run_scaling(cfg: dict[str, Any], out: Path) -> list[Path]:
    sc = cfg["scaling"]
    rows = scaling_study(
        sc["rho"], sc["sizes"], T0=sc["T0"], tau0=sc["tau0"], n0=sc["n0"],
        threads=_threads(cfg), step_control=_control(cfg),
    )
    table = [
        {
            "n_dimers": r.n_dimers, "n_sites": r.n_sites, "p2N": r.p2N,
            "epsilon": r.schedule.epsilon, "delta0": r.schedule.delta0,
            "tau": r.schedule.tau, "tau_z": r.schedule.tau_z, "T": r.schedule.duration,
        }
        for r in rows
    ]
    for row in table:
        print(f"2N = {row['n_sites']:4d}  T = {row['T']:9.3f}  p2N = {row['p2N']:.6f}")
    written = []
    if "csv" in cfg["output"]["formats"]:
        path = out / "scaling.csv"
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(table[0]))
            w.writeheader()
            w.writerows({k: repr(v) if isinstance(v, float) else v for k, v in row.items()} for row in table)
        written.append(path)
    written.append(_write_json(out / "scaling.json", {"rho": sc["rho"], "rows": table}))
    return written


def _run_area_time(cfg: dict[str, Any], out: Path) -> list[Path]:
    at = cfg["area_time"]
    n = cfg["chain"]["n_dimers"]
    T_star = solve_rabi_area_time(at["epsilon"], n, target=at["target"])
    area = area_integral(RabiSchedule(at["epsilon"], T_star), n)
    print(f"T* = {T_star:.6f}")
    info = {"epsilon": at["epsilon"], "n_dimers": n, "target": at["target"], "T_star": T_star, "area": area}
    return [_write_json(out / "area_time.json", info)]


def _run_spectrum(cfg: dict[str, Any], out: Path) -> list[Path]:
    ch = cfg["chain"]
    spec = ChainSpec(ch["n_dimers"], ch["t1"], ch["t2"], ch["delta"])
    h = build_hamiltonian(spec)
    evals = np.linalg.eigvalsh(h)
    splitting = midgap_splitting(h)
    info: dict[str, Any] = {"chain": ch, "midgap_splitting": splitting}
    if spec.ratio < 1:
        kappa = coupling_kappa(spec)
        info["kappa"] = kappa
        info["kappa_over_half_splitting"] = kappa / (splitting / 2) if splitting > 0 else None
    print(f"mid-gap splitting = {splitting:.9g}")
    written = []
    if "csv" in cfg["output"]["formats"]:
        path = out / "spectrum.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "energy"])
            w.writerows([i, repr(float(e))] for i, e in enumerate(evals))
        written.append(path)
    written.append(_write_json(out / "spectrum.json", info))
    return written


_RUNNERS = {
    "simulate": lambda cfg, out: _run_simulate(cfg, out, two_level=False),
    "two-level": lambda cfg, out: _run_simulate(cfg, out, two_level=True),
    "ensemble": _run_ensemble,
    "compare": _run_compare,
    "sweep2d": _run_sweep,
    "scaling": _run_scaling,
    "area-time": _run_area_time,
    "spectrum": _run_spectrum,
}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: dict[str, Any]) -> int:
    """Execute a resolved config; returns the process exit code."""
    out = Path(cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        written = _RUNNERS[cfg["experiment"]](cfg, out)
    except EnsembleError as exc:
        print(f"error: runtime failure in {exc.where}: {exc.__cause__}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = {
        "version": __version__,
        "config": cfg,
        "seed": cfg["disorder"]["seed"],
        "rng_scheme": SUBSTREAM_SCHEME,
        "started_utc": started.isoformat(),
        "wall_clock_s": time.perf_counter() - t0,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "outputs": {p.name: _sha256(p) for p in written},
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoqst", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="TOML config file or an emitted manifest.json")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, help="worker threads (default: all cores)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json", "both"), help="output formats")
        p.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override any config field, e.g. --set protocol.T=90",
        )
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> dict[str, Any]:
    raw: dict[str, Any] = load_file(args.config) if args.config else {}
    raw.pop("experiment", None)
    for item in args.overrides:
        path, value = parse_override(item)
        set_path(raw, path, value)
    if args.seed is not None:
        set_path(raw, ["disorder", "seed"], args.seed)
    if args.threads is not None:
        set_path(raw, ["numerics", "threads"], args.threads)
    if args.out is not None:
        set_path(raw, ["output", "directory"], args.out)
    if args.format is not None:
        set_path(raw, ["output", "formats"], args.format)
    return resolve(raw, args.experiment)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
