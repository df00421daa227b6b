"""Topological quantum state transfer on SSH / Rice-Mele chains.

Adiabatic Rabi and Landau-Zener transfer protocols, full and two-level
dynamics, disorder Monte Carlo and parameter sweeps.
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    ChainSpec,
    EdgeState,
    GapClosedError,
    build_hamiltonian,
    coupling_kappa,
    edge_state,
    localization_length,
    midgap_splitting,
    rabi_transfer_time,
)
from .schedule import (  # noqa: E402
    LZSchedule,
    RabiSchedule,
    StaticSchedule,
    area_integral,
    lz_threshold_time,
    solve_rabi_area_time,
)
from .dynamics import (  # noqa: E402
    StepControl,
    Trajectory,
    average_fidelity,
    lz_analytic_probability,
    propagate_full,
    propagate_two_level,
    transfer_probability,
)
from .disorder import DisorderRealization, sample_diagonal, sample_offdiagonal  # noqa: E402
from .ensemble import compare_protocols, run_ensemble, scaling_study, sweep2d  # noqa: E402
