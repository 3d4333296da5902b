"""Pseudo-spectral Novikov solver with a Littlewood-Paley / Besov toolkit."""

from .dynamics import (
    BlowUpError,
    SolverConfig,
    Trajectory,
    evolve,
    h1_energy,
    remainder_r1,
    remainder_r2,
    remainder_r3,
    rhs,
    rk4_step,
)
from .littlewood_paley import (
    BesovIndex,
    DyadicPartition,
    besov_norm,
    block_profile,
    build_partition,
    dyadic_block,
    low_cutoff,
)
from .sequences import SequenceParams, bump, drift_term, epsilon_s, f_seq, g_seq, initial_pair
from .spectral import (
    Field,
    GridSpec,
    Multiplier,
    apply_multiplier,
    dealias,
    derivative,
    helmholtz_inverse,
    lp_norm,
    make_grid,
    to_physical,
    to_spectral,
)

__version__ = "0.1.0"
