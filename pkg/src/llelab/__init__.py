"""llelab: numerical laboratory for periodic waves of the
Lugiato-Lefever equation.

Covers spectral grid primitives, steady-wave construction and
continuation, Floquet-Bloch stability, exponential time integration,
phase-modulation analysis with coordinate-change norm equivalences,
damping-energy inequalities, heat-flow asymptotics of the modulation
phase, and the experiment harness that drives the verification
scenarios end to end.
"""

__version__ = "0.1.0"

from .grid import Grid, derivative, lp_norm, sobolev_norm  # noqa: E402,F401
from .waves import (  # noqa: E402,F401
    LleParams,
    PeriodicWave,
    constant_states,
    continue_in_k,
    solve_steady,
    turing_guess,
)
from .bloch import (  # noqa: E402,F401
    BlochSpectrum,
    LinearizedOperator,
    assess_stability,
    high_freq_rate,
    whitham_diffusion,
)
from .evolve import Trajectory, evolve, make_perturbation, step  # noqa: E402,F401
from .modulation import (  # noqa: E402,F401
    ModulatedPair,
    PhaseField,
    check_equivalence_hk,
    check_equivalence_lp,
    compose_shift,
    extract_phase,
    invert_coordinate,
    modulated_pair,
)
from .energy import (  # noqa: E402,F401
    EnergyLedger,
    build_energy_ledger,
    damping_report,
    energy,
    m_matrix,
    residual_decomposition,
)
from .whitham import (  # noqa: E402,F401
    DecayFit,
    WhithamRun,
    compare_asymptotics,
    fit_decay,
    localized_vs_nonlocalized,
    solve_heat,
)
