"""Partner model: SIS dynamics with monogamous partnerships on the complete graph.

Layers, cross-validated against each other:

* :mod:`.analytic`  — closed-form singles equilibrium, absorption chain,
  reproduction number, critical transmission rate, endemic level;
* :mod:`.mfe`       — the four-variable mean-field ODE system;
* :mod:`.macro`     — exact simulation of the aggregate-count Markov chain;
* :mod:`.micro`     — site-level simulation and coupled pairs (small N);
* :mod:`.branching` — upper/lower bounding multi-type branching processes.

The event loops run on a compiled backend when available (see
:mod:`.kernels`); ``partnermodel.BACKEND`` names the active one.
"""

from .analytic import (
    AbsorptionSummary,
    CriticalValue,
    DeltaBreakdown,
    DerivedConstants,
    absorption_closed_form,
    absorption_oracle,
    delta,
    derived_constants,
    i_star,
    lambda_c,
    r0,
    y_star,
)
from .branching import (
    BranchingParams,
    BranchingState,
    lbp_rates,
    mean_matrix,
    rate_matrix,
    simulate_branching,
    spectral_abscissa,
    subcritical_delta,
    supercritical_delta,
    ubp_rates,
)
from .kernels import BACKEND
from .macro import MacroState, macro_rates, run_replicas, simulate_macro
from .mfe import (
    LinearizedSystem,
    MfeState,
    integrate,
    linearize,
    mfe_equilibrium,
    mfe_rhs,
    mfe_rhs_ip,
    next_gen_r0,
)
from .micro import MicroState, coupled_pair, simulate_micro
from .params import DomainError, IntegrationError, Params
from .rng import Xoshiro256, replica_seed, splitmix64

__version__ = "0.1.0"
