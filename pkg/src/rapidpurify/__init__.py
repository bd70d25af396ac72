"""Simulation and analysis toolkit for rapid-purification feedback protocols
under optical homodyne detection of a single qubit.

Layout:

* ``bloch``      -- qubit state, stochastic Bloch fields, entropy functionals
* ``protocols``  -- rapid / fixed-phase / aligned-axis feedback rules
* ``engine``     -- reproducible Euler-Maruyama ensemble integrator
* ``closedform`` -- every closed-form solution and the entropy quadrature
* ``ensembles``  -- ensemble statistics and the three speed-up curves
* ``cli``        -- command-line front end writing CSV artifacts
"""

from .bloch import (
    BlochState,
    BlochVelocity,
    ModelParams,
    diffusion,
    drift,
    entropy_increment,
    linear_entropy,
    record_increment,
)
from .closedform import (
    L_feedback,
    conditional_state,
    conditional_state_two_noise,
    evolution_operator,
    mean_linear_entropy_nofeedback,
    r_density,
    r_variance,
    time_to_L_feedback,
    wr_mean_time,
    z_deterministic,
)
from .engine import (
    FirstPassage,
    IntegrationFault,
    SimConfig,
    Trajectory,
    euler_maruyama_step,
    first_passage_time,
    simulate_trajectory,
    trajectory_rng,
    wiener_increment,
)
from .ensembles import (
    EnsembleStats,
    PassageStats,
    SpeedupCurve,
    default_l_grid,
    ensemble_mean_entropy,
    mean_first_passage,
    speedup_fig1,
    speedup_fig2,
    speedup_fig3,
)
from .protocols import (
    AlignedReduced,
    FixedPhase,
    RapidPhase,
    parse_protocol,
    theta_fixed,
    theta_rapid,
    wr_reduced_fields,
)

__version__ = "0.1.0"
