"""Laboratory for the overlapping cycles shuffle.

Each step of the chain moves either the m-th card or the n-th (bottom)
card to the top of an n-card deck, with a fair coin deciding which.
The package provides the combinatorial machinery attached to (n, m)
(position weights, lattice norms, spread triples, orderings), the
shuffle dynamics itself (deck evolution, tagged-card traces, collision
and match detection, a three-phase coin-pool coupling), exact mixing
analysis at small scale, and Monte-Carlo estimators for the collision
and targeting probabilities at desk scale.
"""

from .params import (
    ShuffleParams,
    NormDecomposition,
    GoldenGapReport,
    MonteOrdering,
    position_weight,
    m_distance,
    norm,
    l_max,
    gamma,
    enumerate_N_ell,
    spread_triple,
    select_time_T1,
    select_time_T2,
    sigma_reorder,
    monte_ordering,
    golden_gap_report,
    golden_lmax_check,
    PHI,
)
from .streams import HEADS, TAILS, CoinStream, coin_at
from .engine import (
    DeckState,
    CardTrace,
    CollisionEvent,
    MatchResult,
    step,
    run,
    run_inverse,
    track_card,
    verify_movement_identity,
    verify_movement_bound,
    detect_collisions,
    first_match_after,
)
from .coupling import route_coins, coupled_run, replay_worked_example
from .exact import (
    DistVector,
    EntropyReport,
    single_card_kernel,
    tv_profile,
    relaxation_estimate,
    full_deck_dist,
    entropy_report,
    mixing_time_exact_small,
)
from .estimators import (
    Estimate,
    ScalingFit,
    ConstantProfile,
    wilson_ci,
    fit_scaling,
    estimate_l1_collision,
    estimate_match_prob,
    estimate_sqrtn_collide,
    estimate_full_collide,
    estimate_targeting,
    spread_experiment,
    occupancy_alone_bottom,
)
from .appendix import appendix_quasi_uniform_check, appendix_rw_bounds_check

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
