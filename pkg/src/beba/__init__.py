"""Deterministic simulation and analysis toolkit for entrenchment-driven
opinion dynamics (BEBA) with DeGroot and biased-assimilation baselines.
"""

__version__ = "0.1.0"

from .graph import (
    Graph,
    GraphError,
    EdgeListError,
    DisconnectedGraphError,
    GenerationError,
    generate_er,
    generate_ws,
    generate_ba,
    generate,
    karate,
    load_edge_list,
    write_edge_list,
    add_edge,
    remove_edge,
)
from .models import (
    FixedEnvironment,
    BalancedEnvironmentError,
    degroot_step,
    bof_step,
    beba_weight,
    beba_step,
    beba_update,
    fixed_env_step,
    fixed_env_update,
    fixed_env_fixed_points,
)
from .dynamics import (
    CONSENSUS,
    POLARIZED,
    PERSISTENT_DISAGREEMENT,
    NOT_CONVERGED,
    RunConfig,
    Outcome,
    Trajectory,
    classify,
    opinion_variance,
    run,
)
from .analysis import (
    BaselineMismatchError,
    BetaPResult,
    CampaignResult,
    InterventionReport,
    StarTable,
    ThresholdPair,
    beta_sweep,
    campaign,
    edge_intervention,
    entrenchment_bounds,
    estimate_beta_p,
    predict_single_agent_limit,
    sample_opinion_batch,
    sample_opinions,
    star_comparison,
)

__all__ = [name for name in dir() if not name.startswith("_")]
