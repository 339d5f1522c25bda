"""UAV base-station placement: channel models, IAB topology, RL training."""

from .channel import (
    Position,
    RadioParams,
    atg_path_loss_db,
    elevation_angle,
    fspl_db,
    los_probability,
    shannon_rate_bps,
    snr_linear,
)
from .environment import (
    Action,
    EnvState,
    GridSpec,
    RewardWeights,
    StepOutcome,
    World,
    apply_action,
    inject_failure,
    reset,
    reward,
    step,
)
from .topology import (
    Association,
    BackhaulChain,
    GroundStation,
    NetworkSnapshot,
    Uav,
    UserTerminal,
    associate_user,
    coverage_ratio,
    effective_rate,
    evaluate_network,
    form_backhaul,
)
from .agent import (
    D3qnLearner,
    DuelingNet,
    EpsilonSchedule,
    QTable,
    ReplayBuffer,
    TabularLearner,
    TrainConfig,
    Transition,
    decay,
    double_q_target,
    q_update,
    select_action,
    sync_target,
    train_step,
)
from .scenarios import (
    ExperimentConfig,
    FailureSpec,
    RunRecord,
    baseline_centroid,
    brute_force_placement,
    config_hash,
    run_coverage_sweep,
    run_resilience,
    run_training,
    sample_users,
)

__version__ = "0.1.0"
