"""Experiment harness: training runs, placement oracles, baselines and sweeps.

Every run is fully determined by (config, seed): one numpy Generator seeded
from the config drives user sampling, parameter init, exploration and replay.
Run records serialize to CSV/JSON files whose names embed the config hash.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .agent import (
    D3qnLearner,
    EpsilonSchedule,
    TabularLearner,
    TrainConfig,
    decay,
    save_checkpoint,
)
from .channel import Position, RadioParams
from .environment import (
    EnvState,
    GridSpec,
    RewardWeights,
    World,
    evaluate_state,
    inject_failure,
    reset,
    reward,
    step,
)
from .topology import GroundStation, UserTerminal, coverage_ratio

BRUTE_FORCE_GUARD = 1_000_000

# Constant zero-exploration schedule for greedy evaluation rollouts.
GREEDY_SCHEDULE = EpsilonSchedule(eps_max=0.0, eps_min=0.0, eps_delta=1.0, current=0.0)


class ConfigError(ValueError):
    """A configuration value violates its documented contract."""


@dataclass(frozen=True)
class FailureSpec:
    """When and which UAV fails during a resilience run."""

    step: int = 30
    victim: str = "random"  # random | relay | tail | an integer index as string
    fine_tune: bool = False

    def __post_init__(self) -> None:
        if self.step < 1:
            raise ConfigError("failure step must be >= 1")
        if self.victim not in ("random", "relay", "tail") and not self.victim.isdigit():
            raise ConfigError(f"unknown failure victim rule {self.victim!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    radio: RadioParams = RadioParams()
    grid: GridSpec = GridSpec(nx=10, ny=10, cell_size_m=10.0, altitude_m=100.0)
    n_uavs: int = 3
    n_users: int = 100
    user_mean: tuple[float, float] = (70.0, 70.0)
    user_cov: tuple[tuple[float, float], tuple[float, float]] = ((100.0, 0.0), (0.0, 50.0))
    bs_position: tuple[float, float, float] = (10.0, 0.0, 10.0)
    learner: str = "tabular"
    train: TrainConfig = TrainConfig()
    schedule: EpsilonSchedule = EpsilonSchedule()
    weights: RewardWeights = RewardWeights()
    episodes: int = 100
    iterations: int = 100
    seed: int = 0
    initial_cells: tuple[tuple[int, int], ...] | None = None
    episode_start: str = "fixed"  # or "random": exploring starts each episode
    decay_per: str = "episode"  # or "iteration": decay epsilon every step
    rate_scale: float = 1e-6
    failure: FailureSpec | None = None
    eval_steps: int = 60
    sweep_seeds: int = 10

    def __post_init__(self) -> None:
        if self.learner not in ("tabular", "d3qn"):
            raise ConfigError(f"learner must be 'tabular' or 'd3qn', got {self.learner!r}")
        if self.n_uavs < 1:
            raise ConfigError("n_uavs must be >= 1")
        if self.n_users < 1:
            raise ConfigError("n_users must be >= 1")
        if self.episodes < 0 or self.iterations < 1:
            raise ConfigError("need episodes >= 0 and iterations >= 1")
        if self.rate_scale <= 0.0:
            raise ConfigError("rate_scale must be strictly positive")
        if self.decay_per not in ("episode", "iteration"):
            raise ConfigError("decay_per must be 'episode' or 'iteration'")
        if self.episode_start not in ("fixed", "random"):
            raise ConfigError("episode_start must be 'fixed' or 'random'")
        if self.seed < 0 or self.seed > 2 ** 64 - 1:
            raise ConfigError("seed must fit an unsigned 64-bit value")
        cov = np.asarray(self.user_cov, dtype=float)
        if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
            raise ConfigError("user_cov must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(cov).min() < -1e-9:
            raise ConfigError("user_cov must be positive semi-definite")
        if self.initial_cells is not None:
            if len(self.initial_cells) != self.n_uavs:
                raise ConfigError("initial_cells must list one cell per UAV")
            for c in self.initial_cells:
                if not self.grid.in_bounds((int(c[0]), int(c[1]))):
                    raise ConfigError(f"initial cell {tuple(c)} outside the grid")

    def bs(self) -> GroundStation:
        return GroundStation(Position(*self.bs_position))

    def config_dict(self) -> dict:
        radio = self.radio
        return {
            "radio": {
                "theta_env": radio.theta_env, "xi_env": radio.xi_env,
                "delta_exp": radio.delta_exp, "eta_los_db": radio.eta_los_db,
                "eta_nlos_db": radio.eta_nlos_db, "f_access_hz": radio.f_access_hz,
                "f_a2a_hz": radio.f_a2a_hz, "c_mps": radio.c_mps,
                "tx_power_mw": list(radio.tx_power_mw), "noise_mw": radio.noise_mw,
                "bw_access_hz": radio.bw_access_hz, "bw_bs_hz": radio.bw_bs_hz,
                "snr_threshold": radio.snr_threshold, "comm_range_m": radio.comm_range_m,
                "min_distance_m": radio.min_distance_m,
            },
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny,
                     "cell_size_m": self.grid.cell_size_m,
                     "altitude_m": self.grid.altitude_m},
            "n_uavs": self.n_uavs, "n_users": self.n_users,
            "user_mean": list(self.user_mean),
            "user_cov": [list(row) for row in self.user_cov],
            "bs_position": list(self.bs_position),
            "learner": self.learner,
            "train": {"mu": self.train.mu, "gamma": self.train.gamma,
                      "batch_size": self.train.batch_size,
                      "buffer_capacity": self.train.buffer_capacity,
                      "target_sync_period": self.train.target_sync_period,
                      "grad_clip": self.train.grad_clip},
            "schedule": {"eps_max": self.schedule.eps_max, "eps_min": self.schedule.eps_min,
                         "eps_delta": self.schedule.eps_delta},
            "alpha": self.weights.alpha,
            "episodes": self.episodes, "iterations": self.iterations,
            "initial_cells": [list(c) for c in self.initial_cells]
            if self.initial_cells is not None else None,
            "episode_start": self.episode_start,
            "decay_per": self.decay_per,
            "rate_scale": self.rate_scale,
            "failure": {"step": self.failure.step, "victim": self.failure.victim,
                        "fine_tune": self.failure.fine_tune}
            if self.failure is not None else None,
            "eval_steps": self.eval_steps,
            "sweep_seeds": self.sweep_seeds,
        }


def config_hash(config: ExperimentConfig) -> str:
    """Stable 12-hex-digit digest of everything but the seed."""
    payload = json.dumps(config.config_dict(), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


@dataclass
class RunRecord:
    episode_rewards: list[float]
    episode_mean_rate_bps: list[float]
    episode_p75_rate_bps: list[float]
    episode_coverage: list[float]
    trajectory: list[tuple[tuple[int, int], ...]]
    final_cells: tuple[tuple[int, int], ...]
    final_reward: float
    coverage: float
    config_hash: str
    seed: int
    wall_time_s: float
    final_snapshot: object = field(repr=False, default=None)
    oracle_cells: tuple[tuple[int, int], ...] | None = None
    oracle_reward: float | None = None
    step_mean_rate_bps: list[float] | None = None
    failure_step: int | None = None
    learner: object = field(repr=False, default=None)
    schedule: EpsilonSchedule | None = field(repr=False, default=None)


def sample_users(mean, cov, n: int, rng: np.random.Generator,
                 grid: GridSpec) -> list[UserTerminal]:
    """Draw n user positions from a 2D Gaussian, clamped into the grid area."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T):
        raise ConfigError("covariance must be a symmetric 2x2 matrix")
    if np.linalg.eigvalsh(cov).min() < -1e-9:
        raise ConfigError("covariance must be positive semi-definite")
    xy = rng.multivariate_normal(mean, cov, size=n, check_valid="ignore")
    xy[:, 0] = np.clip(xy[:, 0], 0.0, grid.x_max)
    xy[:, 1] = np.clip(xy[:, 1], 0.0, grid.y_max)
    return [UserTerminal(id=i, pos=Position(float(x), float(y), 0.0))
            for i, (x, y) in enumerate(xy)]


def make_learner(config: ExperimentConfig, rng: np.random.Generator):
    if config.learner == "tabular":
        return TabularLearner(config.grid, config.n_uavs, config.train)
    return D3qnLearner(config.grid, config.n_uavs, config.train, rng)


def make_world(config: ExperimentConfig, rng: np.random.Generator) -> World:
    users = sample_users(config.user_mean, config.user_cov, config.n_users,
                         rng, config.grid)
    return World(bs=config.bs(), users=tuple(users), params=config.radio)


def _placement_reward(cells, config: ExperimentConfig, world: World,
                      alive: tuple[bool, ...] | None = None) -> tuple[float, object]:
    n = len(cells)
    state = EnvState(cells=tuple(tuple(c) for c in cells),
                     alive=alive if alive is not None else tuple(True for _ in range(n)))
    snapshot = evaluate_state(state, world, config.grid)
    rates = np.asarray(snapshot.user_rates_bps) * config.rate_scale
    return reward(rates, config.weights), snapshot


def greedy_rollout(learner, config: ExperimentConfig, world: World,
                   rng: np.random.Generator, steps: int | None = None,
                   start: EnvState | None = None):
    """Roll the greedy policy out and return (trajectory, final state, snapshots)."""
    steps = steps if steps is not None else config.iterations
    state = start if start is not None else reset(config.grid, config.n_uavs,
                                                  list(config.initial_cells)
                                                  if config.initial_cells else None)
    trajectory = [state.cells]
    snapshots = []
    for _ in range(steps):
        actions = learner.select_actions(state, GREEDY_SCHEDULE, rng)
        outcome = step(state, actions, world, config.grid, config.weights,
                       iteration_limit=steps, rate_scale=config.rate_scale)
        state = outcome.next_state
        trajectory.append(state.cells)
        snapshots.append(outcome.snapshot)
    return trajectory, state, snapshots


def run_training(config: ExperimentConfig,
                 checkpoint_path=None) -> RunRecord:
    """Train per the episode/iteration loop and evaluate the greedy policy.

    Per iteration: select epsilon-greedy actions, step (which re-forms the
    backhaul and recomputes every user rate), then learn from the shared
    reward. Epsilon decays once per episode by default, or once per iteration
    with decay_per="iteration".
    """
    start_time = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    world = make_world(config, rng)
    learner = make_learner(config, rng)
    schedule = config.schedule
    initial = list(config.initial_cells) if config.initial_cells else None

    episode_rewards: list[float] = []
    episode_mean: list[float] = []
    episode_p75: list[float] = []
    episode_cov: list[float] = []

    for _ in range(config.episodes):
        if config.episode_start == "random":
            cells = [(int(rng.integers(config.grid.nx)), int(rng.integers(config.grid.ny)))
                     for _ in range(config.n_uavs)]
            state = reset(config.grid, config.n_uavs, cells)
        else:
            state = reset(config.grid, config.n_uavs, initial)
        rewards_this_episode = []
        snapshot = None
        for _ in range(config.iterations):
            actions = learner.select_actions(state, schedule, rng)
            outcome = step(state, actions, world, config.grid, config.weights,
                           iteration_limit=config.iterations,
                           rate_scale=config.rate_scale)
            learner.update(state, actions, outcome.reward, outcome.next_state,
                           outcome.done, rng=rng)
            if config.decay_per == "iteration":
                schedule = decay(schedule)
            state = outcome.next_state
            rewards_this_episode.append(outcome.reward)
            snapshot = outcome.snapshot
        if config.decay_per == "episode":
            schedule = decay(schedule)
        episode_rewards.append(float(np.mean(rewards_this_episode)))
        rates = np.asarray(snapshot.user_rates_bps)
        episode_mean.append(float(np.mean(rates)))
        episode_p75.append(float(np.percentile(rates, 75.0)))
        episode_cov.append(coverage_ratio(snapshot, config.radio))

    if config.episodes > 0:
        trajectory, final_state, _ = greedy_rollout(learner, config, world, rng)
        final_reward, final_snapshot = _placement_reward(final_state.cells, config, world)
        final_cells = final_state.cells
    else:
        state = reset(config.grid, config.n_uavs, initial)
        trajectory = [state.cells]
        final_reward, final_snapshot = _placement_reward(state.cells, config, world)
        final_cells = state.cells

    record = RunRecord(
        episode_rewards=episode_rewards,
        episode_mean_rate_bps=episode_mean,
        episode_p75_rate_bps=episode_p75,
        episode_coverage=episode_cov,
        trajectory=trajectory,
        final_cells=final_cells,
        final_reward=final_reward,
        coverage=coverage_ratio(final_snapshot, config.radio),
        config_hash=config_hash(config),
        seed=config.seed,
        wall_time_s=time.perf_counter() - start_time,
        final_snapshot=final_snapshot,
        learner=learner,
        schedule=schedule,
    )
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, learner, schedule, record.config_hash)
    return record


def brute_force_placement(config: ExperimentConfig,
                          world: World | None = None):
    """Exhaustive search over every joint placement; the acceptance oracle.

    Returns (best cells, best reward). Ties go to the lexicographically
    smallest joint cell tuple. Refuses search spaces beyond the guard.
    """
    n_cells = config.grid.nx * config.grid.ny
    space = n_cells ** config.n_uavs
    if space > BRUTE_FORCE_GUARD:
        raise ConfigError(
            f"search space of {space} joint placements exceeds the "
            f"{BRUTE_FORCE_GUARD} guard; shrink the grid or the fleet")
    if world is None:
        world = make_world(config, np.random.default_rng(config.seed))
    cells_in_order = [(x, y) for x in range(config.grid.nx) for y in range(config.grid.ny)]
    best_cells = None
    best_reward = -np.inf
    for joint in itertools.product(cells_in_order, repeat=config.n_uavs):
        r, _ = _placement_reward(joint, config, world)
        if r > best_reward:
            best_reward = r
            best_cells = joint
    return best_cells, float(best_reward)


def baseline_centroid(users, n_uavs: int, bs: GroundStation,
                      spec: GridSpec) -> list[tuple[int, int]]:
    """Place the server on the user centroid, relays evenly along the BS line.

    Returned cells are ordered BS-side first; the last cell is the serving
    UAV. Cell ids follow that order.
    """
    if not users:
        raise ValueError("baseline placement needs at least one user")

    def snap(x: float, y: float) -> tuple[int, int]:
        cx = min(max(int(round(x / spec.cell_size_m)), 0), spec.nx - 1)
        cy = min(max(int(round(y / spec.cell_size_m)), 0), spec.ny - 1)
        return cx, cy

    cx = float(np.mean([u.pos.x for u in users]))
    cy = float(np.mean([u.pos.y for u in users]))
    cells = []
    for k in range(1, n_uavs):
        frac = k / n_uavs
        cells.append(snap(bs.pos.x + frac * (cx - bs.pos.x),
                          bs.pos.y + frac * (cy - bs.pos.y)))
    cells.append(snap(cx, cy))
    return cells


def _pick_victim(rule: str, state: EnvState, config: ExperimentConfig,
                 world: World, rng: np.random.Generator) -> int:
    alive = [i for i in range(state.n_uavs) if state.alive[i]]
    if rule.isdigit():
        victim = int(rule)
        if victim not in alive:
            raise ConfigError(f"victim index {victim} is not an alive UAV")
        return victim
    if rule == "random":
        return int(rng.choice(alive))
    snapshot = evaluate_state(state, world, config.grid)
    if not snapshot.chain:
        return int(rng.choice(alive))
    if rule == "relay":
        return snapshot.chain.order[0]
    return snapshot.chain.order[-1]  # tail


def run_resilience(config: ExperimentConfig, checkpoint_path=None) -> RunRecord:
    """Greedy evaluation with a mid-run UAV failure and pretrained recovery.

    Pretrains (or loads) the full-fleet policy, plus a survivor-fleet policy
    trained on the same world. At the failure step the victim drops out and
    the survivors continue under the survivor policy from wherever they are,
    which re-forms the network. Records the mean user rate per step.
    """
    if config.failure is None:
        raise ConfigError("run_resilience needs a failure_spec")
    if config.failure.step >= config.eval_steps:
        raise ConfigError("failure step must fall inside eval_steps")
    if config.n_uavs < 2:
        raise ConfigError("resilience runs need at least two UAVs")
    start_time = time.perf_counter()

    rng = np.random.default_rng(config.seed)
    world = make_world(config, rng)

    full = run_training(replace(config, failure=None))
    if checkpoint_path is not None:
        sched = full.schedule if full.schedule is not None else config.schedule
        save_checkpoint(checkpoint_path, full.learner, sched, config_hash(config))
    reduced_cfg = replace(
        config, failure=None, n_uavs=config.n_uavs - 1,
        initial_cells=config.initial_cells[:config.n_uavs - 1]
        if config.initial_cells else None,
        seed=config.seed + 1)
    reduced = run_training(reduced_cfg)

    state = reset(config.grid, config.n_uavs,
                  list(config.initial_cells) if config.initial_cells else None)
    series: list[float] = []
    trajectory = [state.cells]
    fine_tune_sched = EpsilonSchedule(eps_max=0.05, eps_min=0.01, eps_delta=1e-4,
                                      current=0.05)

    survivors: list[int] | None = None
    reduced_state: EnvState | None = None
    snapshot = None
    for t in range(config.eval_steps):
        if t == config.failure.step:
            victim = _pick_victim(config.failure.victim, state, config, world, rng)
            state = inject_failure(state, victim)
            survivors = [i for i in range(config.n_uavs) if state.alive[i]]
            reduced_state = EnvState(
                cells=tuple(state.cells[i] for i in survivors),
                alive=tuple(True for _ in survivors), t=0)
        if survivors is None:
            actions = full.learner.select_actions(state, GREEDY_SCHEDULE, rng)
            outcome = step(state, actions, world, config.grid, config.weights,
                           iteration_limit=config.eval_steps,
                           rate_scale=config.rate_scale)
            state = outcome.next_state
            snapshot = outcome.snapshot
        else:
            sched = fine_tune_sched if config.failure.fine_tune else GREEDY_SCHEDULE
            red_actions = reduced.learner.select_actions(reduced_state, sched, rng)
            prev_reduced = reduced_state
            outcome = step(reduced_state, red_actions, world, config.grid,
                           config.weights, iteration_limit=config.eval_steps,
                           rate_scale=config.rate_scale)
            reduced_state = outcome.next_state
            if config.failure.fine_tune:
                reduced.learner.update(prev_reduced, red_actions, outcome.reward,
                                       reduced_state, outcome.done, rng=rng)
            cells = list(state.cells)
            for slot, orig in enumerate(survivors):
                cells[orig] = reduced_state.cells[slot]
            state = EnvState(cells=tuple(cells), alive=state.alive, t=state.t + 1)
            snapshot = outcome.snapshot
        series.append(float(np.mean(snapshot.user_rates_bps)))
        trajectory.append(state.cells)

    final_reward = reward(np.asarray(snapshot.user_rates_bps) * config.rate_scale,
                          config.weights)
    return RunRecord(
        episode_rewards=full.episode_rewards,
        episode_mean_rate_bps=full.episode_mean_rate_bps,
        episode_p75_rate_bps=full.episode_p75_rate_bps,
        episode_coverage=full.episode_coverage,
        trajectory=trajectory,
        final_cells=state.cells,
        final_reward=final_reward,
        coverage=coverage_ratio(snapshot, config.radio),
        config_hash=config_hash(config),
        seed=config.seed,
        wall_time_s=time.perf_counter() - start_time,
        final_snapshot=snapshot,
        step_mean_rate_bps=series,
        failure_step=config.failure.step,
        learner=full.learner,
    )


SWEEP_AXES = ("n_uavs", "comm_range", "covariance_scale")


@dataclass(frozen=True)
class SweepPoint:
    value: float
    coverage_mean: float
    coverage_std: float
    per_seed: tuple[float, ...]


def _apply_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "n_uavs":
        cfg = replace(config, n_uavs=int(value))
        if config.initial_cells is not None:
            cfg = replace(cfg, initial_cells=None)
        return cfg
    if axis == "comm_range":
        return replace(config, radio=replace(config.radio, comm_range_m=float(value)))
    if axis == "covariance_scale":
        cov = tuple(tuple(float(value) * v for v in row) for row in config.user_cov)
        return replace(config, user_cov=cov)
    raise ConfigError(f"unknown sweep axis {axis!r}; pick one of {SWEEP_AXES}")


def run_coverage_sweep(config: ExperimentConfig, axis: str, values,
                       placement: str = "auto", n_seeds: int | None = None) -> list[SweepPoint]:
    """Coverage ratio against one swept axis, averaged over seeds.

    placement picks how UAV cells are chosen at each point: "baseline"
    (centroid geometry, deterministic), "oracle" (brute force), "train"
    (full training run), or "auto" (oracle when the search space allows it,
    otherwise train).
    """
    if not values:
        raise ConfigError("sweep needs a non-empty value list")
    if placement not in ("auto", "baseline", "oracle", "train"):
        raise ConfigError(f"unknown placement mode {placement!r}")
    n_seeds = n_seeds if n_seeds is not None else config.sweep_seeds
    points: list[SweepPoint] = []
    for value in values:
        coverages: list[float] = []
        for k in range(n_seeds):
            cfg = replace(_apply_axis(config, axis, value), seed=config.seed + k)
            rng = np.random.default_rng(cfg.seed)
            world = make_world(cfg, rng)
            mode = placement
            if mode == "auto":
                space = (cfg.grid.nx * cfg.grid.ny) ** cfg.n_uavs
                mode = "oracle" if space <= BRUTE_FORCE_GUARD else "train"
            if mode == "baseline":
                cells = baseline_centroid(list(world.users), cfg.n_uavs, world.bs, cfg.grid)
            elif mode == "oracle":
                cells, _ = brute_force_placement(cfg, world)
            else:
                cells = run_training(cfg).final_cells
            _, snapshot = _placement_reward(cells, cfg, world)
            coverages.append(coverage_ratio(snapshot, cfg.radio))
        points.append(SweepPoint(value=float(value),
                                 coverage_mean=float(np.mean(coverages)),
                                 coverage_std=float(np.std(coverages)),
                                 per_seed=tuple(coverages)))
    return points


def episodes_to_plateau(rewards, window: int = 20, frac: float = 0.05):
    """First episode after which the rolling std stays under frac of the plateau.

    The plateau mean is the average of the final window. Returns
    (episode, plateau_mean); the episode equals len(rewards) when the curve
    never settles.
    """
    rewards = np.asarray(rewards, dtype=float)
    if len(rewards) < window:
        return len(rewards), float(np.mean(rewards)) if len(rewards) else 0.0
    plateau_mean = float(np.mean(rewards[-window:]))
    threshold = frac * abs(plateau_mean)
    stds = np.array([np.std(rewards[e - window:e]) for e in range(window, len(rewards) + 1)])
    settled = stds <= threshold
    for i in range(len(settled)):
        if settled[i:].all():
            return i + window, plateau_mean
    return len(rewards), plateau_mean


# ---------------------------------------------------------------------------
# Run record serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_episode_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "reward", "mean_rate_bps", "p75_rate_bps", "coverage"])
        for e in range(len(record.episode_rewards)):
            writer.writerow([e, _fmt(record.episode_rewards[e]),
                             _fmt(record.episode_mean_rate_bps[e]),
                             _fmt(record.episode_p75_rate_bps[e]),
                             _fmt(record.episode_coverage[e])])


def write_trajectory_csv(record: RunRecord, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "uav_id", "x_cell", "y_cell"])
        for t, cells in enumerate(record.trajectory):
            for uav_id, (x, y) in enumerate(cells):
                writer.writerow([t, uav_id, x, y])


def write_summary_json(record: RunRecord, config: ExperimentConfig, path) -> None:
    summary = {
        "config_hash": record.config_hash,
        "seed": record.seed,
        "final_cells": [list(c) for c in record.final_cells],
        "final_reward": record.final_reward,
        "coverage": record.coverage,
        "episodes": len(record.episode_rewards),
        "wall_time_s": record.wall_time_s,
        "config": config.config_dict(),
    }
    if record.oracle_reward is not None:
        summary["oracle_reward"] = record.oracle_reward
        summary["oracle_cells"] = [list(c) for c in record.oracle_cells]
        summary["oracle_gap"] = (record.final_reward / record.oracle_reward
                                 if record.oracle_reward > 0 else None)
    if record.step_mean_rate_bps is not None:
        summary["step_mean_rate_bps"] = record.step_mean_rate_bps
        summary["failure_step"] = record.failure_step
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run_outputs(record: RunRecord, config: ExperimentConfig, out_dir) -> dict:
    """Write the CSV/JSON artifacts; file names embed config hash and seed."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    stem = f"{record.config_hash}_s{record.seed}"
    paths = {
        "episodes": os.path.join(out_dir, f"run_{stem}.csv"),
        "trajectory": os.path.join(out_dir, f"traj_{stem}.csv"),
        "summary": os.path.join(out_dir, f"summary_{stem}.json"),
    }
    write_episode_csv(record, paths["episodes"])
    write_trajectory_csv(record, paths["trajectory"])
    write_summary_json(record, config, paths["summary"])
    return paths
