"""Command-line entry point: parse a YAML config, dispatch, write artifacts.

Exit codes: 0 success, 1 configuration error, 2 runtime error. Every key in
the config file is validated against the documented schema; unknown keys are
hard errors. Any key can be overridden through an environment variable named
UAVIAB_<KEY> (upper-cased), and --seed overrides the config seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np
import yaml

from .agent import EpsilonSchedule, TrainConfig, load_checkpoint
from .channel import RadioParams, dbm_to_mw
from .environment import GridSpec, RewardWeights
from .scenarios import (
    ConfigError,
    ExperimentConfig,
    FailureSpec,
    SWEEP_AXES,
    baseline_centroid,
    brute_force_placement,
    config_hash,
    greedy_rollout,
    make_learner,
    make_world,
    run_coverage_sweep,
    run_resilience,
    run_training,
    write_run_outputs,
)

ENV_PREFIX = "UAVIAB_"

# key -> (validator description, default); None defaults resolve at build time.
CONFIG_KEYS = {
    # Table III names
    "n_users": 100,
    "comm_range": 500.0,
    "bw_access_hz": 25.0e6,
    "bw_bs_hz": 25.0e6,
    "theta_env": 4.88,
    "xi_env": 0.43,
    "delta_exp": 2.0,
    "eta_los_db": 0.1,
    "eta_nlos_db": 21.0,
    "alpha": 0.5,
    "mu": 0.01,
    "gamma": 0.9,
    "eps_max": 0.99,
    "eps_min": 0.01,
    "eps_delta": 0.01,
    # artifact keys
    "f_access_hz": 2.0e9,
    "f_a2a_hz": 2.4e9,
    "tx_power_dbm": 30.0,
    "noise_dbm": -96.0,
    "grid_nx": 10,
    "grid_ny": 10,
    "cell_size_m": 10.0,
    "altitude_m": 100.0,
    "n_uavs": 3,
    "learner": "tabular",
    "seed": 0,
    "episodes": 100,
    "iterations": 100,
    "snr_threshold": 3.0,
    "min_distance_m": 1.0,
    "user_mean": [70.0, 70.0],
    "user_cov": [[100.0, 0.0], [0.0, 50.0]],
    "bs_position": [10.0, 0.0, 10.0],
    "initial_cells": None,
    "batch_size": 32,
    "buffer_capacity": 10_000,
    "target_sync_period": 100,
    "grad_clip": None,
    "rate_scale": 1e-6,
    "failure_step": None,
    "failure_victim": "random",
    "eval_steps": 60,
    "sweep_seeds": 10,
}


def _coerce_number(key: str, value, kind=float):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} must be a {kind.__name__}, got {value!r}")
    if kind is float and not math.isfinite(out):
        raise ConfigError(f"config key {key!r} must be finite")
    return out


def parse_config(path: str | None) -> ExperimentConfig:
    """Build an ExperimentConfig from a YAML file plus environment overrides.

    A missing or empty file yields the full set of defaults. Unknown keys,
    parse failures and invariant violations raise ConfigError naming the key.
    """
    raw: dict = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path) as fh:
            try:
                loaded = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a mapping of keys")
        raw = loaded

    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")

    merged = dict(CONFIG_KEYS)
    merged.update(raw)
    for key in CONFIG_KEYS:
        env_name = ENV_PREFIX + key.upper()
        if env_name in os.environ:
            merged[key] = yaml.safe_load(os.environ[env_name])

    return build_config(merged)


def build_config(kv: dict) -> ExperimentConfig:
    """Assemble and validate the typed config from a flat key/value mapping."""
    def fval(key):
        return _coerce_number(key, kv[key], float)

    def ival(key):
        return _coerce_number(key, kv[key], int)

    if not 0.0 <= fval("alpha") <= 1.0:
        raise ConfigError("config key 'alpha' must lie in [0, 1]")
    if kv["learner"] not in ("tabular", "d3qn"):
        raise ConfigError("config key 'learner' must be 'tabular' or 'd3qn'")

    try:
        tx_mw = dbm_to_mw(fval("tx_power_dbm"))
        radio = RadioParams(
            theta_env=fval("theta_env"), xi_env=fval("xi_env"),
            delta_exp=fval("delta_exp"), eta_los_db=fval("eta_los_db"),
            eta_nlos_db=fval("eta_nlos_db"), f_access_hz=fval("f_access_hz"),
            f_a2a_hz=fval("f_a2a_hz"), tx_power_mw=(tx_mw, tx_mw, tx_mw),
            noise_mw=dbm_to_mw(fval("noise_dbm")),
            bw_access_hz=fval("bw_access_hz"), bw_bs_hz=fval("bw_bs_hz"),
            snr_threshold=fval("snr_threshold"), comm_range_m=fval("comm_range"),
            min_distance_m=fval("min_distance_m"))
        grid = GridSpec(nx=ival("grid_nx"), ny=ival("grid_ny"),
                        cell_size_m=fval("cell_size_m"), altitude_m=fval("altitude_m"))
        train = TrainConfig(
            mu=fval("mu"), gamma=fval("gamma"), batch_size=ival("batch_size"),
            buffer_capacity=ival("buffer_capacity"),
            target_sync_period=ival("target_sync_period"),
            grad_clip=None if kv["grad_clip"] is None else fval("grad_clip"))
        schedule = EpsilonSchedule(eps_max=fval("eps_max"), eps_min=fval("eps_min"),
                                   eps_delta=fval("eps_delta"), current=fval("eps_max"))
        weights = RewardWeights(alpha=fval("alpha"))
        user_mean = kv["user_mean"]
        user_cov = kv["user_cov"]
        if not (isinstance(user_mean, (list, tuple)) and len(user_mean) == 2):
            raise ConfigError("config key 'user_mean' must be a 2-element list")
        if not (isinstance(user_cov, (list, tuple)) and len(user_cov) == 2
                and all(isinstance(r, (list, tuple)) and len(r) == 2 for r in user_cov)):
            raise ConfigError("config key 'user_cov' must be a 2x2 matrix")
        bs_position = kv["bs_position"]
        if not (isinstance(bs_position, (list, tuple)) and len(bs_position) == 3):
            raise ConfigError("config key 'bs_position' must be a 3-element list")
        initial_cells = kv["initial_cells"]
        if initial_cells is not None:
            initial_cells = tuple((int(c[0]), int(c[1])) for c in initial_cells)
        failure = None
        if kv["failure_step"] is not None:
            failure = FailureSpec(step=ival("failure_step"),
                                  victim=str(kv["failure_victim"]))
        return ExperimentConfig(
            radio=radio, grid=grid, n_uavs=ival("n_uavs"), n_users=ival("n_users"),
            user_mean=(float(user_mean[0]), float(user_mean[1])),
            user_cov=tuple(tuple(float(v) for v in row) for row in user_cov),
            bs_position=tuple(float(v) for v in bs_position),
            learner=str(kv["learner"]), train=train, schedule=schedule,
            weights=weights, episodes=ival("episodes"), iterations=ival("iterations"),
            seed=ival("seed"), initial_cells=initial_cells,
            rate_scale=fval("rate_scale"), failure=failure,
            eval_steps=ival("eval_steps"), sweep_seeds=ival("sweep_seeds"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _checkpoint_path(out_dir: str, config: ExperimentConfig) -> str:
    return os.path.join(out_dir, f"model_{config_hash(config)}_s{config.seed}.npz")


def _cmd_train(config: ExperimentConfig, args) -> int:
    os.makedirs(args.out, exist_ok=True)
    record = run_training(config, checkpoint_path=_checkpoint_path(args.out, config))
    paths = write_run_outputs(record, config, args.out)
    print(f"final placement {list(record.final_cells)} reward {record.final_reward:.6g}")
    for label, p in paths.items():
        print(f"wrote {label}: {p}")
    return 0


def _cmd_evaluate(config: ExperimentConfig, args) -> int:
    rng = np.random.default_rng(config.seed)
    world = make_world(config, rng)
    learner = make_learner(config, rng)
    load_checkpoint(args.checkpoint, learner)
    trajectory, final_state, snapshots = greedy_rollout(learner, config, world, rng)
    rates = np.asarray(snapshots[-1].user_rates_bps)
    print(f"greedy placement {list(final_state.cells)}")
    print(f"mean rate {rates.mean():.6g} bps, p75 {np.percentile(rates, 75):.6g} bps")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"eval_{config_hash(config)}_s{config.seed}.json")
        with open(path, "w") as fh:
            json.dump({"final_cells": [list(c) for c in final_state.cells],
                       "trajectory": [[list(c) for c in row] for row in trajectory],
                       "mean_rate_bps": float(rates.mean())}, fh, indent=2)
        print(f"wrote {path}")
    return 0


def _cmd_oracle(config: ExperimentConfig, args) -> int:
    cells, best = brute_force_placement(config)
    print(f"oracle placement {list(cells)} reward {best:.6g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, f"oracle_{config_hash(config)}_s{config.seed}.json")
        with open(path, "w") as fh:
            json.dump({"cells": [list(c) for c in cells], "reward": best}, fh, indent=2)
        print(f"wrote {path}")
    return 0


def _cmd_baseline(config: ExperimentConfig, args) -> int:
    rng = np.random.default_rng(config.seed)
    world = make_world(config, rng)
    cells = baseline_centroid(list(world.users), config.n_uavs, world.bs, config.grid)
    from .scenarios import _placement_reward

    r, snapshot = _placement_reward(cells, config, world)
    print(f"baseline placement {list(cells)} reward {r:.6g}")
    return 0


def _cmd_resilience(config: ExperimentConfig, args) -> int:
    if config.failure is None:
        raise ConfigError("resilience runs need failure_step in the config")
    os.makedirs(args.out, exist_ok=True)
    record = run_resilience(config, checkpoint_path=_checkpoint_path(args.out, config))
    paths = write_run_outputs(record, config, args.out)
    pre = np.mean(record.step_mean_rate_bps[:record.failure_step])
    post = np.mean(record.step_mean_rate_bps[record.failure_step:])
    print(f"mean rate before failure {pre:.6g} bps, after {post:.6g} bps")
    for label, p in paths.items():
        print(f"wrote {label}: {p}")
    return 0


def _cmd_sweep(config: ExperimentConfig, args) -> int:
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    if not values:
        raise ConfigError("--values must list at least one number")
    points = run_coverage_sweep(config, args.axis, values, placement=args.placement)
    print(f"{args.axis},coverage_mean,coverage_std")
    for p in points:
        print(f"{p.value:g},{p.coverage_mean:.6f},{p.coverage_std:.6f}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out,
                            f"sweep_{args.axis}_{config_hash(config)}_s{config.seed}.csv")
        with open(path, "w") as fh:
            fh.write(f"{args.axis},coverage_mean,coverage_std\n")
            for p in points:
                fh.write(f"{p.value:g},{p.coverage_mean:.6f},{p.coverage_std:.6f}\n")
        print(f"wrote {path}")
    return 0


def _cmd_selftest(config: ExperimentConfig, args) -> int:
    """Fast invariant suite over the library primitives."""
    import itertools as it

    from . import agent, channel, environment, topology

    rng = np.random.default_rng(7)
    checks: list[tuple[str, bool]] = []

    params = RadioParams()
    distances = rng.uniform(1.0, 5000.0, size=1000)
    flat = RadioParams(delta_exp=2.0, eta_los_db=0.0, eta_nlos_db=0.0,
                       f_access_hz=params.f_a2a_hz)
    worst = max(abs(channel.atg_path_loss_db(d, 0.3, flat) - channel.fspl_db(d, flat))
                for d in distances)
    checks.append(("atg/fspl identity under delta=2, zero eta", worst < 1e-9))

    angles = np.linspace(0.0, math.pi / 2, 200)
    probs = [channel.los_probability(a, params) for a in angles]
    checks.append(("LoS probability in (0,1) and increasing",
                   all(0.0 < p < 1.0 for p in probs)
                   and all(b > a for a, b in it.pairwise(probs))))

    ok = True
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        uavs = [topology.Uav(id=i, pos=channel.Position(float(rng.uniform(0, 300)),
                                                        float(rng.uniform(0, 300)), 100.0))
                for i in range(n)]
        bs = topology.GroundStation(channel.Position(0.0, 0.0, 10.0))
        test_params = RadioParams(comm_range_m=float(rng.uniform(50, 400)))
        chain = topology.form_backhaul(bs, uavs, test_params)
        pos = {u.id: u.pos for u in uavs}
        hop_from = bs.pos
        for uid in chain.order:
            if (hop_from.distance_to(pos[uid]) > test_params.comm_range_m
                    or topology.a2a_snr(hop_from, pos[uid], test_params)
                    <= test_params.snr_threshold):
                ok = False
            hop_from = pos[uid]
        if len(set(chain.order)) != len(chain.order):
            ok = False
    checks.append(("backhaul chain invariants on 1000 random fleets", ok))

    net = agent.DuelingNet(6, rng=rng)
    obs = rng.uniform(0, 1, size=6)
    q = net.forward(obs)
    v = (net.forward_batch(obs[None, :])[0] - (q - q.mean())).mean()
    checks.append(("dueling combine keeps mean_a Q = V", abs(q.mean() - v) < 1e-9))

    spec = environment.GridSpec(nx=4, ny=4, cell_size_m=10.0, altitude_m=50.0)
    state = environment.reset(spec, 1)
    for a in (environment.Action.WEST, environment.Action.SOUTH):
        state = environment.apply_action(state, 0, a, spec)
    checks.append(("boundary clamping is absorbing", state.cells[0] == (0, 0)))

    width = max(len(name) for name, _ in checks)
    all_ok = True
    for name, passed in checks:
        print(f"{name:<{width}}  {'PASS' if passed else 'FAIL'}")
        all_ok = all_ok and passed
    return 0 if all_ok else 2


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uav-iab",
        description="UAV base-station placement simulator and RL trainer")
    parser.add_argument("--config", default=None, help="YAML config file")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default="runs", help="output directory")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train", help="run the training loop and write run artifacts")
    evaluate = sub.add_parser("evaluate", help="greedy rollout from a checkpoint")
    evaluate.add_argument("--checkpoint", required=True)
    sub.add_parser("oracle", help="brute-force the best joint placement")
    sub.add_parser("baseline", help="score the centroid baseline placement")
    sub.add_parser("resilience", help="pretrained run with a mid-run UAV failure")
    sweep = sub.add_parser("sweep", help="coverage against one swept axis")
    sweep.add_argument("--axis", required=True, choices=SWEEP_AXES)
    sweep.add_argument("--values", required=True,
                       help="comma-separated values for the axis")
    sweep.add_argument("--placement", default="auto",
                       choices=("auto", "baseline", "oracle", "train"))
    sub.add_parser("selftest", help="run the fast invariant suite")
    return parser


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "oracle": _cmd_oracle,
    "baseline": _cmd_baseline,
    "resilience": _cmd_resilience,
    "sweep": _cmd_sweep,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be a non-negative 64-bit value")
            from dataclasses import replace

            config = replace(config, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
