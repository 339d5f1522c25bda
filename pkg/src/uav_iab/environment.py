"""Grid MDP for UAV placement: state, 5-action move set, reward and stepping.

UAVs live on integer grid cells at a fixed altitude. Actions move one cell
N/E/S/W or hover; moves past the boundary clamp. The reward blends the mean
and 75th-percentile user rates of the network evaluated after the move.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import Position, RadioParams
from .topology import GroundStation, NetworkSnapshot, Uav, UserTerminal, evaluate_network

DEFAULT_ITERATION_LIMIT = 100
DEFAULT_RATE_SCALE = 1e-6  # rewards in Mbit/s


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    cell_size_m: float
    altitude_m: float

    def __post_init__(self) -> None:
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid must be at least 2x2")
        if self.cell_size_m <= 0.0:
            raise ValueError("cell_size_m must be strictly positive")
        if self.altitude_m <= 0.0:
            raise ValueError("altitude_m must be strictly positive")

    @property
    def x_max(self) -> float:
        return (self.nx - 1) * self.cell_size_m

    @property
    def y_max(self) -> float:
        return (self.ny - 1) * self.cell_size_m

    def cell_position(self, cell: tuple[int, int]) -> Position:
        return Position(cell[0] * self.cell_size_m, cell[1] * self.cell_size_m,
                        self.altitude_m)

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.nx and 0 <= cell[1] < self.ny


class Action(enum.IntEnum):
    NORTH = 0
    EAST = 1
    SOUTH = 2
    WEST = 3
    HOVER = 4


# North = +y, East = +x.
_MOVES = {
    Action.NORTH: (0, 1),
    Action.EAST: (1, 0),
    Action.SOUTH: (0, -1),
    Action.WEST: (-1, 0),
    Action.HOVER: (0, 0),
}


@dataclass(frozen=True)
class EnvState:
    """Per-UAV grid cells plus alive flags and the iteration counter."""

    cells: tuple[tuple[int, int], ...]
    alive: tuple[bool, ...]
    t: int = 0

    @property
    def n_uavs(self) -> int:
        return len(self.cells)


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class World:
    """Everything static during an episode: BS, users and radio constants."""

    bs: GroundStation
    users: tuple[UserTerminal, ...]
    params: RadioParams


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    reward: float
    snapshot: NetworkSnapshot
    done: bool


def reset(spec: GridSpec, n_uavs: int,
          initial_cells: list[tuple[int, int]] | None = None) -> EnvState:
    """Initial state: all UAVs at cell (0, 0) unless positions are given."""
    if n_uavs < 1:
        raise ValueError("need at least one UAV")
    if initial_cells is None:
        cells = tuple((0, 0) for _ in range(n_uavs))
    else:
        if len(initial_cells) != n_uavs:
            raise ValueError(f"expected {n_uavs} initial cells, got {len(initial_cells)}")
        for c in initial_cells:
            if not spec.in_bounds((int(c[0]), int(c[1]))):
                raise ValueError(f"initial cell {tuple(c)} outside the {spec.nx}x{spec.ny} grid")
        cells = tuple((int(c[0]), int(c[1])) for c in initial_cells)
    return EnvState(cells=cells, alive=tuple(True for _ in range(n_uavs)), t=0)


def apply_action(state: EnvState, uav_index: int, action: Action, spec: GridSpec) -> EnvState:
    """Move one UAV a single cell, clamping at the grid boundary."""
    if not 0 <= uav_index < state.n_uavs:
        raise IndexError(f"uav index {uav_index} out of range")
    dx, dy = _MOVES[Action(action)]
    x, y = state.cells[uav_index]
    new_cell = (min(max(x + dx, 0), spec.nx - 1), min(max(y + dy, 0), spec.ny - 1))
    cells = tuple(new_cell if i == uav_index else c for i, c in enumerate(state.cells))
    return EnvState(cells=cells, alive=state.alive, t=state.t)


def reward(rates_bps: list[float] | np.ndarray, weights: RewardWeights) -> float:
    """alpha * mean + (1 - alpha) * 75th percentile of the user rates.

    The percentile interpolates linearly between closest ranks.
    """
    rates = np.asarray(rates_bps, dtype=float)
    if rates.size == 0:
        raise ValueError("reward needs at least one rate")
    mean = float(np.mean(rates))
    p75 = float(np.percentile(rates, 75.0))
    return weights.alpha * mean + (1.0 - weights.alpha) * p75


def uavs_from_state(state: EnvState, spec: GridSpec) -> list[Uav]:
    return [Uav(id=i, pos=spec.cell_position(c), alive=state.alive[i])
            for i, c in enumerate(state.cells)]


def evaluate_state(state: EnvState, world: World, spec: GridSpec) -> NetworkSnapshot:
    return evaluate_network(world.bs, uavs_from_state(state, spec),
                            list(world.users), world.params)


def step(state: EnvState, joint_action: list[Action], world: World, spec: GridSpec,
         weights: RewardWeights, iteration_limit: int = DEFAULT_ITERATION_LIMIT,
         rate_scale: float = DEFAULT_RATE_SCALE) -> StepOutcome:
    """Apply the joint action, re-evaluate the network, return the shared reward.

    All moves are taken simultaneously from the same pre-state; dead UAVs
    ignore their action and stay frozen. done flags the iteration cap only.
    """
    if len(joint_action) != state.n_uavs:
        raise ValueError(f"expected {state.n_uavs} actions, got {len(joint_action)}")
    cells = list(state.cells)
    for i, action in enumerate(joint_action):
        if not state.alive[i]:
            continue
        dx, dy = _MOVES[Action(action)]
        x, y = state.cells[i]
        cells[i] = (min(max(x + dx, 0), spec.nx - 1), min(max(y + dy, 0), spec.ny - 1))
    next_state = EnvState(cells=tuple(cells), alive=state.alive, t=state.t + 1)
    snapshot = evaluate_state(next_state, world, spec)
    scaled = np.asarray(snapshot.user_rates_bps) * rate_scale
    r = reward(scaled, weights)
    return StepOutcome(next_state=next_state, reward=r, snapshot=snapshot,
                       done=next_state.t >= iteration_limit)


def inject_failure(state: EnvState, uav_index: int) -> EnvState:
    """Mark one UAV as failed; it freezes in place and drops out of all links."""
    if not 0 <= uav_index < state.n_uavs:
        raise IndexError(f"uav index {uav_index} out of range")
    if not state.alive[uav_index]:
        warnings.warn(f"UAV {uav_index} is already down", stacklevel=2)
        return state
    alive = tuple(a if i != uav_index else False for i, a in enumerate(state.alive))
    return EnvState(cells=state.cells, alive=alive, t=state.t)
