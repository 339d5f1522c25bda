"""Learners: tabular Q-learning and a dueling double deep Q-network.

Both learners share one action-selection interface and train per-UAV as
independent learners on the shared team reward. The network is plain numpy
(two fully connected trunk layers, value and advantage heads, online/target
parameter pair) trained by stochastic gradient descent on the squared error
against double-Q targets sampled from a uniform replay buffer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .environment import Action, EnvState, GridSpec

N_ACTIONS = len(Action)

MAX_TABLE_STATES = 5_000_000  # dense joint-state tables beyond this are refused


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class EpsilonSchedule:
    eps_max: float = 0.99
    eps_min: float = 0.01
    eps_delta: float = 0.01
    current: float = 0.99

    def __post_init__(self) -> None:
        if not 0.0 <= self.eps_min <= self.current <= self.eps_max <= 1.0:
            raise ValueError("need 0 <= eps_min <= current <= eps_max <= 1")
        if self.eps_delta <= 0.0:
            raise ValueError("eps_delta must be strictly positive")


def decay(schedule: EpsilonSchedule) -> EpsilonSchedule:
    """Linear decay with a floor: current <- max(eps_min, current - eps_delta)."""
    return replace(schedule, current=max(schedule.eps_min, schedule.current - schedule.eps_delta))


def select_action(values: np.ndarray, schedule: EpsilonSchedule,
                  rng: np.random.Generator) -> Action:
    """Epsilon-greedy: explore uniformly with probability eps, else argmax.

    Ties among maximal action values break uniformly at random.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (N_ACTIONS,) or not np.all(np.isfinite(values)):
        raise ValueError("expected five finite action values")
    if rng.random() < schedule.current:
        return Action(int(rng.integers(N_ACTIONS)))
    best = np.flatnonzero(values == values.max())
    if len(best) == 1:
        return Action(int(best[0]))
    return Action(int(rng.choice(best)))


@dataclass(frozen=True)
class TrainConfig:
    mu: float = 0.01
    gamma: float = 0.9
    batch_size: int = 32
    buffer_capacity: int = 10_000
    target_sync_period: int = 100
    grad_clip: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.mu < 1.0:
            raise ValueError("mu must lie in (0, 1)")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.batch_size < 1 or self.buffer_capacity < self.batch_size:
            raise ValueError("need buffer_capacity >= batch_size >= 1")
        if self.target_sync_period < 1:
            raise ValueError("target_sync_period must be >= 1")
        if self.grad_clip is not None and self.grad_clip <= 0.0:
            raise ValueError("grad_clip must be positive when set")


# ---------------------------------------------------------------------------
# Tabular backend
# ---------------------------------------------------------------------------

class QTable:
    """Dense table of 5 action values for every joint UAV cell tuple."""

    def __init__(self, spec: GridSpec, n_uavs: int):
        n_states = (spec.nx * spec.ny) ** n_uavs
        if n_states > MAX_TABLE_STATES:
            raise ValueError(
                f"joint state space of {n_states} cells is too large for a dense table")
        self.nx = spec.nx
        self.ny = spec.ny
        self.n_uavs = n_uavs
        self.table = np.zeros((n_states, N_ACTIONS), dtype=float)

    def index(self, cells: tuple[tuple[int, int], ...]) -> int:
        idx = 0
        for x, y in cells:
            if not (0 <= x < self.nx and 0 <= y < self.ny):
                raise KeyError(f"cell ({x}, {y}) outside the grid")
            idx = idx * (self.nx * self.ny) + (x * self.ny + y)
        return idx

    def values(self, cells: tuple[tuple[int, int], ...]) -> np.ndarray:
        return self.table[self.index(cells)]

    def max_value(self, cells: tuple[tuple[int, int], ...]) -> float:
        return float(self.table[self.index(cells)].max())


def q_update(table: QTable, s: tuple, a: Action, r: float, s_next: tuple,
             mu: float, gamma: float) -> QTable:
    """One Q-learning update: Q <- (1-mu) Q + mu [r + gamma max_a' Q(s', a')]."""
    row = table.index(s)
    target = r + gamma * table.max_value(s_next)
    table.table[row, int(a)] = (1.0 - mu) * table.table[row, int(a)] + mu * target
    return table


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Transition:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity ring of transitions with uniform batch sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def push(self, item: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(item)
        else:
            self._items[self._cursor] = item
            self._cursor = (self._cursor + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError("not enough transitions to sample a batch")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[i] for i in idx]


# ---------------------------------------------------------------------------
# Dueling network
# ---------------------------------------------------------------------------

def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class DuelingNet:
    """Fully connected dueling Q-network with hand-rolled gradients.

    Trunk of two ReLU layers feeds a value head (scalar V) and an advantage
    head (one value per action); the outputs combine as
    Q = V + A - mean_a(A), which pins mean_a Q(s, a) = V(s) exactly.
    """

    def __init__(self, input_dim: int, n_actions: int = N_ACTIONS,
                 trunk: tuple[int, int] = (128, 128), head_hidden: int = 64,
                 rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng()
        self.input_dim = input_dim
        self.n_actions = n_actions
        self.trunk = tuple(trunk)
        self.head_hidden = head_hidden
        h1, h2 = self.trunk
        hh = head_hidden
        self.params: dict[str, np.ndarray] = {
            "W1": _glorot(rng, input_dim, h1), "b1": np.zeros(h1),
            "W2": _glorot(rng, h1, h2), "b2": np.zeros(h2),
            "Wv1": _glorot(rng, h2, hh), "bv1": np.zeros(hh),
            "Wv2": _glorot(rng, hh, 1), "bv2": np.zeros(1),
            "Wa1": _glorot(rng, h2, hh), "ba1": np.zeros(hh),
            "Wa2": _glorot(rng, hh, n_actions), "ba2": np.zeros(n_actions),
        }

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: v.shape for k, v in self.params.items()}

    def copy(self) -> "DuelingNet":
        clone = DuelingNet.__new__(DuelingNet)
        clone.input_dim = self.input_dim
        clone.n_actions = self.n_actions
        clone.trunk = self.trunk
        clone.head_hidden = self.head_hidden
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone

    def forward_batch(self, x: np.ndarray, want_cache: bool = False):
        p = self.params
        z1 = x @ p["W1"] + p["b1"]
        h1 = np.maximum(z1, 0.0)
        z2 = h1 @ p["W2"] + p["b2"]
        h2 = np.maximum(z2, 0.0)
        zv = h2 @ p["Wv1"] + p["bv1"]
        hv = np.maximum(zv, 0.0)
        v = hv @ p["Wv2"] + p["bv2"]
        za = h2 @ p["Wa1"] + p["ba1"]
        ha = np.maximum(za, 0.0)
        a = ha @ p["Wa2"] + p["ba2"]
        q = v + a - a.mean(axis=1, keepdims=True)
        if not want_cache:
            return q
        return q, {"x": x, "h1": h1, "h2": h2, "hv": hv, "ha": ha}

    def forward(self, obs: np.ndarray) -> np.ndarray:
        obs = np.asarray(obs, dtype=float)
        if obs.shape != (self.input_dim,):
            raise ValueError(f"expected observation of shape ({self.input_dim},), "
                             f"got {obs.shape}")
        if not np.all(np.isfinite(obs)):
            raise ValueError("observation contains non-finite values")
        return self.forward_batch(obs[None, :])[0]

    def backward(self, cache: dict, actions: np.ndarray,
                 dq_sel: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a loss whose derivative w.r.t. Q(s, a_sel) is dq_sel."""
        p = self.params
        batch = len(actions)
        dv = dq_sel[:, None]  # dQ_sel/dV = 1
        da = np.zeros((batch, self.n_actions))
        da[np.arange(batch), actions] = dq_sel
        da -= dq_sel[:, None] / self.n_actions  # mean-centering term

        grads: dict[str, np.ndarray] = {}
        # value head
        grads["Wv2"] = cache["hv"].T @ dv
        grads["bv2"] = dv.sum(axis=0)
        dhv = (dv @ p["Wv2"].T) * (cache["hv"] > 0.0)
        grads["Wv1"] = cache["h2"].T @ dhv
        grads["bv1"] = dhv.sum(axis=0)
        # advantage head
        grads["Wa2"] = cache["ha"].T @ da
        grads["ba2"] = da.sum(axis=0)
        dha = (da @ p["Wa2"].T) * (cache["ha"] > 0.0)
        grads["Wa1"] = cache["h2"].T @ dha
        grads["ba1"] = dha.sum(axis=0)
        # trunk
        dh2 = (dhv @ p["Wv1"].T + dha @ p["Wa1"].T) * (cache["h2"] > 0.0)
        grads["W2"] = cache["h1"].T @ dh2
        grads["b2"] = dh2.sum(axis=0)
        dh1 = (dh2 @ p["W2"].T) * (cache["h1"] > 0.0)
        grads["W1"] = cache["x"].T @ dh1
        grads["b1"] = dh1.sum(axis=0)
        return grads

    def apply_grads(self, grads: dict[str, np.ndarray], lr: float,
                    grad_clip: float | None = None) -> None:
        if grad_clip is not None:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if norm > grad_clip:
                scale = grad_clip / norm
                grads = {k: g * scale for k, g in grads.items()}
        for name, g in grads.items():
            self.params[name] -= lr * g


def double_q_target(r: float, s_next_obs: np.ndarray, done: bool,
                    online: DuelingNet, target: DuelingNet, gamma: float) -> float:
    """y = r, or r + gamma * Q_target(s', argmax_a Q_online(s', a)) if not done."""
    if done:
        return float(r)
    a_star = int(np.argmax(online.forward(s_next_obs)))
    return float(r) + gamma * float(target.forward(s_next_obs)[a_star])


def sync_target(online: DuelingNet, target: DuelingNet) -> None:
    """Copy online parameters into the target network."""
    for name, value in online.params.items():
        if target.params[name].shape != value.shape:
            raise ValueError(f"parameter {name} shape mismatch")
        target.params[name] = value.copy()


def train_step(online: DuelingNet, target: DuelingNet, buffer: ReplayBuffer,
               cfg: TrainConfig, rng: np.random.Generator) -> float | None:
    """One SGD step on the squared error against double-Q targets.

    Returns the batch loss, or None when the buffer cannot fill a batch yet.
    Only the online parameters move.
    """
    if len(buffer) < cfg.batch_size:
        return None
    batch = buffer.sample(cfg.batch_size, rng)
    x = np.stack([t.s for t in batch])
    x_next = np.stack([t.s_next for t in batch])
    actions = np.array([t.a for t in batch], dtype=int)
    rewards = np.array([t.r for t in batch], dtype=float)
    done = np.array([t.done for t in batch], dtype=bool)

    a_star = np.argmax(online.forward_batch(x_next), axis=1)
    q_next = target.forward_batch(x_next)[np.arange(len(batch)), a_star]
    y = rewards + cfg.gamma * q_next * (~done)

    q, cache = online.forward_batch(x, want_cache=True)
    q_sel = q[np.arange(len(batch)), actions]
    err = q_sel - y
    loss = float(np.mean(err ** 2))
    grads = online.backward(cache, actions, 2.0 * err / len(batch))
    online.apply_grads(grads, cfg.mu, cfg.grad_clip)
    return loss


# ---------------------------------------------------------------------------
# Shared learner interface
# ---------------------------------------------------------------------------

def observation_vector(state: EnvState, spec: GridSpec) -> np.ndarray:
    """Normalized flat coordinates of every UAV: (x, y, z)/max per UAV, in [0, 1].

    A failed UAV contributes zeros, signalling its absence to the policy.
    """
    out = np.zeros(3 * state.n_uavs)
    for i, (x, y) in enumerate(state.cells):
        if state.alive[i]:
            out[3 * i] = x / (spec.nx - 1)
            out[3 * i + 1] = y / (spec.ny - 1)
            out[3 * i + 2] = 1.0
    return out


class TabularLearner:
    """One dense Q-table per UAV, keyed by that UAV's own grid cell.

    Each agent observes its own slice of the joint state and learns from the
    shared team reward; other UAVs enter only through that reward.
    """

    kind = "tabular"

    def __init__(self, spec: GridSpec, n_uavs: int, cfg: TrainConfig):
        self.spec = spec
        self.n_uavs = n_uavs
        self.cfg = cfg
        self.tables = [QTable(spec, 1) for _ in range(n_uavs)]

    def action_values(self, state: EnvState, uav: int) -> np.ndarray:
        return self.tables[uav].values((state.cells[uav],)).copy()

    def select_actions(self, state: EnvState, schedule: EpsilonSchedule,
                       rng: np.random.Generator) -> list[Action]:
        return [select_action(self.action_values(state, u), schedule, rng)
                if state.alive[u] else Action.HOVER
                for u in range(self.n_uavs)]

    def update(self, state: EnvState, actions: list[Action], reward: float,
               next_state: EnvState, done: bool,
               rng: np.random.Generator | None = None) -> None:
        for u in range(self.n_uavs):
            if not state.alive[u]:
                continue
            q_update(self.tables[u], (state.cells[u],), actions[u], reward,
                     (next_state.cells[u],), self.cfg.mu, self.cfg.gamma)

    def end_iteration(self) -> None:
        pass

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {f"agent{u}_table": t.table for u, t in enumerate(self.tables)}

    def meta(self) -> dict:
        return {"kind": self.kind, "n_uavs": self.n_uavs,
                "nx": self.spec.nx, "ny": self.spec.ny}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for u, table in enumerate(self.tables):
            incoming = arrays[f"agent{u}_table"]
            if incoming.shape != table.table.shape:
                raise CheckpointError(
                    f"table shape {incoming.shape} does not match {table.table.shape}")
            table.table = incoming.astype(float)


class D3qnLearner:
    """Per-UAV dueling double DQN with uniform replay over the joint observation."""

    kind = "d3qn"

    def __init__(self, spec: GridSpec, n_uavs: int, cfg: TrainConfig,
                 rng: np.random.Generator,
                 trunk: tuple[int, int] = (128, 128), head_hidden: int = 64):
        self.spec = spec
        self.n_uavs = n_uavs
        self.cfg = cfg
        input_dim = 3 * n_uavs
        self.online = [DuelingNet(input_dim, trunk=trunk, head_hidden=head_hidden, rng=rng)
                       for _ in range(n_uavs)]
        self.target = [net.copy() for net in self.online]
        self.buffers = [ReplayBuffer(cfg.buffer_capacity) for _ in range(n_uavs)]
        self.train_steps = 0
        self.last_losses: list[float | None] = [None] * n_uavs

    def action_values(self, state: EnvState, uav: int) -> np.ndarray:
        return self.online[uav].forward(observation_vector(state, self.spec))

    def select_actions(self, state: EnvState, schedule: EpsilonSchedule,
                       rng: np.random.Generator) -> list[Action]:
        obs = observation_vector(state, self.spec)
        return [select_action(self.online[u].forward(obs), schedule, rng)
                if state.alive[u] else Action.HOVER
                for u in range(self.n_uavs)]

    def update(self, state: EnvState, actions: list[Action], reward: float,
               next_state: EnvState, done: bool,
               rng: np.random.Generator | None = None) -> None:
        rng = rng if rng is not None else np.random.default_rng()
        obs = observation_vector(state, self.spec)
        obs_next = observation_vector(next_state, self.spec)
        for u in range(self.n_uavs):
            if not state.alive[u]:
                continue
            self.buffers[u].push(Transition(obs, int(actions[u]), reward, obs_next, done))
            self.last_losses[u] = train_step(self.online[u], self.target[u],
                                             self.buffers[u], self.cfg, rng)
        self.train_steps += 1
        if self.train_steps % self.cfg.target_sync_period == 0:
            for u in range(self.n_uavs):
                sync_target(self.online[u], self.target[u])

    def end_iteration(self) -> None:
        pass

    def state_arrays(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for u in range(self.n_uavs):
            for name, value in self.online[u].params.items():
                out[f"agent{u}_online_{name}"] = value
            for name, value in self.target[u].params.items():
                out[f"agent{u}_target_{name}"] = value
        return out

    def meta(self) -> dict:
        return {"kind": self.kind, "n_uavs": self.n_uavs,
                "input_dim": 3 * self.n_uavs,
                "trunk": list(self.online[0].trunk),
                "head_hidden": self.online[0].head_hidden,
                "shapes": {k: list(v.shape) for k, v in self.online[0].shapes().items()}}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for u in range(self.n_uavs):
            for role, nets in (("online", self.online), ("target", self.target)):
                for name in nets[u].params:
                    key = f"agent{u}_{role}_{name}"
                    if key not in arrays:
                        raise CheckpointError(f"checkpoint is missing {key}")
                    incoming = arrays[key]
                    if incoming.shape != nets[u].params[name].shape:
                        raise CheckpointError(
                            f"{key} shape {incoming.shape} does not match "
                            f"{nets[u].params[name].shape}")
                    nets[u].params[name] = incoming.astype(float)


# ---------------------------------------------------------------------------
# Checkpoint container (.npz with a JSON meta record)
# ---------------------------------------------------------------------------

def save_checkpoint(path, learner, schedule: EpsilonSchedule, config_hash: str) -> None:
    """Write learner parameters (64-bit floats), schedule state and config hash."""
    meta = learner.meta()
    meta["schedule"] = {"eps_max": schedule.eps_max, "eps_min": schedule.eps_min,
                        "eps_delta": schedule.eps_delta, "current": schedule.current}
    meta["config_hash"] = config_hash
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in learner.state_arrays().items()}
    np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
             **arrays)


def load_checkpoint(path, learner) -> tuple[EpsilonSchedule, str]:
    """Restore parameters into a learner of matching shape; reject mismatches."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("kind") != learner.kind:
            raise CheckpointError(
                f"checkpoint holds a {meta.get('kind')!r} learner, expected {learner.kind!r}")
        if meta.get("n_uavs") != learner.n_uavs:
            raise CheckpointError(
                f"checkpoint trained for {meta.get('n_uavs')} UAVs, expected {learner.n_uavs}")
        learner.load_arrays({k: data[k] for k in data.files if k != "__meta__"})
    sched = meta["schedule"]
    schedule = EpsilonSchedule(eps_max=sched["eps_max"], eps_min=sched["eps_min"],
                               eps_delta=sched["eps_delta"], current=sched["current"])
    return schedule, meta["config_hash"]
