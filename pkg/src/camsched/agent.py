"""Deep Q-learning with n-step targets, greedy rollouts, and the tabular variant.

The tabular learner and :func:`value_iteration` work on a discretized state
(last camera, bucketed tau, last action by default) and serve as the exact
reference for the neural policy on small networks.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import env as E
from .env import AgentState, EnvConfig, PollRecord
from .mlp import AdamState, QNetwork, ShapeError, adam_step, backward, forward, load_model, save_model
from .netmodel import NULL_CAMERA, TrajectorySet

log = logging.getLogger(__name__)

TRAIN_LOG_HEADER = ("epoch", "epsilon", "episode_reward", "running_reward")


class CapacityError(MemoryError):
    pass


class Transition(NamedTuple):
    s: np.ndarray
    a: int
    s2: np.ndarray
    r: float
    terminal: bool
    episode_id: int
    step_index: int


class ReplayMemory:
    """Bounded FIFO of transitions; the oldest entry is evicted on overflow."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf: list[Transition] = []
        self._head = 0

    def __len__(self) -> int:
        return len(self._buf)

    def append(self, tr: Transition) -> None:
        if len(self._buf) < self.capacity:
            self._buf.append(tr)
        else:
            self._buf[self._head] = tr
            self._head = (self._head + 1) % self.capacity

    def __getitem__(self, i: int) -> Transition:
        if not 0 <= i < len(self._buf):
            raise IndexError(i)
        if len(self._buf) < self.capacity:
            return self._buf[i]
        return self._buf[(self._head + i) % self.capacity]

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def window(self, i: int, n: int) -> list[Transition]:
        """Up to ``n`` consecutive transitions of one episode starting at ``i``."""
        out = [self[i]]
        j = i + 1
        while len(out) < n and not out[-1].terminal and j < len(self):
            nxt = self[j]
            if nxt.episode_id != out[-1].episode_id:
                break
            out.append(nxt)
            j += 1
        return out


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    n_step: int = 3
    lr: float = 1e-3
    batch_size: int = 64
    capacity: int = 100_000
    epochs: int = 1000
    eps_floor: float = 0.05
    seed: int = 0
    hidden: tuple[int, ...] = (128, 128, 64)
    updates_per_episode: int = 1
    random_jumps: bool = True
    alpha: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.n_step < 1 or self.batch_size < 1 or self.capacity < 1:
            raise ValueError("n_step, batch_size and capacity must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.eps_floor <= 1.0:
            raise ValueError("eps_floor must be in [0, 1]")
        if self.updates_per_episode < 1:
            raise ValueError("updates_per_episode must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")


@dataclass
class Policy:
    net: QNetwork
    num_cameras: int
    history_len: int
    time_limit: int

    @property
    def signature(self) -> dict:
        return {"num_cameras": self.num_cameras, "history_len": self.history_len,
                "time_limit": self.time_limit, "feature_dim": self.net.input_dim}

    def q_values(self, fv) -> np.ndarray:
        return forward(self.net, fv)

    def act(self, fv) -> int:
        return int(np.argmax(forward(self.net, fv))) + 1

    def save(self, path, adam: AdamState | None = None, meta: dict | None = None) -> None:
        save_model(path, self.net, adam, self.signature, meta)

    @classmethod
    def load(cls, path, expect: dict | None = None) -> "Policy":
        net, _, sig, _ = load_model(path, expect)
        return cls(net, sig["num_cameras"], sig["history_len"], sig["time_limit"])


def select_action(policy, fv, epsilon: float, rng: np.random.Generator) -> int:
    """Uniform over ``1..N+1`` with probability ``epsilon``, else greedy (lowest index on ties)."""
    q = policy.q_values(fv) if isinstance(policy, Policy) else forward(policy, fv)
    if epsilon > 0 and rng.random() < epsilon:
        return int(rng.integers(1, len(q) + 1))
    return int(np.argmax(q)) + 1


def epsilon_schedule(epoch: int, floor: float = 0.05) -> float:
    if epoch < 1:
        raise ValueError("epoch must be >= 1")
    if epoch <= 2:
        return 1.0
    return float(min(1.0, max(floor, 1.0 / math.log(epoch))))


def nstep_target(window: Sequence[Transition], gamma: float, net: QNetwork | None) -> float:
    """Discounted sum of the window's rewards plus the bootstrapped tail value.

    The tail ``gamma**m * max_a Q(s'_m, a)`` is dropped when the window ends
    on a terminal transition.
    """
    if not window:
        raise ValueError("empty window")
    for prev, cur in zip(window[:-1], window[1:]):
        if (cur.episode_id != prev.episode_id or cur.step_index != prev.step_index + 1
                or prev.terminal):
            raise ValueError("window transitions are not consecutive within one episode")
    y = 0.0
    for k, tr in enumerate(window):
        y += gamma ** k * tr.r
    last = window[-1]
    if not last.terminal:
        y += gamma ** len(window) * float(np.max(forward(net, last.s2)))
    return y


def _batch_targets(memory: ReplayMemory, idx, n: int, gamma: float, net: QNetwork):
    xs, acts, ys, boot_states, boot_rows, boot_disc = [], [], [], [], [], []
    for row, i in enumerate(idx):
        win = memory.window(int(i), n)
        y = 0.0
        for k, tr in enumerate(win):
            y += gamma ** k * tr.r
        if not win[-1].terminal:
            boot_states.append(win[-1].s2)
            boot_rows.append(row)
            boot_disc.append(gamma ** len(win))
        first = win[0]
        xs.append(first.s)
        acts.append(first.a)
        ys.append(y)
    ys = np.array(ys)
    if boot_states:
        qmax = forward(net, np.array(boot_states)).max(axis=1)
        ys[boot_rows] += np.array(boot_disc) * qmax
    return np.array(xs), np.array(acts), ys


@dataclass
class TrainResult:
    policy: Policy
    adam: AdamState
    log: list[dict] = field(default_factory=list)

    def write_log(self, path) -> None:
        write_train_log(self.log, path)


def write_train_log(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAIN_LOG_HEADER)
        for r in rows:
            w.writerow([r["epoch"], repr(r["epsilon"]), repr(r["episode_reward"]),
                        repr(r["running_reward"])])


def train(traj_train: TrajectorySet, env_cfg: EnvConfig, train_cfg: TrainConfig,
          init_net: QNetwork | None = None, progress: Callable[[dict], None] | None = None) -> TrainResult:
    """Deep Q-learning with n-step targets.

    Each epoch runs one episode on the next training target (round robin)
    with epsilon-greedy actions and occlusion jumps, stores its transitions,
    then samples minibatches from replay memory for ``updates_per_episode``
    Adam steps.
    """
    if len(traj_train) == 0:
        raise ValueError("empty training set")
    net_model = traj_train.network
    n = net_model.num_cameras
    dim = E.feature_dim(n, env_cfg.history_len)
    init_ss, env_ss, batch_ss = np.random.SeedSequence(train_cfg.seed).spawn(3)
    if init_net is None:
        qnet = QNetwork(dim, n + 1, train_cfg.hidden, np.random.default_rng(init_ss))
    else:
        if init_net.input_dim != dim or init_net.num_actions != n + 1:
            raise ShapeError(f"network expects {init_net.input_dim} inputs/{init_net.num_actions} "
                             f"actions; data gives {dim}/{n + 1}")
        qnet = init_net.copy()
    adam = AdamState.for_network(qnet, lr=train_cfg.lr)
    env_rng = np.random.default_rng(env_ss)
    batch_rng = np.random.default_rng(batch_ss)
    memory = ReplayMemory(train_cfg.capacity)
    mode = "train" if train_cfg.random_jumps else "eval"
    ids = traj_train.ids
    rows = []
    running = None
    for epoch in range(1, train_cfg.epochs + 1):
        eps = epsilon_schedule(epoch, train_cfg.eps_floor)
        traj = traj_train[ids[(epoch - 1) % len(ids)]]
        s = E.init_episode(traj, env_cfg)
        fv = E.encode_state(s, net_model, env_cfg)
        total = 0.0
        k = 0
        terminal = E.is_terminal(s, traj)
        while not terminal:
            a = select_action(qnet, fv, eps, env_rng)
            s, r, terminal, _ = E.step(s, a, traj_train, env_cfg, env_rng, mode)
            fv2 = E.encode_state(s, net_model, env_cfg)
            memory.append(Transition(fv, a, fv2, r, terminal, epoch, k))
            fv = fv2
            total += r
            k += 1
        if len(memory):
            for _ in range(train_cfg.updates_per_episode):
                size = min(train_cfg.batch_size, len(memory))
                idx = batch_rng.choice(len(memory), size=size, replace=False)
                x, acts, ys = _batch_targets(memory, idx, train_cfg.n_step, train_cfg.gamma, qnet)
                adam_step(qnet, backward(qnet, x, acts, ys), adam)
        running = total if running is None else 0.95 * running + 0.05 * total
        row = {"epoch": epoch, "epsilon": eps, "episode_reward": total, "running_reward": running}
        rows.append(row)
        if progress is not None:
            progress(row)
    policy = Policy(qnet, n, env_cfg.history_len, env_cfg.time_limit)
    return TrainResult(policy, adam, rows)


# ---------------------------------------------------------------- inference

@dataclass
class PredictedTrajectory:
    """Believed location per decision step (``NULL_CAMERA`` when not found)."""

    target_id: int
    t: np.ndarray
    cameras: np.ndarray
    boxes: np.ndarray

    @classmethod
    def from_records(cls, target_id: int, records: Sequence[PollRecord]) -> "PredictedTrajectory":
        t = np.array([r.t for r in records], dtype=np.int64)
        cams = np.array([r.camera for r in records], dtype=np.int64)
        boxes = np.array([r.bbox if r.bbox is not None else (np.nan,) * 4 for r in records],
                         dtype=np.float64).reshape(-1, 4)
        return cls(target_id, t, cams, boxes)

    def __len__(self) -> int:
        return len(self.t)


def _check_signature(policy: Policy, net_model, env_cfg: EnvConfig):
    if policy.num_cameras != net_model.num_cameras or policy.history_len != env_cfg.history_len:
        raise E.ContractError(
            f"policy built for N={policy.num_cameras}, L={policy.history_len}; "
            f"environment has N={net_model.num_cameras}, L={env_cfg.history_len}")


def run_policy(policy, traj_set: TrajectorySet, target_id: int, env_cfg: EnvConfig,
               rng: np.random.Generator | None = None):
    """Greedy rollout over one target's trajectory.

    ``policy`` is a :class:`Policy` or any callable ``f(state) -> action``.
    Returns ``(PredictedTrajectory, list[PollRecord])`` with one entry per
    decision, i.e. per timestep after the first sighting.
    """
    net_model = traj_set.network
    traj = traj_set[target_id]
    if rng is None:
        rng = np.random.default_rng([env_cfg.seed, target_id])
    if isinstance(policy, Policy):
        _check_signature(policy, net_model, env_cfg)
        choose = lambda s: policy.act(E.encode_state(s, net_model, env_cfg))
    else:
        choose = policy
    s = E.init_episode(traj, env_cfg)
    records = []
    terminal = E.is_terminal(s, traj)
    while not terminal:
        if env_cfg.use_time_limit and s.tau >= env_cfg.time_limit:
            s = E.apply_time_limit(s, env_cfg, net_model, rng)
        s, _, terminal, rec = E.step(s, choose(s), traj_set, env_cfg, rng, "eval")
        records.append(rec)
    return PredictedTrajectory.from_records(target_id, records), records


# ------------------------------------------------------------------ tabular

@dataclass(frozen=True)
class Discretizer:
    """Maps an :class:`AgentState` to a hashable key.

    Default key: newest observed camera, tau bucket (width ``T_max / 10``,
    capped at ``tau_buckets - 1``) and the last action. Larger ``obs_depth``,
    ``bbox_bins`` and ``history_depth`` give finer (and much larger) keys.
    """

    obs_depth: int = 1
    bbox_bins: int = 0
    history_depth: int = 1
    tau_buckets: int = 11

    def tau_width(self, cfg: EnvConfig) -> int:
        return max(1, cfg.time_limit // 10)

    def key(self, s: AgentState, net_model, cfg: EnvConfig) -> tuple:
        parts = []
        for ob in s.x[len(s.x) - self.obs_depth:]:
            parts.append(ob.camera)
            if self.bbox_bins and ob.camera != NULL_CAMERA:
                fw, fh = net_model.frame_size(ob.camera)
                x, y, w, h = ob.bbox
                parts.extend(min(self.bbox_bins - 1, int(v * self.bbox_bins))
                             for v in (x / fw, y / fh, w / fw, h / fh))
        parts.append(min(self.tau_buckets - 1, s.tau // self.tau_width(cfg)))
        parts.extend(s.h[len(s.h) - self.history_depth:])
        return tuple(parts)

    def size(self, num_cameras: int) -> int:
        """Upper bound on the number of distinct keys."""
        per_obs = (num_cameras + 1) * max(1, self.bbox_bins) ** 4
        return per_obs ** self.obs_depth * self.tau_buckets * (num_cameras + 2) ** self.history_depth


class QTable:
    """Discretized action values; missing keys read as zeros."""

    def __init__(self, num_actions: int, key_budget: int = 10 ** 6):
        self.num_actions = num_actions
        self.key_budget = key_budget
        self.values: dict[tuple, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.values)

    def get(self, key) -> np.ndarray:
        v = self.values.get(key)
        return np.zeros(self.num_actions) if v is None else v

    def row(self, key) -> np.ndarray:
        v = self.values.get(key)
        if v is None:
            if len(self.values) >= self.key_budget:
                raise CapacityError(f"Q-table exceeded its budget of {self.key_budget} keys")
            v = self.values[key] = np.zeros(self.num_actions)
        return v

    def greedy(self, key) -> int:
        return int(np.argmax(self.get(key))) + 1


def tabular_train(traj_train: TrajectorySet, env_cfg: EnvConfig, train_cfg: TrainConfig,
                  discretizer: Discretizer | None = None, key_budget: int = 10 ** 6) -> QTable:
    """One-step Q-learning on discretized states, same episodes as :func:`train`."""
    disc = discretizer or Discretizer()
    net_model = traj_train.network
    n = net_model.num_cameras
    space = disc.size(n)
    if space > key_budget:
        raise CapacityError(f"discretized state space has up to {space:,} keys; "
                            f"budget is {key_budget:,}")
    table = QTable(n + 1, key_budget)
    rng = np.random.default_rng(train_cfg.seed)
    mode = "train" if train_cfg.random_jumps else "eval"
    ids = traj_train.ids
    alpha, gamma = train_cfg.alpha, train_cfg.gamma
    for epoch in range(1, train_cfg.epochs + 1):
        eps = epsilon_schedule(epoch, train_cfg.eps_floor)
        traj = traj_train[ids[(epoch - 1) % len(ids)]]
        s = E.init_episode(traj, env_cfg)
        key = disc.key(s, net_model, env_cfg)
        terminal = E.is_terminal(s, traj)
        while not terminal:
            q = table.get(key)
            if eps > 0 and rng.random() < eps:
                a = int(rng.integers(1, n + 2))
            else:
                a = int(np.argmax(q)) + 1
            s, r, terminal, _ = E.step(s, a, traj_train, env_cfg, rng, mode)
            key2 = disc.key(s, net_model, env_cfg)
            target = r if terminal else r + gamma * float(np.max(table.get(key2)))
            if alpha > 0:
                row = table.row(key)
                row[a - 1] += alpha * (target - row[a - 1])
            key = key2
    return table


@dataclass
class DiscreteMDP:
    """Discretized MDP: ``outcomes[key][a-1]`` lists ``(reward, next_key | None)``.

    Several true states can share a key; their outcomes are pooled with equal
    weight.
    """

    num_actions: int
    outcomes: dict[tuple, list[list[tuple[float, tuple | None]]]]
    initial: list[AgentState]


def enumerate_mdp(traj_set: TrajectorySet, env_cfg: EnvConfig, discretizer: Discretizer | None = None,
                  max_states: int = 200_000) -> DiscreteMDP:
    """Enumerate every state reachable under any action sequence (error-free presence)."""
    disc = discretizer or Discretizer()
    cfg = EnvConfig(0.0, env_cfg.time_limit, env_cfg.history_len, env_cfg.reward_horizon,
                    env_cfg.use_time_limit, env_cfg.seed)
    net_model = traj_set.network
    n_act = net_model.num_cameras + 1
    rng = np.random.default_rng(0)
    outcomes: dict[tuple, list[list]] = {}
    initial = []
    seen: set = set()
    for traj in traj_set:
        s0 = E.init_episode(traj, cfg)
        initial.append(s0)
        stack = [s0]
        while stack:
            s = stack.pop()
            if s in seen or E.is_terminal(s, traj):
                continue
            seen.add(s)
            if len(seen) > max_states:
                raise CapacityError(f"more than {max_states} reachable states")
            rows = outcomes.setdefault(disc.key(s, net_model, cfg), [[] for _ in range(n_act)])
            for a in range(1, n_act + 1):
                s2, r, terminal, _ = E.step(s, a, traj_set, cfg, rng, "eval")
                rows[a - 1].append((r, None if terminal else disc.key(s2, net_model, cfg)))
                if not terminal:
                    stack.append(s2)
    return DiscreteMDP(n_act, outcomes, initial)


def value_iteration(mdp: DiscreteMDP, gamma: float, tol: float = 1e-12,
                    max_iter: int = 100_000) -> QTable:
    table = QTable(mdp.num_actions, key_budget=max(1, len(mdp.outcomes)))
    for key in mdp.outcomes:
        table.row(key)
    for _ in range(max_iter):
        delta = 0.0
        for key, rows in mdp.outcomes.items():
            q = table.values[key]
            for a, outs in enumerate(rows):
                v = sum(r + (0.0 if k2 is None else gamma * float(np.max(table.get(k2))))
                        for r, k2 in outs) / len(outs)
                delta = max(delta, abs(v - q[a]))
                q[a] = v
        if delta < tol:
            break
    return table


def greedy_rollout_states(choose_key: Callable[[tuple], int], traj_set: TrajectorySet,
                          env_cfg: EnvConfig, discretizer: Discretizer | None = None) -> list[AgentState]:
    """States visited when every target is followed with ``choose_key(key)`` (no errors)."""
    disc = discretizer or Discretizer()
    net_model = traj_set.network
    cfg = EnvConfig(0.0, env_cfg.time_limit, env_cfg.history_len, env_cfg.reward_horizon,
                    env_cfg.use_time_limit, env_cfg.seed)
    rng = np.random.default_rng(0)
    visited = []
    for traj in traj_set:
        s = E.init_episode(traj, cfg)
        while not E.is_terminal(s, traj):
            visited.append(s)
            s, _, _, _ = E.step(s, choose_key(disc.key(s, net_model, cfg)), traj_set, cfg, rng, "eval")
    return visited
