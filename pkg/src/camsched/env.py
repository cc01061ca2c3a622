"""Camera-selection MDP: state, presence oracle, reward and transitions.

Actions are ``1..N`` (poll that camera) and ``N + 1`` (poll nothing, the
target is believed to be in transit). A state at global time ``t`` holds what
is known after the poll at ``t``; the next action decides the poll at ``t + 1``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .netmodel import NULL_CAMERA, CameraNetwork, Observation, Trajectory, TrajectorySet

NO_ACTION = 0
N_OBS = 3
RESET_BOX = (0.5, 0.5, 0.1, 0.1)
MAX_JUMP = 20
POLL_LOG_HEADER = ("t", "polled_camera", "frames_polled", "present", "corrupted", "tau")


class ContractError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnvConfig:
    """Environment parameters.

    ``time_limit`` is T_max: it scales the encoded tau and is the default
    reward lookahead. ``use_time_limit=False`` keeps the scale but never
    randomizes the state.
    """

    err_rate: float = 0.0
    time_limit: int = 30
    history_len: int = 20
    reward_horizon: int | None = None
    use_time_limit: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.err_rate <= 1.0:
            raise ValueError("err_rate must be in [0, 1]")
        if self.time_limit < 1 or self.history_len < 1:
            raise ValueError("time_limit and history_len must be >= 1")
        if self.reward_horizon is not None and self.reward_horizon < 1:
            raise ValueError("reward_horizon must be >= 1")

    @property
    def horizon(self) -> int:
        return self.reward_horizon or self.time_limit


@dataclass(frozen=True)
class AgentState:
    x: tuple[Observation, Observation, Observation]
    h: tuple[int, ...]
    tau: int
    t: int
    target_id: int


class PresenceResult(NamedTuple):
    present: bool
    bbox: tuple | None
    corrupted: bool


class PollRecord(NamedTuple):
    t: int
    polled: tuple[int, ...]
    present: bool
    corrupted: bool
    tau: int
    camera: int = NULL_CAMERA
    bbox: tuple | None = None

    @property
    def frames_polled(self) -> int:
        return len(self.polled)

    @property
    def polled_camera(self) -> int:
        return self.polled[0] if len(self.polled) == 1 else NULL_CAMERA


def feature_dim(num_cameras: int, history_len: int) -> int:
    return N_OBS * (num_cameras + 4) + history_len * (num_cameras + 1) + 1


def init_episode(traj: Trajectory, cfg: EnvConfig) -> AgentState:
    first = traj.obs(traj.start_t)
    return AgentState((first,) * N_OBS, (NO_ACTION,) * cfg.history_len, 0, traj.start_t,
                      traj.target_id)


def encode_state(s: AgentState, net: CameraNetwork, cfg: EnvConfig) -> np.ndarray:
    """``[obs1 | obs2 | obs3 | history oldest->newest | tau / T_max]``."""
    n = net.num_cameras
    out = np.zeros(feature_dim(n, len(s.h)))
    k = 0
    for ob in s.x:
        if ob.camera != NULL_CAMERA:
            out[k + ob.camera - 1] = 1.0
            fw, fh = net.frame_size(ob.camera)
            x, y, w, h = ob.bbox
            out[k + n:k + n + 4] = (x / fw, y / fh, w / fw, h / fh)
        k += n + 4
    for a in s.h:
        if a != NO_ACTION:
            out[k + a - 1] = 1.0
        k += n + 1
    out[k] = min(1.0, s.tau / cfg.time_limit)
    return out


def presence_query(net: CameraNetwork, traj_set: TrajectorySet, camera: int, t: int,
                   target_id: int, cfg: EnvConfig, rng: np.random.Generator) -> PresenceResult:
    """Simulated re-identification: ground truth, corrupted with prob ``err_rate``.

    When the error fires the answer is the box of another target visible in
    the same frame (uniform choice), or a miss if there is none.
    """
    if not 1 <= camera <= net.num_cameras:
        raise ContractError(f"presence query on camera {camera}")
    if cfg.err_rate > 0 and rng.random() < cfg.err_rate:
        others = [bb for tid, bb in traj_set.visible_in(camera, t) if tid != target_id]
        if others:
            return PresenceResult(True, others[int(rng.integers(len(others)))], True)
        return PresenceResult(False, None, True)
    bb = traj_set[target_id].bbox_in(camera, t)
    return PresenceResult(bb is not None, bb, False)


def compute_reward(s: AgentState, a: int, traj: Trajectory, cfg: EnvConfig, num_cameras: int) -> float:
    if a <= num_cameras:
        for dt in range(1, cfg.horizon + 1):
            if traj.in_camera(a, s.t + dt):
                return 1.0 / dt
        return -1.0
    if traj.camera_at(s.t + 1) == NULL_CAMERA:
        return 0.1
    return -1.0


def sample_train_jump(rng: np.random.Generator) -> int:
    """Occlusion jump: uniform on 1..20 with prob 0.5, else 1."""
    if rng.random() < 0.5:
        return int(rng.integers(1, MAX_JUMP + 1))
    return 1


def is_terminal(s: AgentState, traj: Trajectory) -> bool:
    return s.t >= traj.end_t


def step(s: AgentState, a: int, traj_set: TrajectorySet, cfg: EnvConfig,
         rng: np.random.Generator, mode: str = "eval"):
    """Advance one decision. Returns ``(next_state, reward, terminal, PollRecord)``."""
    net = traj_set.network
    n = net.num_cameras
    traj = traj_set[s.target_id]
    if is_terminal(s, traj):
        raise ContractError(f"step on terminal state (t={s.t}, end_t={traj.end_t})")
    if not 1 <= a <= n + 1:
        raise ContractError(f"action {a} outside 1..{n + 1}")
    r = compute_reward(s, a, traj, cfg, n)
    # The poll looks at t + 1. In train mode a miss may be stretched into a
    # simulated occlusion: the clock and tau both skip ahead by the jump.
    jump = sample_train_jump(rng) if mode == "train" else 1
    x, tau = s.x, s.tau + jump
    if a <= n:
        res = presence_query(net, traj_set, a, s.t + 1, s.target_id, cfg, rng)
        if res.present:
            x = (*s.x[1:], Observation(a, res.bbox))
            tau, jump = 0, 1
        rec = PollRecord(s.t + 1, (a,), res.present, res.corrupted, tau,
                         a if res.present else NULL_CAMERA, res.bbox)
    else:
        rec = PollRecord(s.t + 1, (), False, False, tau)
    h = (*s.h[1:], a)
    nxt = AgentState(x, h, tau, min(s.t + jump, traj.end_t), s.target_id)
    return nxt, r, is_terminal(nxt, traj), rec


def apply_time_limit(s: AgentState, cfg: EnvConfig, net: CameraNetwork,
                     rng: np.random.Generator) -> AgentState:
    """Replace the newest observation by a random camera with a centred box."""
    if s.tau < cfg.time_limit:
        return s
    cam = int(rng.integers(1, net.num_cameras + 1))
    fw, fh = net.frame_size(cam)
    bx, by, bw, bh = RESET_BOX
    ob = Observation(cam, (bx * fw, by * fh, bw * fw, bh * fh))
    return replace(s, x=(*s.x[:-1], ob), tau=0)


def write_poll_log(records: Sequence[PollRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(POLL_LOG_HEADER)
        for r in records:
            polled = ";".join(str(c) for c in r.polled) if len(r.polled) > 1 else r.polled_camera
            w.writerow([r.t, polled, r.frames_polled, int(r.present), int(r.corrupted), r.tau])


def read_poll_log(path) -> list[PollRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cams = tuple(int(c) for c in row["polled_camera"].split(";"))
            polled = () if cams == (NULL_CAMERA,) else cams
            out.append(PollRecord(int(row["t"]), polled, row["present"] == "1",
                                  row["corrupted"] == "1", int(row["tau"])))
    return out
