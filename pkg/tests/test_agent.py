import math

import numpy as np
import pytest

from camsched import agent as A
from camsched import env as E
from camsched import metrics as M
from camsched.agent import Transition
from camsched.env import EnvConfig
from camsched.mlp import QNetwork, ShapeError

from conftest import make_set, make_traj


def fixed_q(q, d=3):
    """Network whose output is the constant vector ``q``."""
    net = QNetwork(d, len(q), (2, 2, 2))
    for p in net.params():
        p[...] = 0.0
    net.biases[-1][:] = q
    return net


def tr(r, ep=0, k=0, terminal=False, s2=None):
    return Transition(np.zeros(3), 1, np.zeros(3) if s2 is None else s2, r, terminal, ep, k)


# ----------------------------------------------------------------- memory

def test_replay_memory_fifo():
    mem = A.ReplayMemory(5)
    for k in range(8):
        mem.append(tr(float(k), k=k))
    assert len(mem) == 5
    assert [t.r for t in mem] == [3.0, 4.0, 5.0, 6.0, 7.0]
    with pytest.raises(IndexError):
        mem[5]


def test_window_stops_at_episode_boundary_and_terminal():
    mem = A.ReplayMemory(10)
    mem.append(tr(1, ep=1, k=0))
    mem.append(tr(2, ep=1, k=1, terminal=True))
    mem.append(tr(3, ep=2, k=0))
    mem.append(tr(4, ep=2, k=1))
    assert [t.r for t in mem.window(0, 3)] == [1, 2]
    assert [t.r for t in mem.window(2, 3)] == [3, 4]
    assert [t.r for t in mem.window(3, 3)] == [4]


# ----------------------------------------------------------------- actions

def test_select_action_greedy_and_ties():
    g = np.random.default_rng(0)
    assert A.select_action(fixed_q([0.1, 0.9, 0.3]), np.zeros(3), 0.0, g) == 2
    assert A.select_action(fixed_q([0.5, 0.5, 0.1]), np.zeros(3), 0.0, g) == 1


def test_select_action_uniform_at_eps_one():
    g = np.random.default_rng(1)
    net = fixed_q([0.0, 5.0, 0.0, 0.0])
    n = 100_000
    counts = np.bincount([A.select_action(net, np.zeros(3), 1.0, g) for _ in range(n)],
                         minlength=5)[1:]
    sd = math.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n / 4) < 3 * sd)


def test_epsilon_schedule():
    assert A.epsilon_schedule(1) == 1.0 and A.epsilon_schedule(2) == 1.0
    assert A.epsilon_schedule(3) == pytest.approx(0.9102392266, abs=1e-9)
    assert A.epsilon_schedule(10 ** 9, 0.05) == 0.05
    eps = [A.epsilon_schedule(e) for e in range(1, 5000)]
    assert all(a >= b for a, b in zip(eps, eps[1:]))
    assert min(eps) >= 0.05 and max(eps) <= 1.0
    with pytest.raises(ValueError):
        A.epsilon_schedule(0)


# ------------------------------------------------------------ n-step target

def test_nstep_worked_example():
    win = [tr(0.1, k=0), tr(0.1, k=1), tr(1.0, k=2)]
    y = A.nstep_target(win, 0.9, fixed_q([0.5, 0.2]))
    assert y == pytest.approx(1.3645, abs=1e-12)


def test_nstep_one_step_and_terminal():
    net = fixed_q([0.5, 0.2])
    assert A.nstep_target([tr(0.3)], 0.9, net) == pytest.approx(0.3 + 0.9 * 0.5, abs=1e-15)
    win = [tr(0.1, k=0), tr(0.1, k=1, terminal=True)]
    assert A.nstep_target(win, 0.9, net) == pytest.approx(0.1 + 0.9 * 0.1, abs=1e-15)


def test_nstep_gamma_zero_is_first_reward():
    win = [tr(0.7, k=0), tr(-1.0, k=1), tr(0.1, k=2)]
    assert A.nstep_target(win, 1e-300, fixed_q([0.0, 0.0])) == 0.7


def test_nstep_rejects_gaps():
    with pytest.raises(ValueError):
        A.nstep_target([tr(0.1, k=0), tr(0.1, k=2)], 0.9, fixed_q([0.0]))
    with pytest.raises(ValueError):
        A.nstep_target([tr(0.1, ep=1, k=0), tr(0.1, ep=2, k=1)], 0.9, fixed_q([0.0]))


def test_batch_targets_agree_with_nstep_target():
    g = np.random.default_rng(0)
    net = QNetwork(3, 2, (4, 4, 4), g)
    mem = A.ReplayMemory(50)
    for ep in range(4):
        for k in range(6):
            mem.append(Transition(g.normal(size=3), 1, g.normal(size=3), float(g.normal()),
                                  k == 5, ep, k))
    idx = np.arange(len(mem))
    _, _, ys = A._batch_targets(mem, idx, 3, 0.9, net)
    for i in idx:
        assert ys[i] == pytest.approx(A.nstep_target(mem.window(int(i), 3), 0.9, net), abs=1e-12)


# ------------------------------------------------------------------ train

def small_ts():
    return make_set(2, make_traj(1, 0, [1, 1, 0, 0, 2, 2]), make_traj(2, 3, [2, 2, 0, 1]))


def test_train_log_and_determinism(tmp_path):
    ts = small_ts()
    cfg = A.TrainConfig(epochs=30, seed=4, batch_size=8)
    r1 = A.train(ts, EnvConfig(), cfg)
    r2 = A.train(ts, EnvConfig(), cfg)
    assert len(r1.log) == 30 and r1.log[0]["epoch"] == 1
    r1.policy.save(tmp_path / "a.json", r1.adam)
    r2.policy.save(tmp_path / "b.json", r2.adam)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    r1.write_log(tmp_path / "log.csv")
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "epoch,epsilon,episode_reward,running_reward" and len(lines) == 31


def test_train_rejects_mismatched_network():
    with pytest.raises(ShapeError):
        A.train(small_ts(), EnvConfig(), A.TrainConfig(epochs=1), init_net=QNetwork(5, 3))
    with pytest.raises(ValueError):
        A.TrainConfig(epochs=0)


def test_policy_round_trip(tmp_path):
    res = A.train(small_ts(), EnvConfig(history_len=4), A.TrainConfig(epochs=3))
    res.policy.save(tmp_path / "p.json")
    pol = A.Policy.load(tmp_path / "p.json", {"num_cameras": 2, "history_len": 4})
    assert pol.signature == res.policy.signature
    with pytest.raises(ShapeError):
        A.Policy.load(tmp_path / "p.json", {"history_len": 20})


# -------------------------------------------------------------- inference

def oracle(traj):
    """Always poll the true camera at t+1, the dummy action in gaps."""
    return lambda s: traj.camera_at(s.t + 1) or 3


def test_run_policy_length_and_identity():
    ts = small_ts()
    for tid in ts.ids:
        traj = ts[tid]
        pred, recs = A.run_policy(oracle(traj), ts, tid, EnvConfig())
        assert len(pred) == len(recs) == traj.end_t - traj.start_t
        assert list(pred.cameras) == [traj.camera_at(t) for t in pred.t]
        o = M.SelectionOutcome.from_records(traj, recs, 2)
        assert M.apr(o).accuracy == 1.0


def test_run_policy_checks_signature():
    res = A.train(small_ts(), EnvConfig(history_len=4), A.TrainConfig(epochs=2))
    with pytest.raises(E.ContractError):
        A.run_policy(res.policy, small_ts(), 1, EnvConfig(history_len=5))


def test_run_policy_applies_time_limit():
    ts = make_set(3, make_traj(1, 0, [1] + [0] * 12 + [2]))
    always_3 = lambda s: 3
    on = A.run_policy(always_3, ts, 1, EnvConfig(time_limit=4))[1]
    off = A.run_policy(always_3, ts, 1, EnvConfig(time_limit=4, use_time_limit=False))[1]
    assert max(r.tau for r in on) <= 4
    assert [r.tau for r in off] == list(range(1, 14))


# ---------------------------------------------------------------- tabular

def test_tabular_alpha_zero_keeps_zeros(tiny):
    _, ts = tiny
    table = A.tabular_train(ts, EnvConfig(time_limit=10), A.TrainConfig(epochs=20, alpha=0.0))
    assert len(table) == 0
    assert not table.get((1, 0, 0)).any()


def test_capacity_error_for_fine_discretization():
    net_ts = make_set(8, make_traj(1, 0, [1, 1]))
    fine = A.Discretizer(obs_depth=3, bbox_bins=4, history_depth=2)
    with pytest.raises(A.CapacityError, match="1,000,000"):
        A.tabular_train(net_ts, EnvConfig(), A.TrainConfig(epochs=1), fine)


def test_qtable_budget():
    t = A.QTable(3, key_budget=2)
    t.row("a")
    t.row("b")
    with pytest.raises(A.CapacityError):
        t.row("c")


def test_value_iteration_on_tiny_mdp(tiny):
    _, ts = tiny
    cfg = EnvConfig(time_limit=10)
    q = A.value_iteration(A.enumerate_mdp(ts, cfg), 0.99)
    states = A.greedy_rollout_states(q.greedy, ts, cfg)
    d = A.Discretizer()
    actions = [q.greedy(d.key(s, ts.network, cfg)) for s in states]
    assert actions == [1, 2, 2, 2, 2]
    # following the optimal policy never earns a negative reward
    g = np.random.default_rng(0)
    rewards = []
    for s in states:
        rewards.append(E.step(s, q.greedy(d.key(s, ts.network, cfg)), ts, cfg, g)[1])
    assert min(rewards) >= 0.1


def test_tabular_matches_value_iteration(tiny):
    _, ts = tiny
    cfg = EnvConfig(time_limit=10)
    q = A.value_iteration(A.enumerate_mdp(ts, cfg), 0.99)
    tab = A.tabular_train(ts, cfg, A.TrainConfig(epochs=3000, seed=1, alpha=0.2,
                                                 random_jumps=False))
    d = A.Discretizer()
    for s in A.greedy_rollout_states(q.greedy, ts, cfg):
        k = d.key(s, ts.network, cfg)
        assert tab.greedy(k) == q.greedy(k)


def test_value_iteration_pools_aliased_states():
    mdp = A.DiscreteMDP(2, {"k": [[(1.0, None), (0.0, None)], [(0.5, None)]]}, [])
    q = A.value_iteration(mdp, 0.9)
    assert np.allclose(q.get("k"), [0.5, 0.5])
