"""
Training a scheduler
====================

A short DQN run on a 4-camera chain and a comparison against the
exhaustive search. A few hundred epochs is enough to see the policy stop
polling every camera; the acceptance tests train for much longer.
"""

# %%
import time

from camsched import agent as A
from camsched import baselines as B
from camsched import metrics as M
from camsched.env import EnvConfig
from camsched.netmodel import SynthConfig, generate_synthetic, split_train_test

net, ts = generate_synthetic(SynthConfig(num_cameras=4, num_targets=60, dwell_mean=20,
                                         transit_mean=6, transit_std=2, seed=1))
train, test = split_train_test(ts, 0.5, seed=1)
cfg = EnvConfig(time_limit=20, history_len=10)

# %%
t0 = time.time()
res = A.train(train, cfg, A.TrainConfig(epochs=600, seed=1, gamma=0.9, updates_per_episode=4,
                                        hidden=(64, 64, 32)))
print(f"{time.time() - t0:.0f}s, last running reward {res.log[-1]['running_reward']:.2f}")

# %%
# the running reward climbs as epsilon decays
for row in res.log[::100]:
    print(row["epoch"], round(row["epsilon"], 3), round(row["running_reward"], 2))


# %%
def score(run, mode):
    reports = []
    for tid in test.ids:
        pred, recs = run(tid)
        o = M.SelectionOutcome.from_records(test[tid], recs, 4)
        reports.append(M.target_report(o, mode, pred, test[tid]))
    return M.aggregate(reports, mode)


for mode in ("all", "ict"):
    dqn = score(lambda tid: A.run_policy(res.policy, test, tid, cfg), mode)
    exh = score(lambda tid: B.exhaustive_policy(test, tid, cfg), mode)
    print(f"{mode}: dqn R={dqn.recall:.3f} F={dqn.frames_polled}   "
          f"exhaustive R={exh.recall:.3f} F={exh.frames_polled}")

# %%
# one target around its first handover: which camera was polled, was the target there
pred, recs = A.run_policy(res.policy, test, test.ids[0], cfg)
first_miss = next((i for i, r in enumerate(recs) if not r.present), 0)
for r in recs[max(0, first_miss - 2):first_miss + 20]:
    print(r.t, r.polled, "hit" if r.present else "-", "tau", r.tau)
