"""
Scoring a camera schedule
=========================

Accuracy, precision, recall and the frame count on a hand-written case,
then the same numbers for the exhaustive and neighbor searches.
"""

# %%
import numpy as np

from camsched import baselines as B
from camsched import metrics as M
from camsched.netmodel import SynthConfig, generate_synthetic

# ground truth camera per step (0 = in transit) and the camera we polled
g = [1, 0, 2]
p = [1, 1, 2]
o = M.SelectionOutcome.from_sequences(g, p, num_cameras=2)
print(M.apr(o))
print("wasted frames:", M.frames_polled(o))

# %%
# the ict view only keeps transition steps plus the re-acquisition step
g = np.array([1, 1, 0, 0, 2, 2])
print(M.ict_mask(g))

# %%
# two searches on the same targets
net, ts = generate_synthetic(SynthConfig(num_cameras=4, num_targets=30, seed=5))
for name, run in [("exhaustive", lambda tid: B.exhaustive_policy(ts, tid)),
                  ("neighbor", lambda tid: B.neighbor_policy(ts, tid, net))]:
    reports = []
    for tid in ts.ids:
        pred, recs = run(tid)
        o = M.SelectionOutcome.from_records(ts[tid], recs, 4)
        reports.append(M.target_report(o, "ict", pred, ts[tid]))
    agg = M.aggregate(reports, "ict", label=name)
    print(agg.to_text().splitlines()[-1], " <-", name)

# %%
# where did the polls go while the target was between cameras?
outcomes = []
for tid in ts.ids:
    _, recs = B.neighbor_policy(ts, tid, net)
    outcomes.append(M.restrict_mode(M.SelectionOutcome.from_records(ts[tid], recs, 4), "ict"))
mat, empty = M.confusion_matrix(outcomes, 4)
np.set_printoptions(precision=2, suppress=True)
print(mat)
