"""
A simulated camera network
==========================

Draw a small chain of cameras, look at one walker, and see what the
transit gaps between cameras look like.
"""

# %%
import numpy as np

from camsched.netmodel import SynthConfig, generate_synthetic, infer_links, transition_samples

net, ts = generate_synthetic(SynthConfig(num_cameras=4, num_targets=40, seed=3))
print(net.num_cameras, "cameras, links", sorted(net.links))
print(len(ts), "targets")

# %%
# one target: 0 means "not in any camera"
traj = ts[ts.ids[0]]
print("start", traj.start_t, "end", traj.end_t)
print(traj.cameras[:60])

# %%
# visits as (camera, first step, last step)
for seg in traj.segments():
    print(seg)

# %%
# gap lengths between consecutive visits, per camera pair
samples = transition_samples(ts)
for (i, j), gaps in sorted(samples.items()):
    print(f"C{i} -> C{j}: n={len(gaps):3d}  mean={np.mean(gaps):5.1f}  std={np.std(gaps):4.1f}")

# %%
# the links can be recovered from the trajectories alone
learned, _ = infer_links(ts)
print(sorted(learned.links) == sorted(net.links))

# %%
# a lognormal transit has a long tail
_, heavy = generate_synthetic(SynthConfig(num_cameras=4, num_targets=200, transit_mean=10,
                                          transit_std=15, transit_dist="lognormal", seed=3))
gaps = np.concatenate([g for g in transition_samples(heavy).values()])
print("median", np.median(gaps), "p95", np.percentile(gaps, 95), "max", gaps.max())
