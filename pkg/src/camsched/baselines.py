"""Comparison schedulers: exhaustive search, neighbor search, Gaussian wait-then-search.

All three track the target in its current camera (one frame per step) and
start searching when that camera reports it absent. They return the same
``(PredictedTrajectory, list[PollRecord])`` pair as :func:`agent.run_policy`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import env as E
from .agent import PredictedTrajectory
from .env import EnvConfig, PollRecord
from .netmodel import CameraNetwork, TrajectorySet, transition_samples

log = logging.getLogger(__name__)


def _poll(net, traj_set, cams, t, target_id, cfg, rng):
    found = None
    corrupted = False
    for c in cams:
        res = E.presence_query(net, traj_set, c, t, target_id, cfg, rng)
        corrupted |= res.corrupted
        if res.present and found is None:
            found = (c, res.bbox)
    return found, corrupted


def _search(traj_set: TrajectorySet, target_id: int, cfg: EnvConfig, rng, search_set, wait_for=None):
    """Shared tracking loop.

    ``search_set(last_cam)`` gives the cameras to poll while the target is
    lost; ``wait_for(last_cam)`` (optional) gives the number of steps since
    the last sighting before searching starts.
    """
    net = traj_set.network
    traj = traj_set[target_id]
    first = traj.obs(traj.start_t)
    tracking, last_cam, last_seen = first.camera, first.camera, traj.start_t
    wait_until = None
    records = []
    for t in range(traj.start_t + 1, traj.end_t + 1):
        if tracking is not None:
            cams = (tracking,)
        elif wait_until is not None and t <= wait_until:
            cams = ()
        else:
            cams = tuple(search_set(last_cam))
        found, corrupted = _poll(net, traj_set, cams, t, target_id, cfg, rng)
        if found is not None:
            tracking, last_cam, last_seen = found[0], found[0], t
            wait_until = None
        elif tracking is not None:
            tracking = None
            if wait_for is not None:
                wait_until = last_seen + wait_for(last_cam)
        records.append(PollRecord(t, cams, found is not None, corrupted, t - last_seen,
                                  found[0] if found else 0, found[1] if found else None))
    return PredictedTrajectory.from_records(target_id, records), records


def exhaustive_policy(traj_set: TrajectorySet, target_id: int, cfg: EnvConfig | None = None,
                      rng: np.random.Generator | None = None):
    """Poll every camera at every step until the target is found."""
    cfg = cfg or EnvConfig()
    rng = rng if rng is not None else np.random.default_rng([cfg.seed, target_id])
    all_cams = tuple(range(1, traj_set.network.num_cameras + 1))
    return _search(traj_set, target_id, cfg, rng, lambda last: all_cams)


def _neighbor_set(links_net: CameraNetwork):
    all_cams = tuple(range(1, links_net.num_cameras + 1))
    warned = set()

    def cams(last):
        nbrs = links_net.neighbors(last)
        if nbrs:
            return nbrs
        if last not in warned:
            warned.add(last)
            log.warning("camera %d has no links; searching all cameras", last)
        return all_cams

    return cams


def neighbor_policy(traj_set: TrajectorySet, target_id: int, links_net: CameraNetwork,
                    cfg: EnvConfig | None = None, rng: np.random.Generator | None = None):
    """Poll the link neighbors of the last confirmed camera until the target is found."""
    cfg = cfg or EnvConfig()
    rng = rng if rng is not None else np.random.default_rng([cfg.seed, target_id])
    return _search(traj_set, target_id, cfg, rng, _neighbor_set(links_net))


@dataclass
class TransitionGaussians:
    """Per ordered pair ``(i, j)``: ``(count, mean, sample std)`` of gap lengths.

    ``pooled[i]`` merges all pairs leaving ``i``; it drives the wait time,
    since the destination is unknown when the target is lost.
    """

    pairs: dict[tuple[int, int], tuple[int, float, float]]
    pooled: dict[int, tuple[int, float, float]]

    def sample_wait(self, camera: int, rng: np.random.Generator) -> int:
        stats = self.pooled.get(camera)
        if stats is None:
            log.warning("no transition samples leaving camera %d; waiting 1 step", camera)
            return 1
        _, mu, sd = stats
        return max(1, int(round(rng.normal(mu, sd) if sd > 0 else mu)))


def _stats(values) -> tuple[int, float, float]:
    v = np.asarray(values, dtype=np.float64)
    sd = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    return len(v), float(v.mean()), sd


def fit_transition_gaussians(train: TrajectorySet) -> TransitionGaussians:
    samples = transition_samples(train)
    pairs = {k: _stats(v) for k, v in sorted(samples.items())}
    by_src: dict[int, list[int]] = {}
    for (i, _), v in sorted(samples.items()):
        by_src.setdefault(i, []).extend(v)
    return TransitionGaussians(pairs, {i: _stats(v) for i, v in by_src.items()})


def gaussian_policy(traj_set: TrajectorySet, target_id: int, links_net: CameraNetwork,
                    gauss: TransitionGaussians, cfg: EnvConfig | None = None,
                    rng: np.random.Generator | None = None):
    """Wait a sampled transit time, then search the neighbors of the last camera.

    The wait is counted from the last sighting: with a sampled gap of ``d``
    steps the first search poll happens ``d + 1`` steps after the target was
    last seen, i.e. exactly on arrival if ``d`` equals the true gap. The
    search continues until the target is found; no re-sampling.
    """
    cfg = cfg or EnvConfig()
    rng = rng if rng is not None else np.random.default_rng([cfg.seed, target_id])
    return _search(traj_set, target_id, cfg, rng, _neighbor_set(links_net),
                   wait_for=lambda last: gauss.sample_wait(last, rng))
