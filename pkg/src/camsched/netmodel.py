"""Camera networks, ground-truth trajectories and synthetic data.

Cameras are 1-based. ``NULL_CAMERA`` (0) marks timesteps where the target is
in no field of view. Timesteps are frame indices at the common frame rate.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

log = logging.getLogger(__name__)

NULL_CAMERA = 0
CSV_HEADER = ("t", "target_id", "camera", "x", "y", "w", "h")
TOPOLOGIES = ("chain", "ring", "random-graph")


class TrajectoryFormatError(ValueError):
    """Malformed trajectory file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class ValidationError(ValueError):
    pass


def _edge(i: int, j: int) -> tuple[int, int]:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class CameraNetwork:
    num_cameras: int
    frame_width: tuple[int, ...]
    frame_height: tuple[int, ...]
    fps: float = 25.0
    links: frozenset[tuple[int, int]] | None = None

    def __post_init__(self):
        n = self.num_cameras
        if n < 1:
            raise ValidationError("num_cameras must be >= 1")
        if len(self.frame_width) != n or len(self.frame_height) != n:
            raise ValidationError("need one frame size per camera")
        if min(self.frame_width) < 1 or min(self.frame_height) < 1:
            raise ValidationError("frame dimensions must be >= 1")
        if self.links is not None:
            norm = set()
            for i, j in self.links:
                if i == j:
                    raise ValidationError(f"self-loop on camera {i}")
                if not (1 <= i <= n and 1 <= j <= n):
                    raise ValidationError(f"link ({i}, {j}) outside 1..{n}")
                norm.add(_edge(i, j))
            object.__setattr__(self, "links", frozenset(norm))

    @classmethod
    def uniform(cls, num_cameras: int, width: int = 320, height: int = 240,
                fps: float = 25.0, links=None) -> "CameraNetwork":
        return cls(num_cameras, (width,) * num_cameras, (height,) * num_cameras,
                   fps, None if links is None else frozenset(links))

    def frame_size(self, camera: int) -> tuple[int, int]:
        return self.frame_width[camera - 1], self.frame_height[camera - 1]

    def neighbors(self, camera: int) -> list[int]:
        if not self.links:
            return []
        out = [j if i == camera else i for i, j in self.links if camera in (i, j)]
        return sorted(out)

    def with_links(self, links: Iterable[tuple[int, int]]) -> "CameraNetwork":
        return CameraNetwork(self.num_cameras, self.frame_width, self.frame_height,
                             self.fps, frozenset(links))

    def to_dict(self) -> dict:
        return {
            "num_cameras": self.num_cameras,
            "frame_width": list(self.frame_width),
            "frame_height": list(self.frame_height),
            "fps": self.fps,
            "links": None if self.links is None else sorted(list(e) for e in self.links),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "CameraNetwork":
        links = d.get("links")
        return cls(int(d["num_cameras"]), tuple(d["frame_width"]), tuple(d["frame_height"]),
                   float(d.get("fps", 25.0)),
                   None if links is None else frozenset(tuple(e) for e in links))


def save_network(net: CameraNetwork, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_network(path) -> CameraNetwork:
    return CameraNetwork.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class Observation(NamedTuple):
    camera: int
    bbox: tuple[float, float, float, float] | None = None

    @property
    def is_null(self) -> bool:
        return self.camera == NULL_CAMERA


NULL_OBSERVATION = Observation(NULL_CAMERA, None)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One target's ground truth over the closed interval ``[start_t, end_t]``.

    ``cameras[k]`` is the camera at ``start_t + k`` (``NULL_CAMERA`` in gaps) and
    ``boxes[k]`` its ``(x, y, w, h)`` (NaN in gaps). ``extra`` holds additional
    simultaneous sightings in overlapping views: ``{t: {camera: bbox}}``.
    """

    target_id: int
    start_t: int
    cameras: np.ndarray
    boxes: np.ndarray
    extra: Mapping[int, Mapping[int, tuple]] = field(default_factory=dict)

    def __post_init__(self):
        cams = np.asarray(self.cameras, dtype=np.int64).copy()
        boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4).copy()
        if cams.ndim != 1 or len(cams) == 0 or len(boxes) != len(cams):
            raise ValidationError(f"target {self.target_id}: bad trajectory arrays")
        if cams[0] == NULL_CAMERA or cams[-1] == NULL_CAMERA:
            raise ValidationError(f"target {self.target_id}: must start and end in a view")
        cams.setflags(write=False)
        boxes.setflags(write=False)
        object.__setattr__(self, "cameras", cams)
        object.__setattr__(self, "boxes", boxes)

    @property
    def end_t(self) -> int:
        return self.start_t + len(self.cameras) - 1

    def __len__(self) -> int:
        return len(self.cameras)

    def camera_at(self, t: int) -> int:
        k = t - self.start_t
        if 0 <= k < len(self.cameras):
            return int(self.cameras[k])
        return NULL_CAMERA

    def obs(self, t: int) -> Observation:
        cam = self.camera_at(t)
        if cam == NULL_CAMERA:
            return NULL_OBSERVATION
        return Observation(cam, tuple(self.boxes[t - self.start_t].tolist()))

    def bbox_in(self, camera: int, t: int):
        """Bounding box of the target in ``camera`` at ``t``, or None."""
        cam = self.camera_at(t)
        if cam == NULL_CAMERA:
            return None
        if cam == camera:
            return tuple(self.boxes[t - self.start_t].tolist())
        return self.extra.get(t, {}).get(camera)

    def in_camera(self, camera: int, t: int) -> bool:
        return self.bbox_in(camera, t) is not None

    def segments(self) -> list[tuple[int, int, int]]:
        """Maximal runs as ``(camera, first_t, last_t)``; camera 0 marks a gap."""
        out = []
        cams = self.cameras
        k0 = 0
        for k in range(1, len(cams) + 1):
            if k == len(cams) or cams[k] != cams[k0]:
                out.append((int(cams[k0]), self.start_t + k0, self.start_t + k - 1))
                k0 = k
        return out

    def sightings(self) -> Iterator[tuple[int, Observation]]:
        for k, cam in enumerate(self.cameras):
            if cam != NULL_CAMERA:
                yield self.start_t + k, Observation(int(cam), tuple(self.boxes[k].tolist()))


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    network: CameraNetwork
    trajectories: Mapping[int, Trajectory]

    def __post_init__(self):
        n = self.network.num_cameras
        ordered = {}
        for tid in sorted(self.trajectories):
            tr = self.trajectories[tid]
            if tr.target_id != tid:
                raise ValidationError(f"key {tid} does not match target_id {tr.target_id}")
            if tr.cameras.max() > n or tr.cameras.min() < 0:
                raise ValidationError(f"target {tid}: camera index outside 1..{n}")
            ordered[tid] = tr
        object.__setattr__(self, "trajectories", ordered)

    @classmethod
    def from_list(cls, network: CameraNetwork, trajs: Iterable[Trajectory]) -> "TrajectorySet":
        d = {}
        for tr in trajs:
            if tr.target_id in d:
                raise ValidationError(f"duplicate target_id {tr.target_id}")
            d[tr.target_id] = tr
        return cls(network, d)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(self.trajectories.values())

    def __getitem__(self, target_id: int) -> Trajectory:
        return self.trajectories[target_id]

    @property
    def ids(self) -> list[int]:
        return list(self.trajectories)

    def subset(self, ids: Iterable[int]) -> "TrajectorySet":
        return TrajectorySet(self.network, {i: self.trajectories[i] for i in ids})

    @cached_property
    def _visibility(self) -> dict[tuple[int, int], list[tuple[int, tuple]]]:
        index: dict[tuple[int, int], list] = {}
        for tr in self:
            for t, ob in tr.sightings():
                index.setdefault((ob.camera, t), []).append((tr.target_id, ob.bbox))
            for t, views in tr.extra.items():
                for cam, bb in views.items():
                    index.setdefault((cam, t), []).append((tr.target_id, tuple(bb)))
        return index

    def visible_in(self, camera: int, t: int) -> list[tuple[int, tuple]]:
        """All ``(target_id, bbox)`` visible in ``camera`` at ``t``."""
        return self._visibility.get((camera, t), [])


# ---------------------------------------------------------------- file I/O

def _check_bbox(net: CameraNetwork, tid, t, cam, bbox):
    if not 1 <= cam <= net.num_cameras:
        raise ValidationError(f"target {tid}, t={t}: camera {cam} outside 1..{net.num_cameras}")
    x, y, w, h = bbox
    fw, fh = net.frame_size(cam)
    if not (0 <= x < fw and 0 <= y < fh and w >= 1 and h >= 1):
        raise ValidationError(f"target {tid}, t={t}: bbox {bbox} outside {fw}x{fh} frame")


def build_trajectories(net: CameraNetwork, rows: Iterable[tuple]) -> TrajectorySet:
    """Assemble ``(t, target_id, camera, bbox)`` rows into a gap-filled set.

    Missing timesteps between two sightings become ``NULL_CAMERA``. When a
    target has several rows at one timestep (overlapping views) the first row
    is the primary observation and the rest go to ``Trajectory.extra``.
    """
    per_target: dict[int, dict[int, list]] = {}
    for t, tid, cam, bbox in rows:
        _check_bbox(net, tid, t, cam, bbox)
        views = per_target.setdefault(tid, {}).setdefault(t, [])
        if any(c == cam for c, _ in views):
            raise ValidationError(f"target {tid}, t={t}: duplicate row for camera {cam}")
        views.append((cam, tuple(float(v) for v in bbox)))
    trajs = []
    for tid, by_t in per_target.items():
        t0, t1 = min(by_t), max(by_t)
        cams = np.zeros(t1 - t0 + 1, dtype=np.int64)
        boxes = np.full((t1 - t0 + 1, 4), np.nan)
        extra = {}
        for t, views in by_t.items():
            cams[t - t0] = views[0][0]
            boxes[t - t0] = views[0][1]
            if len(views) > 1:
                extra[t] = {c: b for c, b in views[1:]}
        trajs.append(Trajectory(tid, t0, cams, boxes, extra))
    return TrajectorySet.from_list(net, trajs)


def _num(text: str, what: str, line: int):
    try:
        v = float(text)
    except ValueError:
        raise TrajectoryFormatError(f"{what}={text!r} is not a number", line) from None
    return v


def _int(text, what: str, line: int) -> int:
    v = _num(str(text), what, line)
    if not v.is_integer():
        raise TrajectoryFormatError(f"{what}={text!r} is not an integer", line)
    return int(v)


def _read_csv(path: Path) -> list[tuple]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return rows
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise TrajectoryFormatError(f"expected header {','.join(CSV_HEADER)}", 1)
        for rec in reader:
            line = reader.line_num
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(CSV_HEADER):
                raise TrajectoryFormatError(f"expected {len(CSV_HEADER)} fields, got {len(rec)}", line)
            t = _int(rec[0], "t", line)
            tid = _int(rec[1], "target_id", line)
            cam = _int(rec[2], "camera", line)
            bbox = tuple(_num(v, k, line) for k, v in zip("xywh", rec[3:]))
            rows.append((t, tid, cam, bbox))
    return rows


def _read_jsonl(path: Path) -> list[tuple]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                rec = json.loads(text)
                bbox = rec["bbox"] if "bbox" in rec else [rec[k] for k in "xywh"]
                if len(bbox) != 4:
                    raise ValueError("bbox needs 4 values")
                rows.append((_int(rec["t"], "t", line), _int(rec["target_id"], "target_id", line),
                             _int(rec["camera"], "camera", line),
                             tuple(_num(str(v), "bbox", line) for v in bbox)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, TrajectoryFormatError):
                    raise
                raise TrajectoryFormatError(str(exc), line) from None
    return rows


def load_trajectories(path, format: str | None = None,
                      network: CameraNetwork | None = None) -> TrajectorySet:
    """Read a trajectory file (``csv`` or ``jsonl``; inferred from suffix).

    Without ``network`` the camera count is taken from the data and every
    frame is assumed 320x240.
    """
    path = Path(path)
    fmt = (format or ("jsonl" if path.suffix in (".jsonl", ".json") else "csv")).lower()
    if fmt in ("csv",):
        rows = _read_csv(path)
    elif fmt in ("jsonl", "json-lines", "jsonlines"):
        rows = _read_jsonl(path)
    else:
        raise ValueError(f"unknown trajectory format {format!r}")
    if network is None:
        n = max((r[2] for r in rows), default=1)
        network = CameraNetwork.uniform(max(n, 1))
    return build_trajectories(network, rows)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def save_trajectories(ts: TrajectorySet, path) -> None:
    """Write the canonical CSV: rows sorted by ``(t, target_id, camera)``."""
    rows = []
    for tr in ts:
        for t, ob in tr.sightings():
            rows.append((t, tr.target_id, ob.camera, ob.bbox))
        for t, views in tr.extra.items():
            for cam, bb in views.items():
                rows.append((t, tr.target_id, cam, bb))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, tid, cam, bb in rows:
            w.writerow([t, tid, cam, *(_fmt(v) for v in bb)])


# ------------------------------------------------------------ synthetic data

@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic trajectory generator.

    ``transit_mean``/``transit_std`` are scalars or N x N matrices indexed by
    ``[from-1][to-1]``. Targets walk the link graph without backtracking unless
    at a dead end, and leave the network with ``exit_prob`` after each visit
    (or after ``max_visits``). ``transit_dist="lognormal"`` gives long-tailed
    transits with the same mean and std.
    """

    num_cameras: int = 4
    num_targets: int = 10
    topology: str = "chain"
    dwell_mean: float = 30.0
    dwell_std: float = 5.0
    transit_mean: float | Sequence[Sequence[float]] = 10.0
    transit_std: float | Sequence[Sequence[float]] = 3.0
    exit_prob: float = 0.3
    seed: int = 0
    max_visits: int = 8
    transit_dist: str = "normal"
    start_window: int = 1000
    start_camera: int | None = None
    edge_prob: float = 0.5
    frame_width: int = 320
    frame_height: int = 240
    fps: float = 25.0

    def __post_init__(self):
        if self.num_cameras < 1 or self.num_targets < 0:
            raise ValidationError("num_cameras >= 1 and num_targets >= 0 required")
        if self.topology not in TOPOLOGIES:
            raise ValidationError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if self.transit_dist not in ("normal", "lognormal"):
            raise ValidationError("transit_dist must be 'normal' or 'lognormal'")
        if self.dwell_mean <= 0 or self.dwell_std < 0:
            raise ValidationError("dwell_mean > 0 and dwell_std >= 0 required")
        tm, ts = self.transit_matrices()
        if (tm <= 0).any() or (ts < 0).any():
            raise ValidationError("transit means must be > 0 and stds >= 0")
        if not 0.0 <= self.exit_prob <= 1.0:
            raise ValidationError("exit_prob must be in [0, 1]")
        if self.max_visits < 1 or self.start_window < 1:
            raise ValidationError("max_visits and start_window must be >= 1")
        if self.start_camera is not None and not 1 <= self.start_camera <= self.num_cameras:
            raise ValidationError("start_camera outside 1..num_cameras")

    def transit_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.num_cameras
        out = []
        for v in (self.transit_mean, self.transit_std):
            a = np.asarray(v, dtype=np.float64)
            a = np.full((n, n), float(a)) if a.ndim == 0 else a
            if a.shape != (n, n):
                raise ValidationError(f"transit matrix must be {n}x{n}")
            out.append(a)
        return out[0], out[1]

    @classmethod
    def from_mapping(cls, d: Mapping) -> "SynthConfig":
        known = cls.__dataclass_fields__
        unknown = set(d) - set(known)
        if unknown:
            raise ValidationError(f"unknown SynthConfig keys: {sorted(unknown)}")
        return cls(**dict(d))


def _connected(n: int, links: set) -> bool:
    seen, stack = {1}, [1]
    while stack:
        c = stack.pop()
        for i, j in links:
            for a, b in ((i, j), (j, i)):
                if a == c and b not in seen:
                    seen.add(b)
                    stack.append(b)
    return len(seen) == n


def make_topology(n: int, topology: str, rng: np.random.Generator | None = None,
                  edge_prob: float = 0.5) -> frozenset[tuple[int, int]]:
    if topology == "chain":
        return frozenset((i, i + 1) for i in range(1, n))
    if topology == "ring":
        links = {(i, i + 1) for i in range(1, n)}
        if n >= 3:
            links.add((1, n))
        return frozenset(links)
    if topology == "random-graph":
        if n == 1:
            return frozenset()
        rng = rng if rng is not None else np.random.default_rng()
        pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
        for _ in range(100):
            links = {p for p in pairs if rng.random() < edge_prob}
            if _connected(n, links):
                return frozenset(links)
        raise ValidationError("random-graph: no connected topology after 100 attempts")
    raise ValidationError(f"unknown topology {topology!r}")


def _draw_duration(rng, mean: float, std: float, dist: str = "normal") -> int:
    if std == 0:
        v = mean
    elif dist == "lognormal":
        s2 = math.log1p((std / mean) ** 2)
        v = rng.lognormal(math.log(mean) - s2 / 2, math.sqrt(s2))
    else:
        v = rng.normal(mean, std)
    return max(1, int(round(v)))


def _visit_boxes(rng, dwell: int, fw: int, fh: int, enter_side: int, exit_side: int) -> np.ndarray:
    # side: -1 = left edge, +1 = right edge
    w = int(rng.integers(max(1, fw // 16), max(2, fw // 8) + 1))
    h = min(fh - 1, int(round(w * rng.uniform(1.8, 2.6))))
    y = int(rng.integers(0, max(1, fh - h)))
    left, right = 0.0, float(fw - w)
    x_in = left if enter_side < 0 else right
    x_out = left if exit_side < 0 else right
    frac = np.linspace(0.0, 1.0, dwell) if dwell > 1 else np.ones(1)
    if enter_side == exit_side:
        mid = (left + right) / 2
        xs = np.where(frac <= 0.5, x_in + (mid - x_in) * 2 * frac, mid + (x_out - mid) * (2 * frac - 1))
    else:
        xs = x_in + (x_out - x_in) * frac
    boxes = np.empty((dwell, 4))
    boxes[:, 0] = np.clip(np.round(xs), 0, fw - 1)
    boxes[:, 1] = y
    boxes[:, 2] = w
    boxes[:, 3] = h
    return boxes


def _side_towards(cur: int, nxt: int | None, n: int, topology: str) -> int:
    if nxt is None:
        return 0
    if topology == "ring" and n >= 3 and {cur, nxt} == {1, n}:
        return 1 if cur == n else -1
    return 1 if nxt > cur else -1


def generate_synthetic(cfg: SynthConfig) -> tuple[CameraNetwork, TrajectorySet]:
    """Draw a network and ``cfg.num_targets`` trajectories; deterministic in ``cfg.seed``.

    In-view dwell and transit gaps are Gaussian (or lognormal) draws rounded
    and clamped to >= 1. Boxes sweep across the frame from the side facing
    the previous camera to the side facing the next one.
    """
    rng = np.random.default_rng(cfg.seed)
    n = cfg.num_cameras
    links = make_topology(n, cfg.topology, rng, cfg.edge_prob)
    net = CameraNetwork.uniform(n, cfg.frame_width, cfg.frame_height, cfg.fps, links)
    tmean, tstd = cfg.transit_matrices()
    trajs = []
    for tid in range(1, cfg.num_targets + 1):
        start = int(rng.integers(0, cfg.start_window))
        cam = cfg.start_camera or int(rng.integers(1, n + 1))
        prev = None
        visits = []  # (camera, dwell, next_camera, transit)
        while True:
            dwell = _draw_duration(rng, cfg.dwell_mean, cfg.dwell_std)
            nbrs = net.neighbors(cam)
            leave = (not nbrs or len(visits) + 1 >= cfg.max_visits
                     or rng.random() < cfg.exit_prob)
            if leave:
                visits.append((cam, dwell, None, 0))
                break
            choices = [c for c in nbrs if c != prev] or nbrs
            nxt = choices[int(rng.integers(len(choices)))]
            gap = _draw_duration(rng, tmean[cam - 1, nxt - 1], tstd[cam - 1, nxt - 1],
                                 cfg.transit_dist)
            visits.append((cam, dwell, nxt, gap))
            prev, cam = cam, nxt
        cams, boxes = [], []
        prev = None
        for cam, dwell, nxt, gap in visits:
            exit_side = _side_towards(cam, nxt, n, cfg.topology)
            enter_side = -_side_towards(prev, cam, n, cfg.topology) if prev else 0
            if exit_side == 0:
                exit_side = -enter_side if enter_side else (1 if rng.random() < 0.5 else -1)
            if enter_side == 0:
                enter_side = -exit_side
            fw, fh = net.frame_size(cam)
            cams.extend([cam] * dwell)
            boxes.append(_visit_boxes(rng, dwell, fw, fh, enter_side, exit_side))
            if nxt is not None:
                cams.extend([NULL_CAMERA] * gap)
                boxes.append(np.full((gap, 4), np.nan))
            prev = cam
        trajs.append(Trajectory(tid, start, np.array(cams), np.vstack(boxes)))
    return net, TrajectorySet.from_list(net, trajs)


# ------------------------------------------------------- splitting and links

def split_train_test(ts: TrajectorySet, fraction: float = 0.5,
                     seed: int = 0) -> tuple[TrajectorySet, TrajectorySet]:
    """Partition targets by identity; ``ceil(fraction * K)`` go to train."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    ids = np.array(ts.ids)
    perm = np.random.default_rng(seed).permutation(len(ids))
    n_train = math.ceil(fraction * len(ids))
    train_ids = sorted(int(i) for i in ids[perm[:n_train]])
    test_ids = sorted(int(i) for i in ids[perm[n_train:]])
    if not test_ids:
        warnings.warn("test split is empty", stacklevel=2)
    return ts.subset(train_ids), ts.subset(test_ids)


def transition_samples(ts: TrajectorySet) -> dict[tuple[int, int], list[int]]:
    """Gap lengths between consecutive sightings in different cameras, per ordered pair."""
    samples: dict[tuple[int, int], list[int]] = {}
    for tr in ts:
        last_cam, last_t = None, None
        for t, ob in tr.sightings():
            if last_cam is not None and ob.camera != last_cam:
                samples.setdefault((last_cam, ob.camera), []).append(t - last_t - 1)
            last_cam, last_t = ob.camera, t
    return samples


def infer_links(train: TrajectorySet) -> tuple[CameraNetwork, dict[tuple[int, int], list[int]]]:
    """Camera link model observed in ``train`` plus per-pair transition samples."""
    samples = transition_samples(train)
    links = {_edge(i, j) for i, j in samples}
    return train.network.with_links(links), samples
