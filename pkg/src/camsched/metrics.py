"""Camera-selection accuracy/precision/recall, frames polled, confusion matrix and MCTA.

Sequences use ``0`` for the null camera. A step may poll several cameras
(baselines); polls are kept as a boolean ``(T, N)`` mask. For a single poll
per step every quantity reduces to the usual per-step definitions.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .env import PollRecord
from .netmodel import NULL_CAMERA, Trajectory

MODES = ("ict", "all")


@dataclass
class SelectionOutcome:
    """Ground-truth cameras ``g`` and polled-camera mask, aligned per step."""

    g: np.ndarray
    polled: np.ndarray
    target_id: int = 0

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.int64)
        self.polled = np.asarray(self.polled, dtype=bool)
        if self.polled.ndim != 2 or len(self.polled) != len(self.g):
            raise ValueError(f"length mismatch: |g|={len(self.g)}, polls={self.polled.shape}")

    @property
    def num_cameras(self) -> int:
        return self.polled.shape[1]

    @classmethod
    def from_sequences(cls, g, p, num_cameras: int, target_id: int = 0) -> "SelectionOutcome":
        """From one polled camera per step (``0`` = nothing polled)."""
        g = np.asarray(g, dtype=np.int64)
        p = np.asarray(p, dtype=np.int64)
        if g.shape != p.shape:
            raise ValueError(f"length mismatch: |g|={len(g)}, |p|={len(p)}")
        mask = np.zeros((len(p), num_cameras), dtype=bool)
        rows = np.nonzero(p)[0]
        mask[rows, p[rows] - 1] = True
        return cls(g, mask, target_id)

    @classmethod
    def from_records(cls, traj: Trajectory, records: Sequence[PollRecord],
                     num_cameras: int) -> "SelectionOutcome":
        g = np.array([traj.camera_at(r.t) for r in records], dtype=np.int64)
        mask = np.zeros((len(records), num_cameras), dtype=bool)
        for i, r in enumerate(records):
            for c in r.polled:
                mask[i, c - 1] = True
        return cls(g, mask, traj.target_id)

    def restrict(self, keep: np.ndarray) -> "SelectionOutcome":
        return SelectionOutcome(self.g[keep], self.polled[keep], self.target_id)


def ict_mask(g) -> np.ndarray:
    """Steps inside a transition: every null step plus the first step after each null run."""
    g = np.asarray(g)
    null = g == NULL_CAMERA
    keep = null.copy()
    keep[1:] |= null[:-1] & ~null[1:]
    return keep


def restrict_mode(outcome: SelectionOutcome, mode: str) -> SelectionOutcome:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    return outcome.restrict(ict_mask(outcome.g)) if mode == "ict" else outcome


class APR(NamedTuple):
    accuracy: float
    precision: float
    recall: float
    flags: tuple[str, ...] = ()


def _hits(o: SelectionOutcome) -> np.ndarray:
    vis = o.g != NULL_CAMERA
    hit = np.zeros(len(o.g), dtype=bool)
    hit[vis] = o.polled[np.nonzero(vis)[0], o.g[vis] - 1]
    return hit


def apr(outcome: SelectionOutcome, mode: str = "all") -> APR:
    o = restrict_mode(outcome, mode)
    n_polls = o.polled.sum(axis=1)
    hit = _hits(o)
    match = np.where(o.g == NULL_CAMERA, n_polls == 0, hit)
    flags = []

    def ratio(num, den, name):
        if den == 0:
            flags.append(f"empty-{name}")
            return 0.0
        return num / den

    a = ratio(int(match.sum()), len(o.g), "accuracy")
    p = ratio(int(hit.sum()), int(n_polls.sum()), "precision")
    r = ratio(int(hit.sum()), int((o.g != NULL_CAMERA).sum()), "recall")
    return APR(a, p, r, tuple(flags))


def frames_polled(outcome: SelectionOutcome, mode: str = "all") -> int:
    """Wasted polls: every frame polled during a transit or in a wrong camera."""
    o = restrict_mode(outcome, mode)
    return int(o.polled.sum() - _hits(o).sum())


def confusion_matrix(outcomes: Iterable[SelectionOutcome], num_cameras: int):
    """Row-normalized ``(N+1, N+1)`` matrix, rows/cols ordered ``C1..CN, Cx``.

    Entry ``(i, j)``: fraction of steps with ground truth ``i`` at which
    camera ``j`` was polled (``Cx`` = nothing polled). Returns the matrix and
    the list of empty row indices (left all-zero).
    """
    n = num_cameras
    counts = np.zeros((n + 1, n + 1))
    for o in outcomes:
        rows = np.where(o.g == NULL_CAMERA, n, o.g - 1)
        for i, mask in zip(rows, o.polled):
            if mask.any():
                counts[i, :n] += mask
            else:
                counts[i, n] += 1
    totals = counts.sum(axis=1)
    empty = [int(i) for i in np.nonzero(totals == 0)[0]]
    with np.errstate(invalid="ignore", divide="ignore"):
        mat = np.where(totals[:, None] > 0, counts / np.maximum(totals[:, None], 1), 0.0)
    return mat, empty


# ---------------------------------------------------------------------- MCTA

def iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    return inter / union if union > 0 else 0.0


class MCTAFactors(NamedTuple):
    f1: float
    within: float
    cross: float

    @property
    def score(self) -> float:
        return mcta_score(*self)


def mcta_score(f1: float, within: float, cross: float) -> float:
    return float(min(1.0, max(0.0, f1 * within * cross)))


def _match_vector(pred, traj: Trajectory, iou_threshold: float) -> np.ndarray:
    match = np.zeros(len(pred.t), dtype=bool)
    for i, (t, cam) in enumerate(zip(pred.t, pred.cameras)):
        if cam == NULL_CAMERA:
            continue
        gt = traj.bbox_in(int(cam), int(t))
        match[i] = gt is not None and iou(pred.boxes[i], gt) >= iou_threshold
    return match


def mcta_factors(pred, traj: Trajectory, mode: str = "all", iou_threshold: float = 0.5) -> MCTAFactors:
    """MCTA factors for one target's predicted ``(camera, bbox)`` sequence.

    A step matches when the predicted camera sees the target there and the box
    overlaps the true one (IoU >= ``iou_threshold``). Within-camera: over
    consecutive same-camera ground-truth steps whose first step matches, the
    fraction whose second step also matches. Cross-camera: fraction of
    handovers whose first non-null prediction after leaving the old camera
    is a match inside the next visit. In ``ict`` mode predictions outside
    transitions are replaced by the ground truth.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    t = np.asarray(pred.t)
    g = np.array([traj.camera_at(int(x)) for x in t], dtype=np.int64)
    match = _match_vector(pred, traj, iou_threshold)
    positive = np.asarray(pred.cameras) != NULL_CAMERA
    if mode == "ict":
        outside = ~ict_mask(g)
        match = match | outside
        positive = positive | outside
    tp = int(match.sum())
    n_pred, n_gt = int(positive.sum()), int((g != NULL_CAMERA).sum())
    prec = tp / n_pred if n_pred else 0.0
    rec = tp / n_gt if n_gt else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0

    same = (g[:-1] == g[1:]) & (g[:-1] != NULL_CAMERA) & (np.diff(t) == 1)
    tp_s = int((same & match[:-1]).sum())
    mu_s = int((same & match[:-1] & ~match[1:]).sum())
    within = 1.0 - mu_s / tp_s if tp_s else 1.0

    tp_c = mu_c = 0
    visits = [s for s in traj.segments() if s[0] != NULL_CAMERA]
    index = {int(x): i for i, x in enumerate(t)}
    for (cam_a, _, end_a), (cam_b, start_b, end_b) in zip(visits[:-1], visits[1:]):
        if cam_a == cam_b or start_b not in index:
            continue
        tp_c += 1
        bridged = False
        for i in range(index.get(end_a + 1, index[start_b]), len(t)):
            if positive[i]:
                bridged = bool(start_b <= t[i] <= end_b and match[i])
                break
        mu_c += not bridged
    cross = 1.0 - mu_c / tp_c if tp_c else 1.0
    return MCTAFactors(f1, min(1.0, max(0.0, within)), min(1.0, max(0.0, cross)))


def mcta(pred, traj: Trajectory, mode: str = "all", iou_threshold: float = 0.5) -> float:
    return mcta_factors(pred, traj, mode, iou_threshold).score


# ------------------------------------------------------------------- reports

@dataclass
class TargetReport:
    target_id: int
    accuracy: float
    precision: float
    recall: float
    frames_polled: int
    mcta: float | None = None
    flags: tuple[str, ...] = ()


@dataclass
class MetricReport:
    mode: str
    accuracy: float
    precision: float
    recall: float
    frames_polled: int
    mcta: float | None
    targets: list[TargetReport] = field(default_factory=list)
    confusion: list[list[float]] | None = None
    label: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        head = f"{'target':>8} {'A':>7} {'P':>7} {'R':>7} {'F':>7} {'MCTA':>7}"
        lines = [f"# {self.label} mode={self.mode}".rstrip(), head]

        def fmt(tid, a, p, r, f, m):
            ms = f"{m:7.4f}" if m is not None else f"{'-':>7}"
            return f"{tid:>8} {a:7.4f} {p:7.4f} {r:7.4f} {f:7d} {ms}"

        for tr in self.targets:
            lines.append(fmt(tr.target_id, tr.accuracy, tr.precision, tr.recall,
                             tr.frames_polled, tr.mcta))
        lines.append(fmt("mean", self.accuracy, self.precision, self.recall,
                         self.frames_polled, self.mcta))
        return "\n".join(lines) + "\n"


def target_report(outcome: SelectionOutcome, mode: str = "all", pred=None,
                  traj: Trajectory | None = None) -> TargetReport:
    a = apr(outcome, mode)
    m = mcta(pred, traj, mode) if pred is not None and traj is not None else None
    return TargetReport(outcome.target_id, a.accuracy, a.precision, a.recall,
                        frames_polled(outcome, mode), m, a.flags)


def _defined_mean(reports, name: str) -> float:
    vals = [getattr(r, name) for r in reports if f"empty-{name}" not in r.flags]
    return float(np.mean(vals)) if vals else 0.0


def aggregate(reports: Sequence[TargetReport], mode: str = "all", label: str = "") -> MetricReport:
    """Unweighted means of A, P, R and MCTA; F is summed.

    A target whose ratio is undefined (e.g. no transition at all in ``ict``
    mode) is left out of that ratio's mean instead of counting as zero.
    """
    if not reports:
        raise ValueError("need at least one target report")
    mct = [r.mcta for r in reports if r.mcta is not None and not
           (mode == "ict" and "empty-accuracy" in r.flags)]
    return MetricReport(
        mode,
        _defined_mean(reports, "accuracy"),
        _defined_mean(reports, "precision"),
        _defined_mean(reports, "recall"),
        int(sum(r.frames_polled for r in reports)),
        float(np.mean(mct)) if mct else None,
        list(reports),
        label=label,
    )


def write_confusion_csv(matrix: np.ndarray, path) -> None:
    n = matrix.shape[0] - 1
    labels = [f"C{i}" for i in range(1, n + 1)] + ["Cx"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gt", *labels])
        for lab, row in zip(labels, matrix):
            w.writerow([lab, *(repr(float(v)) for v in row)])
