"""CLEAR-MOT and identity metrics.

Sequences are ``frame -> {object id: BoundingBox}`` mappings. A ground-truth
and a hypothesis box can be matched only when their IoU exceeds the gate.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional

import numpy as np

from .assignment import km_assign
from .core import BoundingBox
from .similarity import box_array, iou_matrix

FrameBoxes = Mapping[int, BoundingBox]
TrackFrames = Mapping[int, FrameBoxes]

MOSTLY_TRACKED = 0.8
MOSTLY_LOST = 0.2


@dataclass(frozen=True)
class FrameMatch:
    matches: list[tuple[int, int, float]]  # (gt id, hyp id, iou)
    fp: int
    fn: int
    switches: int
    correspondence: dict[int, int]


@dataclass
class MetricsReport:
    mota: float
    motp: float
    idf1: float
    fp: int
    fn: int
    ids: int
    mt: int
    ml: int
    n_gt_tracks: int
    gt_boxes: int
    hyp_boxes: int
    matches: int
    idtp: int
    per_frame: Optional[dict[int, dict[str, int]]] = field(default=None, repr=False)

    @property
    def mt_ratio(self) -> float:
        return self.mt / self.n_gt_tracks if self.n_gt_tracks else 0.0

    @property
    def ml_ratio(self) -> float:
        return self.ml / self.n_gt_tracks if self.n_gt_tracks else 0.0

    def to_dict(self, with_frames: bool = False) -> dict:
        d = asdict(self)
        if not with_frames:
            d.pop("per_frame")
        d["mt_ratio"] = self.mt_ratio
        d["ml_ratio"] = self.ml_ratio
        return d

    def summary(self) -> str:
        return (
            f"MOTA {self.mota:.4f}  MOTP {self.motp:.4f}  IDF1 {self.idf1:.4f}  "
            f"FP {self.fp}  FN {self.fn}  IDS {self.ids}  "
            f"MT {self.mt}/{self.n_gt_tracks} ({self.mt_ratio:.1%})  ML {self.ml}/{self.n_gt_tracks} ({self.ml_ratio:.1%})"
        )


def _check_ids(items, what: str, frame=None):
    ids = [k for k, _ in items]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate {what} ids in frame {frame}")


def match_frame(gt, hyp, prior: Mapping[int, int], iou_gate: float = 0.5, frame=None) -> FrameMatch:
    """Match one frame, keeping last frame's correspondences where they still hold.

    ``gt`` and ``hyp`` are mappings id -> box or sequences of (id, box) pairs.
    ``prior`` maps ground-truth id to the hypothesis id it was last matched to.
    """
    gt_items = list(gt.items()) if isinstance(gt, Mapping) else list(gt)
    hyp_items = list(hyp.items()) if isinstance(hyp, Mapping) else list(hyp)
    _check_ids(gt_items, "ground-truth", frame)
    _check_ids(hyp_items, "hypothesis", frame)
    gt_ids = [g for g, _ in gt_items]
    hyp_ids = [h for h, _ in hyp_items]
    overlap = iou_matrix(box_array([b for _, b in gt_items]), box_array([b for _, b in hyp_items]))

    hyp_col = {h: b for b, h in enumerate(hyp_ids)}
    matched_gt: dict[int, int] = {}
    used_hyp: set[int] = set()
    for a, g in enumerate(gt_ids):
        h = prior.get(g)
        if h is None or h not in hyp_col:
            continue
        b = hyp_col[h]
        if overlap[a, b] > iou_gate and b not in used_hyp:
            matched_gt[a] = b
            used_hyp.add(b)

    rest_gt = [a for a in range(len(gt_ids)) if a not in matched_gt]
    rest_hyp = [b for b in range(len(hyp_ids)) if b not in used_hyp]
    if rest_gt and rest_hyp:
        sub = overlap[np.ix_(rest_gt, rest_hyp)]
        for r, c in km_assign(sub, iou_gate).pairs:
            matched_gt[rest_gt[r]] = rest_hyp[c]

    switches = 0
    corr = dict(prior)
    matches = []
    for a in sorted(matched_gt):
        b = matched_gt[a]
        g, h = gt_ids[a], hyp_ids[b]
        if g in prior and prior[g] != h:
            switches += 1
        corr[g] = h
        matches.append((g, h, float(overlap[a, b])))
    return FrameMatch(matches, len(hyp_ids) - len(matches), len(gt_ids) - len(matches), switches, corr)


def evaluate(gt: TrackFrames, hyp: TrackFrames, iou_gate: float = 0.5, per_frame: bool = False) -> MetricsReport:
    gt_boxes = sum(len(v) for v in gt.values())
    if gt_boxes == 0:
        raise ValueError("ground truth is empty")
    frames = sorted(set(gt) | set(hyp))
    corr: dict[int, int] = {}
    fp = fn = ids = 0
    ious = []
    covered: dict[int, int] = {}
    lifespan: dict[int, int] = {}
    breakdown = {}
    for f in frames:
        g = gt.get(f, {})
        h = hyp.get(f, {})
        fm = match_frame(g, h, corr, iou_gate, frame=f)
        corr = fm.correspondence
        fp += fm.fp
        fn += fm.fn
        ids += fm.switches
        for gid, _, ov in fm.matches:
            ious.append(ov)
            covered[gid] = covered.get(gid, 0) + 1
        for gid in g:
            lifespan[gid] = lifespan.get(gid, 0) + 1
        if per_frame:
            breakdown[f] = {"matches": len(fm.matches), "fp": fm.fp, "fn": fm.fn, "ids": fm.switches}

    mt = sum(1 for gid, n in lifespan.items() if covered.get(gid, 0) / n >= MOSTLY_TRACKED)
    ml = sum(1 for gid, n in lifespan.items() if covered.get(gid, 0) / n <= MOSTLY_LOST)
    hyp_boxes = sum(len(v) for v in hyp.values())
    idtp = _identity_true_positives(gt, hyp, frames, iou_gate)
    return MetricsReport(
        mota=1.0 - (fn + fp + ids) / gt_boxes,
        motp=float(np.mean(ious)) if ious else 0.0,
        idf1=2.0 * idtp / (gt_boxes + hyp_boxes),
        fp=fp,
        fn=fn,
        ids=ids,
        mt=mt,
        ml=ml,
        n_gt_tracks=len(lifespan),
        gt_boxes=gt_boxes,
        hyp_boxes=hyp_boxes,
        matches=len(ious),
        idtp=idtp,
        per_frame=breakdown if per_frame else None,
    )


def _identity_true_positives(gt: TrackFrames, hyp: TrackFrames, frames, iou_gate: float) -> int:
    """Frames shared by the best global one-to-one gt-id/hyp-id correspondence."""
    gt_ids = sorted({g for f in gt.values() for g in f})
    hyp_ids = sorted({h for f in hyp.values() for h in f})
    if not gt_ids or not hyp_ids:
        return 0
    gi = {g: k for k, g in enumerate(gt_ids)}
    hi = {h: k for k, h in enumerate(hyp_ids)}
    overlap = np.zeros((len(gt_ids), len(hyp_ids)))
    for f in frames:
        g_items = list(gt.get(f, {}).items())
        h_items = list(hyp.get(f, {}).items())
        if not g_items or not h_items:
            continue
        ov = iou_matrix(box_array([b for _, b in g_items]), box_array([b for _, b in h_items]))
        rows = [gi[g] for g, _ in g_items]
        cols = [hi[h] for h, _ in h_items]
        overlap[np.ix_(rows, cols)] += ov > iou_gate
    ms = km_assign(overlap, 0.0)
    return int(round(ms.total_similarity))


@dataclass
class AblationTable:
    rows: list[tuple[str, MetricsReport]]

    def __str__(self) -> str:
        header = f"{'Method':<28}{'MOTA':>8}{'IDF1':>8}{'MOTP':>8}{'MT':>8}{'ML':>8}{'IDS':>6}{'FP':>6}{'FN':>6}"
        lines = [header, "-" * len(header)]
        for name, r in self.rows:
            lines.append(
                f"{name:<28}{100 * r.mota:>8.1f}{100 * r.idf1:>8.1f}{100 * r.motp:>8.1f}"
                f"{r.mt_ratio:>8.1%}{r.ml_ratio:>8.1%}{r.ids:>6d}{r.fp:>6d}{r.fn:>6d}"
            )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {name: r.to_dict() for name, r in self.rows}


def ablation_table(results: Mapping[str, object], gt: TrackFrames, iou_gate: float = 0.5) -> AblationTable:
    """One metrics row per named tracking result, in the mapping's order.

    Values may be TrackingResult objects or already-flattened sequences.
    """
    rows = []
    for name, res in results.items():
        hyp = res.frames() if hasattr(res, "frames") else res
        rows.append((name, evaluate(gt, hyp, iou_gate)))
    return AblationTable(rows)
