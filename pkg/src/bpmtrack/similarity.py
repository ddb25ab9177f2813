"""Tracklet/detection similarities.

The fused score is ``S = A + lambda_s * M`` where ``A`` is the cosine of the
appearance embeddings and ``M`` is the IoU between the tracklet's
constant-velocity prediction and the detection box. When either side lacks an
embedding the appearance term is zero, so the same code path serves the
motion-only configurations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import BoundingBox, Detection, TrackerConfig, Tracklet, TrackState, iou, unit_vector

EMBEDDING_MOMENTUM = 0.9


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    cross: np.ndarray  # n_t x n_d
    tracklet_pair: np.ndarray  # n_t x n_t, symmetric, zero diagonal
    detection_pair: np.ndarray  # n_d x n_d, symmetric, zero diagonal

    @property
    def n_t(self) -> int:
        return self.cross.shape[0]

    @property
    def n_d(self) -> int:
        return self.cross.shape[1]

    @classmethod
    def from_arrays(cls, cross, tracklet_pair=None, detection_pair=None) -> "SimilarityMatrix":
        """Build from plain arrays; missing same-side matrices default to zero."""
        cross = np.atleast_2d(np.asarray(cross, dtype=np.float64))
        n_t, n_d = cross.shape
        tp = np.zeros((n_t, n_t)) if tracklet_pair is None else np.asarray(tracklet_pair, dtype=np.float64)
        dp = np.zeros((n_d, n_d)) if detection_pair is None else np.asarray(detection_pair, dtype=np.float64)
        if tp.shape != (n_t, n_t) or dp.shape != (n_d, n_d):
            raise ValueError("same-side matrices do not match the cross matrix shape")
        for name, m in (("tracklet_pair", tp), ("detection_pair", dp)):
            if not np.array_equal(m, m.T):
                raise ValueError(f"{name} must be symmetric")
            if np.any(np.diag(m) != 0):
                raise ValueError(f"{name} must have a zero diagonal")
        if not (np.all(np.isfinite(cross)) and np.all(np.isfinite(tp)) and np.all(np.isfinite(dp))):
            raise ValueError("similarities must be finite")
        return cls(cross, tp, dp)


def appearance_similarity(emb_a, emb_b) -> float:
    a = np.asarray(emb_a, dtype=np.float64)
    b = np.asarray(emb_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def _appearance(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> float:
    if a is None or b is None:
        return 0.0
    return appearance_similarity(a, b)


def predict_box(t: Tracklet, frame: int) -> BoundingBox:
    """Constant-velocity extrapolation from the last two non-interpolated entries.

    Extrapolated sizes that would collapse to non-positive values keep the
    last observed size.
    """
    if t.state is TrackState.TERMINATED:
        raise ValueError(f"tracklet {t.id} is terminated")
    raw = t.raw_entries() or list(t.entries)
    last = raw[-1]
    if frame <= t.last_frame:
        raise ValueError(f"prediction frame {frame} must follow the last tracklet frame {t.last_frame}")
    if len(raw) < 2:
        return last.box
    prev = raw[-2]
    dt = frame - last.frame
    span = last.frame - prev.frame
    x0, y0, w0, h0 = prev.box.as_tuple()
    x1, y1, w1, h1 = last.box.as_tuple()
    # Extrapolate center and size; equivalent to linear in (x, y, w, h).
    cx = (x1 + w1 / 2) + ((x1 + w1 / 2) - (x0 + w0 / 2)) / span * dt
    cy = (y1 + h1 / 2) + ((y1 + h1 / 2) - (y0 + h0 / 2)) / span * dt
    w = w1 + (w1 - w0) / span * dt
    h = h1 + (h1 - h0) / span * dt
    if w <= 0 or h <= 0:
        w, h = w1, h1
    return BoundingBox(cx - w / 2, cy - h / 2, w, h)


def motion_similarity(t: Tracklet, d: Detection) -> float:
    return iou(predict_box(t, d.frame), d.box)


def fused_similarity(t: Tracklet, d: Detection, lambda_s: float) -> float:
    return _appearance(t.embedding, d.embedding) + lambda_s * motion_similarity(t, d)


def update_embedding(current: Optional[np.ndarray], new: Optional[np.ndarray]) -> Optional[np.ndarray]:
    """Exponential moving average of matched embeddings, kept at unit length."""
    if new is None:
        return current
    if current is None:
        return unit_vector(new)
    mixed = EMBEDDING_MOMENTUM * current + (1.0 - EMBEDDING_MOMENTUM) * np.asarray(new)
    try:
        return unit_vector(mixed)
    except ValueError:
        # exactly opposite vectors cancel; take the newest observation
        return unit_vector(new)


def build_similarity_matrix(
    tracklets: Sequence[Tracklet], detections: Sequence[Detection], cfg: TrackerConfig
) -> SimilarityMatrix:
    n_t, n_d = len(tracklets), len(detections)
    frames = {d.frame for d in detections}
    if len(frames) > 1:
        raise ValueError(f"detections span several frames: {sorted(frames)}")
    lam = cfg.lambda_s

    if n_d:
        frame = detections[0].frame
    elif n_t:
        frame = max(t.last_frame for t in tracklets) + 1
    else:
        return SimilarityMatrix(np.zeros((0, 0)), np.zeros((0, 0)), np.zeros((0, 0)))

    predicted = box_array([predict_box(t, frame) for t in tracklets])
    observed = box_array([d.box for d in detections])
    t_emb = _embedding_matrix([t.embedding for t in tracklets])
    d_emb = _embedding_matrix([d.embedding for d in detections])

    cross = _appearance_matrix(t_emb, d_emb) + lam * iou_matrix(predicted, observed)
    tp = _appearance_matrix(t_emb, t_emb) + lam * iou_matrix(predicted, predicted)
    dp = _appearance_matrix(d_emb, d_emb) + lam * iou_matrix(observed, observed)
    for m in (tp, dp):
        np.fill_diagonal(m, 0.0)
        # exact symmetry regardless of BLAS summation order
        m[:] = np.triu(m, 1) + np.triu(m, 1).T
    return SimilarityMatrix(cross, tp, dp)


def box_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64).reshape(len(boxes), 4)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU of (n, 4) and (m, 4) arrays of x, y, w, h rows."""
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[None, :, 0], b[None, :, 1]
    bx2, by2 = bx1 + b[None, :, 2], by1 + b[None, :, 3]
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    overlap = (iw > 0) & (ih > 0)
    inter = np.where(overlap, iw * ih, 0.0)
    union = (a[:, 2:3] * a[:, 3:4]) + (b[None, :, 2] * b[None, :, 3]) - inter
    return np.where(overlap, np.minimum(1.0, inter / union), 0.0)


def _embedding_matrix(embs: Sequence[Optional[np.ndarray]]) -> Optional[np.ndarray]:
    """Stack embeddings; entities without one get a zero row."""
    present = [e for e in embs if e is not None]
    if not present:
        return None
    dims = {e.shape for e in present}
    if len(dims) > 1:
        raise ValueError(f"embedding dimension mismatch: {sorted(dims)}")
    out = np.zeros((len(embs), present[0].shape[0]))
    for k, e in enumerate(embs):
        if e is not None:
            out[k] = e
    return out


def _appearance_matrix(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> np.ndarray | float:
    # missing embeddings are zero rows, which yields the A = 0 convention
    if a is None or b is None:
        return 0.0
    return np.clip(a @ b.T, -1.0, 1.0)
