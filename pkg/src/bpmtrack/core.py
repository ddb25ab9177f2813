"""Domain types shared across the tracking pipeline.

Boxes follow the MOTChallenge convention: top-left corner plus width and
height, in pixels. Corners are computed on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

UNIT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box coordinates: {vals}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width and height must be positive, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return min(1.0, inter / union)


def unit_vector(vec) -> np.ndarray:
    """Return a read-only float64 copy of ``vec`` scaled to unit length.

    Raises ValueError for zero or non-finite vectors.
    """
    arr = np.array(vec, dtype=np.float64).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ValueError("embedding must be a non-empty finite vector")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("zero-norm embedding")
    if abs(norm - 1.0) > UNIT_NORM_TOL:
        arr = arr / norm
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Detection:
    frame: int
    box: BoundingBox
    confidence: float = 1.0
    embedding: Optional[np.ndarray] = None
    source_index: int = 0

    def __post_init__(self):
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if not math.isfinite(self.confidence):
            raise ValueError("confidence must be finite")
        if self.embedding is not None:
            object.__setattr__(self, "embedding", unit_vector(self.embedding))


class TrackState(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    TERMINATED = "terminated"


@dataclass(frozen=True)
class TrackEntry:
    frame: int
    box: BoundingBox
    was_interpolated: bool = False


@dataclass(frozen=True, eq=False)
class Tracklet:
    id: int
    entries: tuple[TrackEntry, ...]
    embedding: Optional[np.ndarray] = None
    age_since_update: int = 0
    state: TrackState = TrackState.TENTATIVE
    hits: int = 1

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"tracklet id must be >= 1, got {self.id}")
        if not self.entries:
            raise ValueError("tracklet needs at least one entry")
        frames = [e.frame for e in self.entries]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"tracklet {self.id}: entry frames must strictly increase")
        if self.age_since_update < 0 or self.hits < 1:
            raise ValueError("age_since_update must be >= 0 and hits >= 1")
        if self.embedding is not None:
            object.__setattr__(self, "embedding", unit_vector(self.embedding))

    @property
    def last_frame(self) -> int:
        return self.entries[-1].frame

    def raw_entries(self) -> list[TrackEntry]:
        return [e for e in self.entries if not e.was_interpolated]


@dataclass(frozen=True)
class PlaneAssignment:
    """Membership of tracklet ends and detections in box-planes.

    ``tracklet_plane[i]`` is the plane holding tracklet ``i`` (or None) and
    ``detection_plane[j]`` likewise for detection ``j``. One entry per index
    means each entity sits in at most one plane by construction.
    """

    n_p: int
    tracklet_plane: tuple[Optional[int], ...]
    detection_plane: tuple[Optional[int], ...]
    objective: float = 0.0

    @classmethod
    def empty(cls, n_t: int, n_d: int) -> "PlaneAssignment":
        return cls(0, (None,) * n_t, (None,) * n_d, 0.0)

    def plane_members(self, m: int) -> tuple[list[int], list[int]]:
        ts = [i for i, p in enumerate(self.tracklet_plane) if p == m]
        ds = [j for j, p in enumerate(self.detection_plane) if p == m]
        return ts, ds


def canonical_labels(
    tracklet_plane: Sequence[Optional[int]], detection_plane: Sequence[Optional[int]]
) -> tuple[int, tuple[Optional[int], ...], tuple[Optional[int], ...]]:
    """Relabel planes by first appearance (tracklets first) and drop unused labels."""
    remap: dict[int, int] = {}
    out = []
    for p in list(tracklet_plane) + list(detection_plane):
        if p is None:
            out.append(None)
            continue
        if p not in remap:
            remap[p] = len(remap)
        out.append(remap[p])
    n_t = len(tracklet_plane)
    return len(remap), tuple(out[:n_t]), tuple(out[n_t:])


def validate_assignment(pa: PlaneAssignment, n_t: int, n_d: int) -> list[str]:
    """List every violated PlaneAssignment invariant; an empty list means valid."""
    problems = []
    if pa.n_p < 0:
        problems.append(f"negative plane count: n_p={pa.n_p}")
    if len(pa.tracklet_plane) != n_t:
        problems.append(f"tracklet map has {len(pa.tracklet_plane)} entries, expected {n_t}")
    if len(pa.detection_plane) != n_d:
        problems.append(f"detection map has {len(pa.detection_plane)} entries, expected {n_d}")
    used = set()
    for side, mapping in (("tracklet", pa.tracklet_plane), ("detection", pa.detection_plane)):
        for idx, p in enumerate(mapping):
            if p is None:
                continue
            if not 0 <= p < pa.n_p:
                problems.append(f"plane index out of range: {side} {idx} -> plane {p} (n_p={pa.n_p})")
            else:
                used.add(p)
    for m in range(max(pa.n_p, 0)):
        if m not in used:
            problems.append(f"empty plane: plane {m} has no members")
    return problems


@dataclass(frozen=True)
class MatchSet:
    pairs: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    total_similarity: float = 0.0

    def __post_init__(self):
        rows = [i for i, _ in self.pairs]
        cols = [j for _, j in self.pairs]
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise ValueError("a tracklet or detection index appears in more than one pair")

    def sorted_pairs(self) -> list[tuple[int, int]]:
        return sorted(self.pairs)


@dataclass(frozen=True)
class TrackerConfig:
    lambda_s: float = 1.0
    tau_match: float = 0.3
    tau_det: float = 0.4
    max_age: int = 30
    n_init: int = 3
    solver_restarts: int = 8
    solver_max_iters: int = 200
    rng_seed: int = 0
    # False gives the plane-free baseline: one global assignment per frame.
    use_planes: bool = True

    def __post_init__(self):
        for name in ("lambda_s", "tau_match", "tau_det"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.lambda_s < 0:
            raise ValueError("lambda_s must be >= 0")
        if not 0.0 <= self.tau_det <= 1.0:
            raise ValueError("tau_det must lie in [0, 1]")
        for name in ("max_age", "n_init", "solver_restarts", "solver_max_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
