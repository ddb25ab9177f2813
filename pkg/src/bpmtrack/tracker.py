"""Frame-by-frame tracking with box-plane association.

Each frame: filter detections, score them against live tracklets, build
box-planes, match inside each plane, then update the tracklet lifecycle.
Tracklets matched after a gap get the missing frames filled by linear
interpolation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .assignment import km_assign
from .boxplane import SolverReport, construct_planes, in_plane_match
from .core import (
    BoundingBox,
    Detection,
    MatchSet,
    PlaneAssignment,
    TrackEntry,
    TrackerConfig,
    Tracklet,
    TrackState,
)
from .similarity import SimilarityMatrix, build_similarity_matrix, update_embedding

logger = logging.getLogger(__name__)

ScoreMap = Mapping[tuple[int, int], float]


@dataclass(frozen=True)
class DetectionFilterDecision:
    kept: bool
    score: float
    reason: str  # "confidence_floor", "external_classifier" or "pass"


@dataclass(frozen=True)
class TrackingResult:
    tracks: list[Tracklet]
    frame_range: Optional[tuple[int, int]]

    def frames(self) -> dict[int, dict[int, BoundingBox]]:
        """frame -> {track id: box}, interpolated boxes included."""
        out: dict[int, dict[int, BoundingBox]] = {}
        for t in self.tracks:
            for e in t.entries:
                out.setdefault(e.frame, {})[t.id] = e.box
        return out


@dataclass
class FrameReport:
    frame: int
    n_input: int
    kept: list[Detection]
    decisions: list[DetectionFilterDecision]
    planes: Optional[PlaneAssignment]
    solver: Optional[SolverReport]
    matches: MatchSet
    births: list[int] = field(default_factory=list)
    terminated: list[int] = field(default_factory=list)


def filter_detections(
    dets: Sequence[Detection], scores: Optional[ScoreMap], cfg: TrackerConfig
) -> tuple[list[Detection], list[DetectionFilterDecision]]:
    """Keep detections whose score reaches ``tau_det``.

    An external score for (frame, source_index) overrides the detector
    confidence; such scores must lie in [0, 1].
    """
    kept, decisions = [], []
    for d in dets:
        external = None if scores is None else scores.get((d.frame, d.source_index))
        if external is not None:
            if not 0.0 <= external <= 1.0:
                raise ValueError(
                    f"external score {external} for frame {d.frame} index {d.source_index} is outside [0, 1]"
                )
            score = float(external)
        else:
            score = float(d.confidence)
        ok = score >= cfg.tau_det
        if ok:
            reason = "pass"
        else:
            reason = "external_classifier" if external is not None else "confidence_floor"
        decisions.append(DetectionFilterDecision(ok, score, reason))
        if ok:
            kept.append(d)
    return kept, decisions


def interpolate_boxes(a: TrackEntry, b: TrackEntry) -> list[TrackEntry]:
    """Linearly interpolated entries for the frames strictly between a and b."""
    out = []
    gap = b.frame - a.frame
    pa = np.array(a.box.as_tuple())
    pb = np.array(b.box.as_tuple())
    for f in range(a.frame + 1, b.frame):
        s = (f - a.frame) / gap
        x, y, w, h = (1 - s) * pa + s * pb
        out.append(TrackEntry(f, BoundingBox(float(x), float(y), float(w), float(h)), True))
    return out


class _LiveTrack:
    """Mutable tracklet state owned by one tracker."""

    __slots__ = ("id", "entries", "embedding", "age", "state", "hits", "ever_confirmed")

    def __init__(self, track_id: int, det: Detection):
        self.id = track_id
        self.entries = [TrackEntry(det.frame, det.box, False)]
        self.embedding = det.embedding
        self.age = 0
        self.state = TrackState.TENTATIVE
        self.hits = 1
        self.ever_confirmed = False

    def snapshot(self) -> Tracklet:
        return Tracklet(self.id, tuple(self.entries), self.embedding, self.age, self.state, self.hits)

    def add(self, det: Detection, cfg: TrackerConfig):
        last = self.entries[-1]
        if det.frame - last.frame > 1:
            self.entries.extend(interpolate_boxes(last, TrackEntry(det.frame, det.box)))
        self.entries.append(TrackEntry(det.frame, det.box, False))
        self.embedding = update_embedding(self.embedding, det.embedding)
        self.age = 0
        self.hits += 1
        if self.state is TrackState.TENTATIVE and self.hits >= cfg.n_init:
            self.state = TrackState.CONFIRMED
            self.ever_confirmed = True


class BoxPlaneTracker:
    """Stateful tracker over one sequence; call ``step`` once per frame in order."""

    def __init__(self, cfg: Optional[TrackerConfig] = None, scores: Optional[ScoreMap] = None):
        self.cfg = cfg or TrackerConfig()
        self.scores = scores
        self._live: list[_LiveTrack] = []
        self._finished: list[_LiveTrack] = []
        self._next_id = 1
        self._last_frame: Optional[int] = None
        self._first_frame: Optional[int] = None

    @property
    def live_tracklets(self) -> list[Tracklet]:
        return [t.snapshot() for t in self._live]

    def _associate(self, sm: SimilarityMatrix, frame: int):
        cfg = self.cfg
        if not cfg.use_planes:
            return None, None, km_assign(sm.cross, cfg.tau_match)
        # per-frame seed keeps each frame's solve independent of history
        seed = int(np.random.SeedSequence([cfg.rng_seed, frame]).generate_state(1)[0])
        report = construct_planes(sm, replace(cfg, rng_seed=seed))
        return report.best, report, in_plane_match(report.best, sm, cfg)

    def step(self, frame: int, dets: Sequence[Detection]) -> FrameReport:
        cfg = self.cfg
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError(f"frame {frame} does not follow previous frame {self._last_frame}")
        if any(d.frame != frame for d in dets):
            raise ValueError(f"detections passed to step({frame}) belong to other frames")
        if self._first_frame is None:
            self._first_frame = frame
        self._last_frame = frame

        kept, decisions = filter_detections(dets, self.scores, cfg)
        tracklets = [t.snapshot() for t in self._live]
        sm = build_similarity_matrix(tracklets, kept, cfg)
        planes, solver, matches = self._associate(sm, frame)

        matched_t = {i for i, _ in matches.pairs}
        matched_d = {j for _, j in matches.pairs}
        for i, j in sorted(matches.pairs):
            self._live[i].add(kept[j], cfg)

        terminated = []
        survivors = []
        for i, t in enumerate(self._live):
            if i not in matched_t:
                t.age += 1
                if t.age > cfg.max_age:
                    t.state = TrackState.TERMINATED
                    terminated.append(t.id)
                    self._finished.append(t)
                    continue
            survivors.append(t)
        self._live = survivors

        births = []
        for j, d in enumerate(kept):
            if j in matched_d:
                continue
            t = _LiveTrack(self._next_id, d)
            self._next_id += 1
            if cfg.n_init <= 1:
                t.state = TrackState.CONFIRMED
                t.ever_confirmed = True
            self._live.append(t)
            births.append(t.id)

        return FrameReport(frame, len(dets), kept, decisions, planes, solver, matches, births, terminated)

    def result(self) -> TrackingResult:
        tracks = [t.snapshot() for t in self._finished + self._live if t.ever_confirmed]
        tracks.sort(key=lambda t: t.id)
        rng = None if self._first_frame is None else (self._first_frame, self._last_frame)
        return TrackingResult(tracks, rng)


def run(
    sequence: Mapping[int, Sequence[Detection]],
    cfg: Optional[TrackerConfig] = None,
    scores: Optional[ScoreMap] = None,
    last_frame: Optional[int] = None,
) -> TrackingResult:
    """Track a whole sequence given as frame -> detections.

    Frames between the first and last key (or ``last_frame``) that carry no
    detections are still stepped so tracklets age correctly.
    """
    tracker = BoxPlaneTracker(cfg, scores)
    if not sequence:
        return tracker.result()
    first = min(sequence)
    end = max(max(sequence), last_frame or 0)
    for f in range(first, end + 1):
        tracker.step(f, sequence.get(f, []))
    return tracker.result()
