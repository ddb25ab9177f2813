"""Seeded synthetic dense scenes with known ground truth.

Targets move at constant velocity and bounce off the arena walls. Pairs of
targets can be put on colliding courses so that their boxes overlap
mid-sequence. Detections are the ground-truth boxes with random misses,
clutter and coordinate jitter. Every target owns a fixed random unit
embedding; its detections carry noisy copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoundingBox, Detection, unit_vector


@dataclass(frozen=True)
class SyntheticSpec:
    n_targets: int = 5
    n_frames: int = 100
    arena: tuple[float, float] = (640.0, 480.0)
    speed_range: tuple[float, float] = (1.0, 4.0)
    box_width_range: tuple[float, float] = (24.0, 40.0)
    aspect: float = 2.0
    fn_rate: float = 0.0
    fp_rate: float = 0.0
    jitter_sigma: float = 0.0
    embed_dim: int = 16
    embed_noise: float = 0.0
    crossing_bias: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_targets < 1 or self.n_frames < 1:
            raise ValueError("n_targets and n_frames must be >= 1")
        for name in ("fn_rate", "fp_rate", "crossing_bias"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.jitter_sigma < 0 or self.embed_noise < 0:
            raise ValueError("jitter_sigma and embed_noise must be >= 0")
        if self.embed_dim < 2:
            raise ValueError("embed_dim must be >= 2")
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise ValueError("speed_range must be an ordered pair of non-negative speeds")


@dataclass
class SyntheticScene:
    spec: SyntheticSpec
    ground_truth: dict[int, dict[int, BoundingBox]]
    detections: dict[int, list[Detection]]
    embeddings: dict[tuple[int, int], np.ndarray]
    target_embeddings: dict[int, np.ndarray] = field(default_factory=dict)
    # (frame, source_index) of every clutter detection
    clutter: set[tuple[int, int]] = field(default_factory=set)


def _reflect(pos: float, vel: float, lo: float, hi: float) -> tuple[float, float]:
    span = hi - lo
    if span <= 0:
        return lo, 0.0
    while pos < lo or pos > hi:
        if pos < lo:
            pos, vel = 2 * lo - pos, -vel
        else:
            pos, vel = 2 * hi - pos, -vel
    return pos, vel


def _initial_states(spec: SyntheticSpec, sizes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rows of (x, y, vx, vy) for every target."""
    aw, ah = spec.arena
    n = spec.n_targets
    states = np.zeros((n, 4))
    for k in range(n):
        w, h = sizes[k]
        speed = rng.uniform(*spec.speed_range)
        ang = rng.uniform(0, 2 * np.pi)
        states[k] = (rng.uniform(0, aw - w), rng.uniform(0, ah - h), speed * np.cos(ang), speed * np.sin(ang))
    for a in range(0, n - 1, 2):
        if rng.uniform() >= spec.crossing_bias:
            continue
        b = a + 1
        wa, ha = sizes[a]
        wb, hb = sizes[b]
        meet = np.array([rng.uniform(0.3, 0.7) * aw, rng.uniform(0.3, 0.7) * ah])
        ang = rng.uniform(0, 2 * np.pi)
        turn = rng.uniform(np.pi / 2, np.pi)
        va = rng.uniform(*spec.speed_range) * np.array([np.cos(ang), np.sin(ang)])
        vb = rng.uniform(*spec.speed_range) * np.array([np.cos(ang + turn), np.sin(ang + turn)])
        t_meet = max(1, spec.n_frames // 2)
        # shrink the meeting time until both starts lie inside the arena
        while t_meet > 1:
            ca = meet - va * t_meet
            cb = meet - vb * t_meet
            inside = (
                wa / 2 <= ca[0] <= aw - wa / 2 and ha / 2 <= ca[1] <= ah - ha / 2
                and wb / 2 <= cb[0] <= aw - wb / 2 and hb / 2 <= cb[1] <= ah - hb / 2
            )
            if inside:
                break
            t_meet -= 1
        ca = meet - va * t_meet
        cb = meet - vb * t_meet
        states[a] = (ca[0] - wa / 2, ca[1] - ha / 2, va[0], va[1])
        states[b] = (cb[0] - wb / 2, cb[1] - hb / 2, vb[0], vb[1])
    for k in range(n):
        w, h = sizes[k]
        states[k, 0], _ = _reflect(states[k, 0], 0.0, 0.0, aw - w)
        states[k, 1], _ = _reflect(states[k, 1], 0.0, 0.0, ah - h)
    return states


def _random_unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=dim)
        if np.linalg.norm(v) > 1e-9:
            return unit_vector(v)


def generate(spec: SyntheticSpec) -> SyntheticScene:
    rng = np.random.default_rng(spec.seed)
    aw, ah = spec.arena
    n = spec.n_targets
    widths = rng.uniform(*spec.box_width_range, size=n)
    sizes = np.stack([widths, widths * spec.aspect], axis=1)
    if np.any(sizes[:, 0] >= aw) or np.any(sizes[:, 1] >= ah):
        raise ValueError("target boxes do not fit inside the arena")
    states = _initial_states(spec, sizes, rng)
    ids = list(range(1, n + 1))
    target_emb = {tid: _random_unit(spec.embed_dim, rng) for tid in ids}

    gt: dict[int, dict[int, BoundingBox]] = {}
    dets: dict[int, list[Detection]] = {}
    emb: dict[tuple[int, int], np.ndarray] = {}
    clutter: set[tuple[int, int]] = set()
    for f in range(1, spec.n_frames + 1):
        if f > 1:
            for k in range(n):
                w, h = sizes[k]
                x, vx = _reflect(states[k, 0] + states[k, 2], states[k, 2], 0.0, aw - w)
                y, vy = _reflect(states[k, 1] + states[k, 3], states[k, 3], 0.0, ah - h)
                states[k] = (x, y, vx, vy)
        frame_gt = {}
        rows = []  # (box, confidence, embedding, is_clutter)
        for k, tid in enumerate(ids):
            box = BoundingBox(float(states[k, 0]), float(states[k, 1]), float(sizes[k, 0]), float(sizes[k, 1]))
            frame_gt[tid] = box
            missed = rng.uniform() < spec.fn_rate
            spawn_fp = rng.uniform() < spec.fp_rate
            if not missed:
                bx = box
                if spec.jitter_sigma > 0:
                    dx, dy, dw, dh = rng.normal(0.0, spec.jitter_sigma, 4)
                    bx = BoundingBox(box.x + dx, box.y + dy, max(1.0, box.w + dw), max(1.0, box.h + dh))
                e = target_emb[tid]
                if spec.embed_noise > 0:
                    e = unit_vector(e + rng.normal(0.0, spec.embed_noise, spec.embed_dim))
                rows.append((bx, float(rng.uniform(0.5, 1.0)), e, False))
            if spawn_fp:
                fw = float(rng.uniform(*spec.box_width_range))
                fh = fw * spec.aspect
                fb = BoundingBox(float(rng.uniform(0, aw - fw)), float(rng.uniform(0, ah - fh)), fw, fh)
                rows.append((fb, float(rng.uniform(0.0, 0.6)), _random_unit(spec.embed_dim, rng), True))
        gt[f] = frame_gt
        order = rng.permutation(len(rows))
        frame_dets = []
        for src, r in enumerate(order):
            bx, conf, e, is_fp = rows[r]
            frame_dets.append(Detection(f, bx, conf, None, src))
            emb[(f, src)] = e
            if is_fp:
                clutter.add((f, src))
        if frame_dets:
            dets[f] = frame_dets
    return SyntheticScene(spec, gt, dets, emb, target_emb, clutter)
