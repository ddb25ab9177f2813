"""Box-plane construction and in-plane matching.

Every tracklet end and every detection is either left out or attached to one
plane. The construction objective rewards tracklet/detection pairs that share
a plane (cross term, ``phi1``) and penalises similar entities that sit on the
same side of a plane (same-side term, ``phi2``). Both sums run over ordered
pairs, hence the factor 2 on the cross term.

Entities are indexed tracklets first, then detections, whenever a flat index
is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assignment import km_assign
from .core import MatchSet, PlaneAssignment, TrackerConfig, canonical_labels
from .similarity import SimilarityMatrix

ORACLE_MAX_ENTITIES = 8
_IMPROVE_EPS = 1e-12


@dataclass(frozen=True)
class ObjectiveTerms:
    phi1: float
    phi2: float
    total: float


@dataclass(frozen=True)
class SolverReport:
    best: PlaneAssignment
    restarts_run: int
    iterations_per_restart: list[int] = field(default_factory=list)
    improved_steps: int = 0


def _labels(mapping: Sequence[Optional[int]]) -> np.ndarray:
    return np.array([-1 if p is None else p for p in mapping], dtype=np.int64)


def phi1(pa: PlaneAssignment, sm: SimilarityMatrix) -> float:
    lt, ld = _labels(pa.tracklet_plane), _labels(pa.detection_plane)
    mask = (lt[:, None] == ld[None, :]) & (lt[:, None] >= 0)
    return -2.0 * math.fsum(sm.cross[mask].tolist())


def _same_side_sum(mapping: Sequence[Optional[int]], pair: np.ndarray) -> list[float]:
    lab = _labels(mapping)
    mask = (lab[:, None] == lab[None, :]) & (lab[:, None] >= 0)
    np.fill_diagonal(mask, False)
    return pair[mask].tolist()


def phi2(pa: PlaneAssignment, sm: SimilarityMatrix) -> float:
    terms = _same_side_sum(pa.tracklet_plane, sm.tracklet_pair)
    terms += _same_side_sum(pa.detection_plane, sm.detection_pair)
    return math.fsum(terms)


def evaluate(pa: PlaneAssignment, sm: SimilarityMatrix) -> ObjectiveTerms:
    a = phi1(pa, sm)
    b = phi2(pa, sm)
    return ObjectiveTerms(a, b, a + b)


def entity_weights(sm: SimilarityMatrix) -> np.ndarray:
    """Symmetric (n_t+n_d)^2 matrix whose ordered same-plane sum is phi1 + phi2."""
    n_t, n_d = sm.n_t, sm.n_d
    w = np.zeros((n_t + n_d, n_t + n_d))
    w[:n_t, :n_t] = sm.tracklet_pair
    w[n_t:, n_t:] = sm.detection_pair
    w[:n_t, n_t:] = -sm.cross
    w[n_t:, :n_t] = -sm.cross.T
    return w


def _make_assignment(labels: Sequence[Optional[int]], n_t: int, sm: SimilarityMatrix) -> PlaneAssignment:
    """Compact labels into a canonical PlaneAssignment with its objective.

    Planes left with a single member contribute nothing and are dissolved.
    """
    labels = list(labels)
    counts: dict[int, int] = {}
    for p in labels:
        if p is not None:
            counts[p] = counts.get(p, 0) + 1
    labels = [None if p is None or counts[p] < 2 else p for p in labels]
    n_p, tp, dp = canonical_labels(labels[:n_t], labels[n_t:])
    pa = PlaneAssignment(n_p, tp, dp, 0.0)
    return PlaneAssignment(n_p, tp, dp, evaluate(pa, sm).total)


def _set_partitions_with_unassigned(n: int) -> np.ndarray:
    """All labelings of n entities into unlabeled planes plus an 'unassigned' cell.

    Restricted growth strings over n + 1 symbols where the leading sentinel's
    block is the unassigned cell; returned as an array with -1 = unassigned.
    """
    out = []
    rgs = [0] * (n + 1)

    def rec(k: int, mx: int):
        if k == n + 1:
            out.append([x - 1 for x in rgs[1:]])
            return
        for v in range(mx + 2):
            rgs[k] = v
            rec(k + 1, max(mx, v))

    rec(1, 0)
    return np.array(out, dtype=np.int64).reshape(len(out), n)


def enumerate_objectives(sm: SimilarityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Objective of every plane construction of a small instance.

    Returns (labels, objectives) with labels shaped (count, n_t + n_d).
    """
    n = sm.n_t + sm.n_d
    labels = _set_partitions_with_unassigned(n)
    w = entity_weights(sm)
    same = (labels[:, :, None] == labels[:, None, :]) & (labels[:, :, None] >= 0)
    objectives = (same * w[None]).sum(axis=(1, 2))
    return labels, objectives


def construct_planes_oracle(sm: SimilarityMatrix, max_entities: int = ORACLE_MAX_ENTITIES) -> PlaneAssignment:
    """Exact minimizer by exhaustive enumeration.

    Ties go to the fewest planes, then to the lexicographically smallest
    label vector (tracklets then detections, unassigned encoded as -1).
    """
    n_t, n = sm.n_t, sm.n_t + sm.n_d
    if n > min(max_entities, ORACLE_MAX_ENTITIES):
        raise ValueError(f"instance has {n} entities; exhaustive oracle is capped at {min(max_entities, ORACLE_MAX_ENTITIES)}")
    if n == 0:
        return PlaneAssignment.empty(sm.n_t, sm.n_d)
    labels, objectives = enumerate_objectives(sm)
    best = objectives.min()
    # Enumeration sums can differ in the last bits between equivalent
    # structures; re-evaluate near-ties exactly.
    near = np.flatnonzero(objectives <= best + 1e-9 * max(1.0, abs(best)))
    ranked = []
    for k in near:
        pa = _make_assignment([None if x < 0 else int(x) for x in labels[k]], n_t, sm)
        key = tuple(-1 if p is None else p for p in pa.tracklet_plane + pa.detection_plane)
        ranked.append((pa.objective, pa.n_p, key, pa))
    ranked.sort(key=lambda r: r[:3])
    return ranked[0][3]


def _greedy_init(sm: SimilarityMatrix) -> list[Optional[int]]:
    """Seed one two-member plane per mutually-best positive tracklet/detection pair."""
    n_t, n_d = sm.n_t, sm.n_d
    labels: list[Optional[int]] = [None] * (n_t + n_d)
    if n_t == 0 or n_d == 0:
        return labels
    best_d = np.argmax(sm.cross, axis=1)
    best_t = np.argmax(sm.cross, axis=0)
    plane = 0
    for i in range(n_t):
        j = int(best_d[i])
        if best_t[j] == i and sm.cross[i, j] > 0:
            labels[i] = plane
            labels[n_t + j] = plane
            plane += 1
    return labels


def _random_init(n: int, rng: np.random.Generator) -> list[Optional[int]]:
    n_p = int(rng.integers(1, n + 1))
    raw = rng.integers(-1, n_p, size=n)
    return [None if x < 0 else int(x) for x in raw]


def _local_search(
    w: np.ndarray, labels: list[Optional[int]], max_iters: int
) -> tuple[list[Optional[int]], int]:
    """Best-improvement descent over single-entity relocations.

    Moves: to another existing plane, to a fresh plane, or out of all planes.
    Returns the final labels and the number of improving moves taken.
    """
    n = len(labels)
    planes = sorted({p for p in labels if p is not None})
    remap = {p: k for k, p in enumerate(planes)}
    n_p = len(planes)
    lab = np.array([n_p if p is None else remap[p] for p in labels], dtype=np.int64)
    # A fresh plane scores exactly like leaving, so it is never a strict
    # improvement; the plane count can only shrink and column n_p stands for
    # "unassigned".
    member = np.zeros((n, n_p + 1))
    member[np.arange(n), lab] = 1.0
    member[:, n_p] = 0.0
    # gain[e, q]: ordered-pair contribution of e joining plane q
    gain = 2.0 * (w @ member)
    rows = np.arange(n)
    steps = 0
    while steps < max_iters:
        current = gain[rows, lab]
        options = gain - current[:, None]
        options[rows, lab] = np.inf  # staying put is not a move
        flat = int(np.argmin(options))
        e, q = divmod(flat, n_p + 1)
        if options[e, q] >= -_IMPROVE_EPS:
            break
        old = lab[e]
        if old < n_p:
            gain[:, old] -= 2.0 * w[:, e]
        if q < n_p:
            gain[:, q] += 2.0 * w[:, e]
        lab[e] = q
        steps += 1
    lab = np.where(lab == n_p, -1, lab)
    return [None if x < 0 else int(x) for x in lab], steps


def construct_planes(sm: SimilarityMatrix, cfg: TrackerConfig) -> SolverReport:
    """Multi-restart local search for the plane construction objective.

    Restart 0 starts from greedy mutual-best pairs; the rest start from seeded
    random labelings. The best restart wins, ties to the lowest index.
    """
    n_t, n = sm.n_t, sm.n_t + sm.n_d
    if n_t == 0 or sm.n_d == 0:
        return SolverReport(PlaneAssignment.empty(sm.n_t, sm.n_d), 0, [], 0)
    w = entity_weights(sm)
    rng = np.random.default_rng(cfg.rng_seed)
    best: Optional[PlaneAssignment] = None
    iterations = []
    improved = 0
    for r in range(cfg.solver_restarts):
        init = _greedy_init(sm) if r == 0 else _random_init(n, rng)
        labels, steps = _local_search(w, init, cfg.solver_max_iters)
        iterations.append(steps)
        improved += steps
        pa = _make_assignment(labels, n_t, sm)
        if best is None or pa.objective < best.objective:
            best = pa
    return SolverReport(best, cfg.solver_restarts, iterations, improved)


def in_plane_match(pa: PlaneAssignment, sm: SimilarityMatrix, cfg: TrackerConfig) -> MatchSet:
    """Optimal one-to-one matching inside each plane, gated at ``tau_match``."""
    pairs = []
    for m in range(pa.n_p):
        ts, ds = pa.plane_members(m)
        if not ts or not ds:
            continue
        sub = sm.cross[np.ix_(ts, ds)]
        local = km_assign(sub, cfg.tau_match)
        pairs.extend((ts[a], ds[b]) for a, b in local.pairs)
    total = math.fsum(sm.cross[i, j] for i, j in sorted(pairs))
    return MatchSet(frozenset(pairs), total)
