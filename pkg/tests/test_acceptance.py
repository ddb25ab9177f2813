"""Acceptance suite: one test per headline criterion.

Each test records a ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary (see conftest.py). Run directly with
``python3 tests/test_acceptance.py`` to get the same lines without pytest.
"""

from __future__ import annotations

import filecmp
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))

from bpmtrack.ablation import BASELINE, BP, BP_FILTER, BPM, run_ladder  # noqa: E402
from bpmtrack.assignment import km_assign  # noqa: E402
from bpmtrack.boxplane import (  # noqa: E402
    construct_planes,
    construct_planes_oracle,
    enumerate_objectives,
    evaluate as plane_objective,
    in_plane_match,
)
from bpmtrack.cli import main as cli  # noqa: E402
from bpmtrack.core import BoundingBox, PlaneAssignment, TrackerConfig  # noqa: E402
from bpmtrack.metrics import evaluate  # noqa: E402
from bpmtrack.neural_math import (  # noqa: E402
    EnsembleWeights,
    channel_attention_map,
    gam_apply,
    ladm_aggregate,
    random_cam_params,
    random_sam_params,
    spatial_attention_map,
)
from bpmtrack.similarity import SimilarityMatrix  # noqa: E402
from bpmtrack.synthetic import SyntheticSpec, generate  # noqa: E402

from oracles import brute_force_matching, cam_scalar, permutation_maximum, sam_scalar  # noqa: E402

RESULTS: list[str] = []


def record(name: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_km_oracle_equivalence():
    rng = np.random.default_rng(2024)
    mismatches = 0
    checked = 0
    elapsed = 0.0
    for k in range(500):
        n, m = (int(x) for x in rng.integers(1, 7, size=2))
        if k % 2:
            w = rng.integers(-3, 5, size=(n, m)).astype(float)  # tie-heavy
        else:
            w = rng.normal(size=(n, m))
        gates = [0.0, 0.5, -math.inf, float(np.quantile(w, rng.uniform()))]
        for gate in gates:
            t0 = time.perf_counter()
            ms = km_assign(w, gate)
            elapsed += time.perf_counter() - t0
            pairs, total = brute_force_matching(w, gate)
            checked += 1
            if ms.sorted_pairs() != pairs or ms.total_similarity != total:
                mismatches += 1
        if n == m:
            # full-permutation cross-check on a strictly positive copy
            pos = np.abs(w) + 0.01
            t0 = time.perf_counter()
            ms = km_assign(pos, 0.0)
            elapsed += time.perf_counter() - t0
            checked += 1
            if len(ms.pairs) != n or abs(ms.total_similarity - permutation_maximum(pos)) > 1e-12:
                mismatches += 1
    ok = mismatches == 0 and elapsed < 5.0
    record("KM oracle equivalence", ok, f"{checked} cases, {mismatches} mismatches, km time {elapsed:.2f}s (< 5s)")


def _random_plane_instance(rng):
    n_t = int(rng.integers(1, 8))
    n_d = int(rng.integers(1, 9 - n_t))
    cross = rng.uniform(-0.5, 2.0, size=(n_t, n_d))
    tp = np.triu(rng.uniform(-0.5, 2.0, size=(n_t, n_t)), 1)
    dp = np.triu(rng.uniform(-0.5, 2.0, size=(n_d, n_d)), 1)
    return SimilarityMatrix.from_arrays(cross, tp + tp.T, dp + dp.T)


def test_plane_construction_oracle():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    exact = 0
    worst = 0.0
    below_oracle = 0
    n_inst = 200
    for k in range(n_inst):
        sm = _random_plane_instance(rng)
        oracle = construct_planes_oracle(sm)
        _, objectives = enumerate_objectives(sm)
        span = float(objectives.max() - objectives.min())
        got = construct_planes(sm, TrackerConfig(rng_seed=k)).best.objective
        gap = got - oracle.objective
        if gap < -1e-12:
            below_oracle += 1
        if abs(gap) <= 1e-12:
            exact += 1
        elif span > 0:
            worst = max(worst, gap / span)
    elapsed = time.perf_counter() - t0
    ok = exact >= 0.9 * n_inst and worst <= 0.10 and below_oracle == 0 and elapsed < 60.0
    record(
        "Plane-construction oracle",
        ok,
        f"exact {exact}/{n_inst} (>= 90%), worst gap {worst:.2%} of range (<= 10%), {elapsed:.1f}s (< 60s)",
    )


def test_worked_instance():
    sm = SimilarityMatrix.from_arrays(
        [[0.9, 0.1], [0.1, 0.9]], [[0.0, 0.8], [0.8, 0.0]], [[0.0, 0.8], [0.8, 0.0]]
    )
    oracle = construct_planes_oracle(sm)
    solved = construct_planes(sm, TrackerConfig()).best
    split = (2, (0, 1), (0, 1))
    ms = in_plane_match(solved, sm, TrackerConfig())
    ok = (
        (oracle.n_p, oracle.tracklet_plane, oracle.detection_plane) == split
        and (solved.n_p, solved.tracklet_plane, solved.detection_plane) == split
        and abs(oracle.objective + 3.6) <= 1e-12
        and abs(solved.objective + 3.6) <= 1e-12
        and ms.pairs == {(0, 0), (1, 1)}
    )
    record(
        "Worked instance",
        ok,
        f"oracle {oracle.objective:.4f}, solver {solved.objective:.4f}, matches {[(i + 1, j + 1) for i, j in ms.sorted_pairs()]}",
    )


def test_objective_decomposition():
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(1000):
        sm = _random_plane_instance(rng)
        n_p = int(rng.integers(1, sm.n_t + sm.n_d + 1))
        tp = tuple(None if x < 0 else int(x) for x in rng.integers(-1, n_p, size=sm.n_t))
        dp = tuple(None if x < 0 else int(x) for x in rng.integers(-1, n_p, size=sm.n_d))
        terms = plane_objective(PlaneAssignment(n_p, tp, dp), sm)
        if terms.total != terms.phi1 + terms.phi2:
            bad += 1
    record("Objective decomposition", bad == 0, f"1000 random assignments, {bad} inexact")


def _box(x):
    return BoundingBox(x, 0.0, 10.0, 10.0)


def test_metrics_hand_cases():
    # 10 gt boxes: one switch, two misses, one clutter box
    gt, hyp = {}, {}
    for f in range(1, 6):
        gt[f] = {1: _box(0), 2: _box(100)}
        hyp[f] = {(10 if f <= 2 else 11): _box(0)}
        if f <= 3:
            hyp[f][20] = _box(100)
    hyp[1][30] = _box(500)
    r1 = evaluate(gt, hyp)

    gt2 = {f: {1: _box(f)} for f in range(1, 11)}
    split = {f: {(1 if f <= 5 else 2): _box(f)} for f in range(1, 11)}
    r2 = evaluate(gt2, split)

    scene = generate(SyntheticSpec(n_targets=6, n_frames=50, seed=1))
    r3 = evaluate(scene.ground_truth, scene.ground_truth)
    ok = (
        (r1.fp, r1.fn, r1.ids, r1.gt_boxes) == (1, 2, 1, 10)
        and abs(r1.mota - 0.6) <= 1e-12
        and abs(r2.idf1 - 0.5) <= 1e-12
        and (r3.mota, r3.idf1, r3.ids) == (1.0, 1.0, 0)
    )
    record(
        "Metrics hand cases",
        ok,
        f"MOTA {r1.mota:.4f} (0.6), split IDF1 {r2.idf1:.4f} (0.5), self MOTA {r3.mota} IDF1 {r3.idf1} IDS {r3.ids}",
    )


def test_end_to_end_zero_noise():
    with tempfile.TemporaryDirectory() as tmp:
        t0 = time.perf_counter()
        codes = [
            cli(["synth", "--out-dir", tmp, "--targets", "5", "--frames", "100", "--fn-rate", "0", "--fp-rate", "0", "--jitter", "0"]),
            cli(
                [
                    "track",
                    "--detections", os.path.join(tmp, "det.txt"),
                    "--embeddings", os.path.join(tmp, "emb.txt"),
                    "-o", os.path.join(tmp, "res.txt"),
                ]
            ),
            cli(
                [
                    "eval",
                    "--gt", os.path.join(tmp, "gt.txt"),
                    "--result", os.path.join(tmp, "res.txt"),
                    "--json", os.path.join(tmp, "rep.json"),
                ]
            ),
        ]
        elapsed = time.perf_counter() - t0
        with open(os.path.join(tmp, "rep.json")) as fh:
            rep = json.load(fh)
    ok = codes == [0, 0, 0] and rep["mota"] == 1.0 and rep["ids"] == 0 and elapsed < 10.0
    record("End-to-end zero-noise", ok, f"MOTA {rep['mota']}, IDS {rep['ids']}, {elapsed:.2f}s (< 10s)")


ABLATION_SCENE = dict(
    n_targets=10, n_frames=60, crossing_bias=0.5, fn_rate=0.1, fp_rate=0.1,
    jitter_sigma=1.0, embed_dim=64, embed_noise=0.1,
)


def test_ablation_ordering():
    ids = {name: [] for name in (BASELINE, BP, BP_FILTER, BPM)}
    for seed in range(50):
        scene = generate(SyntheticSpec(seed=seed, **ABLATION_SCENE))
        results = run_ladder(scene.detections, TrackerConfig(rng_seed=seed), scene.embeddings, last_frame=scene.spec.n_frames)
        for name, res in results.items():
            ids[name].append(evaluate(scene.ground_truth, res.frames()).ids)
    bp_wins = float(np.mean(np.array(ids[BP]) <= np.array(ids[BASELINE])))
    med = {k: float(np.median(v)) for k, v in ids.items()}
    ok = bp_wins >= 0.70 and med[BPM] <= med[BP_FILTER]
    record(
        "Ablation ordering",
        ok,
        f"BP IDS <= Baseline on {bp_wins:.0%} of 50 seeds (>= 70%); median IDS "
        + ", ".join(f"{k} {v:g}" for k, v in med.items()),
    )


def test_neural_math_structure():
    rng = np.random.default_rng(5)
    problems = []

    f = rng.normal(size=(3, 4, 5))
    if not np.array_equal(gam_apply(f, np.ones((1, 4, 5)), np.ones((3, 1, 1))), f):
        problems.append("identity")

    worst_rank1 = worst_sam = worst_cam = 0.0
    for _ in range(20):
        c, w, h = (int(x) for x in rng.integers(1, 6, size=3))
        f = rng.normal(size=(c, w, h))
        sp, cp = random_sam_params(c, rng), random_cam_params(c, rng)
        sam = spatial_attention_map(f, sp)
        cam = channel_attention_map(f, cp)
        ratio = gam_apply(f, sam, cam) / f
        worst_rank1 = max(worst_rank1, float(np.abs(ratio - cam[:, 0, 0][:, None, None] * sam[0][None]).max()))
        worst_sam = max(worst_sam, float(np.abs(sam - sam_scalar(f, sp.conv_w, sp.conv_b, sp.point_w, sp.point_b)).max()))
        worst_cam = max(worst_cam, float(np.abs(cam - cam_scalar(f, cp.fc_w, cp.fc_b)).max()))
    if worst_rank1 > 1e-12:
        problems.append(f"rank-1 {worst_rank1:.1e}")
    if worst_sam > 1e-9 or worst_cam > 1e-9:
        problems.append(f"oracle sam {worst_sam:.1e} cam {worst_cam:.1e}")

    convex_bad = 0
    for _ in range(1000):
        k = int(rng.integers(2, 10))
        ps = [rng.dirichlet(np.ones(k)) for _ in range(3)]
        out = ladm_aggregate(*ps, EnsembleWeights(rng.uniform(0, 1, 3) + 1e-9))
        if np.any(out < 0) or abs(out.sum() - 1.0) > 1e-12:
            convex_bad += 1
    if convex_bad:
        problems.append(f"convexity {convex_bad}")
    record(
        "neural_math structure",
        not problems,
        f"rank-1 err {worst_rank1:.1e}, SAM err {worst_sam:.1e}, CAM err {worst_cam:.1e}, "
        f"convexity failures {convex_bad}/1000" + (f"; problems: {problems}" if problems else ""),
    )


def test_ablate_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        scene = os.path.join(tmp, "scene")
        cli(
            ["synth", "--out-dir", scene, "--targets", "10", "--frames", "60", "--crossing-bias", "0.5",
             "--fn-rate", "0.1", "--fp-rate", "0.1", "--jitter", "1", "--embed-dim", "64", "--embed-noise", "0.1", "--seed", "3"]
        )
        outs = []
        for run_no in range(2):
            out = os.path.join(tmp, f"run{run_no}")
            code = cli(
                ["ablate", "--detections", os.path.join(scene, "det.txt"), "--gt", os.path.join(scene, "gt.txt"),
                 "--embeddings", os.path.join(scene, "emb.txt"), "--out-dir", out, "--seed", "17"]
            )
            outs.append((code, out))
        names = sorted(os.listdir(outs[0][1]))
        match, mismatch, errors = filecmp.cmpfiles(outs[0][1], outs[1][1], names, shallow=False)
    ok = all(c == 0 for c, _ in outs) and len(names) == 6 and not mismatch and not errors
    record("Determinism", ok, f"{len(match)}/{len(names)} files byte-identical across two ablate runs")


CRITERIA = [
    test_km_oracle_equivalence,
    test_plane_construction_oracle,
    test_worked_instance,
    test_objective_decomposition,
    test_metrics_hand_cases,
    test_end_to_end_zero_noise,
    test_ablation_ordering,
    test_neural_math_structure,
    test_ablate_determinism,
]


if __name__ == "__main__":
    failed = 0
    for fn in CRITERIA:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
