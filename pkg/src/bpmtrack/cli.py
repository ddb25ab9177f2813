"""Command-line entry point: ``bpmtrack {synth,track,eval,ablate}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Optional, Sequence

from . import __version__
from .ablation import BASELINE, BP, BP_FILTER, BPM, run_ladder
from .config import ConfigError, dump, load_synthetic_spec, load_tracker_config
from .core import TrackerConfig
from .formats import (
    attach_embeddings,
    read_detections,
    read_embeddings,
    read_scores,
    read_tracks,
    write_detections,
    write_embeddings,
    write_result,
    write_tracks,
)
from .metrics import ablation_table, evaluate
from .synthetic import SyntheticSpec, generate
from .tracker import run

log = logging.getLogger("bpmtrack")

RESULT_FILES = {BASELINE: "baseline.txt", BP: "bp.txt", BP_FILTER: "bp_filter.txt", BPM: "bpm.txt"}


def _tracker_config(args) -> TrackerConfig:
    cfg = load_tracker_config(args.config) if args.config else TrackerConfig()
    if args.seed is not None:
        cfg = replace(cfg, rng_seed=args.seed)
    return cfg


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(args) -> int:
    spec = load_synthetic_spec(args.spec) if args.spec else SyntheticSpec()
    overrides = {
        "n_targets": args.targets,
        "n_frames": args.frames,
        "fn_rate": args.fn_rate,
        "fp_rate": args.fp_rate,
        "jitter_sigma": args.jitter,
        "embed_dim": args.embed_dim,
        "embed_noise": args.embed_noise,
        "crossing_bias": args.crossing_bias,
        "seed": args.seed,
    }
    spec = replace(spec, **{k: v for k, v in overrides.items() if v is not None})
    scene = generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    write_tracks(os.path.join(args.out_dir, "gt.txt"), scene.ground_truth)
    write_detections(os.path.join(args.out_dir, "det.txt"), scene.detections)
    write_embeddings(os.path.join(args.out_dir, "emb.txt"), scene.embeddings)
    with open(os.path.join(args.out_dir, "synth.cfg"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump(spec))
    n_det = sum(len(v) for v in scene.detections.values())
    print(f"wrote {spec.n_frames} frames, {spec.n_targets} targets, {n_det} detections to {args.out_dir}")
    return 0


def cmd_track(args) -> int:
    cfg = _tracker_config(args)
    dets = read_detections(args.detections)
    if args.embeddings:
        dets = attach_embeddings(dets, read_embeddings(args.embeddings))
    scores = read_scores(args.scores) if args.scores else None
    result = run(dets, cfg, scores)
    write_result(args.output, result)
    print(f"wrote {len(result.tracks)} tracks to {args.output}")
    return 0


def cmd_eval(args) -> int:
    gt = read_tracks(args.gt)
    hyp = read_tracks(args.result)
    report = evaluate(gt, hyp, args.iou_gate)
    print(report.summary())
    if args.json:
        _write_json(args.json, report.to_dict())
    return 0


def cmd_ablate(args) -> int:
    cfg = _tracker_config(args)
    dets = read_detections(args.detections)
    emb = read_embeddings(args.embeddings) if args.embeddings else None
    scores = read_scores(args.scores) if args.scores else None
    gt = read_tracks(args.gt)
    last = max(max(gt, default=0), max(dets, default=0)) or None
    results = run_ladder(dets, cfg, emb, scores, last_frame=last)
    table = ablation_table(results, gt, args.iou_gate)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, res in results.items():
        write_result(os.path.join(args.out_dir, RESULT_FILES[name]), res)
    text = str(table)
    with open(os.path.join(args.out_dir, "table.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    _write_json(os.path.join(args.out_dir, "table.json"), table.to_dict())
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpmtrack", description="Box-plane matching multi-object tracker.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene (gt.txt, det.txt, emb.txt)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--spec", help="key = value file with SyntheticSpec fields")
    p.add_argument("--targets", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--fn-rate", type=float)
    p.add_argument("--fp-rate", type=float)
    p.add_argument("--jitter", type=float)
    p.add_argument("--embed-dim", type=int)
    p.add_argument("--embed-noise", type=float)
    p.add_argument("--crossing-bias", type=float)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="track a detection file")
    p.add_argument("--detections", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--scores")
    p.add_argument("--config")
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score a result file against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--result", required=True)
    p.add_argument("--iou-gate", type=float, default=0.5)
    p.add_argument("--json", help="also write the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="run the Baseline / BP / +filter / +appearance ladder")
    p.add_argument("--detections", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--scores")
    p.add_argument("--config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iou-gate", type=float, default=0.5)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, ConfigError) as exc:
        print(f"bpmtrack {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
