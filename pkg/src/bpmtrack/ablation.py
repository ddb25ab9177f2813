"""The four-row ablation ladder: Baseline, BP, BP+filter, BP+filter+appearance.

* Baseline: one global Kuhn-Munkres assignment per frame, motion only, no filter.
* BP: box-plane construction and in-plane matching, motion only, no filter.
* BP+filter: BP with the detection-score filter at the configured ``tau_det``.
* BP+filter+appearance: the above with appearance embeddings consumed.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Detection, TrackerConfig
from .formats import attach_embeddings
from .tracker import ScoreMap, TrackingResult, run

BASELINE = "Baseline"
BP = "BP"
BP_FILTER = "BP+filter"
BPM = "BP+filter+appearance"
LADDER = (BASELINE, BP, BP_FILTER, BPM)


def ladder_configs(cfg: TrackerConfig) -> dict[str, tuple[TrackerConfig, bool, bool]]:
    """name -> (config, use scores, use embeddings)."""
    return {
        BASELINE: (replace(cfg, use_planes=False, tau_det=0.0), False, False),
        BP: (replace(cfg, use_planes=True, tau_det=0.0), False, False),
        BP_FILTER: (replace(cfg, use_planes=True), True, False),
        BPM: (replace(cfg, use_planes=True), True, True),
    }


def run_ladder(
    detections: Mapping[int, Sequence[Detection]],
    cfg: TrackerConfig,
    embeddings: Optional[Mapping[tuple[int, int], np.ndarray]] = None,
    scores: Optional[ScoreMap] = None,
    names: Sequence[str] = LADDER,
    last_frame: Optional[int] = None,
) -> dict[str, TrackingResult]:
    with_emb = attach_embeddings(detections, embeddings) if embeddings else None
    out = {}
    for name, (c, use_scores, use_emb) in ladder_configs(cfg).items():
        if name not in names:
            continue
        seq = with_emb if (use_emb and with_emb is not None) else detections
        out[name] = run(seq, c, scores if use_scores else None, last_frame=last_frame)
    return out
