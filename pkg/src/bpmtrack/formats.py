"""MOTChallenge-style text files and sidecars.

Detection / ground-truth / result rows::

    frame,id,x,y,w,h,conf,-1,-1,-1

Input detections carry ``id = -1``. Result files mark interpolated boxes with
``conf = 0`` and observed boxes with ``conf = 1``.

Embedding sidecar: a ``# dim=D`` header, then ``frame,source_index,v1,...,vD``.
Score sidecar: ``frame,source_index,score``.

``source_index`` is a detection's 0-based position among its frame's rows in
the detection file.
"""

from __future__ import annotations

import os
import re
from dataclasses import replace
from typing import Iterable, Mapping, Optional

import numpy as np

from .core import BoundingBox, Detection, unit_vector


class FormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def _rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, [c.strip() for c in text.split(",")]


def _num(s: str) -> float:
    return float(s)


def _fmt(v: float) -> str:
    s = f"{v:.4f}"
    return "0.0000" if s == "-0.0000" else s


def read_detections(path) -> dict[int, list[Detection]]:
    raw: dict[int, list[tuple[int, BoundingBox, float]]] = {}
    for lineno, cols in _rows(path):
        if len(cols) < 7:
            raise FormatError(path, lineno, f"expected at least 7 columns, got {len(cols)}")
        try:
            frame = int(_num(cols[0]))
            x, y, w, h, conf = (_num(c) for c in cols[2:7])
            box = BoundingBox(x, y, w, h)
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
        if frame < 1:
            raise FormatError(path, lineno, f"frame must be >= 1, got {frame}")
        raw.setdefault(frame, []).append((lineno, box, conf))
    out = {}
    for frame in sorted(raw):
        out[frame] = [Detection(frame, box, conf, None, k) for k, (_, box, conf) in enumerate(raw[frame])]
    return out


def write_detections(path, detections: Mapping[int, Iterable[Detection]]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in sorted(detections):
            for d in sorted(detections[frame], key=lambda d: d.source_index):
                b = d.box
                fh.write(f"{frame},-1,{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},{_fmt(d.confidence)},-1,-1,-1\n")


def read_tracks(path) -> dict[int, dict[int, BoundingBox]]:
    """Ground-truth or result file as frame -> {id: box}."""
    out: dict[int, dict[int, BoundingBox]] = {}
    for lineno, cols in _rows(path):
        if len(cols) < 6:
            raise FormatError(path, lineno, f"expected at least 6 columns, got {len(cols)}")
        try:
            frame = int(_num(cols[0]))
            tid = int(_num(cols[1]))
            box = BoundingBox(*(_num(c) for c in cols[2:6]))
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
        frame_boxes = out.setdefault(frame, {})
        if tid in frame_boxes:
            raise FormatError(path, lineno, f"duplicate id {tid} in frame {frame}")
        frame_boxes[tid] = box
    return {f: out[f] for f in sorted(out)}


def write_tracks(path, frames: Mapping[int, Mapping[int, BoundingBox]], conf: float = 1.0):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame in sorted(frames):
            for tid in sorted(frames[frame]):
                b = frames[frame][tid]
                fh.write(f"{frame},{tid},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},{_fmt(conf)},-1,-1,-1\n")


def write_result(path, result):
    """Write a TrackingResult, interpolated boxes included, sorted by (frame, id)."""
    rows = []
    for t in result.tracks:
        for e in t.entries:
            rows.append((e.frame, t.id, e.box, 0.0 if e.was_interpolated else 1.0))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for frame, tid, b, conf in rows:
            fh.write(f"{frame},{tid},{_fmt(b.x)},{_fmt(b.y)},{_fmt(b.w)},{_fmt(b.h)},{_fmt(conf)},-1,-1,-1\n")


_DIM_RE = re.compile(r"^#\s*dim\s*=\s*(\d+)\s*$")


def read_embeddings(path) -> dict[tuple[int, int], np.ndarray]:
    dim: Optional[int] = None
    out: dict[tuple[int, int], np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            if text.startswith("#"):
                m = _DIM_RE.match(text)
                if m and dim is None:
                    dim = int(m.group(1))
                continue
            if dim is None:
                raise FormatError(path, lineno, "missing '# dim=D' header before the first row")
            cols = [c.strip() for c in text.split(",")]
            if len(cols) != dim + 2:
                raise FormatError(path, lineno, f"expected {dim + 2} columns for dim={dim}, got {len(cols)}")
            try:
                key = (int(_num(cols[0])), int(_num(cols[1])))
                out[key] = unit_vector([_num(c) for c in cols[2:]])
            except ValueError as exc:
                raise FormatError(path, lineno, str(exc)) from None
    return out


def write_embeddings(path, table: Mapping[tuple[int, int], np.ndarray]):
    dims = {len(np.asarray(v).reshape(-1)) for v in table.values()}
    if len(dims) > 1:
        raise ValueError(f"embeddings of mixed dimension: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dim={dim}\n")
        for key in sorted(table):
            vals = ",".join(f"{float(v):.8f}" for v in np.asarray(table[key]).reshape(-1))
            fh.write(f"{key[0]},{key[1]},{vals}\n")


def read_scores(path) -> dict[tuple[int, int], float]:
    out = {}
    for lineno, cols in _rows(path):
        if len(cols) != 3:
            raise FormatError(path, lineno, f"expected 3 columns, got {len(cols)}")
        try:
            key = (int(_num(cols[0])), int(_num(cols[1])))
            score = _num(cols[2])
        except ValueError as exc:
            raise FormatError(path, lineno, str(exc)) from None
        if not 0.0 <= score <= 1.0:
            raise FormatError(path, lineno, f"score {score} outside [0, 1]")
        out[key] = score
    return out


def write_scores(path, scores: Mapping[tuple[int, int], float]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(scores):
            fh.write(f"{key[0]},{key[1]},{_fmt(scores[key])}\n")


def attach_embeddings(
    sequence: Mapping[int, Iterable[Detection]], table: Mapping[tuple[int, int], np.ndarray]
) -> dict[int, list[Detection]]:
    """Copy of ``sequence`` whose detections carry their sidecar embeddings."""
    out = {}
    for frame, dets in sequence.items():
        out[frame] = [replace(d, embedding=table.get((frame, d.source_index))) for d in dets]
    return out


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
