"""Forward arithmetic of the detection-filter aggregation and global attention.

Nothing here is trained. The aggregation takes any three classifier
probability vectors; the attention maps take explicit weights, which
``random_sam_params`` / ``random_cam_params`` draw from a seeded generator to
exercise shapes and algebra.

Feature maps are arrays of shape (C, W, H).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64).reshape(-1)
    if z.size == 0:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    e = np.exp(z - z.max())
    return e / e.sum()


@dataclass(frozen=True, eq=False)
class EnsembleWeights:
    """Three non-negative branch weights, normalized to sum to one."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        if w.shape != (3,) or not np.all(np.isfinite(w)) or np.any(w < 0) or w.sum() <= 0:
            raise ValueError(f"expected three non-negative weights with positive sum, got {self.w!r}")
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


def ladm_aggregate(p1, p2, p3, ew: EnsembleWeights) -> np.ndarray:
    """Weighted average of three softmax outputs."""
    ps = [np.asarray(p, dtype=np.float64).reshape(-1) for p in (p1, p2, p3)]
    if len({p.shape for p in ps}) != 1:
        raise ValueError("probability vectors differ in length")
    return ew.w[0] * ps[0] + ew.w[1] * ps[1] + ew.w[2] * ps[2]


@dataclass(frozen=True, eq=False)
class SAMParams:
    conv_w: np.ndarray  # (C, C, 3, 3)
    conv_b: np.ndarray  # (C,)
    point_w: np.ndarray  # (C,)
    point_b: float = 0.0


@dataclass(frozen=True, eq=False)
class CAMParams:
    fc_w: np.ndarray  # (C, C)
    fc_b: np.ndarray  # (C,)


def _feature_map(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 3 or min(f.shape) < 1:
        raise ValueError(f"feature map must have shape (C, W, H) with all sides >= 1, got {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("feature map must be finite")
    return f


def conv3x3_same(f: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """3x3 convolution (cross-correlation), zero padding 1, stride 1."""
    c_in, wd, ht = f.shape
    padded = np.pad(f, ((0, 0), (1, 1), (1, 1)))
    # windows[c, x, y, dx, dy] = padded[c, x + dx, y + dy]
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(1, 2))
    return np.einsum("ocij,cxyij->oxy", weight, windows) + bias[:, None, None]


def spatial_attention_map(f, params: SAMParams) -> np.ndarray:
    """3x3 conv keeping C channels, pointwise conv to one channel, sigmoid.

    Returns shape (1, W, H).
    """
    f = _feature_map(f)
    c = f.shape[0]
    if params.conv_w.shape != (c, c, 3, 3) or params.conv_b.shape != (c,) or params.point_w.shape != (c,):
        raise ValueError(f"SAM parameters do not fit a {c}-channel input")
    hidden = conv3x3_same(f, params.conv_w, params.conv_b)
    logits = np.tensordot(params.point_w, hidden, axes=(0, 0)) + params.point_b
    return sigmoid(logits)[None]


def channel_attention_map(f, params: CAMParams) -> np.ndarray:
    """Global average pooling, square fully connected layer, sigmoid.

    Returns shape (C, 1, 1).
    """
    f = _feature_map(f)
    c = f.shape[0]
    if params.fc_w.shape != (c, c) or params.fc_b.shape != (c,):
        raise ValueError(f"CAM parameters do not fit a {c}-channel input")
    pooled = f.mean(axis=(1, 2))
    return sigmoid(params.fc_w @ pooled + params.fc_b)[:, None, None]


def gam_apply(f, sam, cam) -> np.ndarray:
    """Attention feature map: input times the broadcast product of SAM and CAM."""
    f = _feature_map(f)
    sam = np.asarray(sam, dtype=np.float64)
    cam = np.asarray(cam, dtype=np.float64)
    c, wd, ht = f.shape
    if sam.shape != (1, wd, ht) or cam.shape != (c, 1, 1):
        raise ValueError(f"attention shapes {sam.shape}, {cam.shape} do not fit feature map {f.shape}")
    return f * (sam * cam)


def random_sam_params(channels: int, rng: np.random.Generator, scale: float = 0.1) -> SAMParams:
    return SAMParams(
        rng.uniform(-scale, scale, (channels, channels, 3, 3)),
        rng.uniform(-scale, scale, channels),
        rng.uniform(-scale, scale, channels),
        float(rng.uniform(-scale, scale)),
    )


def random_cam_params(channels: int, rng: np.random.Generator, scale: float = 0.1) -> CAMParams:
    return CAMParams(rng.uniform(-scale, scale, (channels, channels)), rng.uniform(-scale, scale, channels))
