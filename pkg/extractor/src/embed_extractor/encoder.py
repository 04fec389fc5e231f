"""Clip encoders. One vector per clip, always 1408-dimensional.

No pretrained network ships with this package; the default encoder builds
hand-rolled per-frame statistics and lifts them to the target width with a
fixed random projection, which keeps the interface (and the determinism
contract) of a real video backbone without its weights. Swapping in a
learned encoder means adding an entry to the registry with the same
signature.
"""

from __future__ import annotations

import cv2
import numpy as np

OUTPUT_DIM = 1408

_GRID = 16          # coarse spatial layout, _GRID x _GRID x 3 cells
_FRAME_FEATS = _GRID * _GRID * 3 + 6 + _GRID * 3 * 2  # grid + moments + profiles
_PROJECTION_KEY = 0x46535431


class FramestatsEncoder:
    """Per-frame color statistics mean-pooled over the clip."""

    name = "framestats"
    dim = OUTPUT_DIM

    def __init__(self):
        rng = np.random.Generator(np.random.Philox(key=_PROJECTION_KEY))
        # fixed lift to the output width, same matrix on every machine
        self._proj = rng.standard_normal((OUTPUT_DIM, _FRAME_FEATS)) / np.sqrt(
            _FRAME_FEATS
        )

    def _frame_features(self, frame: np.ndarray) -> np.ndarray:
        g = cv2.resize(frame, (_GRID, _GRID), interpolation=cv2.INTER_AREA)
        g = g.astype(np.float64) / 255.0
        flat = frame.reshape(-1, 3).astype(np.float64) / 255.0
        parts = [
            g.ravel(),
            flat.mean(axis=0),
            flat.std(axis=0),
            g.mean(axis=1).ravel(),  # row profile per channel
            g.mean(axis=0).ravel(),  # column profile per channel
        ]
        return np.concatenate(parts)

    def encode_clip(self, frames: list[np.ndarray]) -> np.ndarray:
        if not frames:
            raise ValueError("empty frame list")
        feats = np.stack([self._frame_features(f) for f in frames])
        pooled = feats.mean(axis=0)
        return (self._proj @ pooled).astype(np.float32)


_REGISTRY = {FramestatsEncoder.name: FramestatsEncoder}


def get_encoder(name: str):
    try:
        return _REGISTRY[name]()
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise ValueError(f"unknown encoder {name!r}, available: {known}") from None
