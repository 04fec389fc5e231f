"""Clip decoding and frame sampling."""

from __future__ import annotations

import cv2
import numpy as np


def read_clip(path: str) -> list[np.ndarray] | None:
    """All frames of a clip as BGR uint8 arrays, or None if undecodable.

    Frames are read sequentially; seeking is codec-dependent and not
    byte-stable, a straight scan is. Clips are assumed short enough to
    buffer whole.
    """
    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        return None
    frames: list[np.ndarray] = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(frame)
    cap.release()
    return frames or None


def uniform_indices(total: int, count: int) -> list[int]:
    """count frame indices spread uniformly over [0, total).

    Clips shorter than count repeat frames rather than failing.
    """
    if total < 1 or count < 1:
        raise ValueError("total and count must be >= 1")
    return [(j * total) // count for j in range(count)]
