"""Directory walk, per-clip encoding, and output assembly."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np

from embed_extractor import embfile
from embed_extractor.encoder import get_encoder
from embed_extractor.video import read_clip, uniform_indices

log = logging.getLogger("embed_extractor")


class ExtractionError(Exception):
    """Input layout or decode failure that invalidates the whole job."""


@dataclass
class ExtractionJob:
    in_dir: str
    out_path: str
    frames: int = 16
    encoder: str = "framestats"
    manifest_path: str | None = None  # None = out_path + ".manifest.json"

    def __post_init__(self):
        if self.frames < 1:
            raise ValueError("frames must be >= 1")


@dataclass
class ExtractionSummary:
    class_names: list[str]
    rows: int
    skipped: list[str] = field(default_factory=list)


def _class_dirs(in_dir: str) -> list[str]:
    if not os.path.isdir(in_dir):
        raise ExtractionError(f"input directory not found: {in_dir}")
    names = sorted(
        d for d in os.listdir(in_dir) if os.path.isdir(os.path.join(in_dir, d))
    )
    if not names:
        raise ExtractionError(f"no class directories under {in_dir}")
    return names


def extract(job: ExtractionJob) -> ExtractionSummary:
    """Encode every decodable clip and write embeddings plus manifest.

    Labels follow lexicographic class-directory order; rows within a class
    follow lexicographic file order. Undecodable clips are skipped with a
    warning; a class with no usable clip at all aborts the job.
    """
    enc = get_encoder(job.encoder)
    class_names = _class_dirs(job.in_dir)

    rows: list[np.ndarray] = []
    labels: list[int] = []
    skipped: list[str] = []
    clip_counts: list[int] = []
    newest_input = 0.0

    for label, name in enumerate(class_names):
        cdir = os.path.join(job.in_dir, name)
        files = sorted(
            f for f in os.listdir(cdir) if os.path.isfile(os.path.join(cdir, f))
        )
        usable = 0
        for fname in files:
            path = os.path.join(cdir, fname)
            newest_input = max(newest_input, os.path.getmtime(path))
            frames = read_clip(path)
            if frames is None:
                log.warning("skipping undecodable clip %s", path)
                skipped.append(os.path.join(name, fname))
                continue
            picked = [frames[i] for i in uniform_indices(len(frames), job.frames)]
            rows.append(enc.encode_clip(picked))
            labels.append(label)
            usable += 1
        if usable == 0:
            raise ExtractionError(f"class {name!r} has no decodable clips")
        clip_counts.append(usable)

    X = np.stack(rows)
    embfile.write_embeddings(job.out_path, X, np.array(labels), len(class_names))

    man_path = job.manifest_path or job.out_path + ".manifest.json"
    embfile.write_manifest(
        man_path,
        {
            "class_names": class_names,
            "source": f"extract --in {job.in_dir} --frames {job.frames} "
                      f"--encoder {job.encoder}",
            "created": embfile.manifest_timestamp(newest_input),
            "extraction": {
                "encoder": job.encoder,
                "frames_per_clip": job.frames,
                "dim": enc.dim,
                "clips_per_class": clip_counts,
                "skipped": skipped,
            },
            "outputs": [embfile.output_entry(job.out_path)],
        },
    )
    return ExtractionSummary(class_names=class_names, rows=len(rows), skipped=skipped)
