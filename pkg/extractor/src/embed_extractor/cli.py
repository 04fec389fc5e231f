"""Command line front end.

Exit codes mirror coresel: 0 ok, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from embed_extractor.encoder import get_encoder
from embed_extractor.extract import ExtractionError, ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="extract",
        description="Encode a directory of per-class video clips into an "
                    "embeddings file coresel can read.",
    )
    p.add_argument("--in", dest="in_dir", required=True,
                   help="directory with one subdirectory per class")
    p.add_argument("--out", required=True, help="output embeddings path")
    p.add_argument("--frames", type=int, default=16,
                   help="frames sampled uniformly per clip (default 16)")
    p.add_argument("--encoder", default="framestats",
                   help="encoder name recorded in the manifest")
    p.add_argument("--manifest", default=None,
                   help="manifest path (default: <out>.manifest.json)")
    return p


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        get_encoder(args.encoder)
        job = ExtractionJob(
            in_dir=args.in_dir,
            out_path=args.out,
            frames=args.frames,
            encoder=args.encoder,
            manifest_path=args.manifest,
        )
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        summary = extract(job)
    except ExtractionError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    line = (
        f"wrote {args.out} (N={summary.rows}, "
        f"C={len(summary.class_names)})"
    )
    if summary.skipped:
        line += f"; skipped {len(summary.skipped)} undecodable clip(s)"
    print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
