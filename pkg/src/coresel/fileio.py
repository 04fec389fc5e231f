"""File formats: the EMB1 embedding container plus the text sidecars.

EMB1 layout, all little-endian:

    offset  size  field
    0       4     magic b"EMB1"
    4       4     u32 version (currently 1)
    8       4     u32 N   item count
    12      4     u32 D   embedding dimension
    16      4     u32 C   class count
    20      4*N   u32 labels, each in [0, C)
    20+4N   4*N*D f32 embeddings, row-major
    end-4   4     u32 CRC-32 (IEEE, zlib) over every preceding byte

Readers validate in a fixed order (magic, version, size, checksum, labels,
finiteness) and report the byte offset where the problem was detected, so a
corrupted file pinpoints itself. All writes in this module are atomic: a
temp file in the target directory is populated and then renamed over the
destination, so readers never observe a half-written file.

The report format is line-oriented text in sections: a config echo, the
mean±std aggregates, per-run metrics, the selected indices of every run,
optional wall times, and a flat CSV table (one row per run and metric) that
plotting scripts can consume directly. Numbers render with 6 significant
digits everywhere.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import zlib
from dataclasses import dataclass, field

import numpy as np

from .dataset import EmbeddingSet

MAGIC = b"EMB1"
VERSION = 1
_HEADER = struct.Struct("<4sIIII")  # magic, version, N, D, C


class EmbeddingFileError(Exception):
    """Base for EMB1 validation failures; offset is where detection happened."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class BadMagicError(EmbeddingFileError):
    pass


class UnsupportedVersionError(EmbeddingFileError):
    pass


class TruncatedFileError(EmbeddingFileError):
    pass


class ChecksumError(EmbeddingFileError):
    pass


class LabelRangeError(EmbeddingFileError):
    pass


class NonFiniteValueError(EmbeddingFileError):
    pass


def atomic_write_bytes(path: str, data: bytes):
    """Write via temp file + rename; the destination is never half-written."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path: str, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_embeddings(ds: EmbeddingSet) -> bytes:
    labels = ds.labels.astype("<u4")
    data = np.ascontiguousarray(ds.X, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise ValueError("embeddings contain non-finite values")
    body = _HEADER.pack(MAGIC, VERSION, ds.n, ds.dim, ds.num_classes)
    body += labels.tobytes() + data.tobytes()
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


def write_embeddings(path: str, ds: EmbeddingSet):
    atomic_write_bytes(path, encode_embeddings(ds))


def decode_embeddings(blob: bytes) -> EmbeddingSet:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise BadMagicError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}", 0)
    if len(blob) < 8:
        raise TruncatedFileError("header cut short", len(blob))
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version {version}", 4)
    if len(blob) < _HEADER.size:
        raise TruncatedFileError("header cut short", len(blob))
    _, _, n, d, c = _HEADER.unpack_from(blob, 0)
    if n > 0 and d == 0:
        raise EmbeddingFileError("zero dimension with items present", 12)
    if c == 0:
        raise EmbeddingFileError("class count must be positive", 16)
    expected = _HEADER.size + 4 * n + 4 * n * d + 4
    if len(blob) != expected:
        raise TruncatedFileError(
            f"file is {len(blob)} bytes, layout requires {expected}", min(len(blob), expected)
        )
    (stored_crc,) = struct.unpack_from("<I", blob, expected - 4)
    actual_crc = zlib.crc32(blob[: expected - 4]) & 0xFFFFFFFF
    if stored_crc != actual_crc:
        raise ChecksumError(
            f"checksum mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}",
            expected - 4,
        )
    labels_off = _HEADER.size
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=labels_off)
    bad = np.nonzero(labels >= c)[0]
    if bad.size:
        i = int(bad[0])
        raise LabelRangeError(
            f"label {int(labels[i])} at row {i} outside [0, {c})", labels_off + 4 * i
        )
    data_off = labels_off + 4 * n
    X = np.frombuffer(blob, dtype="<f4", count=n * d, offset=data_off)
    finite = np.isfinite(X)
    if not finite.all():
        i = int(np.nonzero(~finite)[0][0])
        raise NonFiniteValueError(
            f"non-finite value at flat index {i} (row {i // d if d else 0})", data_off + 4 * i
        )
    return EmbeddingSet(
        X=X.reshape(n, d).copy().astype(np.float32),
        labels=labels.astype(np.int64),
        num_classes=int(c),
    )


def read_embeddings(path: str) -> EmbeddingSet:
    with open(path, "rb") as f:
        return decode_embeddings(f.read())


class ScoreFileError(Exception):
    """Malformed score file; line is 1-based (0 for whole-file problems)."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


def write_scores(path: str, scores):
    scores = np.asarray(scores, dtype=np.float64)
    lines = [f"{i}\t{s!r}" for i, s in enumerate(scores.tolist())]
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def read_scores(path: str, n: int) -> np.ndarray:
    """Parse index<TAB>score lines into a dense length-n array.

    Indices may appear in any order; omitted indices score 0. Repeats,
    indices outside [0, n) and non-finite scores are rejected.
    """
    out = np.zeros(n, dtype=np.float64)
    seen: set[int] = set()
    with open(path, "r", encoding="utf-8") as f:
        for ln, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ScoreFileError(f"expected index<TAB>score, got {line!r}", ln)
            try:
                idx = int(parts[0])
                val = float(parts[1])
            except ValueError:
                raise ScoreFileError(f"unparseable index or score in {line!r}", ln) from None
            if not (0 <= idx < n):
                raise ScoreFileError(f"index {idx} outside [0, {n})", ln)
            if idx in seen:
                raise ScoreFileError(f"duplicate index {idx}", ln)
            if not np.isfinite(val):
                raise ScoreFileError(f"non-finite score for index {idx}", ln)
            seen.add(idx)
            out[idx] = val
    return out


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _nan_to_none(x: float):
    return None if isinstance(x, float) and not np.isfinite(x) else x


def selection_doc(result, master_seed: int) -> dict:
    """Selection as a JSON-ready dict (indices as plain ints, nan as null)."""
    return {
        "format": "selection/1",
        "method": result.method,
        "vpc": result.vpc,
        "master_seed": master_seed,
        "num_classes": len(result.per_class),
        "per_class": [[int(i) for i in arr] for arr in result.per_class],
        "objectives": [_nan_to_none(float(v)) for v in result.objectives],
        "indices": [int(i) for i in result.indices],
    }


def write_selection(path: str, result, master_seed: int):
    atomic_write_text(path, _json_dumps(selection_doc(result, master_seed)))


def render_selection(result, master_seed: int) -> str:
    return _json_dumps(selection_doc(result, master_seed))


def read_selection(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != "selection/1":
        raise ValueError(f"not a selection file: {path}")
    return doc


def fmt_number(x) -> str:
    """Render to 6 significant digits, the one number format reports use."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not np.isfinite(x):
        return "nan"
    return f"{x:.6g}"


def fmt_mean_std(mean: float, std: float) -> str:
    return f"{fmt_number(mean)}±{fmt_number(std)}"


def parse_mean_std(s: str) -> tuple[float, float]:
    parts = s.split("±")
    if len(parts) != 2:
        raise ValueError(f"expected mean±std, got {s!r}")
    return float(parts[0]), float(parts[1])


_METRIC_ORDER = ("acc", "macro_f1", "macro_auc")

REPORT_HEADER = "# coresel evaluation report"
CSV_HEADER = "method,vpc,run,metric,value"


class ReportParseError(Exception):
    pass


def render_report(result, params: dict, run_times=None) -> str:
    """Render one experiment as the report text format.

    params is the config echo (insertion order preserved). run_times, when
    given, adds a [timings] section; everything else is a pure function of
    the experiment result, so default reports are byte-stable.
    """
    lines = [REPORT_HEADER, ""]
    lines.append("[config]")
    for key, val in params.items():
        lines.append(f"{key} = {fmt_number(val) if isinstance(val, (int, float)) else val}")
    lines.append("")

    lines.append("[aggregate]")
    for m in _METRIC_ORDER:
        mean, std = result.mean_std(m)
        lines.append(f"{m} = {fmt_mean_std(mean, std)}")
    for m in _METRIC_ORDER:
        lines.append(f"full_real_{m} = {fmt_number(result.reference[m])}")
    lines.append("")

    lines.append("[runs]")
    for r in range(result.runs):
        cells = " ".join(f"{m}={fmt_number(result.metrics[m][r])}" for m in _METRIC_ORDER)
        lines.append(f"run {r}: {cells}")
    lines.append("")

    lines.append("[selections]")
    for r, sel in enumerate(result.selections):
        for c, idx in enumerate(sel.per_class):
            joined = " ".join(str(int(i)) for i in idx)
            lines.append(f"run {r} class {c}: {joined}")
    lines.append("")

    if run_times is not None:
        lines.append("[timings]")
        for r, t in enumerate(run_times):
            lines.append(f"run {r}: {fmt_number(float(t))}")
        lines.append(f"total = {fmt_number(float(sum(run_times)))}")
        lines.append("")

    lines.append("[table]")
    lines.append(CSV_HEADER)
    for r in range(result.runs):
        for m in _METRIC_ORDER:
            lines.append(
                f"{result.method},{result.vpc},{r},{m},{fmt_number(result.metrics[m][r])}"
            )
    return "\n".join(lines) + "\n"


def write_report(path: str, result, params: dict, run_times=None):
    atomic_write_text(path, render_report(result, params, run_times))


def parse_report(text: str) -> dict:
    """Parse report text back into config/aggregate/runs/selections/table."""
    lines = text.splitlines()
    if not lines or lines[0] != REPORT_HEADER:
        raise ReportParseError("missing report header")
    section = None
    config: dict[str, str] = {}
    aggregate: dict[str, tuple[float, float]] = {}
    reference: dict[str, float] = {}
    runs: list[dict[str, float]] = []
    selections: dict[tuple[int, int], list[int]] = {}
    timings: dict = {}
    table: list[str] = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            continue
        try:
            if section == "config":
                key, val = line.split(" = ", 1)
                config[key] = val
            elif section == "aggregate":
                key, val = line.split(" = ", 1)
                if key.startswith("full_real_"):
                    reference[key[len("full_real_"):]] = float(val)
                else:
                    aggregate[key] = parse_mean_std(val)
            elif section == "runs":
                head, cells = line.split(": ", 1)
                r = int(head.split()[1])
                while len(runs) <= r:
                    runs.append({})
                for cell in cells.split():
                    m, v = cell.split("=", 1)
                    runs[r][m] = float(v)
            elif section == "selections":
                head, cells = line.split(":", 1)
                parts = head.split()
                r, c = int(parts[1]), int(parts[3])
                selections[(r, c)] = [int(x) for x in cells.split()]
            elif section == "timings":
                if line.startswith("total = "):
                    timings["total"] = float(line[len("total = "):])
                else:
                    head, v = line.split(": ", 1)
                    timings[int(head.split()[1])] = float(v)
            elif section == "table":
                if line != CSV_HEADER:
                    if line.count(",") != 4:
                        raise ValueError("bad column count")
                    table.append(line)
            else:
                raise ValueError(f"content outside any section: {line!r}")
        except ReportParseError:
            raise
        except ValueError as e:
            raise ReportParseError(f"line {ln}: {e}") from e
    for need in ("config", "aggregate", "runs", "table"):
        if not {"config": config, "aggregate": aggregate, "runs": runs, "table": table}[need]:
            raise ReportParseError(f"missing [{need}] section")
    return {
        "config": config,
        "aggregate": aggregate,
        "reference": reference,
        "runs": runs,
        "selections": selections,
        "timings": timings,
        "table": table,
    }


def read_report(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return parse_report(f.read())


@dataclass
class Manifest:
    """Provenance sidecar for an embeddings file.

    created must be deterministic for reproducible pipelines: callers use
    SOURCE_DATE_EPOCH or a stable property of the inputs, never the wall
    clock (see manifest_timestamp).
    """

    class_names: list[str]
    source: str
    created: str
    seed_lineage: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)  # {"path", "bytes", "crc32"}


def manifest_timestamp(fallback_epoch: float = 0.0) -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(fallback_epoch)
    import datetime

    return (
        datetime.datetime.fromtimestamp(t, tz=datetime.timezone.utc)
        .strftime("%Y-%m-%dT%H:%M:%SZ")
    )


def output_entry(path: str) -> dict:
    with open(path, "rb") as f:
        blob = f.read()
    return {
        "path": os.path.basename(path),
        "bytes": len(blob),
        "crc32": f"{zlib.crc32(blob) & 0xFFFFFFFF:#010x}",
    }


def write_manifest(path: str, manifest: Manifest):
    doc = {
        "format": "manifest/1",
        "class_names": manifest.class_names,
        "source": manifest.source,
        "created": manifest.created,
        "seed_lineage": manifest.seed_lineage,
        "outputs": manifest.outputs,
    }
    atomic_write_text(path, _json_dumps(doc))


def read_manifest(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != "manifest/1":
        raise ValueError(f"not a manifest: {path}")
    return doc
