import json
import shutil
import struct
import subprocess
import zlib

import cv2
import numpy as np
import pytest

from embed_extractor.cli import main
from embed_extractor.encoder import OUTPUT_DIM, FramestatsEncoder, get_encoder
from embed_extractor.video import uniform_indices

W, H = 64, 48


def write_clip(path, base: int, n_frames: int = 24):
    """Tiny MJPG clip with a class/clip-specific gradient pattern."""
    vw = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"MJPG"), 10.0, (W, H))
    assert vw.isOpened()
    ramp_y = np.linspace(0, 120, H, dtype=np.int32)[:, None]
    ramp_x = np.linspace(0, 120, W, dtype=np.int32)[None, :]
    for t in range(n_frames):
        frame = np.zeros((H, W, 3), dtype=np.int32)
        frame[:, :, 0] = (base + ramp_y + 3 * t) % 255
        frame[:, :, 1] = (2 * base + ramp_x) % 255
        frame[:, :, 2] = (base + 5 * t) % 255
        vw.write(frame.astype(np.uint8))
    vw.release()


def make_corpus(root, per_class=3):
    for c, name in enumerate(["cat", "dog"]):
        d = root / name
        d.mkdir(parents=True)
        for j in range(per_class):
            write_clip(d / f"clip{j}.avi", base=90 * c + 25 * j)
    return str(root)


def parse_emb(path):
    """Minimal reader for the interchange format, independent of coresel."""
    with open(path, "rb") as f:
        blob = f.read()
    magic, version, n, d, c = struct.unpack_from("<4sIIII", blob, 0)
    assert magic == b"EMB1" and version == 1
    assert len(blob) == 20 + 4 * n + 4 * n * d + 4
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    assert crc == (zlib.crc32(blob[:-4]) & 0xFFFFFFFF)
    labels = np.frombuffer(blob, dtype="<u4", count=n, offset=20)
    X = np.frombuffer(blob, dtype="<f4", count=n * d, offset=20 + 4 * n)
    return X.reshape(n, d), labels, c


# ------------------------------------------------------------- extraction


def test_counts_order_and_labels(tmp_path, capsys):
    src = make_corpus(tmp_path / "clips")
    out = str(tmp_path / "pool.emb")
    assert main(["--in", src, "--out", out]) == 0
    assert "N=6" in capsys.readouterr().out
    X, labels, c = parse_emb(out)
    assert X.shape == (6, OUTPUT_DIM)
    assert labels.tolist() == [0, 0, 0, 1, 1, 1]
    assert c == 2
    assert np.all(np.isfinite(X))


def test_rerun_is_byte_identical(tmp_path, monkeypatch):
    src = make_corpus(tmp_path / "clips")
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a, b = str(tmp_path / "a" / "pool.emb"), str(tmp_path / "b" / "pool.emb")
    assert main(["--in", src, "--out", a]) == 0
    assert main(["--in", src, "--out", b]) == 0
    for ext in ("", ".manifest.json"):
        with open(a + ext, "rb") as f, open(b + ext, "rb") as g:
            assert f.read() == g.read()


def test_manifest_contents(tmp_path, monkeypatch):
    src = make_corpus(tmp_path / "clips")
    out = str(tmp_path / "pool.emb")
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    assert main(["--in", src, "--out", out]) == 0
    with open(out + ".manifest.json") as f:
        doc = json.load(f)
    assert doc["format"] == "manifest/1"
    assert doc["class_names"] == ["cat", "dog"]
    assert doc["created"] == "2023-11-14T22:13:20Z"
    ex = doc["extraction"]
    assert ex["encoder"] == "framestats" and ex["frames_per_clip"] == 16
    assert ex["clips_per_class"] == [3, 3] and ex["skipped"] == []
    entry = doc["outputs"][0]
    with open(out, "rb") as f:
        blob = f.read()
    assert entry["bytes"] == len(blob)
    assert entry["crc32"] == f"{zlib.crc32(blob) & 0xFFFFFFFF:#010x}"


def test_classes_are_separable(tmp_path):
    # the encoder must preserve the class-dependent pattern, else the
    # downstream selection demo is meaningless
    src = make_corpus(tmp_path / "clips")
    out = str(tmp_path / "pool.emb")
    assert main(["--in", src, "--out", out]) == 0
    X, labels, _ = parse_emb(out)
    mu0, mu1 = X[labels == 0].mean(axis=0), X[labels == 1].mean(axis=0)
    between = np.linalg.norm(mu0 - mu1)
    within = max(
        np.linalg.norm(X[labels == k] - [mu0, mu1][k], axis=1).max() for k in (0, 1)
    )
    assert between > within


def test_undecodable_clip_skipped_with_warning(tmp_path, caplog, capsys):
    src = make_corpus(tmp_path / "clips")
    bad = tmp_path / "clips" / "cat" / "broken.avi"
    bad.write_bytes(b"not a video at all")
    out = str(tmp_path / "pool.emb")
    with caplog.at_level("WARNING", logger="embed_extractor"):
        assert main(["--in", src, "--out", out]) == 0
    assert any("broken.avi" in r.getMessage() for r in caplog.records)
    assert "skipped 1 undecodable clip(s)" in capsys.readouterr().out
    X, labels, c = parse_emb(out)
    assert X.shape[0] == 6 and labels.tolist() == [0, 0, 0, 1, 1, 1] and c == 2
    with open(out + ".manifest.json") as f:
        assert json.load(f)["extraction"]["skipped"] == ["cat/broken.avi"]


def test_class_with_no_usable_clip_is_hard_error(tmp_path, capsys):
    src = make_corpus(tmp_path / "clips")
    dog = tmp_path / "clips" / "dog"
    for f in dog.iterdir():
        f.unlink()
    (dog / "junk.avi").write_bytes(b"\x00" * 64)
    assert main(["--in", src, "--out", str(tmp_path / "x.emb")]) == 3
    assert "dog" in capsys.readouterr().err


def test_no_class_directories_is_data_error(tmp_path, capsys):
    empty = tmp_path / "clips"
    empty.mkdir()
    assert main(["--in", str(empty), "--out", str(tmp_path / "x.emb")]) == 3
    assert "class" in capsys.readouterr().err
    assert main(["--in", str(tmp_path / "nowhere"), "--out", str(tmp_path / "x.emb")]) == 3


def test_bad_flags_are_config_errors(tmp_path, capsys):
    src = make_corpus(tmp_path / "clips")
    out = str(tmp_path / "x.emb")
    assert main(["--in", src, "--out", out, "--frames", "0"]) == 2
    assert main(["--in", src, "--out", out, "--encoder", "clipnet"]) == 2
    assert "clipnet" in capsys.readouterr().err


def test_frame_count_changes_embedding(tmp_path):
    src = make_corpus(tmp_path / "clips")
    a, b = str(tmp_path / "a.emb"), str(tmp_path / "b.emb")
    assert main(["--in", src, "--out", a, "--frames", "4"]) == 0
    assert main(["--in", src, "--out", b, "--frames", "16"]) == 0
    Xa, _, _ = parse_emb(a)
    Xb, _, _ = parse_emb(b)
    assert Xa.shape == Xb.shape == (6, OUTPUT_DIM)
    assert not np.array_equal(Xa, Xb)


# ---------------------------------------------------------------- units


def test_uniform_indices_properties():
    assert uniform_indices(24, 16) == [(j * 24) // 16 for j in range(16)]
    assert uniform_indices(5, 16)[0] == 0 and max(uniform_indices(5, 16)) == 4
    assert uniform_indices(1, 16) == [0] * 16
    assert uniform_indices(100, 1) == [0]
    with pytest.raises(ValueError):
        uniform_indices(0, 16)


def test_encoder_registry_and_shape():
    enc = get_encoder("framestats")
    assert isinstance(enc, FramestatsEncoder)
    frame = np.full((H, W, 3), 128, dtype=np.uint8)
    v = enc.encode_clip([frame] * 3)
    assert v.shape == (OUTPUT_DIM,) and v.dtype == np.float32
    # pooling over identical frames equals a single frame
    assert np.array_equal(v, enc.encode_clip([frame]))
    with pytest.raises(ValueError):
        get_encoder("nope")


def test_fixed_projection_is_stable_across_instances():
    a, b = FramestatsEncoder(), FramestatsEncoder()
    frame = np.arange(H * W * 3, dtype=np.uint8).reshape(H, W, 3) % 251
    assert np.array_equal(a.encode_clip([frame]), b.encode_clip([frame]))


# ----------------------------------------------------------- interop


def test_output_feeds_coresel_select(tmp_path):
    coresel = shutil.which("coresel")
    assert coresel, "coresel console script must be installed"
    src = make_corpus(tmp_path / "clips")
    out = str(tmp_path / "pool.emb")
    assert main(["--in", src, "--out", out]) == 0
    proc = subprocess.run(
        [coresel, "select", "--data", out, "--method", "tacdt", "--vpc", "1",
         "--seed", "0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["format"] == "selection/1"
    assert sum(len(v) for v in doc["per_class"]) == 2
