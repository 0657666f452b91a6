"""Harness protocol conformance: framing, exit codes, frame counts."""

from __future__ import annotations

import io
import subprocess
import sys

import pytest

from xcrate.framing import (
    FramingError,
    ObservedValues,
    read_frame,
    read_frames_file,
    write_frame,
    write_frames_file,
)
from xcrate.harness import deep_equal

SCHEMA = 'syntax = "proto3";\n\nmessage KeySeed {\n  bytes seed = 1;\n}\n'

LIB = """
class KeySeed:
    def __init__(self, seed):
        self.seed = bytes(seed)

def stretch(value):
    return KeySeed(value.seed + value.seed)
"""

IDENTITY_ADAPTERS = """
def forward(value):
    return {"seed": value.seed}

def backward(carrier):
    return KeySeed(carrier["seed"])
"""

LOSSY_ADAPTERS = """
def forward(value):
    return {"seed": value.seed[:-1]}

def backward(carrier):
    return KeySeed(carrier["seed"])
"""


@pytest.fixture()
def workdir(tmp_path):
    (tmp_path / "schema.proto").write_text(SCHEMA)
    (tmp_path / "lib.py").write_text(LIB)
    (tmp_path / "identity.py").write_text(IDENTITY_ADAPTERS)
    (tmp_path / "lossy.py").write_text(LOSSY_ADAPTERS)
    return tmp_path


def encode_seed(payload: bytes) -> bytes:
    # Hand-rolled: field 1, wire type 2.
    return bytes([0x0A, len(payload)]) + payload


def run_harness(workdir, mode, *extra, frames=(), adapters="identity.py"):
    cmd = [
        sys.executable,
        "-m",
        "xcrate.harness",
        mode,
        "--schema",
        str(workdir / "schema.proto"),
        "--message",
        "KeySeed",
        "--lib",
        str(workdir / "lib.py"),
        "--adapters",
        str(workdir / adapters),
        *extra,
    ]
    stdin = io.BytesIO()
    for frame in frames:
        write_frame(stdin, frame)
    return subprocess.run(cmd, input=stdin.getvalue(), capture_output=True)


def test_roundtrip_identity_adapters_exit_zero(workdir):
    frames = [encode_seed(b"abc"), encode_seed(b"01234567")]
    result = run_harness(workdir, "roundtrip", frames=frames)
    assert result.returncode == 0, result.stderr
    out = list_frames(result.stdout)
    assert out == frames


def list_frames(blob: bytes) -> list[bytes]:
    stream = io.BytesIO(blob)
    frames = []
    while True:
        frame = read_frame(stream)
        if frame is None:
            return frames
        frames.append(frame)


def test_roundtrip_lossy_adapter_exits_two_with_frame_index(workdir):
    frames = [encode_seed(b"abc")]
    result = run_harness(workdir, "roundtrip", frames=frames, adapters="lossy.py")
    assert result.returncode == 2
    assert b"frame 0" in result.stderr


def test_execute_preserves_frame_count(workdir):
    frames = [encode_seed(b"ab"), encode_seed(b"cd"), encode_seed(b"ef")]
    result = run_harness(workdir, "execute", "--function", "stretch", frames=frames)
    assert result.returncode == 0, result.stderr
    out = list_frames(result.stdout)
    assert len(out) == len(frames)
    assert out[0] == encode_seed(b"abab")


def test_transform_applies_conversion(workdir):
    (workdir / "flip.py").write_text(
        "def forward(value):\n"
        "    return {\"seed\": value.seed[::-1]}\n"
        "def backward(carrier):\n"
        "    return KeySeed(carrier[\"seed\"])\n"
    )
    result = run_harness(workdir, "transform", frames=[encode_seed(b"abc")], adapters="flip.py")
    assert result.returncode == 0
    assert list_frames(result.stdout) == [encode_seed(b"cba")]


def test_verify_equal_and_mismatch(workdir):
    reference = workdir / "ref.bin"
    write_frames_file(reference, [encode_seed(b"abc")])
    ok = run_harness(workdir, "verify", "--expected", str(reference), frames=[encode_seed(b"abc")])
    assert ok.returncode == 0
    bad = run_harness(workdir, "verify", "--expected", str(reference), frames=[encode_seed(b"abd")])
    assert bad.returncode == 2
    assert b"frame 0" in bad.stderr
    short = run_harness(workdir, "verify", "--expected", str(reference), frames=[])
    assert short.returncode == 2
    assert b"frame count" in short.stderr


def test_unknown_message_is_a_harness_error(workdir):
    cmd = [
        sys.executable,
        "-m",
        "xcrate.harness",
        "roundtrip",
        "--schema",
        str(workdir / "schema.proto"),
        "--message",
        "Nope",
        "--adapters",
        str(workdir / "identity.py"),
    ]
    result = subprocess.run(cmd, input=b"", capture_output=True)
    assert result.returncode == 1


def test_crashing_adapter_is_a_harness_error(workdir):
    (workdir / "crash.py").write_text(
        "def forward(value):\n    raise RuntimeError('boom')\n"
        "def backward(carrier):\n    return KeySeed(carrier['seed'])\n"
    )
    result = run_harness(workdir, "roundtrip", frames=[encode_seed(b"a")], adapters="crash.py")
    assert result.returncode not in (0, 2)


# --- framing primitives ------------------------------------------------------


def test_frames_file_round_trip(tmp_path):
    frames = [b"", b"x", b"longer payload"]
    path = tmp_path / "frames.bin"
    assert write_frames_file(path, frames) == 3
    assert read_frames_file(path) == frames


def test_truncated_frame_rejected(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"\x00\x00\x00\x05abc")
    with pytest.raises(FramingError):
        read_frames_file(path)


def test_observed_values_save_and_load(tmp_path):
    values = ObservedValues(type_id="KeySeed", values=(b"a", b"bb"))
    path = tmp_path / "keyseed.bin"
    values.save(path)
    loaded = ObservedValues.load(path)
    assert loaded == values


def test_observed_values_index_mismatch(tmp_path):
    values = ObservedValues(type_id="KeySeed", values=(b"a",))
    path = tmp_path / "keyseed.bin"
    values.save(path)
    write_frames_file(path, [b"a", b"b"])
    with pytest.raises(FramingError):
        ObservedValues.load(path)


# --- deep equality -----------------------------------------------------------


def test_deep_equal_handles_objects_floats_and_bytes():
    class Box:
        def __init__(self, v):
            self.v = v

    assert deep_equal(Box([1.0, b"x"]), Box([1.0 + 1e-12, b"x"]))
    assert not deep_equal(Box([1.0]), Box([1.1]))
    assert deep_equal({"a": (1, 2)}, {"a": (1, 2)})
    assert not deep_equal({"a": 1}, {"b": 1})
