"""Length-prefixed binary framing and observed-value files.

Frames are a 4-byte big-endian length followed by the payload.  Harness
processes read a frame stream on stdin and write one on stdout; observed
values captured from source unit tests are stored as a framed binary file
with a JSON index describing the owning type and the frame count.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

_LEN = struct.Struct(">I")


class FramingError(Exception):
    """Raised on truncated frames or an index that disagrees with its file."""


def write_frame(stream: BinaryIO, payload: bytes) -> None:
    stream.write(_LEN.pack(len(payload)))
    stream.write(payload)


def read_frame(stream: BinaryIO) -> bytes | None:
    header = stream.read(4)
    if not header:
        return None
    if len(header) < 4:
        raise FramingError("truncated frame header")
    size = _LEN.unpack(header)[0]
    payload = stream.read(size)
    if len(payload) < size:
        raise FramingError("truncated frame payload")
    return payload


def read_frames(stream: BinaryIO) -> Iterator[bytes]:
    while True:
        frame = read_frame(stream)
        if frame is None:
            return
        yield frame


def write_frames_file(path: str | Path, frames: Iterable[bytes]) -> int:
    count = 0
    with open(path, "wb") as handle:
        for frame in frames:
            write_frame(handle, frame)
            count += 1
    return count


def read_frames_file(path: str | Path) -> list[bytes]:
    with open(path, "rb") as handle:
        return list(read_frames(handle))


def _index_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


@dataclass(frozen=True)
class ObservedValues:
    """Carrier-encoded values captured from source unit-test executions."""

    type_id: str
    values: tuple[bytes, ...]

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        write_frames_file(path, self.values)
        _index_path(path).write_text(
            json.dumps({"type_id": self.type_id, "count": len(self.values)}, sort_keys=True)
        )
        return path

    @classmethod
    def load(cls, path: str | Path) -> ObservedValues:
        path = Path(path)
        frames = read_frames_file(path)
        index = json.loads(_index_path(path).read_text())
        if index.get("count") != len(frames):
            raise FramingError(
                f"index claims {index.get('count')} frames, file holds {len(frames)}"
            )
        return cls(type_id=index["type_id"], values=tuple(frames))
