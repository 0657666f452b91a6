"""Reference harness executable implementing the framed stdio protocol.

Each side of the language boundary is driven as a subprocess speaking
length-prefixed carrier frames on stdin/stdout.  Exit code 0 means the run
completed, 2 means the checked property was violated (the offending frame
index is printed to stderr), anything else is a harness error.

Modes:
  roundtrip  decode each value, apply backward then forward, and require the
             recovered native value to equal the original; emits the
             re-encoded frames.
  transform  backward then forward without any check (the target side of a
             full round trip); emits the converted frames.
  execute    decode inputs, apply the named function, encode outputs through
             the output-side forward adapter; one output frame per input.
  verify     decode stdin and a reference frame file through the backward
             adapter and require native equality frame by frame.

Adapter files are plain Python sources defining ``forward(value)`` and/or
``backward(carrier)``; ``--lib`` files are executed first into the same
namespace so adapters can use the subject project's types.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from .carrier import parse_proto_text
from .framing import read_frames, read_frames_file, write_frame
from . import wire


def deep_equal(a, b, rel_tol: float = 1e-9) -> bool:
    """Structural equality with relative tolerance on floats."""
    if isinstance(a, float) or isinstance(b, float):
        try:
            return math.isclose(float(a), float(b), rel_tol=rel_tol, abs_tol=0.0)
        except (TypeError, ValueError):
            return False
    if isinstance(a, dict) and isinstance(b, dict):
        return a.keys() == b.keys() and all(
            deep_equal(a[k], b[k], rel_tol) for k in a
        )
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(
            deep_equal(x, y, rel_tol) for x, y in zip(a, b)
        )
    if type(a) is type(b) and hasattr(a, "__dict__") and not isinstance(a, type):
        if a.__class__.__module__ != "builtins":
            return deep_equal(vars(a), vars(b), rel_tol)
    return a == b


def _exec_into(namespace: dict, path: str) -> None:
    source = Path(path).read_text()
    code = compile(source, path, "exec")
    exec(code, namespace)


def _load_namespace(libs, adapter_files) -> dict:
    namespace: dict = {"__name__": "xcrate_harness_adapters"}
    for path in libs or ():
        _exec_into(namespace, path)
    for path in adapter_files or ():
        _exec_into(namespace, path)
    return namespace


def _require(namespace: dict, name: str):
    fn = namespace.get(name)
    if not callable(fn):
        raise RuntimeError(f"adapter namespace does not define {name}()")
    return fn


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="xcrate-harness", description=__doc__)
    parser.add_argument("mode", choices=("roundtrip", "transform", "execute", "verify"))
    parser.add_argument("--schema", required=True, help="proto3 schema file")
    parser.add_argument("--message", required=True, help="carrier message of the input values")
    parser.add_argument("--lib", action="append", default=[], help="project source file(s)")
    parser.add_argument("--adapters", action="append", default=[], help="adapter source file(s)")
    parser.add_argument("--function", help="function under test (execute mode)")
    parser.add_argument("--out-message", help="carrier message of outputs (execute mode)")
    parser.add_argument("--out-adapters", action="append", default=[],
                        help="output-side adapter source file(s) (execute mode)")
    parser.add_argument("--expected", help="reference frames file (verify mode)")
    parser.add_argument("--rel-tol", type=float, default=1e-9)
    args = parser.parse_args(argv)

    schemas = parse_proto_text(Path(args.schema).read_text())
    if args.message not in schemas:
        print(f"unknown message {args.message!r}", file=sys.stderr)
        return 1
    schema = schemas[args.message]
    namespace = _load_namespace(args.lib, args.adapters)

    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer

    def decode(data: bytes):
        return wire.decode_message(schema, data, schemas)

    def encode(value) -> bytes:
        return wire.encode_message(schema, value, schemas)

    if args.mode == "roundtrip":
        forward = _require(namespace, "forward")
        backward = _require(namespace, "backward")
        for i, frame in enumerate(read_frames(stdin)):
            native = backward(decode(frame))
            carried = forward(native)
            recovered = backward(
                wire.decode_message(schema, encode(carried), schemas)
            )
            if not deep_equal(native, recovered, args.rel_tol):
                print(f"frame {i}", file=sys.stderr)
                return 2
            write_frame(stdout, encode(carried))
        stdout.flush()
        return 0

    if args.mode == "transform":
        forward = _require(namespace, "forward")
        backward = _require(namespace, "backward")
        for frame in read_frames(stdin):
            write_frame(stdout, encode(forward(backward(decode(frame)))))
        stdout.flush()
        return 0

    if args.mode == "execute":
        if not args.function:
            print("execute mode requires --function", file=sys.stderr)
            return 1
        backward = _require(namespace, "backward")
        out_message = args.out_message or args.message
        if out_message not in schemas:
            print(f"unknown message {out_message!r}", file=sys.stderr)
            return 1
        out_schema = schemas[out_message]
        out_namespace = (
            _load_namespace(args.lib, args.out_adapters)
            if args.out_adapters
            else namespace
        )
        out_forward = _require(out_namespace, "forward")
        fn = _require(namespace, args.function)
        for frame in read_frames(stdin):
            result = fn(backward(decode(frame)))
            write_frame(
                stdout, wire.encode_message(out_schema, out_forward(result), schemas)
            )
        stdout.flush()
        return 0

    # verify
    if not args.expected:
        print("verify mode requires --expected", file=sys.stderr)
        return 1
    backward = _require(namespace, "backward")
    reference = read_frames_file(args.expected)
    got = list(read_frames(stdin))
    if len(got) != len(reference):
        print(f"frame count {len(got)} != expected {len(reference)}", file=sys.stderr)
        return 2
    for i, (frame, ref) in enumerate(zip(got, reference)):
        if not deep_equal(backward(decode(frame)), backward(decode(ref)), args.rel_tol):
            print(f"frame {i}", file=sys.stderr)
            return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
