"""Proto3 binary wire format for carrier messages.

Encodes and decodes carrier values (plain dicts keyed by field name) against
a message schema.  Encoding is deterministic: fields are written in field
number order and scalar fields holding their default value are omitted, as
proto3 serializers do.  Decoding materializes defaults for absent fields, so
``decode(encode(v)) == v`` for canonical values.
"""

from __future__ import annotations

import struct
from typing import Mapping

SCALAR_KINDS = (
    "int32",
    "int64",
    "uint32",
    "uint64",
    "bool",
    "string",
    "bytes",
    "float",
    "double",
)

_VARINT_KINDS = ("int32", "int64", "uint32", "uint64", "bool")

_RANGES = {
    "int32": (-(2**31), 2**31 - 1),
    "int64": (-(2**63), 2**63 - 1),
    "uint32": (0, 2**32 - 1),
    "uint64": (0, 2**64 - 1),
}

_DEFAULTS = {
    "int32": 0,
    "int64": 0,
    "uint32": 0,
    "uint64": 0,
    "bool": False,
    "string": "",
    "bytes": b"",
    "float": 0.0,
    "double": 0.0,
}


class WireError(Exception):
    """Raised on malformed wire data or values outside their field's range."""


def _write_varint(out: bytearray, value: int) -> None:
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def _read_varint(data: bytes, pos: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if pos >= len(data):
            raise WireError("truncated varint")
        byte = data[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise WireError("varint longer than 64 bits")


def _scalar_to_uint(kind: str, value) -> int:
    if kind == "bool":
        return 1 if value else 0
    if not isinstance(value, int) or isinstance(value, bool):
        raise WireError(f"{kind} field needs an int, got {type(value).__name__}")
    low, high = _RANGES[kind]
    if not low <= value <= high:
        raise WireError(f"{value} out of range for {kind}")
    # Negative int32/int64 travel as 64-bit two's complement varints.
    return value & 0xFFFFFFFFFFFFFFFF


def _uint_to_scalar(kind: str, raw: int):
    if kind == "bool":
        return bool(raw)
    if kind == "uint64":
        return raw
    if kind == "uint32":
        return raw & 0xFFFFFFFF
    if kind == "int64":
        return (raw ^ (1 << 63)) - (1 << 63)
    if kind == "int32":
        raw &= 0xFFFFFFFF
        return (raw ^ (1 << 31)) - (1 << 31)
    raise WireError(f"not a varint kind: {kind}")


def _wire_type(kind: str, is_message: bool) -> int:
    if is_message or kind in ("string", "bytes"):
        return 2
    if kind == "float":
        return 5
    if kind == "double":
        return 1
    return 0


def _encode_single(out: bytearray, field, value, registry) -> None:
    kind = field.proto_type
    is_message = kind not in SCALAR_KINDS
    tag = (field.number << 3) | _wire_type(kind, is_message)
    if is_message:
        if not isinstance(value, Mapping):
            raise WireError(f"message field {field.name} needs a mapping")
        schema = registry.get(kind)
        if schema is None:
            raise WireError(f"unknown message type {kind!r}")
        payload = encode_message(schema, value, registry)
        _write_varint(out, tag)
        _write_varint(out, len(payload))
        out.extend(payload)
    elif kind == "string":
        if not isinstance(value, str):
            raise WireError(f"string field {field.name} needs str")
        payload = value.encode("utf-8")
        _write_varint(out, tag)
        _write_varint(out, len(payload))
        out.extend(payload)
    elif kind == "bytes":
        if not isinstance(value, (bytes, bytearray)):
            raise WireError(f"bytes field {field.name} needs bytes")
        _write_varint(out, tag)
        _write_varint(out, len(value))
        out.extend(value)
    elif kind == "float":
        _write_varint(out, tag)
        out.extend(struct.pack("<f", float(value)))
    elif kind == "double":
        _write_varint(out, tag)
        out.extend(struct.pack("<d", float(value)))
    else:
        _write_varint(out, tag)
        _write_varint(out, _scalar_to_uint(kind, value))


def encode_message(schema, value: Mapping, registry: Mapping) -> bytes:
    """Encode one carrier value dict against its schema."""
    out = bytearray()
    for field in sorted(schema.fields, key=lambda f: f.number):
        present = field.name in value
        item = value.get(field.name)
        if field.repeated:
            items = item or []
            if not isinstance(items, (list, tuple)):
                raise WireError(f"repeated field {field.name} needs a list")
            if not items:
                continue
            kind = field.proto_type
            if kind in _VARINT_KINDS or kind in ("float", "double"):
                # Packed encoding for numeric repeated fields.
                payload = bytearray()
                for element in items:
                    if kind == "float":
                        payload.extend(struct.pack("<f", float(element)))
                    elif kind == "double":
                        payload.extend(struct.pack("<d", float(element)))
                    else:
                        _write_varint(payload, _scalar_to_uint(kind, element))
                _write_varint(out, (field.number << 3) | 2)
                _write_varint(out, len(payload))
                out.extend(payload)
            else:
                for element in items:
                    _encode_single(out, field, element, registry)
            continue
        is_message = field.proto_type not in SCALAR_KINDS
        if is_message or field.optional:
            if not present or item is None:
                continue
            _encode_single(out, field, item, registry)
            continue
        if not present:
            continue
        if item == _DEFAULTS[field.proto_type]:
            # proto3 drops default-valued singular scalars from the wire.
            continue
        _encode_single(out, field, item, registry)
    return bytes(out)


def _skip_field(data: bytes, pos: int, wire_type: int) -> int:
    if wire_type == 0:
        _, pos = _read_varint(data, pos)
        return pos
    if wire_type == 1:
        return pos + 8
    if wire_type == 2:
        size, pos = _read_varint(data, pos)
        return pos + size
    if wire_type == 5:
        return pos + 4
    raise WireError(f"unsupported wire type {wire_type}")


def _decode_scalar(field, data: bytes, pos: int, wire_type: int, registry):
    kind = field.proto_type
    if kind not in SCALAR_KINDS:
        if wire_type != 2:
            raise WireError(f"message field {field.name} with wire type {wire_type}")
        size, pos = _read_varint(data, pos)
        chunk = data[pos : pos + size]
        if len(chunk) != size:
            raise WireError("truncated message field")
        schema = registry.get(kind)
        if schema is None:
            raise WireError(f"unknown message type {kind!r}")
        return decode_message(schema, chunk, registry), pos + size
    if kind == "string" or kind == "bytes":
        if wire_type != 2:
            raise WireError(f"{kind} field {field.name} with wire type {wire_type}")
        size, pos = _read_varint(data, pos)
        chunk = data[pos : pos + size]
        if len(chunk) != size:
            raise WireError(f"truncated {kind} field")
        return (chunk.decode("utf-8") if kind == "string" else bytes(chunk)), pos + size
    if kind == "float":
        if wire_type != 5:
            raise WireError("float field with wrong wire type")
        return struct.unpack("<f", data[pos : pos + 4])[0], pos + 4
    if kind == "double":
        if wire_type != 1:
            raise WireError("double field with wrong wire type")
        return struct.unpack("<d", data[pos : pos + 8])[0], pos + 8
    raw, pos = _read_varint(data, pos)
    return _uint_to_scalar(kind, raw), pos


def decode_message(schema, data: bytes, registry: Mapping) -> dict:
    """Decode wire bytes to a canonical carrier value dict.

    Absent singular scalars resolve to their defaults, absent optional and
    message fields to None, absent repeated fields to empty lists.  Unknown
    field numbers are skipped.
    """
    by_number = {f.number: f for f in schema.fields}
    value: dict = {}
    pos = 0
    while pos < len(data):
        tag, pos = _read_varint(data, pos)
        number = tag >> 3
        wire_type = tag & 0x7
        field = by_number.get(number)
        if field is None:
            pos = _skip_field(data, pos, wire_type)
            if pos > len(data):
                raise WireError("truncated unknown field")
            continue
        if field.repeated:
            bucket = value.setdefault(field.name, [])
            kind = field.proto_type
            numeric = kind in _VARINT_KINDS or kind in ("float", "double")
            if numeric and wire_type == 2:
                size, pos = _read_varint(data, pos)
                end = pos + size
                if end > len(data):
                    raise WireError("truncated packed field")
                while pos < end:
                    element, pos = _decode_scalar(
                        field, data, pos, _wire_type(kind, False), registry
                    )
                    bucket.append(element)
                continue
            element, pos = _decode_scalar(field, data, pos, wire_type, registry)
            bucket.append(element)
            continue
        value[field.name], pos = _decode_scalar(field, data, pos, wire_type, registry)
    return canonical_value(schema, value, registry, _decode=True)


def canonical_value(schema, value: Mapping, registry: Mapping, _decode: bool = False) -> dict:
    """Fill defaults so structurally equal values compare equal after a round trip."""
    out: dict = {}
    for field in schema.fields:
        is_message = field.proto_type not in SCALAR_KINDS
        if field.repeated:
            items = value.get(field.name) or []
            if is_message and not _decode:
                sub = registry.get(field.proto_type)
                items = [canonical_value(sub, v, registry) for v in items]
            out[field.name] = list(items)
        elif is_message or field.optional:
            item = value.get(field.name)
            if item is not None and is_message and not _decode:
                item = canonical_value(registry.get(field.proto_type), item, registry)
            out[field.name] = item
        else:
            out[field.name] = value.get(field.name, _DEFAULTS[field.proto_type])
    return out
