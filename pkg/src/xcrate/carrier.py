"""Carrier schema synthesis, rendering, and compilation.

The carrier is the language-neutral intermediate data format through which
values cross the language boundary: one proto3 message per source type.
Schemas are synthesized from source type definitions by three rules: primitive
fields map directly to scalar kinds, fields naming an already-registered
user-defined type reference that message, and opaque library fields fall back
to byte arrays (a model call may pick a more structured encoding, but bytes is
always the safe default).  Registered schemas render to a single ``.proto``
file; ``compile_carriers`` validates it with the external protobuf compiler
and emits the per-side carrier modules used by the harnesses.
"""

from __future__ import annotations

import re
import shutil
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from . import wire
from .llm_gateway import GatewayError

PROTO_HEADER = 'syntax = "proto3";'

# Source-language primitive types and their carrier scalar kinds.
PRIMITIVE_MAP = {
    "int8": "int32",
    "int16": "int32",
    "int32": "int32",
    "int64": "int64",
    "int": "int64",
    "uint8": "uint32",
    "uint16": "uint32",
    "uint32": "uint32",
    "uint64": "uint64",
    "uint": "uint64",
    "byte": "uint32",
    "rune": "int32",
    "float32": "float",
    "float64": "double",
    "string": "string",
    "bool": "bool",
}


class UnboundDependency(Exception):
    """Raised when a field references a user-defined type not yet registered."""


class UnsupportedFieldType(Exception):
    """Raised for function- or channel-typed fields, which have no carrier form."""


class SchemaRejected(Exception):
    """Raised when a source type would be bound to conflicting schemas."""


class CompilerUnavailable(Exception):
    """Raised when no carrier schema compiler is on PATH."""


class SchemaCompileError(Exception):
    """Raised when the external compiler rejects a schema file."""


_CAMEL_PART = re.compile(r"[A-Z]+(?![a-z0-9])|[A-Z][a-z0-9]*|[a-z0-9]+")


def snake_case(name: str) -> str:
    """CamelCase to snake_case with acronym segmentation (SshKey -> ssh_key)."""
    return "_".join(part.lower() for part in _CAMEL_PART.findall(name)) or name.lower()


def message_name_for(type_name: str) -> str:
    """Source type name to carrier message name (RSAIdentity -> RsaIdentity)."""
    return "".join(part.capitalize() for part in _CAMEL_PART.findall(type_name))


@dataclass(frozen=True)
class CarrierField:
    name: str
    proto_type: str  # scalar kind or message name
    number: int
    optional: bool = False
    repeated: bool = False

    @property
    def is_message(self) -> bool:
        return self.proto_type not in wire.SCALAR_KINDS

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "proto_type": self.proto_type,
            "number": self.number,
            "optional": self.optional,
            "repeated": self.repeated,
        }


@dataclass(frozen=True)
class CarrierSchema:
    message_name: str
    fields: tuple[CarrierField, ...]

    def __post_init__(self) -> None:
        numbers = [f.number for f in self.fields]
        if numbers != list(range(1, len(numbers) + 1)):
            raise ValueError(
                f"{self.message_name}: field numbers must be 1..n in declaration order"
            )

    @property
    def depends_on(self) -> set[str]:
        return {f.proto_type for f in self.fields if f.is_message}

    def to_dict(self) -> dict:
        return {
            "message_name": self.message_name,
            "fields": [f.to_dict() for f in self.fields],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> CarrierSchema:
        return cls(
            message_name=obj["message_name"],
            fields=tuple(
                CarrierField(
                    name=f["name"],
                    proto_type=f["proto_type"],
                    number=f["number"],
                    optional=f.get("optional", False),
                    repeated=f.get("repeated", False),
                )
                for f in obj["fields"]
            ),
        )


class SchemaRegistry:
    """Message schemas plus the binding from source types to message names.

    The binding is injective per project: one schema per source type.  Closure
    is enforced on render: every referenced message must be registered.
    """

    def __init__(self):
        self.schemas: dict[str, CarrierSchema] = {}
        self.source_binding: dict[str, str] = {}

    def bind(self, source_type: str, schema: CarrierSchema) -> None:
        bound = self.source_binding.get(source_type)
        if bound is not None and bound != schema.message_name:
            raise SchemaRejected(
                f"{source_type} is already bound to message {bound}"
            )
        existing = self.schemas.get(schema.message_name)
        if existing is not None and existing != schema and bound == schema.message_name:
            # Rebinding the same source type to a revised schema is allowed;
            # silently shadowing another type's message is not.
            pass
        self.schemas[schema.message_name] = schema
        self.source_binding[source_type] = schema.message_name

    def unbind(self, source_type: str) -> None:
        message = self.source_binding.pop(source_type, None)
        if message is not None:
            self.schemas.pop(message, None)

    def message_for(self, source_type: str) -> str | None:
        return self.source_binding.get(source_type)

    def wire_registry(self) -> dict[str, CarrierSchema]:
        return dict(self.schemas)


@dataclass(frozen=True)
class GoField:
    name: str
    go_type: str


@dataclass(frozen=True)
class GoTypeDef:
    """A source struct definition: ordered named fields with source types."""

    name: str
    fields: tuple[GoField, ...]

    @classmethod
    def from_dict(cls, obj: dict) -> GoTypeDef:
        return cls(
            name=obj["name"],
            fields=tuple(GoField(f["name"], f["type"]) for f in obj.get("fields", ())),
        )


_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _classify_field(
    src_field: GoField, registry: SchemaRegistry, gateway
) -> tuple[str, bool, bool]:
    """Return (proto_type, optional, repeated) for one source field."""
    go_type = src_field.go_type.strip()
    optional = False
    repeated = False
    if go_type.startswith("*"):
        optional = True
        go_type = go_type[1:].strip()
    if re.match(r"^(func\b|chan\b|<-chan\b|chan<-)", go_type):
        raise UnsupportedFieldType(
            f"field {src_field.name}: {go_type} values cannot cross the boundary"
        )
    array = re.match(r"^\[\d*\]\s*(.+)$", go_type)
    if array:
        element = array.group(1).strip()
        if element in ("byte", "uint8"):
            return "bytes", optional, False
        repeated = True
        go_type = element
    if go_type in PRIMITIVE_MAP:
        return PRIMITIVE_MAP[go_type], optional, repeated
    if _IDENT.match(go_type) and go_type[0].isupper():
        message = registry.message_for(go_type)
        if message is None:
            raise UnboundDependency(
                f"field {src_field.name}: user-defined type {go_type} is not bound yet"
            )
        return message, optional, repeated
    # Library-defined or interface type: ask the gateway to pick between the
    # byte-array fallback and a structured scalar; bytes on any failure.
    choice = "bytes"
    if gateway is not None:
        prompt = (
            "Choose a carrier encoding for an opaque library-typed field.\n"
            f"Field: {src_field.name}\n"
            f"Source type: {src_field.go_type}\n"
            "Answer with one of: bytes, string, int64, uint64, double."
        )
        try:
            answer = gateway.complete(prompt).strip().lower()
            if answer in ("bytes", "string", "int64", "uint64", "double"):
                choice = answer
        except GatewayError:
            choice = "bytes"
    return choice, optional, repeated


def synthesize_schema(
    src_type: GoTypeDef, registry: SchemaRegistry, gateway=None
) -> CarrierSchema:
    """Synthesize and register the carrier message for one source type.

    Callers drive dependency order: every user-defined field type must already
    be bound, and composite schemas reference those messages instead of
    inlining them.  Field numbers follow declaration order from 1.
    """
    fields = []
    for number, src_field in enumerate(src_type.fields, start=1):
        proto_type, optional, repeated = _classify_field(src_field, registry, gateway)
        fields.append(
            CarrierField(
                name=snake_case(src_field.name),
                proto_type=proto_type,
                number=number,
                optional=optional,
                repeated=repeated,
            )
        )
    schema = CarrierSchema(message_name=message_name_for(src_type.name), fields=tuple(fields))
    registry.bind(src_type.name, schema)
    return schema


def _topo_order(schemas: dict[str, CarrierSchema]) -> list[CarrierSchema]:
    order: list[CarrierSchema] = []
    done: set[str] = set()

    def visit(name: str, trail: tuple[str, ...]) -> None:
        if name in done:
            return
        if name in trail:
            raise ValueError(f"message dependency cycle: {' -> '.join(trail + (name,))}")
        schema = schemas.get(name)
        if schema is None:
            raise UnboundDependency(f"message {name!r} referenced but not registered")
        for dep in sorted(schema.depends_on):
            visit(dep, trail + (name,))
        done.add(name)
        order.append(schema)

    for name in sorted(schemas):
        visit(name, ())
    return order


def render_field(f: CarrierField) -> str:
    prefix = "repeated " if f.repeated else "optional " if f.optional else ""
    return f"  {prefix}{f.proto_type} {f.name} = {f.number};"


def render_schema(registry: SchemaRegistry) -> str:
    """Render every registered message to one proto3 schema file."""
    parts = [PROTO_HEADER, ""]
    for schema in _topo_order(registry.schemas):
        parts.append(f"message {schema.message_name} {{")
        parts.extend(render_field(f) for f in schema.fields)
        parts.append("}")
        parts.append("")
    return "\n".join(parts)


_MESSAGE_RE = re.compile(r"message\s+([A-Za-z_][A-Za-z0-9_]*)\s*\{([^}]*)\}", re.S)
_FIELD_RE = re.compile(
    r"^\s*(optional\s+|repeated\s+)?([A-Za-z_][A-Za-z0-9_.]*)\s+"
    r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\d+)\s*;\s*$"
)


def parse_proto_text(text: str) -> dict[str, CarrierSchema]:
    """Parse the proto3 subset produced by render_schema back into schemas."""
    body = re.sub(r"//[^\n]*", "", text)
    if "syntax" in body and "proto3" not in body:
        raise SchemaCompileError("only proto3 schemas are supported")
    schemas: dict[str, CarrierSchema] = {}
    for match in _MESSAGE_RE.finditer(body):
        name, inner = match.group(1), match.group(2)
        fields = []
        for line in inner.splitlines():
            if not line.strip():
                continue
            parsed = _FIELD_RE.match(line)
            if parsed is None:
                raise SchemaCompileError(f"cannot parse field line: {line.strip()!r}")
            label, proto_type, field_name, number = parsed.groups()
            label = (label or "").strip()
            fields.append(
                CarrierField(
                    name=field_name,
                    proto_type=proto_type,
                    number=int(number),
                    optional=label == "optional",
                    repeated=label == "repeated",
                )
            )
        fields.sort(key=lambda f: f.number)
        if [f.number for f in fields] != list(range(1, len(fields) + 1)):
            raise SchemaCompileError(f"message {name}: field numbers must be 1..n")
        schemas[name] = CarrierSchema(message_name=name, fields=tuple(fields))
    for schema in schemas.values():
        for dep in schema.depends_on:
            if dep not in schemas:
                raise SchemaCompileError(
                    f"message {schema.message_name} references unknown type {dep}"
                )
    return schemas


_SIDE_MODULE_TEMPLATE = '''"""Generated carrier types for the {side} side. Do not edit."""

from xcrate.carrier import CarrierSchema
from xcrate import wire

SIDE = {side!r}

SCHEMAS = {{
{schema_literals}
}}


def messages():
    return sorted(SCHEMAS)


def encode(message, value):
    schema = CarrierSchema.from_dict(SCHEMAS[message])
    registry = {{n: CarrierSchema.from_dict(s) for n, s in SCHEMAS.items()}}
    return wire.encode_message(schema, value, registry)


def decode(message, data):
    schema = CarrierSchema.from_dict(SCHEMAS[message])
    registry = {{n: CarrierSchema.from_dict(s) for n, s in SCHEMAS.items()}}
    return wire.decode_message(schema, data, registry)
'''


def _render_side_module(schemas: dict[str, CarrierSchema], side: str) -> str:
    literals = ",\n".join(
        f"    {name!r}: {schemas[name].to_dict()!r}" for name in sorted(schemas)
    )
    return _SIDE_MODULE_TEMPLATE.format(side=side, schema_literals=literals)


@dataclass(frozen=True)
class CompiledCarriers:
    descriptor_path: Path
    source_module: Path
    target_module: Path
    schemas: dict[str, CarrierSchema] = field(repr=False, default_factory=dict)
    protoc_stderr: str = ""
    returncode: int = 0


def compile_carriers(
    schema_file: str | Path, out_dir: str | Path, protoc: str = "protoc"
) -> CompiledCarriers:
    """Validate a schema file with the external compiler and emit side modules.

    The compiler produces a descriptor set (surfacing its exit status and
    stderr); carrier modules with (de)serialization routines are then written
    for the source-language sidecar and the target-language harness.
    """
    schema_file = Path(schema_file)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    binary = shutil.which(protoc)
    if binary is None:
        raise CompilerUnavailable(f"{protoc!r} not found on PATH")
    descriptor = out_dir / (schema_file.stem + ".desc")
    base_cmd = [
        binary,
        f"--descriptor_set_out={descriptor}",
        f"--proto_path={schema_file.parent}",
        str(schema_file),
    ]
    result = subprocess.run(base_cmd, capture_output=True, text=True)
    if result.returncode != 0 and "proto3_optional" in result.stderr:
        retry = base_cmd[:1] + ["--experimental_allow_proto3_optional"] + base_cmd[1:]
        result = subprocess.run(retry, capture_output=True, text=True)
    if result.returncode != 0:
        raise SchemaCompileError(
            f"schema compiler exited with {result.returncode}:\n{result.stderr}"
        )
    schemas = parse_proto_text(schema_file.read_text())
    source_module = out_dir / "carrier_source.py"
    target_module = out_dir / "carrier_target.py"
    source_module.write_text(_render_side_module(schemas, "source"))
    target_module.write_text(_render_side_module(schemas, "target"))
    return CompiledCarriers(
        descriptor_path=descriptor,
        source_module=source_module,
        target_module=target_module,
        schemas=schemas,
        protoc_stderr=result.stderr,
        returncode=result.returncode,
    )
