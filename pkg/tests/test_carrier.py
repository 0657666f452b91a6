"""Schema synthesis rules, rendering, and carrier compilation."""

from __future__ import annotations

import importlib.util
import random

import pytest

from xcrate.carrier import (
    CarrierField,
    UnsupportedFieldType,
    CompilerUnavailable,
    GoTypeDef,
    SchemaCompileError,
    SchemaRegistry,
    SchemaRejected,
    UnboundDependency,
    compile_carriers,
    message_name_for,
    parse_proto_text,
    render_schema,
    snake_case,
    synthesize_schema,
)
from xcrate.llm_gateway import ReplayMiss

import proto_oracle

RSA_IDENTITY_DEF = GoTypeDef.from_dict(
    {
        "name": "RSAIdentity",
        "fields": [
            {"name": "k", "type": "*rsa.PrivateKey"},
            {"name": "sshKey", "type": "ssh.PublicKey"},
        ],
    }
)

RSA_KEY_PAIR_DEF = GoTypeDef.from_dict(
    {
        "name": "RSAKeyPair",
        "fields": [
            {"name": "identity", "type": "RSAIdentity"},
            {"name": "pubKey", "type": "*rsa.PublicKey"},
        ],
    }
)


class FailingGateway:
    def complete(self, prompt, mode=None):
        raise ReplayMiss("no record")


class ChoosingGateway:
    def __init__(self, answer):
        self.answer = answer

    def complete(self, prompt, mode=None):
        return self.answer


def test_rsa_identity_matches_the_reference_schema():
    registry = SchemaRegistry()
    schema = synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    assert schema.message_name == "RsaIdentity"
    assert schema.fields == (
        CarrierField("k", "bytes", 1, optional=True),
        CarrierField("ssh_key", "bytes", 2),
    )


def test_primitive_fields_map_to_scalars():
    registry = SchemaRegistry()
    src = GoTypeDef.from_dict(
        {
            "name": "Config",
            "fields": [
                {"name": "A", "type": "int32"},
                {"name": "B", "type": "string"},
                {"name": "C", "type": "bool"},
            ],
        }
    )
    schema = synthesize_schema(src, registry)
    assert [(f.proto_type, f.number) for f in schema.fields] == [
        ("int32", 1),
        ("string", 2),
        ("bool", 3),
    ]


def test_composite_references_registered_message():
    registry = SchemaRegistry()
    synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    schema = synthesize_schema(RSA_KEY_PAIR_DEF, registry, FailingGateway())
    assert schema.fields[0] == CarrierField("identity", "RsaIdentity", 1)
    assert schema.fields[1] == CarrierField("pub_key", "bytes", 2, optional=True)
    assert schema.depends_on == {"RsaIdentity"}


def test_unbound_dependency_rejected():
    registry = SchemaRegistry()
    with pytest.raises(UnboundDependency):
        synthesize_schema(RSA_KEY_PAIR_DEF, registry, FailingGateway())


@pytest.mark.parametrize(
    "go_type", ["func() error", "chan int", "<-chan bool", "chan<- []byte"]
)
def test_function_and_channel_fields_rejected(go_type):
    registry = SchemaRegistry()
    src = GoTypeDef.from_dict(
        {"name": "Weird", "fields": [{"name": "f", "type": go_type}]}
    )
    with pytest.raises(UnsupportedFieldType):
        synthesize_schema(src, registry, FailingGateway())


def test_rebinding_conflicting_source_type_rejected():
    registry = SchemaRegistry()
    synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    registry.source_binding["RSAIdentity"] = "SomethingElse"
    with pytest.raises(SchemaRejected):
        synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())


def test_gateway_may_pick_structured_encoding_with_bytes_fallback():
    registry = SchemaRegistry()
    src = GoTypeDef.from_dict(
        {"name": "Wrap", "fields": [{"name": "when", "type": "time.Time"}]}
    )
    chosen = synthesize_schema(src, registry, ChoosingGateway("string"))
    assert chosen.fields[0].proto_type == "string"

    registry2 = SchemaRegistry()
    fallback = synthesize_schema(src, registry2, ChoosingGateway("a poem about time"))
    assert fallback.fields[0].proto_type == "bytes"

    registry3 = SchemaRegistry()
    assert synthesize_schema(src, registry3, FailingGateway()).fields[0].proto_type == "bytes"


def test_byte_slices_and_numeric_slices():
    registry = SchemaRegistry()
    src = GoTypeDef.from_dict(
        {
            "name": "Buffers",
            "fields": [
                {"name": "raw", "type": "[]byte"},
                {"name": "fixed", "type": "[32]byte"},
                {"name": "counts", "type": "[]int64"},
            ],
        }
    )
    schema = synthesize_schema(src, registry)
    assert [(f.proto_type, f.repeated) for f in schema.fields] == [
        ("bytes", False),
        ("bytes", False),
        ("int64", True),
    ]


@pytest.mark.parametrize(
    "name,expected",
    [
        ("SshKey", "ssh_key"),
        ("sshKey", "ssh_key"),
        ("RSAIdentity", "rsa_identity"),
        ("K", "k"),
        ("pubKey", "pub_key"),
        ("Sha512", "sha512"),
        ("HTTPServer", "http_server"),
    ],
)
def test_snake_case_acronym_segmentation(name, expected):
    assert snake_case(name) == expected


def test_message_name_conversion():
    assert message_name_for("RSAIdentity") == "RsaIdentity"
    assert message_name_for("RSAKeyPair") == "RsaKeyPair"
    assert message_name_for("KeySeed") == "KeySeed"


def test_render_empty_registry_is_header_only():
    assert render_schema(SchemaRegistry()).strip() == 'syntax = "proto3";'


def test_render_single_message_matches_reference_text():
    registry = SchemaRegistry()
    synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    rendered = render_schema(registry)
    assert " ".join(rendered.split()) == (
        'syntax = "proto3"; message RsaIdentity { '
        "optional bytes k = 1; bytes ssh_key = 2; }"
    )


def test_render_orders_dependencies_first():
    registry = SchemaRegistry()
    synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    synthesize_schema(RSA_KEY_PAIR_DEF, registry, FailingGateway())
    rendered = render_schema(registry)
    assert rendered.index("message RsaIdentity") < rendered.index("message RsaKeyPair")
    # The composite references the dependency instead of inlining it.
    assert rendered.count("message RsaIdentity") == 1
    assert "RsaIdentity identity = 1;" in rendered


def test_synthesis_is_deterministic():
    first = SchemaRegistry()
    second = SchemaRegistry()
    a = synthesize_schema(RSA_IDENTITY_DEF, first, FailingGateway())
    b = synthesize_schema(RSA_IDENTITY_DEF, second, FailingGateway())
    assert a == b


def test_parse_proto_round_trip():
    registry = SchemaRegistry()
    synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    synthesize_schema(RSA_KEY_PAIR_DEF, registry, FailingGateway())
    parsed = parse_proto_text(render_schema(registry))
    assert parsed == registry.schemas


def _load_module(path):
    spec = importlib.util.spec_from_file_location(path.stem + "_gen", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_compile_carriers_emits_working_side_modules(tmp_path):
    registry = SchemaRegistry()
    synthesize_schema(RSA_IDENTITY_DEF, registry, FailingGateway())
    synthesize_schema(RSA_KEY_PAIR_DEF, registry, FailingGateway())
    schema_file = tmp_path / "project.proto"
    schema_file.write_text(render_schema(registry))

    compiled = compile_carriers(schema_file, tmp_path / "out")
    assert compiled.returncode == 0
    assert compiled.descriptor_path.exists()

    source = _load_module(compiled.source_module)
    target = _load_module(compiled.target_module)
    assert source.SIDE == "source"
    assert target.SIDE == "target"
    assert source.messages() == ["RsaIdentity", "RsaKeyPair"]
    field_names = [f["name"] for f in source.SCHEMAS["RsaIdentity"]["fields"]]
    assert field_names == ["k", "ssh_key"]

    rng = random.Random(7)
    schemas = registry.schemas
    for name in schemas:
        for _ in range(20):
            value = proto_oracle.random_value(schemas[name], schemas, rng)
            import xcrate.wire as wire

            canonical = wire.canonical_value(schemas[name], value, schemas)
            assert source.decode(name, source.encode(name, value)) == canonical
            assert target.decode(name, target.encode(name, value)) == canonical
            # The two sides are isomorphic by construction.
            assert target.decode(name, source.encode(name, value)) == canonical


def test_compile_carriers_surfaces_compiler_errors(tmp_path):
    bad = tmp_path / "bad.proto"
    bad.write_text('syntax = "proto3";\nmessage Broken {\n  int32 = 1;\n}\n')
    with pytest.raises(SchemaCompileError) as err:
        compile_carriers(bad, tmp_path / "out")
    assert "bad.proto" in str(err.value)


def test_compile_carriers_empty_schema_succeeds(tmp_path):
    empty = tmp_path / "empty.proto"
    empty.write_text('syntax = "proto3";\n')
    compiled = compile_carriers(empty, tmp_path / "out")
    assert compiled.schemas == {}
    source = _load_module(compiled.source_module)
    assert source.messages() == []


def test_missing_compiler_reported(tmp_path):
    schema = tmp_path / "x.proto"
    schema.write_text('syntax = "proto3";\n')
    with pytest.raises(CompilerUnavailable):
        compile_carriers(schema, tmp_path / "out", protoc="definitely-not-a-compiler")
