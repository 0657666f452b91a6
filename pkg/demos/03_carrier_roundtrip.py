"""Synthesize a carrier schema, compile it, and round-trip random values.

The wrapped key type maps to one proto3 message: the pointer field becomes
optional, the opaque library fields fall back to byte arrays, and both
generated carrier modules agree on every encoded value.
"""

import importlib.util
import random
import tempfile
from pathlib import Path

from xcrate.carrier import (
    GoTypeDef,
    SchemaRegistry,
    compile_carriers,
    render_schema,
    synthesize_schema,
)


def load(path: Path):
    spec = importlib.util.spec_from_file_location(path.stem, path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main() -> None:
    registry = SchemaRegistry()
    identity = GoTypeDef.from_dict(
        {
            "name": "RSAIdentity",
            "fields": [
                {"name": "k", "type": "*rsa.PrivateKey"},
                {"name": "sshKey", "type": "ssh.PublicKey"},
            ],
        }
    )
    pair = GoTypeDef.from_dict(
        {
            "name": "RSAKeyPair",
            "fields": [
                {"name": "identity", "type": "RSAIdentity"},
                {"name": "pubKey", "type": "*rsa.PublicKey"},
            ],
        }
    )
    synthesize_schema(identity, registry)
    synthesize_schema(pair, registry)
    schema_text = render_schema(registry)
    print(schema_text)

    workdir = Path(tempfile.mkdtemp(prefix="carrier_demo_"))
    schema_file = workdir / "demo.proto"
    schema_file.write_text(schema_text)
    compiled = compile_carriers(schema_file, workdir / "out")
    source = load(compiled.source_module)
    target = load(compiled.target_module)

    rng = random.Random(42)
    value = {
        "identity": {"k": rng.randbytes(16), "ssh_key": rng.randbytes(12)},
        "pub_key": rng.randbytes(8),
    }
    encoded = source.encode("RsaKeyPair", value)
    print(f"encoded {len(encoded)} bytes: {encoded.hex()}")
    decoded = target.decode("RsaKeyPair", encoded)
    print("target side decodes to the same value:", decoded == source.decode("RsaKeyPair", encoded))


if __name__ == "__main__":
    main()
