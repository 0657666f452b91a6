"""Regenerate the micro-project's observed values and recorded response logs.

Run from the repository root after any change to prompt assembly:

    python3 fixtures/microproject/generate_fixtures.py

Values are carrier frames produced with fixed seeds.  The response logs are
recorded by running the real pipeline against a scripted responder, so the
logged prompts always match what the pipeline will ask on replay.  The
responder returns a correct translation for the dependency-using function
only when the prompt carries retrieval suggestions with import paths; the
ablation logs therefore reproduce the no-retrieval failure pattern.
"""

from __future__ import annotations

import random
import shutil
import sys
import tempfile
from pathlib import Path

HERE = Path(__file__).resolve().parent

from xcrate import wire
from xcrate.carrier import GoTypeDef, SchemaRegistry, synthesize_schema
from xcrate.framing import ObservedValues
from xcrate.llm_gateway import LlmGateway
from xcrate.pipeline import RunConfig, run_project

KEYSEED_FWD = 'def forward(value):\n    return {"seed": value.seed}\n'
KEYSEED_BWD = 'def backward(carrier):\n    return KeySeed(carrier["seed"])\n'
DIGEST_FWD = 'def forward(value):\n    return {"data": value.data}\n'
DIGEST_BWD = 'def backward(carrier):\n    return Digest32(carrier["data"])\n'

TARGET_KEYSEED = (
    "class KeySeed:\n"
    "    def __init__(self, seed):\n"
    "        self.seed = bytes(seed)\n"
)
TARGET_DIGEST32 = (
    "class Digest32:\n"
    "    def __init__(self, data):\n"
    "        self.data = bytes(data)\n"
)
TARGET_F1 = (
    "import hashlib\n"
    "\n"
    "\n"
    "def ed25519_private_key_to_curve25519(sk):\n"
    "    hasher = hashlib.sha512()\n"
    "    hasher.update(sk.seed)\n"
    "    digest = hasher.digest()\n"
    "    return Digest32(digest[:32])\n"
)
# The hallucinated no-retrieval output: target-language pseudo code that the
# compile check rejects.
BAD_F1 = (
    "use sha9000::Hasher;\n"
    "\n"
    "fn ed25519_private_key_to_curve25519(sk: &SigningKey) -> [u8; 32] {\n"
    "    Hasher::digest(sk)\n"
    "}\n"
)
TARGET_CLAMP = (
    "def clamp_digest(d):\n"
    "    out = bytearray(d.data)\n"
    "    out[0] &= 248\n"
    "    out[31] = (out[31] & 127) | 64\n"
    "    return Digest32(bytes(out))\n"
)


def scripted_responder(prompt: str) -> str:
    head = prompt.splitlines()[0]
    if head.startswith("Propose the best matching target crate"):
        if "Package: crypto/sha512" in prompt:
            return "sha2_fixture"
        if "Package: crypto/ed25519" in prompt:
            return "ed25519_fixture"
        return "NONE"
    if head.startswith("Write the forward adapter") or head.startswith(
        "Write the backward adapter"
    ):
        forward = head.startswith("Write the forward")
        if "Native type KeySeed:" in prompt:
            return KEYSEED_FWD if forward else KEYSEED_BWD
        if "Native type Digest32:" in prompt:
            return DIGEST_FWD if forward else DIGEST_BWD
        raise ValueError(f"unscripted glue prompt: {head}")
    if head.startswith("Translate this source item"):
        item = next(
            line.split()[1] for line in prompt.splitlines() if line.startswith("Item: ")
        )
        if item == "KeySeed":
            return TARGET_KEYSEED
        if item == "Digest32":
            return TARGET_DIGEST32
        if item == "clampDigest":
            return TARGET_CLAMP
        if item == "ed25519PrivateKeyToCurve25519":
            # Crate-rooted paths like sha2_fixture::Sha512 are only present
            # when import resolution is enabled; a bare api id is not enough.
            has_call_enabling_imports = "You are advised" in prompt and (
                "sha2_fixture::" in prompt or "ed25519_fixture::" in prompt
            )
            return TARGET_F1 if has_call_enabling_imports else BAD_F1
        raise ValueError(f"unscripted translation item: {item}")
    raise ValueError(f"unscripted prompt: {head}")


def write_values() -> None:
    registry = SchemaRegistry()
    synthesize_schema(
        GoTypeDef.from_dict(
            {"name": "KeySeed", "fields": [{"name": "seed", "type": "[]byte"}]}
        ),
        registry,
    )
    synthesize_schema(
        GoTypeDef.from_dict(
            {"name": "Digest32", "fields": [{"name": "data", "type": "[]byte"}]}
        ),
        registry,
    )
    schemas = registry.wire_registry()
    values_dir = HERE / "values"
    values_dir.mkdir(exist_ok=True)

    def frames(message, field, count, seed):
        rng = random.Random(seed)
        return tuple(
            wire.encode_message(schemas[message], {field: rng.randbytes(32)}, schemas)
            for _ in range(count)
        )

    ObservedValues("KeySeed", frames("KeySeed", "seed", 4, 101)).save(
        values_dir / "keyseed.bin"
    )
    ObservedValues("Digest32", frames("Digest32", "data", 4, 102)).save(
        values_dir / "digest32.bin"
    )
    ObservedValues("KeySeed", frames("KeySeed", "seed", 3, 103)).save(
        values_dir / "f1_inputs.bin"
    )
    ObservedValues("Digest32", frames("Digest32", "data", 3, 104)).save(
        values_dir / "f2_inputs.bin"
    )


def record_variant(variant: str) -> None:
    log = HERE / f"replay_{variant}.jsonl"
    if log.exists():
        log.unlink()
    gateway = LlmGateway(mode="record", log_path=log, provider=scripted_responder)
    scratch = Path(tempfile.mkdtemp(prefix=f"xcrate_{variant}_"))
    try:
        config = RunConfig(
            no_rag=variant == "norag",
            no_imports=variant == "noimports",
            gateway=gateway,
            report_path=scratch / "report.json",
        )
        report, hard_errors = run_project(HERE, config)
        if hard_errors:
            raise SystemExit(f"{variant}: hard errors: {hard_errors}")
        print(f"{variant}: comp {report.comp_full}/{report.comp_dep} "
              f"equiv {report.equiv_full}/{report.equiv_dep} rag_load {report.rag_load}")
    finally:
        shutil.rmtree(scratch, ignore_errors=True)


def main() -> None:
    write_values()
    for variant in ("full", "norag", "noimports"):
        record_variant(variant)


if __name__ == "__main__":
    sys.exit(main())
