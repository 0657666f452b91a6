"""Differential validation of a hash-truncation function and a mutant of it.

Runs the source function and its translation in separate harness processes
on the same carrier-encoded inputs, compares outputs after carrier decoding,
then repeats with a single-byte mutation to show the counterexample.
"""

import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import interop_fixtures as fx
from xcrate.validation import FunctionHarness, check_io_equivalence


def harness(ctx, function, side, libs):
    return FunctionHarness(
        function=function,
        in_message="KeySeed",
        out_message="Digest32",
        in_adapters=fx.keyseed_pair(side),
        out_adapters=fx.digest_pair(side),
        libs=libs,
        side=side,
    )


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="validate_demo_"))
    ctx = fx.build_ctx(workdir)
    values = fx.keyseed_values(ctx, count=4)

    f = harness(ctx, "ed25519PrivateKeyToCurve25519", "source_side", ctx.source_libs)
    g = harness(ctx, "ed25519_private_key_to_curve25519", "target_side", ctx.target_libs)
    result = check_io_equivalence(ctx, f, g, values)
    print(f"faithful translation: passed={result.passed}")

    mutant = harness(
        ctx, "ed25519_private_key_to_curve25519_truncated", "target_side", ctx.target_libs
    )
    result = check_io_equivalence(ctx, f, mutant, values)
    print(f"truncating mutant:    passed={result.passed}")
    print(f"  diverges at input #{result.diverging_index}")
    print(f"  source output: {result.source_output['data'].hex()}")
    print(f"  target output: {result.target_output['data'].hex()}")


if __name__ == "__main__":
    main()
