"""Cross-language interoperability and translation validation.

Validation runs in two phases around the carrier representation.  First,
interoperability: synthesize a carrier schema and source-side adapters until
the source-side round trip (backward after forward is the identity) holds on
observed values, then synthesize target-side adapters until the full round
trip through both sides holds.  A source-side failure regenerates both the
schema and the source glue; a full-round-trip failure regenerates only the
target glue.  Second, behaviour: differential I/O equivalence on unit-test
inputs, with the source-level agreement check re-deriving the composed
pipeline's outputs natively as a cross-check.

All executions go through harness subprocesses speaking the framed stdio
protocol; equality of transported values is deep structural equality after
carrier decoding, with a relative tolerance for floats.  Two carrier values
that both carry a non-empty ``error`` field compare equal regardless of the
message text.
"""

from __future__ import annotations

import ast
import math
import re
import subprocess
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import wire
from .carrier import (
    CarrierSchema,
    GoTypeDef,
    SchemaRegistry,
    compile_carriers,
    render_field,
    render_schema,
    synthesize_schema,
)
from .framing import ObservedValues, write_frames_file
from .knowledge_base import KnowledgeBase, query as kb_query

DEFAULT_TIMEOUT = 30.0


class HarnessError(Exception):
    """Subprocess failure distinct from a property violation."""


class BudgetExhausted(Exception):
    """A regeneration loop ran out of attempts."""

    def __init__(self, message: str, counters: "AttemptCounters"):
        super().__init__(message)
        self.counters = counters


class GenerationFailed(Exception):
    """The gateway produced glue that does not compile or define the adapter."""


class SignatureMismatch(Exception):
    """A regenerated body altered the frozen function signature."""


@dataclass(frozen=True)
class AdapterPair:
    """Forward/backward conversion sources for one side of the boundary."""

    side: str  # "source_side" | "target_side"
    forward_src: str
    backward_src: str
    kb_hits_used: tuple[str, ...] = ()


@dataclass
class Budget:
    """Remaining regeneration attempts; each loop decrements one counter."""

    schema_retries: int = 3
    glue_retries: int = 3
    body_retries: int = 5


@dataclass
class AttemptCounters:
    schema: int = 0
    src_glue: int = 0
    tgt_glue: int = 0
    body: int = 0


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    counterexample_index: int | None = None
    counterexample: dict | None = None
    frames: tuple[bytes, ...] = ()


@dataclass(frozen=True)
class IoCheckResult:
    passed: bool
    diverging_index: int | None = None
    source_output: dict | None = None
    target_output: dict | None = None
    source_frames: tuple[bytes, ...] = ()
    target_frames: tuple[bytes, ...] = ()
    # Set when the source function itself disagrees with a rerun on the same
    # inputs: such functions are unvalidatable rather than failing.
    nondeterministic: bool = False


def values_equal(a, b, rel_tol: float = 1e-9) -> bool:
    """Equality of carrier-decoded values; error-bearing values match errors."""
    if isinstance(a, dict) and isinstance(b, dict):
        if a.get("error") and b.get("error"):
            return True
        return a.keys() == b.keys() and all(values_equal(a[k], b[k], rel_tol) for k in a)
    if isinstance(a, float) or isinstance(b, float):
        try:
            return math.isclose(float(a), float(b), rel_tol=rel_tol, abs_tol=0.0)
        except (TypeError, ValueError):
            return False
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        return len(a) == len(b) and all(values_equal(x, y, rel_tol) for x, y in zip(a, b))
    return a == b


def run_harness(
    argv: list[str], frames: tuple[bytes, ...], timeout: float = DEFAULT_TIMEOUT
) -> tuple[int, list[bytes], str]:
    """Feed frames to a harness subprocess; return (exit code, frames, stderr)."""
    payload = bytearray()
    for frame in frames:
        payload += len(frame).to_bytes(4, "big") + frame
    try:
        proc = subprocess.run(
            argv, input=bytes(payload), capture_output=True, timeout=timeout
        )
    except subprocess.TimeoutExpired as exc:
        raise HarnessError(f"harness timed out after {timeout}s: {argv}") from exc
    except OSError as exc:
        raise HarnessError(f"cannot start harness {argv}: {exc}") from exc
    out_frames = []
    view = memoryview(proc.stdout)
    pos = 0
    while pos < len(view):
        if pos + 4 > len(view):
            raise HarnessError("truncated frame header on harness stdout")
        size = int.from_bytes(view[pos : pos + 4], "big")
        pos += 4
        if pos + size > len(view):
            raise HarnessError("truncated frame payload on harness stdout")
        out_frames.append(bytes(view[pos : pos + size]))
        pos += size
    stderr = proc.stderr.decode("utf-8", "replace")
    if proc.returncode not in (0, 2):
        raise HarnessError(
            f"harness exited with {proc.returncode}: {stderr.strip()[-2000:]}"
        )
    return proc.returncode, out_frames, stderr


def _failing_index(stderr: str) -> int | None:
    match = re.search(r"frame (\d+)", stderr)
    return int(match.group(1)) if match else None


@dataclass
class ValidationContext:
    """Everything the checks need: schemas, harness commands, gateway, KB."""

    workdir: Path
    registry: SchemaRegistry
    gateway: object | None = None
    kb: KnowledgeBase | None = None
    source_harness: tuple[str, ...] = (sys.executable, "-m", "xcrate.harness")
    target_harness: tuple[str, ...] = (sys.executable, "-m", "xcrate.harness")
    source_libs: tuple[str, ...] = ()
    target_libs: tuple[str, ...] = ()
    rel_tol: float = 1e-9
    timeout: float = DEFAULT_TIMEOUT
    schema_file: Path | None = None

    def __post_init__(self) -> None:
        self.workdir = Path(self.workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        if self.schema_file is None:
            self.schema_file = self.workdir / "carrier.proto"

    # -- artifacts ---------------------------------------------------------

    def write_schema(self) -> Path:
        self.schema_file.write_text(render_schema(self.registry))
        return self.schema_file

    def write_adapters(self, name: str, pair: AdapterPair) -> tuple[str, str]:
        fwd = self.workdir / f"{name}_forward.py"
        bwd = self.workdir / f"{name}_backward.py"
        fwd.write_text(pair.forward_src)
        bwd.write_text(pair.backward_src)
        return str(fwd), str(bwd)

    def schemas(self) -> dict[str, CarrierSchema]:
        return self.registry.wire_registry()

    def _cmd(
        self,
        base: tuple[str, ...],
        mode: str,
        message: str,
        libs: tuple[str, ...],
        adapters: tuple[str, ...],
        extra: tuple[str, ...] = (),
    ) -> list[str]:
        cmd = list(base) + [mode, "--schema", str(self.schema_file), "--message", message]
        for lib in libs:
            cmd += ["--lib", lib]
        for adapter in adapters:
            cmd += ["--adapters", adapter]
        cmd += ["--rel-tol", str(self.rel_tol)]
        cmd += list(extra)
        return cmd


# ---------------------------------------------------------------------------
# Glue generation


def _schema_text(schema: CarrierSchema) -> str:
    lines = [f"message {schema.message_name} {{"]
    lines += [render_field(f) for f in schema.fields]
    lines.append("}")
    return "\n".join(lines)


def glue_prompt(
    type_name: str,
    type_text: str,
    schema: CarrierSchema,
    side: str,
    direction: str,
    suggestions: tuple[str, ...] = (),
    attempt: int = 1,
    feedback: str = "",
) -> str:
    """Deterministic prompt for one adapter direction on one side."""
    side_label = "source" if side == "source_side" else "target"
    goal = (
        f"forward(value) converting a native {type_name} value to a carrier dict"
        if direction == "forward"
        else f"backward(carrier) converting a carrier dict back to a native {type_name} value"
    )
    lines = [
        f"Write the {direction} adapter for the {side_label} side of the boundary.",
        f"Native type {type_name}:",
        type_text.strip(),
        "Carrier message:",
        _schema_text(schema),
        "Use only public library APIs for opaque values.",
    ]
    if suggestions:
        lines.append("You are advised to use the following APIs:")
        lines.extend(suggestions)
    lines.append(f"Define a Python function {goal}.")
    lines.append(f"Attempt: {attempt}")
    if feedback:
        lines.append(f"Previous failure: {feedback}")
    return "\n".join(lines)


def _suggestions_for(ctx: ValidationContext, type_name: str, type_text: str, schema) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if ctx.kb is None:
        return (), ()
    results = kb_query(ctx.kb, f"{type_name} to {schema.message_name}: {type_text}", 3)
    lines = tuple(
        f"{i + 1}. {', '.join(p.render() for p in r.entry.import_paths)}: "
        f"{r.entry.api_id}, {r.entry.doc}"
        for i, r in enumerate(results)
    )
    return lines, tuple(r.entry.api_id for r in results)


def _generate_adapter(
    ctx: ValidationContext, prompt: str, function_name: str
) -> str:
    if ctx.gateway is None:
        raise GenerationFailed("no gateway configured for glue generation")
    text = ctx.gateway.complete(prompt)
    try:
        code = compile(text, "<adapter>", "exec")
        namespace: dict = {}
        exec(code, namespace)
    except Exception as exc:
        raise GenerationFailed(f"adapter does not compile: {exc}") from exc
    if not callable(namespace.get(function_name)):
        raise GenerationFailed(f"adapter does not define {function_name}()")
    return text


def gen_glue(
    ctx: ValidationContext,
    type_name: str,
    type_text: str,
    schema: CarrierSchema,
    side: str,
    attempt: int = 1,
    feedback: str = "",
) -> AdapterPair:
    """Generate the forward/backward adapter pair for one side of one type.

    The prompt carries both type definitions plus retrieved API suggestions
    with their import paths; each direction is compile-checked before use.
    """
    suggestions, hits = _suggestions_for(ctx, type_name, type_text, schema)
    forward_src = _generate_adapter(
        ctx,
        glue_prompt(type_name, type_text, schema, side, "forward", suggestions, attempt, feedback),
        "forward",
    )
    backward_src = _generate_adapter(
        ctx,
        glue_prompt(type_name, type_text, schema, side, "backward", suggestions, attempt, feedback),
        "backward",
    )
    return AdapterPair(
        side=side, forward_src=forward_src, backward_src=backward_src, kb_hits_used=hits
    )


# ---------------------------------------------------------------------------
# Round-trip checks


def check_go_roundtrip(
    ctx: ValidationContext,
    pair: AdapterPair,
    values: ObservedValues,
    message: str,
) -> CheckResult:
    """Source-side round trip: backward(forward(v)) must equal v on all values."""
    if not values.values:
        raise ValueError("round-trip check attempted with no observed values")
    if pair.side != "source_side":
        raise ValueError("source-side round trip needs source-side adapters")
    adapters = ctx.write_adapters(f"src_{message}", pair)
    cmd = ctx._cmd(ctx.source_harness, "roundtrip", message, ctx.source_libs, adapters)
    code, frames, stderr = run_harness(cmd, values.values, ctx.timeout)
    if code == 0:
        return CheckResult(passed=True, frames=tuple(frames))
    index = _failing_index(stderr)
    example = None
    if index is not None and index < len(values.values):
        schema = ctx.schemas()[message]
        example = wire.decode_message(schema, values.values[index], ctx.schemas())
    return CheckResult(passed=False, counterexample_index=index, counterexample=example)


def check_full_roundtrip(
    ctx: ValidationContext,
    src_pair: AdapterPair,
    tgt_pair: AdapterPair,
    values: ObservedValues,
    message: str,
) -> CheckResult:
    """Full round trip: source values pushed through the target side and back."""
    if not values.values:
        raise ValueError("round-trip check attempted with no observed values")
    tgt_adapters = ctx.write_adapters(f"tgt_{message}", tgt_pair)
    transform_cmd = ctx._cmd(
        ctx.target_harness, "transform", message, ctx.target_libs, tgt_adapters
    )
    code, transformed, stderr = run_harness(transform_cmd, values.values, ctx.timeout)
    if code != 0:
        raise HarnessError(f"target transform failed: {stderr.strip()}")
    if len(transformed) != len(values.values):
        raise HarnessError("target transform changed the frame count")

    reference = ctx.workdir / f"ref_{message}.bin"
    write_frames_file(reference, values.values)
    src_adapters = ctx.write_adapters(f"src_{message}", src_pair)
    verify_cmd = ctx._cmd(
        ctx.source_harness,
        "verify",
        message,
        ctx.source_libs,
        src_adapters,
        extra=("--expected", str(reference)),
    )
    code, _, stderr = run_harness(verify_cmd, tuple(transformed), ctx.timeout)
    if code == 0:
        return CheckResult(passed=True, frames=tuple(transformed))
    index = _failing_index(stderr)
    example = None
    if index is not None and index < len(values.values):
        schema = ctx.schemas()[message]
        example = wire.decode_message(schema, values.values[index], ctx.schemas())
    return CheckResult(passed=False, counterexample_index=index, counterexample=example)


@dataclass(frozen=True)
class InteropResult:
    schema: CarrierSchema
    src_pair: AdapterPair
    tgt_pair: AdapterPair
    counters: AttemptCounters
    message: str


GO_SIDE_FAILURE = "go-side round-trip check failed"
FULL_FAILURE = "full round-trip check failed"
NO_COMPILE = "previous attempt did not compile"


def establish_interop(
    ctx: ValidationContext,
    go_type: GoTypeDef,
    rust_type_name: str,
    rust_type_text: str,
    values: ObservedValues,
    budget: Budget,
) -> InteropResult:
    """Two-loop interoperability procedure for one type.

    Loop one regenerates the carrier schema together with the source-side glue
    until the source-side round trip passes; loop two regenerates only the
    target-side glue until the full round trip passes.  Each loop iteration
    consumes one budget unit and exhaustion raises BudgetExhausted.
    """
    if not values.values:
        raise ValueError("establish_interop needs at least one observed value")
    budget = replace(budget)
    counters = AttemptCounters()
    go_text = _go_type_text(go_type)

    schema: CarrierSchema | None = None
    src_pair: AdapterPair | None = None
    feedback = ""
    while True:
        if budget.schema_retries <= 0:
            raise BudgetExhausted(
                f"schema/source-glue budget exhausted for {go_type.name}", counters
            )
        budget.schema_retries -= 1
        counters.schema += 1
        ctx.registry.unbind(go_type.name)
        schema = synthesize_schema(go_type, ctx.registry, ctx.gateway)
        ctx.write_schema()
        compile_carriers(ctx.schema_file, ctx.workdir / "carrier_out")
        try:
            src_pair = gen_glue(
                ctx, go_type.name, go_text, schema, "source_side",
                attempt=counters.schema, feedback=feedback,
            )
            counters.src_glue += 1
        except GenerationFailed:
            feedback = NO_COMPILE
            continue
        result = check_go_roundtrip(ctx, src_pair, values, schema.message_name)
        if result.passed:
            break
        feedback = GO_SIDE_FAILURE

    tgt_pair: AdapterPair | None = None
    feedback = ""
    while True:
        if budget.glue_retries <= 0:
            raise BudgetExhausted(
                f"target glue budget exhausted for {go_type.name}", counters
            )
        budget.glue_retries -= 1
        counters.tgt_glue += 1
        try:
            tgt_pair = gen_glue(
                ctx, rust_type_name, rust_type_text, schema, "target_side",
                attempt=counters.tgt_glue, feedback=feedback,
            )
        except GenerationFailed:
            feedback = NO_COMPILE
            continue
        result = check_full_roundtrip(ctx, src_pair, tgt_pair, values, schema.message_name)
        if result.passed:
            break
        feedback = FULL_FAILURE

    return InteropResult(
        schema=schema,
        src_pair=src_pair,
        tgt_pair=tgt_pair,
        counters=counters,
        message=schema.message_name,
    )


def _go_type_text(go_type: GoTypeDef) -> str:
    fields = "\n".join(f"    {f.name} {f.go_type}" for f in go_type.fields)
    return f"type {go_type.name} struct {{\n{fields}\n}}"


# ---------------------------------------------------------------------------
# Differential I/O checks


@dataclass(frozen=True)
class FunctionHarness:
    """How to execute one side's function under the harness protocol."""

    function: str
    in_message: str
    out_message: str
    in_adapters: AdapterPair
    out_adapters: AdapterPair
    libs: tuple[str, ...]
    side: str


def _execute(
    ctx: ValidationContext, spec: FunctionHarness, inputs: tuple[bytes, ...]
) -> list[bytes]:
    base = ctx.source_harness if spec.side == "source_side" else ctx.target_harness
    in_files = ctx.write_adapters(f"{spec.side}_{spec.function}_in", spec.in_adapters)
    out_files = ctx.write_adapters(f"{spec.side}_{spec.function}_out", spec.out_adapters)
    cmd = ctx._cmd(base, "execute", spec.in_message, spec.libs, in_files)
    cmd += ["--function", spec.function, "--out-message", spec.out_message]
    for path in out_files:
        cmd += ["--out-adapters", path]
    code, frames, stderr = run_harness(cmd, inputs, ctx.timeout)
    if code != 0:
        raise HarnessError(f"{spec.side} execute failed: {stderr.strip()}")
    if len(frames) != len(inputs):
        raise HarnessError(
            f"{spec.side} execute returned {len(frames)} frames for {len(inputs)} inputs"
        )
    return frames


def check_io_equivalence(
    ctx: ValidationContext,
    f_harness: FunctionHarness,
    g_harness: FunctionHarness,
    inputs: ObservedValues,
    detect_nondeterminism: bool = True,
) -> IoCheckResult:
    """Differential check: adapted source outputs equal target outputs.

    Both sides run on the same carrier-encoded inputs; outputs are compared
    as carrier-decoded values of the output type, first divergence reported.
    A source function that disagrees with its own rerun on the same inputs is
    flagged nondeterministic instead of failing the comparison.
    """
    source_frames = _execute(ctx, f_harness, inputs.values)
    schemas = ctx.schemas()
    out_schema = schemas[f_harness.out_message]
    if detect_nondeterminism:
        rerun = _execute(ctx, f_harness, inputs.values)
        for first, second in zip(source_frames, rerun):
            a = wire.decode_message(out_schema, first, schemas)
            b = wire.decode_message(out_schema, second, schemas)
            if not values_equal(a, b, ctx.rel_tol):
                return IoCheckResult(
                    passed=False,
                    nondeterministic=True,
                    source_frames=tuple(source_frames),
                )
    target_frames = _execute(ctx, g_harness, inputs.values)
    for i, (sf, tf) in enumerate(zip(source_frames, target_frames)):
        sv = wire.decode_message(out_schema, sf, schemas)
        tv = wire.decode_message(out_schema, tf, schemas)
        if not values_equal(sv, tv, ctx.rel_tol):
            return IoCheckResult(
                passed=False,
                diverging_index=i,
                source_output=sv,
                target_output=tv,
                source_frames=tuple(source_frames),
                target_frames=tuple(target_frames),
            )
    return IoCheckResult(
        passed=True,
        source_frames=tuple(source_frames),
        target_frames=tuple(target_frames),
    )


def check_go_level_agreement(
    ctx: ValidationContext,
    f_harness: FunctionHarness,
    g_harness: FunctionHarness,
    inputs: ObservedValues,
) -> CheckResult:
    """Source-level agreement: f(v) equals the back-adapted target output.

    Re-executes the composed target pipeline and compares natively on the
    source side, which is exactly the consequence the output round trip plus
    I/O equivalence guarantee.
    """
    source_frames = _execute(ctx, f_harness, inputs.values)
    target_frames = _execute(ctx, g_harness, inputs.values)
    reference = ctx.workdir / f"agree_{f_harness.function}.bin"
    write_frames_file(reference, source_frames)
    adapters = ctx.write_adapters(
        f"agree_{f_harness.function}", f_harness.out_adapters
    )
    cmd = ctx._cmd(
        ctx.source_harness,
        "verify",
        f_harness.out_message,
        f_harness.libs,
        adapters,
        extra=("--expected", str(reference)),
    )
    code, _, stderr = run_harness(cmd, tuple(target_frames), ctx.timeout)
    if code == 0:
        return CheckResult(passed=True)
    return CheckResult(passed=False, counterexample_index=_failing_index(stderr))


# ---------------------------------------------------------------------------
# Body regeneration


def signature_of(source: str, function: str) -> tuple[str, ...]:
    """Parse a function's argument names; the signature-diff oracle."""
    try:
        tree = ast.parse(source)
    except SyntaxError as exc:
        raise SignatureMismatch(f"unparseable source: {exc}") from exc
    for node in ast.walk(tree):
        if isinstance(node, ast.FunctionDef) and node.name == function:
            args = [a.arg for a in node.args.args]
            return tuple(args)
    raise SignatureMismatch(f"source does not define {function}()")


@dataclass(frozen=True)
class FrozenInterface:
    """Artifacts held fixed while only the function body is regenerated."""

    types_text: str
    function: str
    signature: tuple[str, ...]
    adapter_names: tuple[str, ...] = ()


def body_prompt(frozen: FrozenInterface, source_text: str, attempt: int, feedback: str) -> str:
    lines = [
        f"Regenerate only the body of {frozen.function}; its signature, the",
        "translated types and the validated adapters are frozen.",
        f"Frozen signature parameters: {', '.join(frozen.signature)}",
        "Frozen types:",
        frozen.types_text.strip(),
        f"Frozen adapters: {', '.join(frozen.adapter_names) or 'none'}",
        "Source function:",
        source_text.strip(),
        f"Attempt: {attempt}",
    ]
    if feedback:
        lines.append(f"Previous failure: {feedback}")
    return "\n".join(lines)


def regenerate_body(
    ctx: ValidationContext,
    frozen: FrozenInterface,
    source_text: str,
    budget: Budget,
    revalidate,
    counters: AttemptCounters | None = None,
) -> tuple[str, IoCheckResult]:
    """Regenerate a failing function body until equivalence passes.

    Attempts that alter the frozen signature or fail to compile are rejected
    before any equivalence run, though they still consume budget.
    """
    if ctx.gateway is None:
        raise GenerationFailed("no gateway configured for body regeneration")
    counters = counters if counters is not None else AttemptCounters()
    budget = replace(budget)
    feedback = "differential I/O check failed"
    while budget.body_retries > 0:
        budget.body_retries -= 1
        counters.body += 1
        text = ctx.gateway.complete(
            body_prompt(frozen, source_text, counters.body, feedback)
        )
        try:
            if signature_of(text, frozen.function) != frozen.signature:
                feedback = "signature altered; keep the frozen signature"
                continue
            compile(text, "<body>", "exec")
        except (SignatureMismatch, SyntaxError):
            feedback = NO_COMPILE
            continue
        result = revalidate(text)
        if result.passed:
            return text, result
        feedback = "differential I/O check failed"
    raise BudgetExhausted(f"body budget exhausted for {frozen.function}", counters)


# ---------------------------------------------------------------------------
# Reporting


@dataclass
class FunctionReport:
    item_id: str
    has_deps: bool
    compiled: bool = False
    go_roundtrip: str = "skipped"
    full_roundtrip: str = "skipped"
    io_equiv: str = "skipped"
    attempts: AttemptCounters = field(default_factory=AttemptCounters)
    note: str = ""

    def check_phase_ordering(self) -> None:
        if self.io_equiv == "pass":
            assert self.full_roundtrip == "pass", self.item_id
        if self.full_roundtrip == "pass":
            assert self.go_roundtrip == "pass", self.item_id


def _rate(outcomes: list[bool]) -> float | None:
    if not outcomes:
        return None
    return 100.0 * sum(outcomes) / len(outcomes)


@dataclass
class ValidationReport:
    """Per-function outcomes plus the project-level rollups."""

    functions: dict[str, FunctionReport] = field(default_factory=dict)

    def add(self, report: FunctionReport) -> None:
        report.check_phase_ordering()
        self.functions[report.item_id] = report

    def rollups(self) -> dict[str, float | None]:
        everyone = list(self.functions.values())
        deps = [f for f in everyone if f.has_deps]
        return {
            "comp_full": _rate([f.compiled for f in everyone]),
            "comp_dep": _rate([f.compiled for f in deps]),
            "equiv_full": _rate([f.io_equiv == "pass" for f in everyone]),
            "equiv_dep": _rate([f.io_equiv == "pass" for f in deps]),
        }

    def to_dict(self) -> dict:
        return {
            "functions": {
                item_id: {
                    "compiled": f.compiled,
                    "go_roundtrip": f.go_roundtrip,
                    "full_roundtrip": f.full_roundtrip,
                    "io_equiv": f.io_equiv,
                    "has_deps": f.has_deps,
                    "attempts": vars(f.attempts),
                    "note": f.note,
                }
                for item_id, f in sorted(self.functions.items())
            },
            "rollups": self.rollups(),
        }
