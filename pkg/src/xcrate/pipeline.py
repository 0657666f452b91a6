"""End-to-end pipeline: crate mapping, retrieval context, translation, validation.

A project bundle is a directory with a ``project.json`` describing the source
packages, the translation units (types first, then functions), observed-value
files, and paths to the crate documentation fixtures and candidate catalog.
The pipeline precomputes the package-to-crate mapping, builds one knowledge
base per mapped crate, translates each unit with retrieval-augmented prompts,
establishes carrier interoperability per type, and differential-tests each
function, producing a report whose rollups mirror the compilation and
equivalence rates split into all functions versus dependency-using functions.
"""

from __future__ import annotations

import ast
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .api_index import extract_crate
from .carrier import GoTypeDef, SchemaRegistry, UnsupportedFieldType
from .crate_mapper import (
    CandidateCatalog,
    CrateMapping,
    GoPackageDoc,
    load_manual_overrides,
    match_crates,
)
from .doc_model import load_dep_graph, parse_crate_doc
from .framing import ObservedValues
from .knowledge_base import (
    GoApiEntry,
    KnowledgeBase,
    build_kb,
    make_query,
    query as kb_query,
)
from .llm_gateway import LlmGateway
from .validation import (
    Budget,
    BudgetExhausted,
    FrozenInterface,
    FunctionHarness,
    FunctionReport,
    GenerationFailed,
    HarnessError,
    InteropResult,
    ValidationContext,
    ValidationReport,
    check_io_equivalence,
    establish_interop,
    regenerate_body,
    signature_of,
)

DEFAULT_TOP_N = 3


class MissingKb(Exception):
    """Raised when a unit references a package with no knowledge base built."""


@dataclass(frozen=True)
class TranslationUnit:
    """One item to translate: a type definition or a function."""

    item_id: str
    kind: str  # "type_def" | "function"
    source_text: str
    dependency_summary: str = ""
    go_apis_used: tuple[GoApiEntry, ...] = ()

    @staticmethod
    def dedupe_apis(apis) -> tuple[GoApiEntry, ...]:
        seen = set()
        out = []
        for api in apis:
            key = (api.package, api.name)
            if key not in seen:
                seen.add(key)
                out.append(api)
        return tuple(out)


@dataclass(frozen=True)
class Suggestion:
    api_id: str
    import_paths: tuple[str, ...]
    signature: str
    doc: str


@dataclass(frozen=True)
class RagContext:
    """Top-n retrieved target API suggestions per source API."""

    suggestions: tuple[tuple[str, tuple[Suggestion, ...]], ...] = ()

    def is_empty(self) -> bool:
        return not self.suggestions


def build_rag_context(
    unit: TranslationUnit,
    mapping: CrateMapping,
    kbs: dict[str, KnowledgeBase],
    top_n: int = DEFAULT_TOP_N,
    enabled: bool = True,
) -> RagContext:
    """Query the mapped crate's knowledge base for each source API used."""
    if not enabled or not unit.go_apis_used:
        return RagContext()
    blocks = []
    for api in unit.go_apis_used:
        crate = mapping.entries.get(api.package)
        if crate is None or crate not in kbs:
            raise MissingKb(f"no knowledge base for package {api.package!r}")
        results = kb_query(kbs[crate], make_query(api), top_n)
        suggestions = tuple(
            Suggestion(
                api_id=r.entry.api_id,
                import_paths=tuple(p.render() for p in r.entry.import_paths),
                signature=r.entry.api_id,
                doc=r.entry.doc,
            )
            for r in results
        )
        blocks.append((f"{api.package}.{api.name}", suggestions))
    return RagContext(suggestions=tuple(blocks))


def translation_prompt(
    unit: TranslationUnit,
    context: RagContext,
    mapping: CrateMapping,
    include_imports: bool = True,
) -> str:
    """Deterministic translation prompt with the retrieval block appended."""
    lines = [
        "Translate this source item to the target language.",
        f"Item: {unit.item_id} ({unit.kind})",
        "Source:",
        unit.source_text.strip(),
    ]
    if unit.dependency_summary:
        lines += ["Dependency summary:", unit.dependency_summary.strip()]
    if not context.is_empty():
        crates = sorted(
            {mapping.entries.get(api.package, "") for api in unit.go_apis_used} - {""}
        )
        lines.append("- Translation of library APIs")
        lines.append(
            "You are advised to use the following APIs from the crate "
            + ", ".join(crates)
        )
        for source_api, suggestions in context.suggestions:
            lines.append(f"For {source_api}:")
            for i, s in enumerate(suggestions, start=1):
                if include_imports:
                    lines.append(f"{i}. {', '.join(s.import_paths)}: {s.signature}, {s.doc}")
                else:
                    lines.append(f"{i}. {s.signature}, {s.doc}")
    lines.append("Respond with the translated code only.")
    return "\n".join(lines)


@dataclass(frozen=True)
class TranslationResult:
    text: str
    compiled: bool
    error: str = ""


def translate_unit(
    unit: TranslationUnit,
    context: RagContext,
    gateway,
    mapping: CrateMapping | None = None,
    include_imports: bool = True,
) -> TranslationResult:
    """Translate one unit and compile-check the candidate before validation."""
    mapping = mapping or CrateMapping()
    prompt = translation_prompt(unit, context, mapping, include_imports)
    text = gateway.complete(prompt)
    if not text.strip():
        raise GenerationFailed(f"empty translation for {unit.item_id}")
    try:
        ast.parse(text)
    except SyntaxError as exc:
        return TranslationResult(text=text, compiled=False, error=str(exc))
    return TranslationResult(text=text, compiled=True)


def _first_def(text: str, node_type) -> str | None:
    try:
        tree = ast.parse(text)
    except SyntaxError:
        return None
    for node in tree.body:
        if isinstance(node, node_type):
            return node.name
    return None


# ---------------------------------------------------------------------------
# Project bundles


@dataclass
class RunConfig:
    no_rag: bool = False
    no_imports: bool = False
    replay_log: Path | None = None
    record_log: Path | None = None
    budgets: Budget = field(default_factory=Budget)
    workers: int = 1
    report_path: Path | None = None
    gateway: object | None = None
    top_n: int = DEFAULT_TOP_N

    def make_gateway(self):
        if self.gateway is not None:
            return self.gateway
        if self.replay_log is not None:
            return LlmGateway(mode="replay", log_path=self.replay_log)
        if self.record_log is not None:
            return LlmGateway(mode="record", log_path=self.record_log)
        return LlmGateway(mode="live")


@dataclass
class ProjectBundle:
    root: Path
    name: str
    packages: list[GoPackageDoc]
    catalog: CandidateCatalog
    dep_graph: dict[str, list[str]]
    crate_docs: dict[str, object]
    source_libs: list[Path]
    types: list[dict]
    functions: list[dict]
    overrides: Path | None
    unsupported: list[dict]

    @classmethod
    def load(cls, project_dir: str | Path) -> "ProjectBundle":
        root = Path(project_dir)
        spec = json.loads((root / "project.json").read_text())
        crate_docs = {
            crate: parse_crate_doc((root / path).read_bytes())
            for crate, path in spec.get("crate_docs", {}).items()
        }
        return cls(
            root=root,
            name=spec.get("name", root.name),
            packages=[
                GoPackageDoc(package=p["package"], doc=p.get("doc", ""))
                for p in spec.get("packages", [])
            ],
            catalog=CandidateCatalog.load((root / spec["catalog"]).read_bytes()),
            dep_graph=load_dep_graph((root / spec["dep_graph"]).read_bytes()),
            crate_docs=crate_docs,
            source_libs=[root / p for p in spec.get("source_libs", [])],
            types=spec.get("types", []),
            functions=spec.get("functions", []),
            overrides=(root / spec["overrides"]) if spec.get("overrides") else None,
            unsupported=spec.get("unsupported", []),
        )

    def unit_for(self, row: dict, kind: str) -> TranslationUnit:
        apis = TranslationUnit.dedupe_apis(
            GoApiEntry(
                package=a["package"],
                name=a["name"],
                doc=a.get("doc", ""),
                signature=a.get("signature", ""),
            )
            for a in row.get("go_apis_used", [])
        )
        return TranslationUnit(
            item_id=row["item_id"],
            kind=kind,
            source_text=row["source_text"],
            dependency_summary=row.get("dependency_summary", ""),
            go_apis_used=apis,
        )


@dataclass
class ProjectReport:
    """Project rollups plus the per-function validation outcomes."""

    project: str
    rag_load: int
    comp_full: float | None
    comp_dep: float | None
    equiv_full: float | None
    equiv_dep: float | None
    functions: dict
    types: dict
    skipped: list
    notes: list

    def to_json(self) -> bytes:
        return json.dumps(
            {
                "project": self.project,
                "rag_load": self.rag_load,
                "comp_full": self.comp_full,
                "comp_dep": self.comp_dep,
                "equiv_full": self.equiv_full,
                "equiv_dep": self.equiv_dep,
                "functions": self.functions,
                "types": self.types,
                "skipped": self.skipped,
                "notes": self.notes,
            },
            indent=2,
            sort_keys=True,
        ).encode("utf-8")

    def render_table(self) -> str:
        def rate(full, dep):
            fmt = lambda v: "n/a" if v is None else f"{v:g}"
            return f"{fmt(full)}/{fmt(dep)}"

        header = f"{'Benchmark':<16} {'RAG load':>8}   {'Comp. full/dep':>15}   {'Equiv. full/dep':>16}"
        row = (
            f"{self.project:<16} {self.rag_load:>8}   "
            f"{rate(self.comp_full, self.comp_dep):>15}   "
            f"{rate(self.equiv_full, self.equiv_dep):>16}"
        )
        return header + "\n" + row


def _type_order(types: list[dict]) -> list[dict]:
    """Types in dependency order: a type follows the types its fields name."""
    by_name = {row["item_id"]: row for row in types}
    order: list[dict] = []
    done: set[str] = set()

    def visit(name: str, trail: tuple[str, ...]) -> None:
        if name in done or name not in by_name:
            return
        if name in trail:
            raise ValueError(f"type dependency cycle at {name}")
        row = by_name[name]
        for f in row.get("go_type", {}).get("fields", []):
            base = f["type"].lstrip("*").strip()
            if base in by_name:
                visit(base, trail + (name,))
        done.add(name)
        order.append(row)

    for row in types:
        visit(row["item_id"], ())
    return order


def _function_order(functions: list[dict]) -> list[dict]:
    """Functions in call-graph post-order (callees before callers)."""
    by_name = {row["item_id"]: row for row in functions}
    order: list[dict] = []
    done: set[str] = set()

    def visit(name: str, trail: tuple[str, ...]) -> None:
        if name in done or name not in by_name:
            return
        if name in trail:
            # Recursive call cycles fall back to listing order.
            return
        for callee in by_name[name].get("callees", []):
            visit(callee, trail + (name,))
        done.add(name)
        order.append(by_name[name])

    for row in functions:
        visit(row["item_id"], ())
    return order


def run_project(
    project_dir: str | Path, config: RunConfig
) -> tuple[ProjectReport, list[str]]:
    """Run the full pipeline over a project bundle.

    Returns the report plus a list of hard errors (process-level failures,
    as opposed to reported validation outcomes).
    """
    bundle = ProjectBundle.load(project_dir)
    gateway = config.make_gateway()
    hard_errors: list[str] = []
    notes = [
        "dependency subset counts functions with direct external API use",
    ]

    mapping = match_crates(bundle.packages, bundle.catalog, gateway)
    if bundle.overrides is not None:
        mapping = load_manual_overrides(mapping, bundle.overrides)

    # Knowledge bases for every mapped crate with documentation available.
    kbs: dict[str, KnowledgeBase] = {}
    for crate in sorted(set(mapping.entries.values())):
        if crate not in bundle.crate_docs:
            continue
        built = extract_crate(bundle.crate_docs[crate], bundle.crate_docs, bundle.dep_graph)
        kbs[crate] = build_kb(built[crate])
    rag_load = sum(len(kb) for kb in kbs.values())

    if config.report_path is not None:
        artifacts = Path(config.report_path).parent / (
            Path(config.report_path).stem + "_artifacts"
        )
    else:
        artifacts = bundle.root / "xcrate_out"
    artifacts.mkdir(parents=True, exist_ok=True)

    ctx = ValidationContext(
        workdir=artifacts,
        registry=SchemaRegistry(),
        gateway=gateway,
        source_libs=tuple(str(p) for p in bundle.source_libs),
    )

    target_types_file = artifacts / "target_types.py"
    target_types_file.write_text("")
    ctx.target_libs = (str(target_types_file),)

    interops: dict[str, InteropResult] = {}
    type_reports: dict[str, dict] = {}
    type_texts: list[str] = []

    for row in _type_order(bundle.types):
        unit = bundle.unit_for(row, "type_def")
        entry: dict = {"validated": False, "note": ""}
        type_reports[unit.item_id] = entry
        try:
            context = build_rag_context(
                unit, mapping, kbs, config.top_n, enabled=not config.no_rag
            )
            translation = translate_unit(
                unit, context, gateway, mapping, include_imports=not config.no_imports
            )
        except (MissingKb, GenerationFailed) as exc:
            hard_errors.append(f"{unit.item_id}: {exc}")
            entry["note"] = str(exc)
            continue
        entry["compiled"] = translation.compiled
        if not translation.compiled:
            entry["note"] = "translation does not compile"
            continue
        rust_name = _first_def(translation.text, ast.ClassDef) or unit.item_id
        type_texts.append(translation.text)
        target_types_file.write_text("\n\n".join(type_texts) + "\n")
        go_type = GoTypeDef.from_dict(row["go_type"])
        try:
            values = ObservedValues.load(bundle.root / row["values"])
            result = establish_interop(
                ctx, go_type, rust_name, translation.text, values, config.budgets
            )
        except BudgetExhausted as exc:
            entry["note"] = f"unvalidatable: {exc}"
            entry["attempts"] = vars(exc.counters)
            continue
        except UnsupportedFieldType as exc:
            entry["note"] = f"unvalidatable: {exc}"
            continue
        except (HarnessError, OSError) as exc:
            hard_errors.append(f"{unit.item_id}: {exc}")
            entry["note"] = str(exc)
            continue
        entry["validated"] = True
        entry["attempts"] = vars(result.counters)
        interops[unit.item_id] = result

    validation_report = ValidationReport()

    def validate_function(row: dict) -> FunctionReport:
        unit = bundle.unit_for(row, "function")
        report = FunctionReport(item_id=unit.item_id, has_deps=bool(unit.go_apis_used))
        context = build_rag_context(
            unit, mapping, kbs, config.top_n, enabled=not config.no_rag
        )
        translation = translate_unit(
            unit, context, gateway, mapping, include_imports=not config.no_imports
        )
        report.compiled = translation.compiled
        if not translation.compiled:
            report.note = "translation does not compile"
            return report
        target_fn = _first_def(translation.text, ast.FunctionDef)
        if target_fn is None:
            report.compiled = False
            report.note = "translation defines no function"
            return report
        in_type, out_type = row["input_type"], row["output_type"]
        if in_type not in interops or out_type not in interops:
            report.note = "interoperability unavailable for input or output type"
            return report
        report.go_roundtrip = "pass"
        report.full_roundtrip = "pass"
        fn_file = artifacts / f"translation_{unit.item_id}.py"
        fn_file.write_text(translation.text)
        inputs = ObservedValues.load(bundle.root / row["inputs"])
        f_harness = FunctionHarness(
            function=unit.item_id,
            in_message=interops[in_type].message,
            out_message=interops[out_type].message,
            in_adapters=interops[in_type].src_pair,
            out_adapters=interops[out_type].src_pair,
            libs=ctx.source_libs,
            side="source_side",
        )
        g_harness = FunctionHarness(
            function=target_fn,
            in_message=interops[in_type].message,
            out_message=interops[out_type].message,
            in_adapters=replace(interops[in_type].tgt_pair, side="target_side"),
            out_adapters=replace(interops[out_type].tgt_pair, side="target_side"),
            libs=(str(target_types_file), str(fn_file)),
            side="target_side",
        )
        result = check_io_equivalence(ctx, f_harness, g_harness, inputs)
        if result.nondeterministic:
            report.note = "unvalidatable-nondeterministic"
            return report
        if not result.passed:
            frozen = FrozenInterface(
                types_text="\n\n".join(type_texts),
                function=target_fn,
                signature=signature_of(translation.text, target_fn),
                adapter_names=(in_type, out_type),
            )

            def revalidate(text: str):
                fn_file.write_text(text)
                return check_io_equivalence(ctx, f_harness, g_harness, inputs)

            try:
                _, result = regenerate_body(
                    ctx, frozen, unit.source_text, config.budgets, revalidate,
                    report.attempts,
                )
            except BudgetExhausted:
                report.io_equiv = "fail"
                report.note = "body regeneration budget exhausted"
                return report
        report.io_equiv = "pass" if result.passed else "fail"
        return report

    ordered = _function_order(bundle.functions)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_safe(validate_function, hard_errors), ordered))
    else:
        results = [_safe(validate_function, hard_errors)(row) for row in ordered]
    for report in results:
        if report is not None:
            validation_report.add(report)

    rollups = validation_report.rollups()
    skipped = [
        {"item_id": row.get("item_id", "?"), "reason": row.get("reason", "unsupported")}
        for row in bundle.unsupported
    ]
    project_report = ProjectReport(
        project=bundle.name,
        rag_load=rag_load,
        comp_full=rollups["comp_full"],
        comp_dep=rollups["comp_dep"],
        equiv_full=rollups["equiv_full"],
        equiv_dep=rollups["equiv_dep"],
        functions=validation_report.to_dict()["functions"],
        types=type_reports,
        skipped=skipped,
        notes=notes,
    )
    if config.report_path is not None:
        Path(config.report_path).write_bytes(project_report.to_json())
        Path(config.report_path).with_suffix(".txt").write_text(
            project_report.render_table() + "\n"
        )
    return project_report, hard_errors


def _safe(fn, hard_errors: list[str]):
    def wrapped(row):
        try:
            return fn(row)
        except Exception as exc:  # aggregated per-unit errors
            hard_errors.append(f"{row.get('item_id', '?')}: {exc}")
            return None

    return wrapped
