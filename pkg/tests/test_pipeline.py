"""RAG context assembly, unit translation, and end-to-end replay runs."""

from __future__ import annotations

import json

import pytest

from xcrate.crate_mapper import CrateMapping
from xcrate.knowledge_base import GoApiEntry, build_kb
from xcrate.llm_gateway import LlmGateway, ReplayMiss, append_record
from xcrate.pipeline import (
    MissingKb,
    ProjectBundle,
    RagContext,
    RunConfig,
    TranslationUnit,
    build_rag_context,
    run_project,
    translate_unit,
    translation_prompt,
)
from xcrate import cli

from conftest import FIXTURES

MICROPROJECT = FIXTURES / "microproject"

SHA_API = GoApiEntry(
    package="crypto/sha512",
    name="New",
    doc="New returns a new hash.Hash computing the SHA-512 checksum.",
    signature="func New() hash.Hash",
)
SEED_API = GoApiEntry(
    package="crypto/ed25519",
    name="PrivateKey.Seed",
    doc="Seed returns the private key seed corresponding to priv.",
    signature="func (priv PrivateKey) Seed() []byte",
)

MAPPING = CrateMapping(
    entries={"crypto/sha512": "sha2_fixture", "crypto/ed25519": "ed25519_fixture"},
    provenance={"crypto/sha512": "keyword_search", "crypto/ed25519": "keyword_search"},
)


@pytest.fixture()
def kbs(fixture_crates_map):
    return {crate: build_kb(index) for crate, index in fixture_crates_map.items()}


def fig1_unit() -> TranslationUnit:
    return TranslationUnit(
        item_id="ed25519PrivateKeyToCurve25519",
        kind="function",
        source_text="func ed25519PrivateKeyToCurve25519(pk KeySeed) Digest32 { ... }",
        dependency_summary="in-scope types: KeySeed, Digest32",
        go_apis_used=(SHA_API, SEED_API),
    )


def test_rag_context_carries_trait_paths_and_to_bytes(kbs):
    context = build_rag_context(fig1_unit(), MAPPING, kbs)
    by_api = dict(context.suggestions)
    sha_hits = by_api["crypto/sha512.New"]
    assert sha_hits[0].api_id == "Sha512::new"
    assert set(sha_hits[0].import_paths) == {"sha2_fixture::Sha512", "sha2_fixture::Digest"}
    seed_hits = by_api["crypto/ed25519.PrivateKey.Seed"]
    assert seed_hits[0].api_id == "SigningKey::to_bytes"
    assert all(len(hits) <= 3 for hits in by_api.values())


def test_unit_without_external_apis_gets_empty_context(kbs):
    unit = TranslationUnit(item_id="clampDigest", kind="function", source_text="...")
    assert build_rag_context(unit, MAPPING, kbs).is_empty()


def test_no_rag_flag_empties_context_regardless(kbs):
    assert build_rag_context(fig1_unit(), MAPPING, kbs, enabled=False).is_empty()


def test_missing_kb_surfaces(kbs):
    unit = TranslationUnit(
        item_id="f",
        kind="function",
        source_text="...",
        go_apis_used=(GoApiEntry(package="net/quic", name="Dial"),),
    )
    with pytest.raises(MissingKb):
        build_rag_context(unit, MAPPING, kbs)


def test_prompt_omits_rag_block_when_context_empty(kbs):
    unit = TranslationUnit(item_id="clampDigest", kind="function", source_text="...")
    prompt = translation_prompt(unit, RagContext(), MAPPING)
    assert "You are advised" not in prompt


def test_prompt_import_stripping(kbs):
    context = build_rag_context(fig1_unit(), MAPPING, kbs)
    with_imports = translation_prompt(fig1_unit(), context, MAPPING, include_imports=True)
    without = translation_prompt(fig1_unit(), context, MAPPING, include_imports=False)
    assert "sha2_fixture::Sha512" in with_imports
    assert "sha2_fixture::" not in without
    assert "Sha512::new" in without  # the api id itself stays


def test_translate_unit_replay_miss_surfaces(tmp_path, kbs):
    log = tmp_path / "log.jsonl"
    log.write_text("")
    gateway = LlmGateway(mode="replay", log_path=log)
    with pytest.raises(ReplayMiss):
        translate_unit(fig1_unit(), RagContext(), gateway, MAPPING)


def test_translate_unit_compile_check(tmp_path):
    unit = fig1_unit()
    prompt = translation_prompt(unit, RagContext(), MAPPING)
    log = tmp_path / "log.jsonl"
    append_record(log, prompt, "fn broken(sk: &SigningKey) -> [u8; 32] {}")
    gateway = LlmGateway(mode="replay", log_path=log)
    result = translate_unit(unit, RagContext(), gateway, MAPPING)
    assert not result.compiled
    assert result.error


def run_micro(tmp_path, log_name, **kwargs):
    config = RunConfig(
        replay_log=MICROPROJECT / log_name,
        report_path=tmp_path / "report.json",
        **kwargs,
    )
    return run_project(MICROPROJECT, config)


def test_full_replay_reaches_full_rates(tmp_path):
    report, hard_errors = run_micro(tmp_path, "replay_full.jsonl")
    assert hard_errors == []
    assert report.comp_full == 100.0
    assert report.equiv_full == 100.0
    assert report.comp_dep == 100.0
    assert report.equiv_dep == 100.0
    assert report.rag_load == 20
    assert (tmp_path / "report.json").exists()
    assert "microproject" in (tmp_path / "report.txt").read_text()


def test_no_rag_replay_zeroes_dependency_rates(tmp_path):
    report, hard_errors = run_micro(tmp_path, "replay_norag.jsonl", no_rag=True)
    assert hard_errors == []
    assert report.comp_dep == 0.0
    assert report.equiv_dep == 0.0
    # The dependency-free half of the project still passes.
    assert report.comp_full == 50.0
    assert report.equiv_full == 50.0


def test_no_imports_replay_zeroes_dependency_rates(tmp_path):
    report, hard_errors = run_micro(
        tmp_path, "replay_noimports.jsonl", no_imports=True
    )
    assert hard_errors == []
    assert report.comp_dep == 0.0
    assert report.equiv_dep == 0.0


def test_equiv_rate_never_exceeds_comp_rate(tmp_path):
    for log, flags in [
        ("replay_full.jsonl", {}),
        ("replay_norag.jsonl", {"no_rag": True}),
    ]:
        report, _ = run_micro(tmp_path, log, **flags)
        for full, comp in ((report.equiv_full, report.comp_full),
                           (report.equiv_dep, report.comp_dep)):
            if full is not None and comp is not None:
                assert full <= comp


def test_rollups_recomputable_from_function_reports(tmp_path):
    report, _ = run_micro(tmp_path, "replay_full.jsonl")
    functions = report.functions
    total = len(functions)
    deps = [f for f in functions.values() if f["has_deps"]]
    comp_full = 100.0 * sum(f["compiled"] for f in functions.values()) / total
    equiv_dep = 100.0 * sum(f["io_equiv"] == "pass" for f in deps) / len(deps)
    assert report.comp_full == comp_full
    assert report.equiv_dep == equiv_dep


def test_replay_runs_are_bit_reproducible(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    run_micro(tmp_path / "a", "replay_full.jsonl")
    run_micro(tmp_path / "b", "replay_full.jsonl")
    assert (tmp_path / "a" / "report.json").read_bytes() == (
        tmp_path / "b" / "report.json"
    ).read_bytes()


def test_unsupported_fragments_reported(tmp_path):
    report, _ = run_micro(tmp_path, "replay_full.jsonl")
    assert report.skipped == [
        {"item_id": "saveKeyToFile", "reason": "file I/O is outside the supported fragment"}
    ]


def test_worker_fanout_matches_serial_run(tmp_path):
    (tmp_path / "serial").mkdir()
    (tmp_path / "parallel").mkdir()
    serial, _ = run_micro(tmp_path / "serial", "replay_full.jsonl")
    parallel, _ = run_micro(tmp_path / "parallel", "replay_full.jsonl", workers=4)
    assert serial.to_json() == parallel.to_json()


def test_empty_project_rates_not_applicable(tmp_path):
    project = tmp_path / "empty_project"
    project.mkdir()
    (project / "project.json").write_text(
        json.dumps(
            {
                "format_version": 1,
                "name": "empty",
                "packages": [],
                "catalog": "catalog.json",
                "dep_graph": "deps.json",
                "crate_docs": {},
                "source_libs": [],
                "types": [],
                "functions": [],
            }
        )
    )
    (project / "catalog.json").write_text("[]")
    (project / "deps.json").write_text("{}")
    log = project / "log.jsonl"
    log.write_text("")
    config = RunConfig(replay_log=log, report_path=tmp_path / "report.json")
    report, hard_errors = run_project(project, config)
    assert hard_errors == []
    assert report.comp_full is None
    assert report.equiv_full is None
    assert "n/a" in report.render_table()


def test_cli_run_exits_zero_and_writes_report(tmp_path, capsys):
    code = cli.main(
        [
            "run",
            str(MICROPROJECT),
            "--replay",
            str(MICROPROJECT / "replay_full.jsonl"),
            "--report",
            str(tmp_path / "report.json"),
            "--budgets",
            "3,3,5",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "microproject" in out
    assert "100/100" in out
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["comp_full"] == 100.0


def test_cli_rejects_bad_budgets():
    with pytest.raises(SystemExit):
        cli.build_parser().parse_args(["run", "p", "--budgets", "many"])


def test_project_bundle_loads_microproject():
    bundle = ProjectBundle.load(MICROPROJECT)
    assert bundle.name == "microproject"
    assert {p.package for p in bundle.packages} == {"crypto/sha512", "crypto/ed25519"}
    assert [t["item_id"] for t in bundle.types] == ["KeySeed", "Digest32"]
    assert len(bundle.functions) == 2
