from __future__ import annotations

import json
from pathlib import Path

import pytest

from xcrate.api_index import CratesMap, extract_crate
from xcrate.doc_model import load_dep_graph, parse_crate_doc

REPO_ROOT = Path(__file__).resolve().parents[1]
FIXTURES = REPO_ROOT / "fixtures"
CRATE_DOCS = FIXTURES / "crates"


@pytest.fixture(scope="session")
def crate_trees():
    """Root module trees of every bundled fixture crate, keyed by crate name."""
    trees = {}
    for path in sorted(CRATE_DOCS.glob("*.doc.json")):
        root = parse_crate_doc(path.read_bytes())
        trees[root.name] = root
    return trees


@pytest.fixture(scope="session")
def dep_graph():
    return load_dep_graph((CRATE_DOCS / "deps.json").read_bytes())


@pytest.fixture(scope="session")
def fixture_crates_map(crate_trees, dep_graph) -> CratesMap:
    """Finalized indexes for all fixture crates, built through extract_crate."""
    crates_map = CratesMap()
    for crate in ("digest_fixture", "sha2_fixture", "ed25519_fixture", "humantime_fixture"):
        built = extract_crate(
            crate_trees[crate],
            {k: v for k, v in crate_trees.items() if k != crate},
            dep_graph,
        )
        crates_map.update(built)
    return crates_map


@pytest.fixture(scope="session")
def labeled_queries():
    return json.loads((FIXTURES / "queries.json").read_text())
