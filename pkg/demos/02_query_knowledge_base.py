"""Query crate knowledge bases with source-API descriptions.

The query string combines the source API name with its documentation; the
top hits come back with their call-enabling import paths, including trait
paths for trait-provided methods.
"""

import json
from pathlib import Path

from xcrate.api_index import extract_crate
from xcrate.doc_model import load_dep_graph, parse_crate_doc
from xcrate.knowledge_base import ApiQuery, build_kb, query

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def main() -> None:
    crates_dir = FIXTURES / "crates"
    trees = {
        parse_crate_doc(p.read_bytes()).name: parse_crate_doc(p.read_bytes())
        for p in sorted(crates_dir.glob("*.doc.json"))
    }
    graph = load_dep_graph((crates_dir / "deps.json").read_bytes())

    kbs = {}
    for crate in ("sha2_fixture", "ed25519_fixture", "humantime_fixture"):
        kbs[crate] = build_kb(extract_crate(trees[crate], trees, graph)[crate])

    for row in json.loads((FIXTURES / "queries.json").read_text())[:6]:
        q = ApiQuery(source_api=row["source_api"], doc=row["doc"])
        print(f"query: {q.rendered()}")
        for result in query(kbs[row["crate"]], q, 3):
            paths = ", ".join(p.render() for p in result.entry.import_paths)
            marker = "*" if result.entry.api_id == row["gold"] else " "
            print(f"  {marker} {result.score:.3f}  {result.entry.api_id:<24} use {paths}")
        print()


if __name__ == "__main__":
    main()
