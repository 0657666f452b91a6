"""Build per-crate API indexes from documentation fixtures.

Shows how re-exports shape the importable surface: a type defined in a
private module is indexed under its public root re-export, and a trait
re-exported from a dependency lends its path to trait-provided methods.
"""

from pathlib import Path

from xcrate.api_index import extract_crate, is_valid_import_path
from xcrate.doc_model import Path as ItemPath
from xcrate.doc_model import load_dep_graph, parse_crate_doc

CRATES = Path(__file__).resolve().parents[1] / "fixtures" / "crates"


def main() -> None:
    trees = {}
    for doc in sorted(CRATES.glob("*.doc.json")):
        root = parse_crate_doc(doc.read_bytes())
        trees[root.name] = root
    graph = load_dep_graph((CRATES / "deps.json").read_bytes())

    for crate in ("ed25519_fixture", "sha2_fixture"):
        crates_map = extract_crate(trees[crate], trees, graph)
        index = crates_map[crate]
        print(f"== {crate}: {len(index)} public API entries")
        for entry in index.values():
            paths = ", ".join(p.render() for p in entry.import_paths)
            print(f"  {entry.kind:<8} {entry.api_id:<24} via {paths}")
        print()

    defining = ItemPath.parse("ed25519_fixture::signing::SigningKey")
    reexported = ItemPath.parse("ed25519_fixture::SigningKey")
    print("validity oracle:")
    print(f"  {defining.render()}  ->", is_valid_import_path(defining, trees))
    print(f"  {reexported.render()} ->", is_valid_import_path(reexported, trees))


if __name__ == "__main__":
    main()
