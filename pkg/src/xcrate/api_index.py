"""Per-crate API inventories with call-enabling import paths.

Builds, for each crate, an index mapping every publicly usable API item to
its documentation and the set of valid import paths under which it can be
brought into scope.  Indexing accounts for deep module hierarchies, internal
and external re-exports, and trait-scoped method callability: a trait-provided
method is only callable when the defining trait is importable, so method
entries are first recorded with a placeholder trait reference and resolved to
concrete paths in a final revision pass.

``is_valid_import_path`` is an independent validity checker implementing the
definition directly (every module along the resolved path publicly visible,
re-export aliases followed); it deliberately shares no code with the traversal
so it can serve as an oracle for it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .doc_model import (
    ItemDoc,
    MalformedDoc,
    ModuleDoc,
    Path,
    strip_generics,
    transitive_dependencies,
)

logger = logging.getLogger(__name__)

INDEX_FORMAT_VERSION = 1

# Alias chains (re-export of a re-export) are chased to a fixed depth; deeper
# chains are treated as unresolvable.
MAX_REEXPORT_DEPTH = 8


class UnresolvedReexport(Exception):
    """Raised when a re-export target cannot be found or its alias chain is too deep."""


class MissingDependencyDoc(Exception):
    """Raised when a crate's dependency has no documentation tree available."""


@dataclass(frozen=True)
class ApiEntry:
    """One publicly usable API item: documentation plus its import paths.

    ``import_paths`` is sorted with the shortest path first and is never
    empty in a finalized index.
    """

    api_id: str
    kind: str  # "type" | "trait" | "method" | "function"
    doc: str
    import_paths: tuple[Path, ...]


@dataclass(frozen=True)
class PendingMethod:
    """Placeholder recorded for a method before trait paths are known.

    ``defining_trait`` is None for inherent methods, which need only the
    owning type's import path.
    """

    method_id: str
    doc: str
    defining_trait: str | None


@dataclass
class _RawEntry:
    """Mutable index entry used during traversal, before finalization."""

    api_id: str
    kind: str
    doc: str
    paths: set[Path] = field(default_factory=set)
    pending: PendingMethod | None = None


class ApiIndex:
    """Finalized, immutable inventory of a crate's public API surface."""

    def __init__(self, crate: str, entries: dict[str, ApiEntry]):
        self.crate = crate
        self.entries: dict[str, ApiEntry] = {
            api_id: entries[api_id] for api_id in sorted(entries)
        }

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, api_id: str) -> bool:
        return api_id in self.entries

    def get(self, api_id: str) -> ApiEntry | None:
        return self.entries.get(api_id)

    def __getitem__(self, api_id: str) -> ApiEntry:
        return self.entries[api_id]

    def values(self):
        return self.entries.values()

    def to_json(self) -> bytes:
        obj = {
            "format_version": INDEX_FORMAT_VERSION,
            "crate": self.crate,
            "entries": [
                {
                    "api_id": e.api_id,
                    "kind": e.kind,
                    "doc": e.doc,
                    "import_paths": [p.render() for p in e.import_paths],
                }
                for e in self.entries.values()
            ],
        }
        return json.dumps(obj, indent=2, sort_keys=True).encode("utf-8")

    @classmethod
    def from_json(cls, data: bytes | str) -> ApiIndex:
        obj = json.loads(data)
        if obj.get("format_version") != INDEX_FORMAT_VERSION:
            raise MalformedDoc(f"unsupported index format: {obj.get('format_version')!r}")
        entries = {}
        for item in obj["entries"]:
            entry = ApiEntry(
                api_id=item["api_id"],
                kind=item["kind"],
                doc=item.get("doc", ""),
                import_paths=tuple(Path.parse(p) for p in item["import_paths"]),
            )
            entries[entry.api_id] = entry
        return cls(crate=obj["crate"], entries=entries)


class CratesMap(dict):
    """Map from crate name to its finalized ApiIndex, filled in post-order."""


def _path_sort_key(p: Path) -> tuple[int, str]:
    return (len(p.segments), p.render())


def _record(
    raw: dict[str, _RawEntry],
    api_id: str,
    kind: str,
    doc: str,
    paths: set[Path],
    pending: PendingMethod | None = None,
) -> None:
    entry = raw.get(api_id)
    if entry is None:
        raw[api_id] = _RawEntry(api_id=api_id, kind=kind, doc=doc, paths=set(paths), pending=pending)
        return
    # The same item can be reachable through several routes; merge their paths.
    entry.paths |= paths
    if not entry.doc and doc:
        entry.doc = doc
    if entry.pending is None:
        entry.pending = pending


def extract_type(prefix: Path, t: ItemDoc) -> dict[str, _RawEntry]:
    """Emit the entry for a type plus placeholder entries for its methods."""
    assert t.kind == "type"
    type_path = prefix.child(t.name)
    raw: dict[str, _RawEntry] = {}
    _record(raw, t.base_name, "type", t.doc, {type_path})
    for block in t.impl_blocks:
        for method in block.methods:
            api_id = f"{t.base_name}::{method.name}"
            pending = PendingMethod(
                method_id=api_id, doc=method.doc, defining_trait=block.trait_name
            )
            _record(raw, api_id, "method", method.doc, {type_path}, pending)
    return raw


def extract_trait(prefix: Path, tr: ItemDoc) -> dict[str, _RawEntry]:
    """Emit the trait entry and its method declarations at the trait's path."""
    assert tr.kind == "trait"
    trait_path = prefix.child(tr.name)
    raw: dict[str, _RawEntry] = {}
    _record(raw, tr.base_name, "trait", tr.doc, {trait_path})
    for method in tr.methods:
        api_id = f"{tr.base_name}::{method.name}"
        pending = PendingMethod(
            method_id=api_id, doc=method.doc, defining_trait=tr.base_name
        )
        _record(raw, api_id, "method", method.doc, {trait_path}, pending)
    return raw


@dataclass(frozen=True)
class _ExternalTarget:
    crate: str
    item_name: str


def _resolve_local(
    root: ModuleDoc, crate_name: str, segments: tuple[str, ...], depth: int
) -> ItemDoc | _ExternalTarget:
    """Resolve a same-crate re-export target within the crate's own tree.

    Intermediate modules may be private (the declaring crate can reference its
    own internals) and local alias chains are followed up to the depth bound.
    Resolution may land on an external reference when a chain ends in a
    re-export of a dependency item.
    """
    if depth < 0:
        raise UnresolvedReexport(
            f"re-export alias chain deeper than {MAX_REEXPORT_DEPTH} in {crate_name}"
        )
    module = root
    for i, seg in enumerate(segments):
        last = i == len(segments) - 1
        item = module.find_item(seg)
        if item is None:
            resolved = None
            for rex in module.reexports:
                if strip_generics(rex.path.item) != seg:
                    continue
                if rex.path.crate != crate_name:
                    resolved = _ExternalTarget(rex.path.crate, strip_generics(rex.path.item))
                else:
                    resolved = _resolve_local(
                        root, crate_name, rex.path.segments[1:], depth - 1
                    )
                break
            if resolved is None:
                raise UnresolvedReexport(
                    f"{'::'.join(segments)} not found in crate {crate_name}"
                )
            if last:
                return resolved
            if isinstance(resolved, _ExternalTarget):
                raise UnresolvedReexport(
                    f"cannot traverse into external module {resolved.crate} from {crate_name}"
                )
            if resolved.kind != "module":
                raise UnresolvedReexport(
                    f"path segment {seg!r} in {crate_name} is not a module"
                )
            module = resolved.submodule
            continue
        if last:
            return item
        if item.kind != "module":
            raise UnresolvedReexport(
                f"path segment {seg!r} in {crate_name} is not a module"
            )
        assert item.submodule is not None
        module = item.submodule
    raise UnresolvedReexport(f"empty re-export path in crate {crate_name}")


def _import_external(
    raw: dict[str, _RawEntry],
    crates_map: CratesMap,
    dep_crate: str,
    item_name: str,
    alias: Path,
) -> None:
    """Record a dependency item (and its safely re-rootable sub-entries) under an alias."""
    dep_index = crates_map.get(dep_crate)
    if dep_index is None:
        raise UnresolvedReexport(f"re-export from unknown crate {dep_crate!r}")
    entry = dep_index.get(item_name)
    if entry is None:
        raise UnresolvedReexport(f"{dep_crate}::{item_name} not found in dependency index")
    _record(raw, entry.api_id, entry.kind, entry.doc, {alias})
    own_paths = set(entry.import_paths)
    sub_prefix = f"{item_name}::"
    for sub_id, sub in dep_index.entries.items():
        if not sub_id.startswith(sub_prefix):
            continue
        if entry.kind == "trait":
            # Trait method declarations travel with the trait's alias path.
            _record(raw, sub_id, sub.kind, sub.doc, {alias})
        elif entry.kind == "type" and set(sub.import_paths) <= own_paths:
            # Inherent methods only; trait-provided methods need the trait's
            # own path, which may not be importable from this crate.
            _record(raw, sub_id, sub.kind, sub.doc, {alias})


def traverse_module(
    prefix: Path | None,
    module: ModuleDoc,
    crates_map: CratesMap,
    *,
    crate_root: ModuleDoc | None = None,
    _active: frozenset[int] = frozenset(),
) -> dict[str, _RawEntry]:
    """Enumerate the publicly reachable API surface beneath one module.

    Only public submodules are entered.  External re-exports are resolved via
    the precomputed indexes of dependency crates and recorded under their alias
    path; internal re-exports are resolved within the crate's own tree and then
    treated like module-local public items.  Method entries still carry
    placeholder trait references; see :func:`compute_items_map`.
    """
    if id(module) in _active:
        raise UnresolvedReexport(
            f"re-export cycle through module {module.name!r}"
        )
    active = _active | {id(module)}
    root = crate_root if crate_root is not None else module
    crate_name = root.name
    here = prefix.child(module.name) if prefix is not None else Path((crate_name,))
    raw: dict[str, _RawEntry] = {}

    for rex in module.reexports:
        if rex.visibility != "public":
            continue
        if rex.path.crate != crate_name:
            alias = here.child(rex.path.item)
            _import_external(
                raw, crates_map, rex.path.crate, strip_generics(rex.path.item), alias
            )
            continue
        target = _resolve_local(
            root, crate_name, rex.path.segments[1:], MAX_REEXPORT_DEPTH
        )
        if isinstance(target, _ExternalTarget):
            alias = here.child(target.item_name)
            _import_external(raw, crates_map, target.crate, target.item_name, alias)
            continue
        _extract_item(raw, here, target, crates_map, root, active)

    for item in module.items:
        if item.visibility != "public":
            continue
        _extract_item(raw, here, item, crates_map, root, active)

    return raw


def _extract_item(
    raw: dict[str, _RawEntry],
    here: Path,
    item: ItemDoc,
    crates_map: CratesMap,
    crate_root: ModuleDoc,
    active: frozenset[int] = frozenset(),
) -> None:
    if item.kind == "module":
        assert item.submodule is not None
        sub = traverse_module(
            here, item.submodule, crates_map, crate_root=crate_root, _active=active
        )
        for entry in sub.values():
            _record(raw, entry.api_id, entry.kind, entry.doc, entry.paths, entry.pending)
    elif item.kind == "type":
        for entry in extract_type(here, item).values():
            _record(raw, entry.api_id, entry.kind, entry.doc, entry.paths, entry.pending)
    elif item.kind == "trait":
        for entry in extract_trait(here, item).values():
            _record(raw, entry.api_id, entry.kind, entry.doc, entry.paths, entry.pending)
    elif item.kind == "function":
        _record(raw, item.base_name, "function", item.doc, {here.child(item.name)})


def compute_items_map(crate: ModuleDoc, crates_map: CratesMap) -> ApiIndex:
    """Build the finalized ApiIndex for one crate.

    Runs the traversal, then the revision pass: every placeholder trait
    reference is rewritten to the defining trait's concrete import paths, and
    methods whose trait is absent from the index are deleted since no import
    can make them callable.
    """
    raw = traverse_module(None, crate, crates_map)
    entries: dict[str, ApiEntry] = {}
    for api_id in sorted(raw):
        entry = raw[api_id]
        paths = set(entry.paths)
        if entry.pending is not None and entry.pending.defining_trait is not None:
            trait_name = strip_generics(entry.pending.defining_trait)
            trait_entry = raw.get(trait_name)
            if trait_entry is None or trait_entry.kind != "trait":
                logger.warning(
                    "dropping %s::%s: defining trait %r is not importable",
                    crate.name,
                    api_id,
                    trait_name,
                )
                continue
            paths |= trait_entry.paths
        if not paths:
            continue
        entries[api_id] = ApiEntry(
            api_id=api_id,
            kind=entry.kind,
            doc=entry.doc,
            import_paths=tuple(sorted(paths, key=_path_sort_key)),
        )
    return ApiIndex(crate=crate.name, entries=entries)


def extract_crate(
    root: ModuleDoc,
    dep_docs: dict[str, ModuleDoc],
    dep_graph: dict[str, list[str]],
) -> CratesMap:
    """Index a crate and its transitive dependencies in post-order.

    Dependencies are processed before their dependents so external re-exports
    can be resolved against already-finalized indexes.
    """
    crates_map = CratesMap()
    for crate_name in transitive_dependencies(root.name, dep_graph):
        if crate_name == root.name:
            tree = root
        else:
            tree = dep_docs.get(crate_name)
            if tree is None:
                raise MissingDependencyDoc(
                    f"no documentation tree for dependency {crate_name!r}"
                )
        crates_map[crate_name] = compute_items_map(tree, crates_map)
    return crates_map


# ---------------------------------------------------------------------------
# Validity oracle


def is_valid_import_path(
    p: Path, trees: dict[str, ModuleDoc], *, depth: int = MAX_REEXPORT_DEPTH
) -> bool:
    """Check whether ``p`` is a valid import path under the visibility rules.

    A path is valid when every module it traverses, after following re-export
    aliases, is publicly visible from its crate root.  Unresolvable paths are
    invalid rather than errors.  This checker implements the definition
    directly and is independent of the index construction above.
    """
    root = trees.get(p.crate)
    if root is None or root.visibility != "public":
        return False
    return _valid_from(root, p.segments[1:], trees, depth)


def _valid_from(
    module: ModuleDoc, segs: tuple[str, ...], trees: dict[str, ModuleDoc], depth: int
) -> bool:
    if not segs:
        return True
    if depth < 0:
        return False
    seg, rest = segs[0], segs[1:]
    item = module.find_item(seg)
    if item is not None and item.visibility == "public":
        if not rest:
            return True
        if item.kind == "module":
            assert item.submodule is not None
            return _valid_from(item.submodule, rest, trees, depth)
        return False
    for rex in module.reexports:
        if rex.visibility != "public":
            continue
        if strip_generics(rex.path.item) != seg:
            continue
        target = _resolve_node(rex.path, trees, depth - 1)
        if target is None:
            continue
        kind, node = target
        if not rest:
            return True
        if kind == "module":
            return _valid_from(node, rest, trees, depth - 1)
    return False


def _resolve_node(
    path: Path, trees: dict[str, ModuleDoc], depth: int
) -> tuple[str, ModuleDoc | ItemDoc] | None:
    """Resolve a re-export target path to the node it denotes.

    Re-export resolution carries no visibility constraints of its own: the
    alias grants access, so private intermediate modules (and items visible to
    the declaring module) are acceptable.  Alias hops are depth-bounded.
    """
    if depth < 0:
        return None
    root = trees.get(path.crate)
    if root is None:
        return None
    module = root
    segs = path.segments[1:]
    for i, seg in enumerate(segs):
        last = i == len(segs) - 1
        item = module.find_item(seg)
        if item is None:
            hop = None
            for rex in module.reexports:
                if strip_generics(rex.path.item) != seg:
                    continue
                hop = _resolve_node(rex.path, trees, depth - 1)
                if hop is not None:
                    break
            if hop is None:
                return None
            if last:
                return hop
            kind, node = hop
            if kind != "module":
                return None
            module = node
            continue
        if last:
            if item.kind == "module":
                assert item.submodule is not None
                return ("module", item.submodule)
            return ("item", item)
        if item.kind != "module":
            return None
        assert item.submodule is not None
        module = item.submodule
    return None
