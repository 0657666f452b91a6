"""Structural model of crate documentation.

A crate is a tree of modules; each module holds documented items (types,
traits, functions, submodules) and re-export declarations that expose items
under additional public paths.  The model is parsed from a versioned Doc-JSON
file (one file per crate) and is immutable after construction, so values can
be shared freely across concurrent index builds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field


class MalformedDoc(Exception):
    """Raised when a Doc-JSON document violates the schema or an invariant."""


class CyclicDependency(Exception):
    """Raised when the dependency graph contains a cycle over the reachable set."""


DOC_FORMAT_VERSION = 1

VISIBILITIES = ("public", "private")
ITEM_KINDS = ("module", "type", "trait", "function")


def strip_generics(name: str) -> str:
    """Return the path-relevant base of a display name (``Foo<T>`` -> ``Foo``)."""
    idx = name.find("<")
    return name if idx < 0 else name[:idx]


@dataclass(frozen=True, order=True)
class Path:
    """A fully qualified item path: first segment is the crate, last the item."""

    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("path must have at least one segment")
        for seg in self.segments:
            if not seg or "::" in seg:
                raise ValueError(f"invalid path segment: {seg!r}")

    @classmethod
    def parse(cls, text: str) -> Path:
        return cls(tuple(text.split("::")))

    def render(self) -> str:
        return "::".join(self.segments)

    @property
    def crate(self) -> str:
        return self.segments[0]

    @property
    def item(self) -> str:
        return self.segments[-1]

    def child(self, segment: str) -> Path:
        return Path(self.segments + (strip_generics(segment),))

    def __str__(self) -> str:  # pragma: no cover - repr convenience
        return self.render()


@dataclass(frozen=True)
class FunctionDoc:
    """A documented function or method signature."""

    name: str
    doc: str = ""


@dataclass(frozen=True)
class ImplBlockDoc:
    """Methods provided for a type, either via a trait impl or inherently.

    ``trait_name`` is None for inherent impl blocks; such methods become
    callable with the owning type's import path alone.
    """

    for_type: str
    methods: tuple[FunctionDoc, ...]
    trait_name: str | None = None

    def __post_init__(self) -> None:
        names = [m.name for m in self.methods]
        if len(names) != len(set(names)):
            raise MalformedDoc(f"duplicate method names in impl for {self.for_type}")


@dataclass(frozen=True)
class ReexportDecl:
    """A ``pub use`` style declaration exposing an item under a new path."""

    path: Path
    visibility: str = "public"

    def __post_init__(self) -> None:
        if len(self.path.segments) < 2:
            raise MalformedDoc(f"re-export path too short: {self.path.render()}")


@dataclass(frozen=True)
class ItemDoc:
    """A named, documented item inside a module.

    Exactly one kind-specific payload is populated: ``submodule`` for modules,
    ``impl_blocks`` for types, ``methods`` for traits.  Free functions carry no
    payload beyond their documentation.
    """

    kind: str
    name: str
    doc: str = ""
    visibility: str = "public"
    impl_blocks: tuple[ImplBlockDoc, ...] = ()
    methods: tuple[FunctionDoc, ...] = ()
    submodule: ModuleDoc | None = None

    def __post_init__(self) -> None:
        if self.kind not in ITEM_KINDS:
            raise MalformedDoc(f"unknown item kind: {self.kind!r}")
        if self.visibility not in VISIBILITIES:
            raise MalformedDoc(f"unknown visibility: {self.visibility!r}")
        payloads = {
            "module": self.submodule is not None,
            "type": bool(self.impl_blocks),
            "trait": bool(self.methods),
        }
        for kind, present in payloads.items():
            if present and self.kind != kind:
                raise MalformedDoc(
                    f"item {self.name!r} has a {kind} payload but kind {self.kind!r}"
                )
        if self.kind == "module" and self.submodule is None:
            raise MalformedDoc(f"module item {self.name!r} is missing its submodule")

    @property
    def base_name(self) -> str:
        return strip_generics(self.name)


@dataclass(frozen=True)
class ModuleDoc:
    """A module: documentation, items, and re-export declarations."""

    name: str
    doc: str = ""
    visibility: str = "public"
    items: tuple[ItemDoc, ...] = ()
    reexports: tuple[ReexportDecl, ...] = ()

    def __post_init__(self) -> None:
        if self.visibility not in VISIBILITIES:
            raise MalformedDoc(f"unknown visibility: {self.visibility!r}")
        names = [it.base_name for it in self.items]
        if len(names) != len(set(names)):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise MalformedDoc(f"duplicate item names in module {self.name!r}: {dupes}")

    def find_item(self, name: str) -> ItemDoc | None:
        base = strip_generics(name)
        for it in self.items:
            if it.base_name == base:
                return it
        return None


def _expect(obj: dict, key: str, types: tuple[type, ...], where: str):
    if key not in obj:
        raise MalformedDoc(f"missing field {key!r} in {where}")
    value = obj[key]
    if not isinstance(value, types):
        raise MalformedDoc(f"field {key!r} in {where} has wrong type")
    return value


def _parse_function(obj, where: str) -> FunctionDoc:
    if not isinstance(obj, dict):
        raise MalformedDoc(f"method entry in {where} must be an object")
    name = _expect(obj, "name", (str,), where)
    doc = obj.get("doc", "")
    if not isinstance(doc, str):
        raise MalformedDoc(f"doc of {name!r} in {where} must be a string")
    return FunctionDoc(name=name, doc=doc)


def _parse_reexport(obj, where: str) -> ReexportDecl:
    if not isinstance(obj, dict):
        raise MalformedDoc(f"re-export in {where} must be an object")
    text = _expect(obj, "path", (str,), where)
    if "*" in text:
        raise MalformedDoc(f"glob re-exports are not supported: {text!r}")
    segments = text.split("::")
    if any(not s for s in segments):
        raise MalformedDoc(f"malformed re-export path: {text!r}")
    visibility = obj.get("visibility", "public")
    if visibility not in VISIBILITIES:
        raise MalformedDoc(f"unknown visibility on re-export {text!r}")
    return ReexportDecl(path=Path(tuple(segments)), visibility=visibility)


def _parse_item(obj, where: str) -> ItemDoc:
    if not isinstance(obj, dict):
        raise MalformedDoc(f"item in {where} must be an object")
    kind = _expect(obj, "kind", (str,), where)
    name = _expect(obj, "name", (str,), where)
    here = f"{where}.{name}"
    doc = obj.get("doc", "")
    visibility = obj.get("visibility", "public")
    impl_blocks: list[ImplBlockDoc] = []
    methods: list[FunctionDoc] = []
    submodule: ModuleDoc | None = None
    if kind == "type":
        for block in obj.get("impl_blocks", []):
            if not isinstance(block, dict):
                raise MalformedDoc(f"impl block in {here} must be an object")
            impl_blocks.append(
                ImplBlockDoc(
                    for_type=block.get("for_type", name),
                    trait_name=block.get("trait_name"),
                    methods=tuple(
                        _parse_function(m, here) for m in block.get("methods", [])
                    ),
                )
            )
    elif kind == "trait":
        methods = [_parse_function(m, here) for m in obj.get("methods", [])]
    elif kind == "module":
        sub = obj.get("submodule")
        if sub is None:
            raise MalformedDoc(f"module item {here} is missing its submodule")
        submodule = _parse_module(sub, here)
        if submodule.name != strip_generics(name):
            raise MalformedDoc(
                f"submodule name {submodule.name!r} does not match item {name!r}"
            )
    elif kind != "function":
        raise MalformedDoc(f"unknown item kind {kind!r} in {where}")
    if not isinstance(doc, str):
        raise MalformedDoc(f"doc of {here} must be a string")
    return ItemDoc(
        kind=kind,
        name=name,
        doc=doc,
        visibility=visibility,
        impl_blocks=tuple(impl_blocks),
        methods=tuple(methods),
        submodule=submodule,
    )


def _parse_module(obj, where: str) -> ModuleDoc:
    if not isinstance(obj, dict):
        raise MalformedDoc(f"module in {where} must be an object")
    name = _expect(obj, "name", (str,), where)
    here = f"{where}::{name}" if where else name
    doc = obj.get("doc", "")
    if not isinstance(doc, str):
        raise MalformedDoc(f"doc of module {here} must be a string")
    visibility = obj.get("visibility", "public")
    items = tuple(_parse_item(it, here) for it in obj.get("items", []))
    reexports = tuple(_parse_reexport(r, here) for r in obj.get("reexports", []))
    return ModuleDoc(
        name=name, doc=doc, visibility=visibility, items=items, reexports=reexports
    )


def parse_crate_doc(doc_json: bytes | str) -> ModuleDoc:
    """Parse a Doc-JSON document and return the crate's root module.

    Accepts either the full file form ``{format_version, crate_name, root}``
    or a bare root-module object.  The root module's name is the crate name
    and the root is always public; a private root is a schema violation.
    """
    try:
        obj = json.loads(doc_json)
    except json.JSONDecodeError as exc:
        raise MalformedDoc(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedDoc("top-level Doc-JSON value must be an object")
    if "root" in obj:
        version = obj.get("format_version")
        if version != DOC_FORMAT_VERSION:
            raise MalformedDoc(f"unsupported format_version: {version!r}")
        crate_name = _expect(obj, "crate_name", (str,), "document")
        root = _parse_module(obj["root"], "")
        if root.name != crate_name:
            raise MalformedDoc(
                f"root module {root.name!r} does not match crate_name {crate_name!r}"
            )
    else:
        root = _parse_module(obj, "")
    if root.visibility != "public":
        raise MalformedDoc("the crate root module must be public")
    return root


def _module_to_obj(module: ModuleDoc) -> dict:
    return {
        "name": module.name,
        "doc": module.doc,
        "visibility": module.visibility,
        "items": [_item_to_obj(it) for it in module.items],
        "reexports": [
            {"path": r.path.render(), "visibility": r.visibility}
            for r in module.reexports
        ],
    }


def _item_to_obj(item: ItemDoc) -> dict:
    obj: dict = {
        "kind": item.kind,
        "name": item.name,
        "doc": item.doc,
        "visibility": item.visibility,
    }
    if item.kind == "type":
        obj["impl_blocks"] = [
            {
                "for_type": b.for_type,
                "trait_name": b.trait_name,
                "methods": [{"name": m.name, "doc": m.doc} for m in b.methods],
            }
            for b in item.impl_blocks
        ]
    elif item.kind == "trait":
        obj["methods"] = [{"name": m.name, "doc": m.doc} for m in item.methods]
    elif item.kind == "module":
        assert item.submodule is not None
        obj["submodule"] = _module_to_obj(item.submodule)
    return obj


def serialize_crate_doc(root: ModuleDoc) -> bytes:
    """Render a crate tree back to canonical Doc-JSON bytes."""
    obj = {
        "format_version": DOC_FORMAT_VERSION,
        "crate_name": root.name,
        "root": _module_to_obj(root),
    }
    return json.dumps(obj, indent=2, sort_keys=True).encode("utf-8")


def load_dep_graph(data: bytes | str) -> dict[str, list[str]]:
    """Parse the dependency graph file: a JSON map ``{crate: [deps...]}``."""
    obj = json.loads(data)
    if not isinstance(obj, dict):
        raise MalformedDoc("dependency graph must be a JSON object")
    graph: dict[str, list[str]] = {}
    for crate, deps in obj.items():
        if not isinstance(deps, list) or not all(isinstance(d, str) for d in deps):
            raise MalformedDoc(f"dependency list of {crate!r} must be a string array")
        graph[crate] = list(deps)
    return graph


def transitive_dependencies(
    crate_name: str, dep_graph: dict[str, list[str]]
) -> list[str]:
    """Return the reachable dependencies of a crate in post-order.

    Every crate appears after all of its own dependencies, and the queried
    crate itself is last.  Sibling order ties are broken lexicographically by
    crate name so builds are deterministic.
    """
    order: list[str] = []
    done: set[str] = set()
    in_progress: set[str] = set()

    def visit(crate: str, trail: tuple[str, ...]) -> None:
        if crate in done:
            return
        if crate in in_progress:
            cycle = " -> ".join(trail + (crate,))
            raise CyclicDependency(f"dependency cycle: {cycle}")
        in_progress.add(crate)
        for dep in sorted(dep_graph.get(crate, ())):
            visit(dep, trail + (crate,))
        in_progress.discard(crate)
        done.add(crate)
        order.append(crate)

    visit(crate_name, ())
    return order
