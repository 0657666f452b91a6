"""Source package to target crate matching.

Each source package is mapped to exactly one target crate before translation
starts, combining a model-proposed match based on package documentation with
keyword search over an offline candidate catalog.  When the two mechanisms
disagree, a documentation-based rerank decides, with ties preferring the
model's proposal.  The resulting mapping is total over the project's packages
and immutable once computed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .knowledge_base import tokenize
from .llm_gateway import GatewayError

PROVENANCES = ("proposed_by_llm", "keyword_search", "manual")


class NoCandidate(Exception):
    """Raised when a package has zero catalog hits and no model proposal."""


class MalformedOverride(Exception):
    """Raised when the manual overrides file cannot be parsed."""


@dataclass(frozen=True)
class GoPackageDoc:
    """A source package import path with its package-level documentation."""

    package: str
    doc: str = ""


@dataclass(frozen=True)
class CatalogEntry:
    crate: str
    description: str = ""
    keywords: tuple[str, ...] = ()


@dataclass(frozen=True)
class CandidateCatalog:
    """Offline snapshot of candidate crates (name, description, keywords)."""

    entries: tuple[CatalogEntry, ...]

    @classmethod
    def load(cls, data: bytes | str) -> CandidateCatalog:
        rows = json.loads(data)
        return cls(
            entries=tuple(
                CatalogEntry(
                    crate=r["crate"],
                    description=r.get("description", ""),
                    keywords=tuple(r.get("keywords", ())),
                )
                for r in rows
            )
        )

    def get(self, crate: str) -> CatalogEntry | None:
        for entry in self.entries:
            if entry.crate == crate:
                return entry
        return None


@dataclass(frozen=True)
class CrateMapping:
    """Total map from source package to target crate, with provenance."""

    entries: dict[str, str] = field(default_factory=dict)
    provenance: dict[str, str] = field(default_factory=dict)

    def crate_for(self, package: str) -> str:
        return self.entries[package]

    def with_entry(self, package: str, crate: str, provenance: str) -> CrateMapping:
        assert provenance in PROVENANCES
        entries = dict(self.entries)
        prov = dict(self.provenance)
        entries[package] = crate
        prov[package] = provenance
        return CrateMapping(entries=entries, provenance=prov)


def _keyword_score(package: GoPackageDoc, candidate: CatalogEntry) -> int:
    query = Counter(tokenize(f"{package.package} {package.doc}"))
    target = Counter(
        tokenize(f"{candidate.crate} {candidate.description} {' '.join(candidate.keywords)}")
    )
    return sum(min(c, target[t]) for t, c in query.items() if t in target)


def _keyword_search(package: GoPackageDoc, catalog: CandidateCatalog) -> str | None:
    scored = [
        (entry, _keyword_score(package, entry))
        for entry in catalog.entries
    ]
    scored = [(e, s) for e, s in scored if s > 0]
    if not scored:
        return None
    scored.sort(key=lambda pair: (-pair[1], pair[0].crate))
    return scored[0][0].crate


def _proposal_prompt(package: GoPackageDoc, catalog: CandidateCatalog) -> str:
    lines = [
        "Propose the best matching target crate for this source package.",
        f"Package: {package.package}",
        f"Documentation: {' '.join(package.doc.split())}",
        "Known candidate crates:",
    ]
    lines += [f"- {e.crate}: {e.description}" for e in catalog.entries]
    lines.append("Answer with a single crate name, or NONE.")
    return "\n".join(lines)


def _llm_proposal(package: GoPackageDoc, catalog: CandidateCatalog, gateway) -> str | None:
    if gateway is None:
        return None
    try:
        response = gateway.complete(_proposal_prompt(package, catalog)).strip()
    except GatewayError:
        return None
    if not response or response.upper() == "NONE":
        return None
    return response.split()[0]


def _doc_rerank(package: GoPackageDoc, names: list[str], catalog: CandidateCatalog) -> list[str]:
    """Order candidate crates by documentation similarity to the package doc."""
    query = Counter(tokenize(package.doc or package.package))
    scored = []
    for name in names:
        entry = catalog.get(name)
        doc = entry.description if entry else ""
        target = Counter(tokenize(f"{name} {doc}"))
        overlap = sum(min(c, target[t]) for t, c in query.items() if t in target)
        scored.append((name, overlap))
    scored.sort(key=lambda pair: -pair[1])
    return [name for name, _ in scored]


def match_crates(
    packages: list[GoPackageDoc],
    candidates: CandidateCatalog,
    gateway=None,
) -> CrateMapping:
    """Map every package to exactly one crate.

    The model proposal and the keyword search run independently; on
    disagreement the documentation rerank decides and ties keep the model's
    proposal.  Packages with neither a catalog hit nor a proposal raise
    NoCandidate so they can be supplied through manual overrides.
    """
    mapping = CrateMapping()
    unmatched: list[str] = []
    for package in packages:
        proposed = _llm_proposal(package, candidates, gateway)
        keyword = _keyword_search(package, candidates)
        if proposed and keyword and proposed != keyword:
            ranked = _doc_rerank(package, [proposed, keyword], candidates)
            winner = ranked[0]
            provenance = "proposed_by_llm" if winner == proposed else "keyword_search"
        elif proposed:
            winner, provenance = proposed, "proposed_by_llm"
        elif keyword:
            winner, provenance = keyword, "keyword_search"
        else:
            unmatched.append(package.package)
            continue
        mapping = mapping.with_entry(package.package, winner, provenance)
    if unmatched:
        raise NoCandidate(
            "no candidate crate for package(s): " + ", ".join(sorted(unmatched))
        )
    return mapping


def load_manual_overrides(
    mapping: CrateMapping, overrides_file: str | Path | bytes
) -> CrateMapping:
    """Apply a ``{package: crate}`` overrides file on top of a mapping."""
    try:
        if isinstance(overrides_file, (str, Path)) and Path(overrides_file).exists():
            data = Path(overrides_file).read_bytes()
        else:
            data = overrides_file
        obj = json.loads(data)
    except (OSError, TypeError, ValueError) as exc:
        raise MalformedOverride(f"cannot read overrides: {exc}") from exc
    if not isinstance(obj, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in obj.items()
    ):
        raise MalformedOverride("overrides must be a JSON object of package -> crate")
    for package, crate in sorted(obj.items()):
        mapping = mapping.with_entry(package, crate, "manual")
    return mapping
