"""xcrate: crate-scoped API knowledge bases and validated translation tooling."""

__version__ = "0.1.0"
