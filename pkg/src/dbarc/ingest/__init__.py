"""Read-only source access: the adapter contract and two concrete adapters.

The fixture adapter reads a manifest + DDL + delimited data files; the
embedded adapter reads the embedded engine's database files.  Both satisfy
the same contract: enumerate schemas, introspect a DatabaseModel, stream
rows in a declared order, and hand out large objects one locator at a time.
"""

from dbarc.ingest.base import (
    Capability,
    IngestError,
    LobLocator,
    RowStream,
    SourceAdapter,
    SourceConnectError,
    StreamError,
    StreamOrder,
    charset_of,
)
from dbarc.ingest.embedded import EmbeddedAdapter
from dbarc.ingest.fixture import (
    FIXTURE_EXPERT_MODE,
    FixtureAdapter,
    escape_field,
    unescape_field,
)

__all__ = [
    "Capability",
    "EmbeddedAdapter",
    "FIXTURE_EXPERT_MODE",
    "FixtureAdapter",
    "IngestError",
    "LobLocator",
    "RowStream",
    "SourceAdapter",
    "SourceConnectError",
    "StreamError",
    "StreamOrder",
    "charset_of",
    "escape_field",
    "unescape_field",
]
