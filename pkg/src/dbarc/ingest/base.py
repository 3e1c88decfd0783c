"""The source-adapter contract: read-only access to a database to archive.

An adapter enumerates schemas, introspects the data dictionary into a
DatabaseModel, and streams table rows.  Every operation is read-only against
the source, and row streams are repeatable as long as the source does not
change underneath.  Large objects travel as locators; payloads are fetched
one at a time so streaming stays within constant memory per row.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from dbarc.dialect import AccessMode
from dbarc.sqlcore.model import ColumnDef, DatabaseModel, SourceDescriptor


class IngestError(Exception):
    """Base class for source-access failures."""


class SourceConnectError(IngestError):
    """The source could not be opened at all.

    Distinct from a source that opens fine but shows no schemas; that case
    is an empty list_schemas result, not an error.
    """


class StreamError(IngestError):
    """A row stream failed mid-way.

    Carries how many rows were already delivered so the caller can document
    the truncation precisely.
    """

    def __init__(self, message: str, rows_delivered: int) -> None:
        super().__init__(message)
        self.rows_delivered = rows_delivered


class Capability:
    """What a concrete adapter can do against its source."""

    LIST_SCHEMAS = "LIST_SCHEMAS"
    INTROSPECT = "INTROSPECT"
    STREAM_ROWS = "STREAM_ROWS"
    FETCH_LOB = "FETCH_LOB"

    @staticmethod
    def native_charset(name: str) -> str:
        """The source's character encoding, e.g. NATIVE_CHARSET(UTF-8).

        Declared so transcoding large character objects into the archive's
        UTF-16 form is well-defined.
        """
        return f"NATIVE_CHARSET({name})"


def charset_of(capabilities: Iterable[str]) -> str | None:
    """Extract the declared encoding from a capability set, if any."""
    for cap in capabilities:
        if cap.startswith("NATIVE_CHARSET(") and cap.endswith(")"):
            return cap[len("NATIVE_CHARSET(") : -1]
    return None


@dataclass(frozen=True)
class LobLocator:
    """A handle to one large-object cell; the payload stays at the source."""

    schema: str
    table: str
    column: str
    row_ordinal: int
    kind: str                       # "clob" or "blob"
    handle: object = None           # adapter-private token

    def __post_init__(self) -> None:
        if self.kind not in ("clob", "blob"):
            raise IngestError(f"unknown LOB kind {self.kind!r}")


#: One delivered item: SQL NULL, scalar text, or a large-object locator.
RowItem = object  # None | str | LobLocator
Row = tuple


class RowStream:
    """An iterator over one table's rows with a declared delivery order.

    Rows are tuples with exactly one item per column.  The stream counts
    what it hands out; when the underlying source fails mid-way the count
    is attached to the resulting StreamError.
    """

    def __init__(
        self,
        columns: tuple[ColumnDef, ...],
        rows: Iterator[Row],
        order_note: str,
    ) -> None:
        self.columns = columns
        self.order_note = order_note
        self.rows_delivered = 0
        self._rows = rows

    def __iter__(self) -> Iterator[Row]:
        while True:
            try:
                row = next(self._rows)
            except StopIteration:
                return
            except StreamError:
                raise
            except Exception as exc:
                raise StreamError(
                    f"source failed after {self.rows_delivered} row(s): {exc}",
                    self.rows_delivered,
                ) from exc
            if len(row) != len(self.columns):
                raise StreamError(
                    f"row {self.rows_delivered + 1} has {len(row)} item(s), "
                    f"expected {len(self.columns)}",
                    self.rows_delivered,
                )
            self.rows_delivered += 1
            yield row


class SourceAdapter:
    """Contract shared by all concrete adapters.

    Concrete classes fill in ``capabilities``, ``descriptor``, ``mode`` and
    the four access operations.  One adapter instance serves one stream at
    a time; open several instances for concurrent streams.
    """

    capabilities: frozenset[str] = frozenset()
    descriptor: SourceDescriptor = SourceDescriptor()
    mode: AccessMode

    def __init__(self) -> None:
        self.warnings: list[str] = []

    # -- operations ------------------------------------------------------

    def list_schemas(self) -> list[str]:
        raise NotImplementedError

    def introspect(self, selected: list[str] | None = None) -> DatabaseModel:
        raise NotImplementedError

    def stream_rows(self, schema: str, table: str) -> RowStream:
        raise NotImplementedError

    def fetch_lob(self, locator: LobLocator) -> object:
        raise NotImplementedError

    def close(self) -> None:
        pass

    # -- helpers ---------------------------------------------------------

    def __enter__(self) -> "SourceAdapter":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    def charset(self) -> str:
        return charset_of(self.capabilities) or "UTF-8"

    def check_selection(self, selected: list[str] | None) -> list[str]:
        """Validate a schema selection against what the source offers."""
        names = self.list_schemas()
        if selected is None:
            return names
        unknown = [s for s in selected if s not in names]
        if unknown:
            raise IngestError(
                f"schema selection outside the source: {', '.join(unknown)}"
            )
        return [s for s in names if s in selected]

    def restrict_to_mode(self, model: DatabaseModel) -> DatabaseModel:
        """Drop object classes the access strategy cannot introspect.

        What the strategy cannot see is recorded as absent-by-capability,
        which is different from introspected-and-empty.
        """
        from dbarc.dialect import OBJECT_CLASSES

        supported = self.mode.object_classes
        absent = OBJECT_CLASSES - supported
        for schema in model.schemas:
            if "views" not in supported:
                schema.views.clear()
            if "triggers" not in supported:
                schema.triggers.clear()
            if "routines" not in supported:
                schema.routines.clear()
            if "synonyms" not in supported:
                schema.synonyms.clear()
            if "dblinks" not in supported:
                schema.dblinks.clear()
        if "users" not in supported:
            model.users.clear()
        if "roles" not in supported:
            model.roles.clear()
        if "privileges" not in supported:
            model.privileges.clear()
        model.absent_classes = frozenset(absent)
        return model


def keep_schemas(model: DatabaseModel, names: list[str]) -> DatabaseModel:
    """Restrict a model to a schema selection and re-link references.

    Foreign keys pointing into dropped schemas become recorded dangling
    references rather than errors.
    """
    model.schemas = [s for s in model.schemas if s.name in names]
    keep = set(names)
    model.privileges = [p for p in model.privileges if p.on_schema in keep or not p.on_schema]
    model.dangling_refs = []
    model.link_references()
    return model


@dataclass
class StreamOrder:
    """How one table's rows were ordered for delivery."""

    columns: tuple[str, ...]
    note: str

    @staticmethod
    def for_table(table) -> "StreamOrder":
        pk = table.primary_key()
        if pk is not None and pk.columns:
            cols = ", ".join(pk.columns)
            return StreamOrder(tuple(pk.columns), f"primary key ({cols})")
        return StreamOrder((), "natural (source storage order)")
