"""File-based source adapter: a manifest, a DDL script, delimited row files.

A fixture directory stands in for a live database.  Layout:

    manifest.xml      names the product, charset, access strategy, files
    <ddl file>        plain SQL creating everything the "database" holds
    <data files>      one per table, tab-separated, one row per line

Data file rules (normative, see docs/fixtures.md): the first line lists the
column names; every following line is exactly one row (no blank separator
lines — an empty line is a row with one empty field); fields are separated
by single tabs; ``\\N`` alone in a field is SQL NULL (distinct from the
empty string); backslash escapes ``\\t`` ``\\n`` ``\\r`` ``\\\\`` carry
tabs, line breaks, and backslashes inside a field; a large-object cell
holds ``@relative/path`` pointing at its payload file, never the payload
itself.  When a table has a primary key, its data file must already be in
primary-key order; the adapter verifies that while streaming instead of
buffering the file.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Iterator

from dbarc.dialect import (
    OBJECT_CLASSES,
    AccessMode,
    ModeKind,
    builtin_generic_mode,
)
from dbarc.ingest.base import (
    Capability,
    IngestError,
    LobLocator,
    Row,
    RowStream,
    SourceAdapter,
    SourceConnectError,
    StreamError,
    StreamOrder,
    keep_schemas,
)
from dbarc.sqlcore.model import DatabaseModel, SourceDescriptor, TableDef
from dbarc.sqlcore.parser import parse_ddl
from dbarc.sqlcore.types import ArchivalType
from dbarc.sqlcore.values import ValueError_, parse_value

NULL_MARKER = "\\N"

#: Access strategy for trusting a fixture's DDL across every object class.
FIXTURE_EXPERT_MODE = AccessMode(
    "fixture-expert",
    ModeKind.EXPERT,
    (),
    OBJECT_CLASSES,
    "reads the fixture's DDL as the complete data dictionary",
)


def escape_field(text: str) -> str:
    out = text.replace("\\", "\\\\")
    out = out.replace("\t", "\\t").replace("\n", "\\n").replace("\r", "\\r")
    return out


def unescape_field(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "t":
                out.append("\t")
            elif nxt == "n":
                out.append("\n")
            elif nxt == "r":
                out.append("\r")
            elif nxt == "\\":
                out.append("\\")
            else:
                out.append(ch)
                out.append(nxt)
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


class FixtureAdapter(SourceAdapter):
    """Reads a fixture directory as if it were a running database."""

    def __init__(self, root: str | Path) -> None:
        super().__init__()
        self.root = Path(root)
        manifest = self.root / "manifest.xml"
        if not manifest.is_file():
            raise SourceConnectError(f"no fixture manifest at {manifest}")
        try:
            doc = ET.fromstring(manifest.read_text(encoding="utf-8"))
        except (OSError, ET.ParseError) as exc:
            raise SourceConnectError(f"unreadable fixture manifest: {exc}") from exc
        if doc.tag != "sourceFixture":
            raise SourceConnectError(
                f"expected <sourceFixture>, found <{doc.tag}>"
            )
        self._charset = doc.get("charset", "UTF-8")
        access = doc.get("access", "generic")
        if access == "expert":
            self.mode = FIXTURE_EXPERT_MODE
        elif access == "generic":
            self.mode = builtin_generic_mode()
        else:
            raise SourceConnectError(f"unknown access strategy {access!r}")
        self.descriptor = SourceDescriptor(
            product=doc.get("product", "delimited fixture"),
            version=doc.get("version", ""),
            access_mode=self.mode.name,
            label=doc.get("label", self.root.name),
        )
        self.capabilities = frozenset(
            {
                Capability.LIST_SCHEMAS,
                Capability.INTROSPECT,
                Capability.STREAM_ROWS,
                Capability.FETCH_LOB,
                Capability.native_charset(self._charset),
            }
        )
        ddl_el = doc.find("ddl")
        if ddl_el is None or not ddl_el.get("file"):
            raise SourceConnectError("fixture manifest names no ddl file")
        self._ddl_path = self.root / ddl_el.get("file")
        if not self._ddl_path.is_file():
            raise SourceConnectError(f"missing ddl file {self._ddl_path}")
        self._system_schemas = {
            el.get("name", "") for el in doc.findall("systemSchema")
        }
        self._data_files: dict[tuple[str, str], Path] = {}
        for el in doc.findall("table"):
            key = (el.get("schema", ""), el.get("name", ""))
            self._data_files[key] = self.root / el.get("file", "")
        self._model: DatabaseModel | None = None

    # -- contract --------------------------------------------------------

    def list_schemas(self) -> list[str]:
        names = [s.name for s in self._full_model().schemas]
        if self.mode.kind == ModeKind.EXPERT:
            names = [n for n in names if n not in self._system_schemas]
        return names

    def introspect(self, selected: list[str] | None = None) -> DatabaseModel:
        self.warnings = []
        chosen = self.check_selection(selected)
        parsed = parse_ddl(self._read_ddl())
        for issue in parsed.errors:
            self.warnings.append(
                f"ddl line {issue.line}: {issue.message} (object preserved verbatim)"
            )
        model = parsed.model
        model.source = self.descriptor
        keep_schemas(model, chosen)
        return self.restrict_to_mode(model)

    def stream_rows(self, schema: str, table: str) -> RowStream:
        model = self._full_model()
        tdef = model.table(schema, table)
        if tdef is None:
            raise IngestError(f"no table {schema}.{table} in the source")
        columns = tuple(tdef.columns)
        order = StreamOrder.for_table(tdef)
        path = self._data_files.get((schema, table))
        stream = RowStream(
            columns, self._read_rows(schema, table, tdef, path, order), order.note
        )
        return stream

    def fetch_lob(self, locator: LobLocator) -> object:
        path = self.root / str(locator.handle)
        try:
            if locator.kind == "clob":
                # Decode bytes directly: text-mode reading would translate
                # \r\n and \r to \n and corrupt the payload.
                return path.read_bytes().decode(self._charset)
            return path.read_bytes()
        except OSError as exc:
            raise IngestError(f"cannot read LOB payload {path}: {exc}") from exc

    # -- internals -------------------------------------------------------

    def _read_ddl(self) -> str:
        return self._ddl_path.read_text(encoding=self._charset)

    def _full_model(self) -> DatabaseModel:
        if self._model is None:
            parsed = parse_ddl(self._read_ddl())
            parsed.model.source = self.descriptor
            self._model = parsed.model
        return self._model

    def _read_rows(
        self,
        schema: str,
        table: str,
        tdef: TableDef,
        path: Path | None,
        order: StreamOrder,
    ) -> Iterator[Row]:
        if path is None:
            return
        try:
            handle = path.open("r", encoding=self._charset, newline="\n")
        except OSError as exc:
            raise StreamError(f"cannot open data file {path}: {exc}", 0) from exc
        lob_kinds = {
            col.name: "blob" if col.col_type.kind.value == "BLOB" else "clob"
            for col in tdef.columns
            if isinstance(col.col_type, ArchivalType) and col.col_type.is_lob
        }
        key_cols = [
            (i, col)
            for i, col in enumerate(tdef.columns)
            if col.name in order.columns
        ]
        with handle:
            header = handle.readline().rstrip("\n")
            expected = [col.name for col in tdef.columns]
            if header.split("\t") != expected:
                raise StreamError(
                    f"data file {path.name} header does not match columns "
                    f"{', '.join(expected)}",
                    0,
                )
            previous_key: tuple | None = None
            ordinal = 0
            # Every line is a row; an empty line is a legal single-field row
            # (the empty string in a one-column table), so none are skipped.
            for line in handle:
                line = line.rstrip("\n")
                fields = line.split("\t")
                if len(fields) != len(tdef.columns):
                    raise IngestError(
                        f"row {ordinal + 1} in {path.name} has "
                        f"{len(fields)} field(s), expected {len(tdef.columns)}"
                    )
                row: list[object] = []
                for col, raw in zip(tdef.columns, fields):
                    if raw == NULL_MARKER:
                        row.append(None)
                    elif col.name in lob_kinds:
                        if not raw.startswith("@"):
                            raise IngestError(
                                f"large-object cell {table}.{col.name} must "
                                f"reference a payload file (@path), got inline text"
                            )
                        row.append(
                            LobLocator(
                                schema,
                                table,
                                col.name,
                                ordinal,
                                lob_kinds[col.name],
                                raw[1:],
                            )
                        )
                    else:
                        row.append(unescape_field(raw))
                if key_cols:
                    key = tuple(
                        _sort_key(row[i], col) for i, col in key_cols
                    )
                    if previous_key is not None and key <= previous_key:
                        raise IngestError(
                            f"data file {path.name} is not in primary-key "
                            f"order at row {ordinal + 1}"
                        )
                    previous_key = key
                ordinal += 1
                yield tuple(row)


def _sort_key(item: object, col) -> object:
    """Typed ordering key for a delivered text item."""
    if item is None or not isinstance(item, str):
        return item
    if isinstance(col.col_type, ArchivalType):
        try:
            value = parse_value(item, col.col_type)
        except ValueError_:
            return item
        if isinstance(value, bytes):
            return item
        return value
    return item
