"""The on-disk archive: item codec, writer, reader, and pretty-printing.

An archive is a bare directory tree that needs no software to stay
readable — every file is plain text and every format is documented
bit-exactly in docs/format.md:

    archiveInfo.xml             manifest: format version plus every file
                                with size and digest; written last, so its
                                absence marks an invalid archive
    ddl/0001_<schema>.sql       one DDL file per schema, numbered in load
                                order
    data/<schema>/<table>.txt   one data file per archived table: a short
                                XML header, a sentinel line, then one
                                encoded row per line
    data/<schema>/dmpFile.xsl   pretty-print stylesheet, one per data
                                directory
    lobs/<schema>/<table>/<column>/<row>.nclob|.blob
                                large objects, one file per cell; character
                                content verbatim, binary content as an
                                uppercase hexadecimal dump
    reference/reference.xml     the archived logic as XML, the metadata of
                                every excluded object, and the changelog
    docs/                       attachments added while describing

Data items are self-delimiting length-prefixed tokens (``length,payload;``
with the length counting characters, never bytes), so decoding is
independent of the character encoding and survives embedded delimiters and
line breaks.  All text files are UTF-16 little-endian with a byte-order
mark, which fixes one unambiguous encoding for every platform.

The writer streams: peak memory depends on the largest single row, not on
table sizes.  The reader needs nothing but this module and the directory.
"""

from __future__ import annotations

import hashlib
import html
import io
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path, PurePosixPath
from typing import Callable, Iterator

from dbarc.analysis import (
    Actor,
    AnalysisSession,
    readiness,
)
from dbarc.ingest.base import LobLocator, RowStream, StreamError
from dbarc.sqlcore.model import (
    ConstraintKind,
    DatabaseModel,
    SchemaDef,
    TableDef,
    clone_model,
    make_ref,
)
from dbarc.sqlcore.modelxml import (
    ModelXmlError,
    model_from_element,
    model_to_element,
    object_to_element,
)
from dbarc.sqlcore.render import (
    RenderError,
    check_renderable,
    order_tables,
    order_views,
    privilege_key,
    render_alter_constraint,
    render_grant,
    render_schema,
    render_table,
    render_view,
)
from dbarc.sqlcore.types import ArchivalType, TypeKind

FORMAT_VERSION = "dbarc-archive/1"
MANIFEST_NAME = "archiveInfo.xml"
REFERENCE_PATH = "reference/reference.xml"
STYLESHEET_NAME = "dmpFile.xsl"

#: Line separating the XML header of a data file from its encoded rows.
DATA_SENTINEL = "==DATA=="

#: Line width of hexadecimal dumps in .blob files.
HEX_WRAP = 80

#: Changelog actions recorded through :meth:`AnalysisSession.record`.
ACTION_ARCHIVE_CREATED = "archive-created"
ACTION_ARCHIVE_FAILED = "archive-write-failed"

_BOM = "﻿"
_XML_DECL = '<?xml version="1.0" encoding="UTF-16"?>\n'
_HEX_DIGITS = frozenset("0123456789ABCDEF")
_DIGITS = frozenset("0123456789")

# Control characters a plain-text archive cannot carry (everything below
# U+0020 except tab, line feed, carriage return).
_CTRL_RE = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f]")


class ArchiveError(ValueError):
    """Raised when an archive cannot be written or opened."""


class DataFormatError(ArchiveError):
    """A malformed data file; the message carries the character offset."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} at character offset {offset}")
        self.offset = offset


def check_plain_text(value: str, where: str) -> str:
    """Reject strings that would break the plain-text file guarantee."""
    hit = _CTRL_RE.search(value)
    if hit is not None:
        raise ArchiveError(
            f"{where} contains control character U+{ord(hit.group()):04X},"
            " which a plain-text archive cannot carry"
        )
    return value


# ---------------------------------------------------------------------------
# The data-item codec


def encode_item(value: str | None) -> str:
    """One item as its self-delimiting token ``length,payload;``.

    The length counts characters; NULL is ``-1,;`` and the empty string is
    ``0,;``, which keeps the two distinct by construction.
    """
    if value is None:
        return "-1,;"
    return f"{len(value)},{value};"


def encode_row(items: list[str | None] | tuple) -> str:
    """A full row: its item tokens, concatenated without separators."""
    return "".join(encode_item(item) for item in items)


class ItemCursor:
    """A character cursor over a stream of encoded items.

    Reads from a string or a text stream in fixed-size chunks, so decoding
    a file never holds more than one buffer plus the current item.  The
    ``offset`` counts characters consumed since the cursor's start and is
    quoted by every error.
    """

    def __init__(self, source: str | io.TextIOBase, chunk: int = 1 << 16) -> None:
        if isinstance(source, str):
            self._read: Callable[[int], str] | None = None
            self._buf = source
            self._eof = True
        else:
            self._read = source.read
            self._buf = ""
            self._eof = False
        self._pos = 0
        self._base = 0
        self._chunk = max(chunk, 16)

    @property
    def offset(self) -> int:
        return self._base + self._pos

    def _fill(self, need: int) -> None:
        while not self._eof and len(self._buf) - self._pos < need:
            if self._pos >= self._chunk:
                self._base += self._pos
                self._buf = self._buf[self._pos :]
                self._pos = 0
            more = self._read(self._chunk)
            if not more:
                self._eof = True
            else:
                self._buf += more

    def _peek(self) -> str | None:
        self._fill(1)
        if self._pos >= len(self._buf):
            return None
        return self._buf[self._pos]

    def at_end(self) -> bool:
        return self._peek() is None

    def _take(self, n: int) -> str:
        self._fill(n)
        if len(self._buf) - self._pos < n:
            raise DataFormatError(
                "premature end of input inside an item payload",
                self._base + len(self._buf),
            )
        out = self._buf[self._pos : self._pos + n]
        self._pos += n
        return out

    def expect_row_break(self) -> None:
        ch = self._peek()
        if ch != "\n":
            found = "end of input" if ch is None else repr(ch)
            raise DataFormatError(
                f"expected a row terminator, found {found}", self.offset
            )
        self._pos += 1


def decode_item(cursor: ItemCursor) -> str | None:
    """The next item from the cursor; None for the NULL token.

    Only canonical tokens are accepted — the length prefix is ``-1`` or a
    run of decimal digits without leading zeros — so re-encoding a decoded
    item always reproduces the original token.
    """
    start = cursor.offset
    prefix: list[str] = []
    while True:
        ch = cursor._peek()
        if ch is None:
            raise DataFormatError(
                "premature end of input inside a length prefix", cursor.offset
            )
        if ch == ",":
            cursor._pos += 1
            break
        if ch in _DIGITS or (ch == "-" and not prefix):
            prefix.append(ch)
            cursor._pos += 1
            if len(prefix) > 12:
                raise DataFormatError("length prefix too long", start)
            continue
        raise DataFormatError(
            f"malformed length prefix {''.join(prefix) + ch!r}", start
        )
    text = "".join(prefix)
    if text == "-1":
        length = -1
    elif text and text[0] != "-" and not (len(text) > 1 and text[0] == "0"):
        length = int(text)
    else:
        raise DataFormatError(f"malformed length prefix {text!r}", start)
    payload = cursor._take(length) if length > 0 else ""
    ch = cursor._peek()
    if ch != ";":
        found = "end of input" if ch is None else repr(ch)
        raise DataFormatError(
            f"unterminated item: expected ';', found {found}", cursor.offset
        )
    cursor._pos += 1
    return None if length < 0 else payload


def decode_row(cursor: ItemCursor, ncols: int) -> list[str | None]:
    return [decode_item(cursor) for _ in range(ncols)]


def iter_data_rows(cursor: ItemCursor, ncols: int) -> Iterator[list[str | None]]:
    """All rows from a cursor positioned at the start of the data section.

    Rows are separated — not terminated — by a single line feed; items may
    contain line feeds of their own, which the length prefixes carry
    safely past any line-based reading.
    """
    if ncols < 1:
        raise ArchiveError("a data section needs at least one column")
    if cursor.at_end():
        return
    while True:
        yield decode_row(cursor, ncols)
        if cursor.at_end():
            return
        cursor.expect_row_break()


# ---------------------------------------------------------------------------
# Text files and names


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-16-le", newline="") as handle:
        handle.write(_BOM)
        handle.write(text)


def _read_text(path: Path) -> str:
    data = path.read_bytes()
    if not data.startswith(b"\xff\xfe"):
        raise ArchiveError(f"{path.name}: missing UTF-16 byte-order mark")
    try:
        return data[2:].decode("utf-16-le")
    except UnicodeDecodeError as exc:
        raise ArchiveError(f"{path.name}: not valid UTF-16 text: {exc}") from exc


def _open_text(path: Path) -> io.TextIOWrapper:
    handle = open(path, "r", encoding="utf-16-le", newline="")
    if handle.read(1) != _BOM:
        handle.close()
        raise ArchiveError(f"{path.name}: missing UTF-16 byte-order mark")
    return handle


def _read_xml(path: Path) -> ET.Element:
    try:
        return ET.fromstring(path.read_bytes())
    except OSError as exc:
        raise ArchiveError(f"cannot read {path.name}: {exc}") from exc
    except ET.ParseError as exc:
        raise ArchiveError(f"{path.name} is not well-formed XML: {exc}") from exc


def _parse_xml_text(text: str, where: str) -> ET.Element:
    if text.startswith("<?xml"):
        end = text.find("?>")
        if end < 0:
            raise ArchiveError(f"{where}: unterminated XML declaration")
        text = text[end + 2 :]
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        raise ArchiveError(f"{where} is not well-formed XML: {exc}") from exc


def _element_text(el: ET.Element) -> str:
    ET.indent(el)
    return _XML_DECL + ET.tostring(el, encoding="unicode") + "\n"


_FS_SAFE = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-"
)


def fs_name(name: str) -> str:
    """An identifier as a safe file-name component, injectively.

    Letters, digits, underscore and hyphen pass through; every other
    character becomes the uppercase percent-escape of its UTF-8 bytes.
    Dots are escaped too, so no identifier can produce ``.`` or ``..``.
    The mapping assumes a case-sensitive file system; the manifest, which
    names every file's schema and table explicitly, stays authoritative.
    """
    out: list[str] = []
    for ch in name:
        if ch in _FS_SAFE:
            out.append(ch)
        else:
            out.append("".join(f"%{b:02X}" for b in ch.encode("utf-8")))
    return "".join(out)


def hex_dump(data: bytes) -> str:
    """Uppercase hexadecimal digit pairs, wrapped at a fixed line width."""
    text = data.hex().upper()
    return "\n".join(text[i : i + HEX_WRAP] for i in range(0, len(text), HEX_WRAP))


def parse_hex_dump(text: str) -> bytes:
    joined = text.replace("\n", "")
    if not joined:
        return b""
    bad = next((ch for ch in joined if ch not in _HEX_DIGITS), None)
    if bad is not None:
        raise ArchiveError(f"not a hexadecimal dump: unexpected {bad!r}")
    if len(joined) % 2:
        raise ArchiveError("not a hexadecimal dump: odd number of digits")
    return bytes.fromhex(joined)


# ---------------------------------------------------------------------------
# The archivable part of a cleared session


def archival_model(session: AnalysisSession) -> DatabaseModel:
    """The session's model restricted to what clearance left archivable.

    Excluded schemas, tables, columns, constraints, views and privileges
    are dropped; object classes that are documented rather than archived
    (triggers, routines, synonyms, links, users, roles, native statements)
    are dropped always — the reference document carries them instead.
    """
    keep = set(session.archivable_refs())
    model = clone_model(session.model)
    model.schemas = [
        s for s in model.schemas if make_ref("schema", s.name) in keep
    ]
    for schema in model.schemas:
        schema.tables = [
            t
            for t in schema.tables
            if make_ref("table", schema.name, t.name) in keep
        ]
        for table in schema.tables:
            table.columns = [
                c
                for c in table.columns
                if make_ref("column", schema.name, table.name, c.name) in keep
            ]
            table.constraints = [
                c
                for c in table.constraints
                if make_ref("constraint", schema.name, table.name, c.name) in keep
            ]
        schema.views = [
            v for v in schema.views if make_ref("view", schema.name, v.name) in keep
        ]
        schema.triggers = []
        schema.routines = []
        schema.synonyms = []
        schema.dblinks = []
    model.users = []
    model.roles = []
    model.privileges = [
        p
        for p in model.privileges
        if make_ref("privilege", p.privilege, p.on_schema, p.on_object, p.grantee)
        in keep
    ]
    model.native_objects = []
    model.dangling_refs = []
    dangling = model.link_references()
    if dangling:
        raise ArchiveError(
            "archivable objects reference excluded ones: " + "; ".join(dangling)
        )
    return model


def schema_order(model: DatabaseModel) -> list[str]:
    """Schema load order: a schema follows every schema it references.

    References are foreign keys and view selections into other schemas.
    Within one dependency level, schemas load alphabetically; a reference
    cycle between schemas is broken at the alphabetically first member
    (its cross-schema constraints land in later files regardless).
    """
    deps: dict[str, set[str]] = {s.name: set() for s in model.schemas}
    for schema in model.schemas:
        for table in schema.tables:
            for con in table.constraints:
                if (
                    con.kind == ConstraintKind.FOREIGN_KEY
                    and con.ref_schema
                    and con.ref_schema != schema.name
                    and con.ref_schema in deps
                ):
                    deps[schema.name].add(con.ref_schema)
        for view in schema.views:
            for ref_schema, _name in view.referenced_tables:
                if ref_schema and ref_schema != schema.name and ref_schema in deps:
                    deps[schema.name].add(ref_schema)
    order: list[str] = []
    placed: set[str] = set()
    remaining = sorted(deps)
    while remaining:
        ready = [name for name in remaining if deps[name] <= placed]
        if not ready:
            ready = [remaining[0]]
        for name in ready:
            order.append(name)
            placed.add(name)
            remaining.remove(name)
    return order


@dataclass(frozen=True)
class DdlFile:
    filename: str
    schema: str
    text: str


def ddl_files(model: DatabaseModel) -> list[DdlFile]:
    """The model as numbered per-schema DDL files in load order.

    Each file holds its schema's creation, tables in dependency order,
    views, and grants.  A foreign key into another schema is never inlined
    into its CREATE TABLE: it is emitted as an ALTER TABLE statement in the
    file of whichever of the two schemas loads later, so running the files
    in numbered order never references a missing table — even when two
    schemas reference each other.
    """
    problems = check_renderable(model)
    if problems:
        raise ArchiveError(
            "model is not renderable:\n" + "\n".join(f"  - {p}" for p in problems)
        )
    order = schema_order(model)
    seq = {name: i + 1 for i, name in enumerate(order)}
    cross: dict[str, list[tuple[str, TableDef, object]]] = {n: [] for n in order}
    stripped: dict[str, list[TableDef]] = {}
    for schema in model.schemas:
        tables = []
        for table in schema.tables:
            kept = []
            for con in table.constraints:
                if (
                    con.kind == ConstraintKind.FOREIGN_KEY
                    and con.ref_schema
                    and con.ref_schema != schema.name
                ):
                    home = (
                        schema.name
                        if seq[schema.name] >= seq.get(con.ref_schema, 0)
                        else con.ref_schema
                    )
                    cross[home].append((schema.name, table, con))
                else:
                    kept.append(con)
            tables.append(TableDef(table.name, table.columns, kept))
        stripped[schema.name] = tables
    out: list[DdlFile] = []
    for name in order:
        schema = model.schema(name)
        sub_schema = SchemaDef(
            name=schema.name,
            catalog=schema.catalog,
            implicit=schema.implicit,
            owner=schema.owner,
            tables=stripped[name],
            views=list(schema.views),
        )
        sub = DatabaseModel(schemas=[sub_schema])
        statements = [render_schema(schema)]
        tables, deferred = order_tables(sub)
        for schema_name, table, skip in tables:
            statements.append(render_table(schema_name, table, skip))
        for schema_name, table, con in deferred:
            statements.append(render_alter_constraint(schema_name, table, con))
        for schema_name, view in order_views(sub):
            statements.append(render_view(schema_name, view))
        for owner, table, con in sorted(
            cross[name], key=lambda item: (item[0], item[1].name, item[2].name)
        ):
            statements.append(render_alter_constraint(owner, table, con))
        for priv in sorted(
            (p for p in model.privileges if p.on_schema == name), key=privilege_key
        ):
            statements.append(render_grant(priv))
        out.append(
            DdlFile(
                filename=f"{seq[name]:04d}_{fs_name(name)}.sql",
                schema=name,
                text="\n\n".join(statements) + "\n",
            )
        )
    return out


# ---------------------------------------------------------------------------
# Data files


def _lob_extension(col) -> str | None:
    if not isinstance(col.col_type, ArchivalType) or not col.col_type.is_lob:
        return None
    return "blob" if col.col_type.kind is TypeKind.BLOB else "nclob"


def table_header_element(
    schema_name: str, table: TableDef, order_note: str = ""
) -> ET.Element:
    """The short XML header of one data file.

    Names, data types (sizes included in their spelling), nullability,
    defaults, and the key constraints; check constraints live in the DDL
    and the reference document instead.  Large-object columns carry a
    ``lob`` attribute naming the side-file kind their items point at.
    """
    el = ET.Element("tableData", schema=schema_name, table=table.name)
    if order_note:
        el.set("rowOrder", order_note)
    for col in table.columns:
        cel = ET.SubElement(el, "column", name=col.name, type=col.col_type.render())
        if not col.nullable:
            cel.set("nullable", "false")
        if col.default is not None:
            cel.set("default", col.default)
        ext = _lob_extension(col)
        if ext is not None:
            cel.set("lob", ext)
    for con in table.constraints:
        if con.kind == ConstraintKind.CHECK:
            continue
        kel = ET.SubElement(el, "key", kind=con.kind, name=con.name)
        if con.ref_schema is not None:
            kel.set("refSchema", con.ref_schema)
        if con.ref_table is not None:
            kel.set("refTable", con.ref_table)
        for name in con.columns:
            ET.SubElement(kel, "col", name=name)
        for name in con.ref_columns:
            ET.SubElement(kel, "refCol", name=name)
    return el


@dataclass(frozen=True)
class HeaderColumn:
    name: str
    type_text: str
    nullable: bool
    default: str | None
    lob: str | None


@dataclass(frozen=True)
class HeaderKey:
    kind: str
    name: str
    columns: tuple[str, ...]
    ref_schema: str | None
    ref_table: str | None
    ref_columns: tuple[str, ...]


@dataclass(frozen=True)
class TableHeader:
    schema: str
    table: str
    row_order: str
    columns: tuple[HeaderColumn, ...]
    keys: tuple[HeaderKey, ...]


def parse_table_header(text: str) -> TableHeader:
    el = _parse_xml_text(text, "data file header")
    if el.tag != "tableData":
        raise ArchiveError(f"expected a <tableData> header, found <{el.tag}>")
    schema = el.get("schema")
    table = el.get("table")
    if schema is None or table is None:
        raise ArchiveError("data file header lacks its schema or table name")
    columns = []
    keys = []
    for child in el:
        if child.tag == "column":
            name = child.get("name")
            type_text = child.get("type")
            if name is None or type_text is None:
                raise ArchiveError("data file header column lacks name or type")
            lob = child.get("lob")
            if lob not in (None, "nclob", "blob"):
                raise ArchiveError(f"unknown large-object kind {lob!r} in header")
            columns.append(
                HeaderColumn(
                    name=name,
                    type_text=type_text,
                    nullable=child.get("nullable") != "false",
                    default=child.get("default"),
                    lob=lob,
                )
            )
        elif child.tag == "key":
            keys.append(
                HeaderKey(
                    kind=child.get("kind", ""),
                    name=child.get("name", ""),
                    columns=tuple(
                        c.get("name", "") for c in child.findall("col")
                    ),
                    ref_schema=child.get("refSchema"),
                    ref_table=child.get("refTable"),
                    ref_columns=tuple(
                        c.get("name", "") for c in child.findall("refCol")
                    ),
                )
            )
        else:
            raise ArchiveError(f"unexpected <{child.tag}> in data file header")
    if not columns:
        raise ArchiveError("data file header declares no columns")
    return TableHeader(
        schema=schema,
        table=table,
        row_order=el.get("rowOrder", ""),
        columns=tuple(columns),
        keys=tuple(keys),
    )


@dataclass(frozen=True)
class TableFiles:
    """What writing one table produced, as archive-relative paths."""

    data_path: str
    rows: int
    lob_paths: tuple[str, ...]


def write_table_data(
    root: Path,
    schema_name: str,
    table: TableDef,
    stream: RowStream,
    fetch_lob: Callable[[LobLocator], object],
) -> TableFiles:
    """Stream one table into its data file under an archive root.

    Scalar items are written inline; every large-object cell becomes one
    side file (character content transcoded verbatim to UTF-16, binary
    content as a hexadecimal dump) whose archive-relative path is the data
    item.  On any failure the partial data file is removed before the
    error propagates, so a directory never holds a half-written table.
    """
    root = Path(root)
    rel_dir = f"data/{fs_name(schema_name)}"
    rel_path = f"{rel_dir}/{fs_name(table.name)}.txt"
    if not table.columns:
        raise ArchiveError(
            make_ref("table", schema_name, table.name)
            + ": a table without columns cannot be archived"
        )
    stream_names = [c.name for c in stream.columns]
    projection: list[int] = []
    for col in table.columns:
        try:
            projection.append(stream_names.index(col.name))
        except ValueError:
            raise ArchiveError(
                make_ref("column", schema_name, table.name, col.name)
                + ": the source stream does not deliver this column"
            ) from None
    header = table_header_element(schema_name, table, stream.order_note)
    ET.indent(header)
    path = root.joinpath(*rel_path.split("/"))
    lob_paths: list[str] = []
    rows = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-16-le", newline="") as out:
            out.write(_BOM)
            out.write(_XML_DECL)
            out.write(ET.tostring(header, encoding="unicode"))
            out.write("\n" + DATA_SENTINEL + "\n")
            for row in stream:
                if rows:
                    out.write("\n")
                ordinal = rows + 1
                for index, col in zip(projection, table.columns):
                    item = _cell_item(
                        root,
                        schema_name,
                        table,
                        col,
                        row[index],
                        ordinal,
                        fetch_lob,
                        lob_paths,
                    )
                    out.write(encode_item(item))
                rows += 1
    except BaseException:
        if path.exists():
            path.unlink()
        raise
    return TableFiles(data_path=rel_path, rows=rows, lob_paths=tuple(lob_paths))


def _cell_item(
    root: Path,
    schema_name: str,
    table: TableDef,
    col,
    cell: object,
    ordinal: int,
    fetch_lob: Callable[[LobLocator], object],
    lob_paths: list[str],
) -> str | None:
    where = (
        make_ref("column", schema_name, table.name, col.name) + f" row {ordinal}"
    )
    ext = _lob_extension(col)
    if cell is None:
        return None
    if ext is None:
        if isinstance(cell, str):
            return check_plain_text(cell, where)
        raise ArchiveError(
            f"{where}: expected text or NULL, got {type(cell).__name__}"
        )
    if ext == "nclob":
        payload = fetch_lob(cell) if isinstance(cell, LobLocator) else cell
        if not isinstance(payload, str):
            raise ArchiveError(
                f"{where}: character large object delivered as"
                f" {type(payload).__name__}, expected text"
            )
        content = check_plain_text(payload, where)
    else:
        if not isinstance(cell, LobLocator):
            raise ArchiveError(
                f"{where}: binary large object requires a locator, got"
                f" {type(cell).__name__}"
            )
        payload = fetch_lob(cell)
        if not isinstance(payload, (bytes, bytearray)):
            raise ArchiveError(
                f"{where}: binary large object delivered as"
                f" {type(payload).__name__}, expected bytes"
            )
        content = hex_dump(bytes(payload))
    rel = (
        f"lobs/{fs_name(schema_name)}/{fs_name(table.name)}/"
        f"{fs_name(col.name)}/{ordinal}.{ext}"
    )
    _write_text(root.joinpath(*rel.split("/")), content)
    lob_paths.append(rel)
    return rel


def open_table_data(
    path: Path,
) -> tuple[TableHeader, Iterator[list[str | None]]]:
    """A data file as its parsed header plus a streaming row iterator.

    The iterator owns the file handle and closes it when exhausted or
    dropped; items come back exactly as stored — large-object items are
    archive-relative paths, not payloads.
    """
    handle = _open_text(Path(path))
    try:
        header_lines: list[str] = []
        while True:
            line = handle.readline()
            if not line:
                raise ArchiveError(f"{Path(path).name}: no data sentinel line")
            if line == DATA_SENTINEL + "\n":
                break
            header_lines.append(line)
        header = parse_table_header("".join(header_lines))
    except BaseException:
        handle.close()
        raise

    def rows() -> Iterator[list[str | None]]:
        try:
            cursor = ItemCursor(handle)
            yield from iter_data_rows(cursor, len(header.columns))
        finally:
            handle.close()

    return header, rows()


# ---------------------------------------------------------------------------
# Pretty-printing

_PRETTY_CSS = """body { font-family: sans-serif; }
table.data { border-collapse: collapse; }
table.data th, table.data td { border: 1px solid #444; padding: 2px 8px; text-align: left; vertical-align: top; }
table.data th { background: #ddd; }
td.null { color: #777; font-style: italic; }"""

_NULL_LABEL = "NULL"


def render_pretty(path: Path) -> str:
    """One data file as a standalone HTML document.

    Named column headers, a full grid of horizontal and vertical lines,
    and NULL cells marked by class and label so they never read as empty
    strings.  Cell content is exactly the decoded items; large-object
    items show their archive-relative path.
    """
    header, rows = open_table_data(Path(path))
    title = html.escape(f"{header.schema}.{header.table}")
    lines = [
        "<!DOCTYPE html>",
        "<html>",
        "<head>",
        '<meta charset="utf-8"/>',
        f"<title>{title}</title>",
        "<style>",
        _PRETTY_CSS,
        "</style>",
        "</head>",
        "<body>",
        f"<h1>{title}</h1>",
        '<table class="data">',
        "<thead>",
        "<tr>"
        + "".join(
            f'<th title="{html.escape(col.type_text, quote=True)}">'
            f"{html.escape(col.name)}</th>"
            for col in header.columns
        )
        + "</tr>",
        "</thead>",
        "<tbody>",
    ]
    for row in rows:
        cells = []
        for item in row:
            if item is None:
                cells.append(f'<td class="null">{_NULL_LABEL}</td>')
            else:
                cells.append(f"<td>{html.escape(item)}</td>")
        lines.append("<tr>" + "".join(cells) + "</tr>")
    lines += ["</tbody>", "</table>", "</body>", "</html>"]
    return "\n".join(lines) + "\n"


def table_to_element(path: Path) -> ET.Element:
    """One data file re-expressed as a single XML document.

    This is the input form the pretty-print stylesheet transforms: the
    original header element followed by a ``rows`` element in which every
    item carries its text in a ``value`` attribute (NULL items carry
    ``null="true"`` instead).  Attribute storage keeps tabs, carriage
    returns and line feeds byte-exact through any XML parser.
    """
    source = Path(path)
    handle = _open_text(source)
    try:
        header_lines: list[str] = []
        while True:
            line = handle.readline()
            if not line:
                raise ArchiveError(f"{source.name}: no data sentinel line")
            if line == DATA_SENTINEL + "\n":
                break
            header_lines.append(line)
        header_el = _parse_xml_text("".join(header_lines), "data file header")
        ncols = len(header_el.findall("column"))
        root = ET.Element("tableDump")
        root.append(header_el)
        rows_el = ET.SubElement(root, "rows")
        for row in iter_data_rows(ItemCursor(handle), ncols):
            row_el = ET.SubElement(rows_el, "row")
            for item in row:
                item_el = ET.SubElement(row_el, "item")
                if item is None:
                    item_el.set("null", "true")
                else:
                    item_el.set("value", check_plain_text(item, "data item"))
    finally:
        handle.close()
    return root


def table_to_xml(path: Path) -> str:
    return _element_text(table_to_element(path))


_XSL_HEAD = """<xsl:stylesheet version="1.0" xmlns:xsl="http://www.w3.org/1999/XSL/Transform">
<xsl:output method="html"/>
<!-- Renders the XML form of one table data file (a tableDump document:
     the tableData header plus one row element per data row) as the same
     HTML table the archive software produces: named column headers, a
     full grid, NULL cells marked by class and label. -->
<xsl:template match="/tableDump">
<html>
<head>
<title><xsl:value-of select="tableData/@schema"/>.<xsl:value-of select="tableData/@table"/></title>
<style>
"""

_XSL_TAIL = """
</style>
</head>
<body>
<h1><xsl:value-of select="tableData/@schema"/>.<xsl:value-of select="tableData/@table"/></h1>
<table class="data">
<thead>
<tr>
<xsl:for-each select="tableData/column">
<th><xsl:attribute name="title"><xsl:value-of select="@type"/></xsl:attribute><xsl:value-of select="@name"/></th>
</xsl:for-each>
</tr>
</thead>
<tbody>
<xsl:for-each select="rows/row">
<tr>
<xsl:for-each select="item">
<xsl:choose>
<xsl:when test="@null = 'true'"><td class="null">NULL</td></xsl:when>
<xsl:otherwise><td><xsl:value-of select="@value"/></td></xsl:otherwise>
</xsl:choose>
</xsl:for-each>
</tr>
</xsl:for-each>
</tbody>
</table>
</body>
</html>
</xsl:template>
</xsl:stylesheet>
"""

#: The pretty-print stylesheet written into every data directory.
DMP_STYLESHEET = _XML_DECL + _XSL_HEAD + _PRETTY_CSS + _XSL_TAIL


# ---------------------------------------------------------------------------
# The reference document


def build_reference(
    session: AnalysisSession, model: DatabaseModel | None = None
) -> ET.Element:
    """The reference document: archived logic, exclusions, changelog.

    The first part mirrors the DDL as XML (the archival model, complete
    with types, keys and view queries).  The second lists every excluded
    object with its status, findings, and full definition — native source
    text included — so nothing that existed in the source goes
    undocumented; containers appear shallow because each of their members
    has an entry of its own.  The third is the session changelog verbatim.
    Together the first two parts cover every object the session tracked.
    """
    if model is None:
        model = archival_model(session)
    root = ET.Element("referenceDocument", version="1", finalized="false")
    logic = ET.SubElement(root, "archivedLogic")
    logic.append(model_to_element(model))
    objects = {
        ref: (kind, obj) for ref, kind, obj in session.model.iter_objects()
    }
    excluded_el = ET.SubElement(root, "excludedObjects")
    for ref in session.excluded_refs():
        try:
            kind, obj = objects[ref]
        except KeyError:
            raise ArchiveError(
                f"status entry {ref!r} names no object in the model"
            ) from None
        status = session.statuses[ref]
        entry = ET.SubElement(
            excluded_el, "excludedObject", ref=ref, kind=kind, bullet=status.bullet
        )
        for text in status.details:
            finding = ET.SubElement(entry, "finding")
            finding.set("text", text)
        entry.append(object_to_element(kind, obj))
    log_el = ET.SubElement(root, "changelog")
    for entry in session.changelog:
        ET.SubElement(
            log_el,
            "entry",
            at=entry.timestamp,
            actor=entry.actor,
            action=entry.action,
            target=entry.target,
            detail=entry.detail,
        )
    return root


def reference_to_xml(
    session: AnalysisSession, model: DatabaseModel | None = None
) -> str:
    return _element_text(build_reference(session, model))


# ---------------------------------------------------------------------------
# The manifest and the Archive handle


@dataclass(frozen=True)
class ArchiveFileInfo:
    path: str
    size: int
    digest: str
    kind: str
    schema: str | None = None
    table: str | None = None
    rows: int | None = None


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _file_info(
    root: Path,
    rel: str,
    kind: str,
    schema: str | None = None,
    table: str | None = None,
    rows: int | None = None,
) -> ArchiveFileInfo:
    path = root.joinpath(*rel.split("/"))
    return ArchiveFileInfo(
        path=rel,
        size=path.stat().st_size,
        digest=_sha256(path),
        kind=kind,
        schema=schema,
        table=table,
        rows=rows,
    )


def _manifest_text(
    files: list[ArchiveFileInfo], created: str, label: str
) -> str:
    root = ET.Element("archiveInfo", formatVersion=FORMAT_VERSION, created=created)
    if label:
        root.set("label", label)
    for info in sorted(files, key=lambda f: f.path):
        el = ET.SubElement(
            root,
            "file",
            path=info.path,
            size=str(info.size),
            sha256=info.digest,
            kind=info.kind,
        )
        if info.schema is not None:
            el.set("schema", info.schema)
        if info.table is not None:
            el.set("table", info.table)
        if info.rows is not None:
            el.set("rows", str(info.rows))
    return _element_text(root)


class Archive:
    """A readable archive directory plus its validated manifest."""

    def __init__(
        self,
        root: Path,
        format_version: str,
        created: str,
        label: str,
        files: tuple[ArchiveFileInfo, ...],
        findings: list[str],
    ) -> None:
        self.root = Path(root)
        self.format_version = format_version
        self.created = created
        self.label = label
        self.files = files
        self.findings = findings

    def file_info(self, path: str) -> ArchiveFileInfo | None:
        for info in self.files:
            if info.path == path:
                return info
        return None

    def data_files(self) -> list[ArchiveFileInfo]:
        return [info for info in self.files if info.kind == "data"]

    def data_file_for(self, schema: str, table: str) -> ArchiveFileInfo | None:
        for info in self.data_files():
            if info.schema == schema and info.table == table:
                return info
        return None

    def open_table(
        self, schema: str, table: str
    ) -> tuple[TableHeader, Iterator[list[str | None]]]:
        info = self.data_file_for(schema, table)
        if info is None:
            raise ArchiveError(f"no data file for {schema}.{table} in the manifest")
        return open_table_data(self.root.joinpath(*info.path.split("/")))

    def fetch_lob(self, item: str) -> str | bytes:
        """The payload behind one large-object data item."""
        rel = PurePosixPath(item)
        if (
            rel.is_absolute()
            or not rel.parts
            or rel.parts[0] != "lobs"
            or ".." in rel.parts
        ):
            raise ArchiveError(f"not a large-object reference: {item!r}")
        path = self.root.joinpath(*rel.parts)
        if not path.is_file():
            raise ArchiveError(f"large-object file {item} is missing")
        text = _read_text(path)
        if item.endswith(".blob"):
            return parse_hex_dump(text)
        if item.endswith(".nclob"):
            return text
        raise ArchiveError(f"unknown large-object extension in {item!r}")

    def ddl_text(self) -> str:
        """Every DDL file concatenated in numbered (load) order."""
        parts = []
        for info in self.files:
            if info.kind == "ddl":
                parts.append(_read_text(self.root.joinpath(*info.path.split("/"))))
        return "\n".join(parts)

    def read_reference(self) -> ET.Element:
        el = _read_xml(self.root.joinpath(*REFERENCE_PATH.split("/")))
        if el.tag != "referenceDocument":
            raise ArchiveError(
                f"expected <referenceDocument>, found <{el.tag}>"
            )
        return el

    def archived_model(self) -> DatabaseModel:
        model_el = self.read_reference().find("archivedLogic/model")
        if model_el is None:
            raise ArchiveError("reference document lacks the archived logic")
        try:
            return model_from_element(model_el)
        except ModelXmlError as exc:
            raise ArchiveError(f"unreadable archived logic: {exc}") from exc


# ---------------------------------------------------------------------------
# Creating


def create_archive(
    session: AnalysisSession,
    adapter,
    destination: Path,
    *,
    label: str = "",
) -> Archive:
    """Write a complete archive of everything the session left archivable.

    Requires a ready session (no outstanding blockers) and an empty
    destination directory.  Data is streamed table by table; the manifest
    is written last, so a directory missing it was never completed.  The
    outcome — success with counts, or the first failure with how many rows
    were written — is recorded in the session changelog, and the reference
    document carries that record.
    """
    report = readiness(session)
    if not report.ready:
        raise ArchiveError(
            "database is not ready to archive:\n"
            + "\n".join(f"  - {b}" for b in report.blockers)
        )
    dest = Path(destination)
    if dest.exists():
        if not dest.is_dir():
            raise ArchiveError(f"destination {dest} is not a directory")
        if any(dest.iterdir()):
            raise ArchiveError(f"destination {dest} is not empty")
    model = archival_model(session)
    for schema in model.schemas:
        for table in schema.tables:
            if not table.columns:
                raise ArchiveError(
                    make_ref("table", schema.name, table.name)
                    + ": no archivable columns remain; exclude the table"
                    " itself or restore a column"
                )
    try:
        rendered = ddl_files(model)
    except RenderError as exc:
        raise ArchiveError(str(exc)) from exc
    dest.mkdir(parents=True, exist_ok=True)
    files: list[ArchiveFileInfo] = []
    for ddl in rendered:
        rel = f"ddl/{ddl.filename}"
        _write_text(dest.joinpath(*rel.split("/")), ddl.text)
        files.append(_file_info(dest, rel, "ddl", schema=ddl.schema))
    total_rows = 0
    n_tables = 0
    data_dirs: set[str] = set()
    for schema in model.schemas:
        for table in schema.tables:
            tref = make_ref("table", schema.name, table.name)
            stream = adapter.stream_rows(schema.name, table.name)
            try:
                result = write_table_data(
                    dest, schema.name, table, stream, adapter.fetch_lob
                )
            except (StreamError, ArchiveError) as exc:
                rows_done = getattr(exc, "rows_delivered", stream.rows_delivered)
                session.record(
                    Actor.USER,
                    ACTION_ARCHIVE_FAILED,
                    tref,
                    f"{rows_done} row(s) written before failure: {exc};"
                    " partial data file deleted",
                )
                raise ArchiveError(f"{tref}: {exc}") from exc
            files.append(
                _file_info(
                    dest,
                    result.data_path,
                    "data",
                    schema=schema.name,
                    table=table.name,
                    rows=result.rows,
                )
            )
            for rel in result.lob_paths:
                files.append(_file_info(dest, rel, "lob"))
            total_rows += result.rows
            n_tables += 1
            data_dirs.add(result.data_path.rsplit("/", 1)[0])
    for rel_dir in sorted(data_dirs):
        rel = f"{rel_dir}/{STYLESHEET_NAME}"
        _write_text(dest.joinpath(*rel.split("/")), DMP_STYLESHEET)
        files.append(_file_info(dest, rel, "stylesheet"))
    detail = (
        f"archive written: {n_tables} table(s), {total_rows} row(s),"
        f" format {FORMAT_VERSION}"
    )
    if label:
        detail += f', label "{label}"'
    session.record(Actor.USER, ACTION_ARCHIVE_CREATED, "database:", detail)
    _write_text(
        dest.joinpath(*REFERENCE_PATH.split("/")),
        reference_to_xml(session, model),
    )
    files.append(_file_info(dest, REFERENCE_PATH, "reference"))
    (dest / "docs").mkdir(exist_ok=True)
    created = session.clock()
    _write_text(dest / MANIFEST_NAME, _manifest_text(files, created, label))
    return Archive(
        root=dest,
        format_version=FORMAT_VERSION,
        created=created,
        label=label,
        files=tuple(sorted(files, key=lambda f: f.path)),
        findings=[],
    )


# ---------------------------------------------------------------------------
# Reading


def _parse_manifest(
    path: Path,
) -> tuple[str, str, str, list[ArchiveFileInfo]]:
    doc = _read_xml(path)
    if doc.tag != "archiveInfo":
        raise ArchiveError(f"expected <archiveInfo>, found <{doc.tag}>")
    fmt = doc.get("formatVersion")
    if fmt != FORMAT_VERSION:
        raise ArchiveError(f"unsupported archive format {fmt!r}")
    infos: list[ArchiveFileInfo] = []
    for el in doc:
        if el.tag != "file":
            raise ArchiveError(f"unexpected <{el.tag}> in the manifest")
        rel = el.get("path")
        size = el.get("size")
        digest = el.get("sha256")
        kind = el.get("kind")
        if rel is None or size is None or digest is None or kind is None:
            raise ArchiveError("manifest file entry lacks a required attribute")
        if not size.isdigit():
            raise ArchiveError(f"manifest size {size!r} is not a number")
        rows_raw = el.get("rows")
        if rows_raw is not None and not rows_raw.isdigit():
            raise ArchiveError(f"manifest row count {rows_raw!r} is not a number")
        infos.append(
            ArchiveFileInfo(
                path=rel,
                size=int(size),
                digest=digest,
                kind=kind,
                schema=el.get("schema"),
                table=el.get("table"),
                rows=int(rows_raw) if rows_raw is not None else None,
            )
        )
    return fmt, doc.get("created", ""), doc.get("label", ""), infos


def _safe_relative(rel: str) -> bool:
    p = PurePosixPath(rel)
    return bool(p.parts) and not p.is_absolute() and ".." not in p.parts


def read_archive(path: Path, *, verify: bool = True) -> Archive:
    """Open an archive directory and validate it against its manifest.

    Missing or unreadable manifests raise — such a directory is an invalid
    or incomplete archive.  Everything else becomes a finding on the
    returned handle: files missing, grown, shrunk or altered since
    creation, files on disk the manifest never listed, data files whose
    row counts disagree with the manifest, and large-object references
    that no longer resolve.  With ``verify`` off, only existence and sizes
    are checked, digests and data decoding are skipped.
    """
    root = Path(path)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise ArchiveError(
            f"{root}: invalid or incomplete archive (no {MANIFEST_NAME})"
        )
    fmt, created, label, infos = _parse_manifest(manifest_path)
    findings: list[str] = []
    damaged: set[str] = set()
    seen: set[str] = set()
    for info in infos:
        if info.path in seen:
            findings.append(f"{info.path}: duplicate manifest entry")
            continue
        seen.add(info.path)
        if not _safe_relative(info.path):
            findings.append(f"{info.path}: unsafe manifest path")
            damaged.add(info.path)
            continue
        file_path = root.joinpath(*info.path.split("/"))
        if not file_path.is_file():
            findings.append(f"{info.path}: file missing")
            damaged.add(info.path)
            continue
        size = file_path.stat().st_size
        if size != info.size:
            findings.append(
                f"{info.path}: {size} byte(s) on disk, manifest says {info.size}"
            )
            damaged.add(info.path)
            continue
        if verify and _sha256(file_path) != info.digest:
            findings.append(f"{info.path}: content digest mismatch")
    expected = seen | {MANIFEST_NAME}
    for actual in sorted(root.rglob("*")):
        if not actual.is_file():
            continue
        rel = actual.relative_to(root).as_posix()
        if rel not in expected:
            findings.append(f"{rel}: file not in manifest")
    archive = Archive(
        root=root,
        format_version=fmt,
        created=created,
        label=label,
        files=tuple(infos),
        findings=findings,
    )
    if verify:
        _verify_content(archive, damaged)
    return archive


def _verify_content(archive: Archive, damaged: set[str]) -> None:
    """Deep checks: data files decode, counts agree, references resolve.

    Files already known missing or resized are skipped rather than decoded
    — one root cause, one finding.
    """
    findings = archive.findings
    lob_entries = {info.path for info in archive.files if info.kind == "lob"}
    for info in archive.data_files():
        if info.path in damaged:
            continue
        file_path = archive.root.joinpath(*info.path.split("/"))
        try:
            header, rows = open_table_data(file_path)
            count = 0
            for row in rows:
                count += 1
                for col, item in zip(header.columns, row):
                    if col.lob is None or item is None:
                        continue
                    if not _safe_relative(item) or not item.startswith("lobs/"):
                        findings.append(
                            f"{info.path} row {count}: malformed large-object"
                            f" reference {item!r}"
                        )
                    elif not archive.root.joinpath(*item.split("/")).is_file():
                        findings.append(
                            f"{info.path} row {count}: orphaned large-object"
                            f" reference {item}"
                        )
                    elif item not in lob_entries:
                        findings.append(
                            f"{info.path} row {count}: large-object file"
                            f" {item} not in manifest"
                        )
            if info.rows is not None and count != info.rows:
                findings.append(
                    f"{info.path}: {count} row(s) on disk, manifest says"
                    f" {info.rows}"
                )
            if info.schema is not None and header.schema != info.schema:
                findings.append(
                    f"{info.path}: header names schema {header.schema!r},"
                    f" manifest says {info.schema!r}"
                )
            if info.table is not None and header.table != info.table:
                findings.append(
                    f"{info.path}: header names table {header.table!r},"
                    f" manifest says {info.table!r}"
                )
        except (ArchiveError, UnicodeDecodeError, OSError) as exc:
            findings.append(f"{info.path}: unreadable data file: {exc}")
    ref_info = next(
        (info for info in archive.files if info.kind == "reference"), None
    )
    if ref_info is None:
        findings.append(f"{REFERENCE_PATH}: no reference document in the manifest")
    elif ref_info.path not in damaged:
        try:
            archive.archived_model()
        except ArchiveError as exc:
            findings.append(f"{ref_info.path}: {exc}")
