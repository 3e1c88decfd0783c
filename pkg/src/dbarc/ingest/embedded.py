"""Source adapter for the embedded relational engine (one file per schema).

Plays the expert-mode role at desk scale: it knows the engine's catalog
tables, its declared-type conventions, and which schemas are engine-internal.
Every database file is attached read-only; the adapter never writes.

A connection profile names the schema-to-file mapping:

    <connectionProfile adapter="embedded" label="payroll">
      <database schema="FLUGLE" path="flugle.db"/>
      <database schema="SCOTT" path="scott.db"/>
    </connectionProfile>
"""

from __future__ import annotations

import re
import sqlite3
import xml.etree.ElementTree as ET
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterator

from dbarc.dialect import as_native_ref, builtin_embedded_mode, resolve_type
from dbarc.ingest.base import (
    Capability,
    IngestError,
    LobLocator,
    Row,
    RowStream,
    SourceAdapter,
    SourceConnectError,
    StreamOrder,
)
from dbarc.sqlcore.model import (
    ColumnDef,
    ConstraintDef,
    ConstraintKind,
    DatabaseModel,
    SchemaDef,
    SourceDescriptor,
    TableDef,
    TriggerDef,
    ViewDef,
)
from dbarc.sqlcore.parser import parse_statement_text
from dbarc.sqlcore.types import ArchivalType, NativeTypeRef, TypeKind
from dbarc.sqlcore.values import ValueError_, render_value


def _q(name: str) -> str:
    """Quote an identifier for the embedded engine."""
    return '"' + name.replace('"', '""') + '"'


class EmbeddedAdapter(SourceAdapter):
    """Reads one or more embedded-engine database files as one source."""

    def __init__(
        self, databases: list[tuple[str, str | Path]], label: str = ""
    ) -> None:
        super().__init__()
        if not databases:
            raise SourceConnectError("connection profile names no databases")
        self.mode = builtin_embedded_mode()
        self.descriptor = SourceDescriptor(
            product="embedded engine",
            version=sqlite3.sqlite_version,
            access_mode=self.mode.name,
            label=label,
        )
        self.capabilities = frozenset(
            {
                Capability.LIST_SCHEMAS,
                Capability.INTROSPECT,
                Capability.STREAM_ROWS,
                Capability.FETCH_LOB,
                Capability.native_charset("UTF-8"),
            }
        )
        self._schemas: list[str] = []
        try:
            self._conn = sqlite3.connect("file::memory:?cache=private", uri=True)
        except sqlite3.Error as exc:
            raise SourceConnectError(f"cannot open engine session: {exc}") from exc
        for schema, path in databases:
            path = Path(path)
            if not path.is_file():
                self._conn.close()
                raise SourceConnectError(f"no database file at {path}")
            uri = f"file:{path.resolve()}?mode=ro"
            try:
                self._conn.execute(f"ATTACH DATABASE ? AS {_q(schema)}", (uri,))
            except sqlite3.Error as exc:
                self._conn.close()
                raise SourceConnectError(
                    f"cannot attach {path} as {schema}: {exc}"
                ) from exc
            self._schemas.append(schema)
        self._model: DatabaseModel | None = None

    @classmethod
    def from_profile_xml(cls, path: str | Path) -> "EmbeddedAdapter":
        path = Path(path)
        try:
            doc = ET.fromstring(path.read_text(encoding="utf-8"))
        except (OSError, ET.ParseError) as exc:
            raise SourceConnectError(f"unreadable connection profile: {exc}") from exc
        if doc.tag != "connectionProfile":
            raise SourceConnectError(f"expected <connectionProfile>, found <{doc.tag}>")
        if doc.get("adapter") != "embedded":
            raise SourceConnectError(
                f"profile is for adapter {doc.get('adapter')!r}, not embedded"
            )
        databases = [
            (el.get("schema", ""), path.parent / el.get("path", ""))
            for el in doc.findall("database")
        ]
        return cls(databases, label=doc.get("label", path.stem))

    def close(self) -> None:
        self._conn.close()

    # -- contract --------------------------------------------------------

    def list_schemas(self) -> list[str]:
        # The engine-internal temp areas are never listed; only attached
        # user databases count.
        return list(self._schemas)

    def introspect(self, selected: list[str] | None = None) -> DatabaseModel:
        self.warnings = []
        chosen = self.check_selection(selected)
        model = DatabaseModel(source=self.descriptor)
        for schema in chosen:
            sdef = SchemaDef(schema)
            model.schemas.append(sdef)
            try:
                entries = self._conn.execute(
                    f"SELECT name, type, tbl_name, sql FROM {_q(schema)}.sqlite_master "
                    f"WHERE name NOT LIKE 'sqlite_%' ORDER BY rowid"
                ).fetchall()
            except sqlite3.Error as exc:
                self.warnings.append(f"schema {schema}: catalog unreadable: {exc}")
                continue
            for name, otype, tbl_name, sql in entries:
                try:
                    if otype == "table":
                        sdef.tables.append(self._table_def(schema, name, sql or ""))
                    elif otype == "view":
                        sdef.views.append(self._view_def(schema, name, sql or ""))
                    elif otype == "trigger":
                        sdef.triggers.append(
                            TriggerDef(name, target_table=tbl_name, source_text=sql or "")
                        )
                except sqlite3.Error as exc:
                    self.warnings.append(
                        f"{schema}.{name}: introspection failed: {exc}"
                    )
        model.link_references()
        self._model = model
        return self.restrict_to_mode(model)

    def stream_rows(self, schema: str, table: str) -> RowStream:
        model = self._model if self._model is not None else self.introspect()
        tdef = model.table(schema, table)
        if tdef is None:
            raise IngestError(f"no table {schema}.{table} in the introspected model")
        order = StreamOrder.for_table(tdef)
        return RowStream(
            tuple(tdef.columns),
            self._read_rows(schema, table, tdef, order),
            order.note,
        )

    def fetch_lob(self, locator: LobLocator) -> object:
        kind, payload = locator.handle
        sql = (
            f"SELECT {_q(locator.column)} FROM "
            f"{_q(locator.schema)}.{_q(locator.table)} WHERE "
        )
        if kind == "rowid":
            sql += "rowid = ?"
            params = (payload,)
        else:
            cols, params = zip(*payload)
            sql += " AND ".join(f"{_q(c)} = ?" for c in cols)
        try:
            row = self._conn.execute(sql, tuple(params)).fetchone()
        except sqlite3.Error as exc:
            raise IngestError(f"cannot fetch LOB payload: {exc}") from exc
        if row is None:
            raise IngestError(
                f"LOB row vanished from {locator.schema}.{locator.table}"
            )
        value = row[0]
        if locator.kind == "blob":
            if value is None:
                return b""
            if isinstance(value, (bytes, bytearray, memoryview)):
                return bytes(value)
            return str(value).encode("utf-8")
        if value is None:
            return ""
        if isinstance(value, (bytes, bytearray, memoryview)):
            return bytes(value).decode("utf-8", errors="replace")
        return str(value)

    # -- introspection internals ----------------------------------------

    def _table_def(self, schema: str, name: str, sql: str) -> TableDef:
        # The engine stores the original CREATE TABLE text; when that text
        # is inside the archival grammar, parsing it yields the richest
        # model (checks, defaults, synthesized constraint names).  Catalog
        # pragmas are the fallback for engine-specific spellings.
        if sql:
            out = parse_statement_text(sql, default_schema=schema)
            if (
                out.issue is None
                and not out.flags
                and isinstance(out.produced, TableDef)
            ):
                return out.produced
        if sql and re.search(r"\bCHECK\b", sql, re.IGNORECASE):
            self.warnings.append(
                f"{schema}.{name}: check constraints in engine-specific DDL "
                f"were not recovered"
            )
        tdef = TableDef(name)
        pk_parts: list[tuple[int, str]] = []
        for _cid, cname, declared, notnull, default, pk in self._conn.execute(
            f"PRAGMA {_q(schema)}.table_info({_q(name)})"
        ):
            col_type = as_native_ref(declared) if declared else NativeTypeRef("")
            tdef.columns.append(
                ColumnDef(
                    cname,
                    col_type,
                    nullable=not notnull and not pk,
                    default=default,
                )
            )
            if pk:
                pk_parts.append((pk, cname))
        if pk_parts:
            pk_parts.sort()
            tdef.constraints.append(
                ConstraintDef(
                    f"{name}_PK",
                    ConstraintKind.PRIMARY_KEY,
                    tuple(cname for _, cname in pk_parts),
                )
            )
        fk_groups: dict[int, dict] = {}
        for fid, seq, target, src, dst, on_update, on_delete, _match in (
            self._conn.execute(f"PRAGMA {_q(schema)}.foreign_key_list({_q(name)})")
        ):
            group = fk_groups.setdefault(
                fid,
                {"target": target, "cols": [], "refs": [], "up": on_update, "down": on_delete},
            )
            group["cols"].append((seq, src))
            if dst is not None:
                group["refs"].append((seq, dst))
        for n, fid in enumerate(sorted(fk_groups), start=1):
            group = fk_groups[fid]
            tdef.constraints.append(
                ConstraintDef(
                    f"{name}_FK_{n}",
                    ConstraintKind.FOREIGN_KEY,
                    tuple(c for _, c in sorted(group["cols"])),
                    ref_schema=schema,
                    ref_table=group["target"],
                    ref_columns=tuple(c for _, c in sorted(group["refs"])),
                    on_update=_action(group["up"]),
                    on_delete=_action(group["down"]),
                )
            )
        uq_n = 0
        for _seq, iname, unique, origin, _partial in self._conn.execute(
            f"PRAGMA {_q(schema)}.index_list({_q(name)})"
        ):
            if not unique or origin != "u":
                continue
            cols = [
                cname
                for _ord, _cid, cname in self._conn.execute(
                    f"PRAGMA {_q(schema)}.index_info({_q(iname)})"
                )
                if cname is not None
            ]
            if cols:
                uq_n += 1
                tdef.constraints.append(
                    ConstraintDef(
                        f"{name}_UQ_{uq_n}", ConstraintKind.UNIQUE, tuple(cols)
                    )
                )
        return tdef

    def _view_def(self, schema: str, name: str, sql: str) -> ViewDef:
        if sql:
            out = parse_statement_text(sql, default_schema=schema)
            if (
                out.issue is None
                and not out.flags
                and isinstance(out.produced, ViewDef)
            ):
                return out.produced
        return ViewDef(name, standard=False, source_text=sql)

    # -- streaming internals --------------------------------------------

    def _read_rows(
        self, schema: str, table: str, tdef: TableDef, order: StreamOrder
    ) -> Iterator[Row]:
        col_names = [col.name for col in tdef.columns]
        select_cols = ", ".join(_q(c) for c in col_names)
        key_handle: tuple[str, ...] | None = None
        if order.columns:
            order_by = ", ".join(_q(c) for c in order.columns)
            key_handle = tuple(order.columns)
            lead = ""
        else:
            order_by = "rowid"
            lead = "rowid, "
        sql = (
            f"SELECT {lead}{select_cols} FROM {_q(schema)}.{_q(table)} "
            f"ORDER BY {order_by}"
        )
        converters = [self._converter(col) for col in tdef.columns]
        cursor = self._conn.execute(sql)
        ordinal = 0
        key_idx = (
            [col_names.index(c) for c in key_handle] if key_handle else None
        )
        for fetched in cursor:
            if lead:
                rowid, raw_items = fetched[0], fetched[1:]
                handle = ("rowid", rowid)
            else:
                raw_items = fetched
                handle = (
                    "key",
                    tuple(
                        (col_names[i], raw_items[i]) for i in (key_idx or [])
                    ),
                )
            row = tuple(
                conv(value, schema, table, col, ordinal, handle)
                for conv, value, col in zip(converters, raw_items, col_names)
            )
            ordinal += 1
            yield row

    def _converter(self, col: ColumnDef):
        resolved: ArchivalType | None
        if isinstance(col.col_type, ArchivalType):
            resolved = col.col_type
        else:
            resolved = resolve_type(col.col_type, self.mode).resolved
        kind = resolved.kind if resolved is not None else None
        lob_kind = None
        if kind in (TypeKind.CLOB, TypeKind.NCLOB):
            lob_kind = "clob"
        elif kind is TypeKind.BLOB:
            lob_kind = "blob"
        exact = (
            resolved
            if kind in (TypeKind.NUMERIC, TypeKind.DECIMAL)
            else None
        )

        def convert(value, schema, table, cname, ordinal, handle):
            if value is None:
                return None
            if lob_kind is not None:
                return LobLocator(schema, table, cname, ordinal, lob_kind, handle)
            if kind is TypeKind.BOOLEAN:
                if isinstance(value, (int, bool)):
                    return "TRUE" if value else "FALSE"
                return str(value).upper()
            if exact is not None and not isinstance(value, (bytes, bytearray)):
                # The engine stores exact numerics in whatever storage class
                # the value happens to fit (integer, float, text), so the
                # declared scale is reapplied here to get one canonical text
                # regardless of storage.  Values the declaration cannot
                # describe (flexible-typing junk, float overflow of the
                # precision) pass through verbatim instead of failing.
                try:
                    dec = (
                        Decimal(repr(value))
                        if isinstance(value, float)
                        else Decimal(str(value))
                    )
                    return render_value(dec, exact)
                except (InvalidOperation, ValueError_):
                    return str(value)
            if isinstance(value, bool):
                return "TRUE" if value else "FALSE"
            if isinstance(value, (bytes, bytearray, memoryview)):
                return bytes(value).hex().upper()
            if isinstance(value, float):
                return repr(value)
            return str(value)

        return convert


def _action(text: str | None) -> str | None:
    """Normalize the engine's referential-action spelling to the model's."""
    if not text or text.upper() == "NO ACTION":
        return None
    return text.upper()
