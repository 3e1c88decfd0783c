"""Normalized relational schema model.

One catalog/schema/object tree per source database, carrying both resolved
archival types and whatever native residue ingestion found.  Objects are
addressed throughout the package by :class:`ObjectRef` strings of the form
``kind:part.part``; parts are percent-escaped so quoted identifiers with
dots survive.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterator

from dbarc.sqlcore.types import ArchivalType, ColumnType, NativeTypeRef

ObjectRef = str

_BARE_IDENT = re.compile(r"^[A-Z][A-Z0-9_]*$")

# Words the renderer must quote when they appear as identifiers.
RESERVED_WORDS = frozenset(
    """ALL AND ANY AS ASC AUTHORIZATION BETWEEN BY CASE CAST CHECK CONSTRAINT
    CREATE CROSS CURRENT_DATE CURRENT_TIME CURRENT_TIMESTAMP DEFAULT DELETE
    DESC DISTINCT ELSE END ESCAPE EXCEPT EXISTS FALSE FOREIGN FROM FULL GRANT
    GROUP HAVING IN INNER INSERT INTERSECT IS JOIN KEY LEFT LIKE NATURAL NOT
    NULL ON OPTION OR ORDER OUTER PRIMARY PUBLIC REFERENCES RIGHT SCHEMA
    SELECT SET SOME TABLE THEN TO TRUE UNION UNIQUE UNKNOWN UPDATE USING
    VALUES VIEW WHERE WITH""".split()
)

DEFAULT_SCHEMA = "MAIN"


def render_identifier(name: str) -> str:
    """Quote ``name`` unless it survives case-folding untouched."""
    if _BARE_IDENT.match(name) and name not in RESERVED_WORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def _esc(part: str) -> str:
    return part.replace("%", "%25").replace(".", "%2E").replace(":", "%3A")


def _unesc(part: str) -> str:
    return part.replace("%3A", ":").replace("%2E", ".").replace("%25", "%")


def make_ref(kind: str, *parts: str) -> ObjectRef:
    return kind + ":" + ".".join(_esc(p) for p in parts)


def split_ref(ref: ObjectRef) -> tuple[str, list[str]]:
    kind, _, rest = ref.partition(":")
    if not rest:
        return kind, []
    return kind, [_unesc(p) for p in rest.split(".")]


@dataclass(frozen=True)
class SourceDescriptor:
    product: str = "unknown"
    version: str = ""
    access_mode: str = "generic"
    label: str = ""


@dataclass
class ColumnDef:
    name: str
    col_type: ColumnType
    nullable: bool = True
    default: str | None = None
    # Original spelling when the effective type came out of a mapping.
    native_type: NativeTypeRef | None = None

    @property
    def resolved(self) -> bool:
        return isinstance(self.col_type, ArchivalType)

    def type_text(self) -> str:
        return self.col_type.render()

    def signature(self) -> tuple:
        return (self.name, self.type_text(), self.nullable, self.default)


class ConstraintKind:
    PRIMARY_KEY = "PRIMARY_KEY"
    FOREIGN_KEY = "FOREIGN_KEY"
    UNIQUE = "UNIQUE"
    CHECK = "CHECK"


@dataclass
class ConstraintDef:
    name: str
    kind: str
    columns: tuple[str, ...] = ()
    ref_schema: str | None = None
    ref_table: str | None = None
    ref_columns: tuple[str, ...] = ()
    check_source: str = ""          # verbatim expression text for CHECK
    check_standard: bool = True
    on_delete: str | None = None
    on_update: str | None = None
    user_added: bool = False

    def signature(self) -> tuple:
        return (
            self.kind,
            self.name,
            self.columns,
            self.ref_schema,
            self.ref_table,
            self.ref_columns,
            self.check_source if self.kind == ConstraintKind.CHECK else "",
            self.on_delete,
            self.on_update,
        )


@dataclass
class TableDef:
    name: str
    columns: list[ColumnDef] = field(default_factory=list)
    constraints: list[ConstraintDef] = field(default_factory=list)

    def column(self, name: str) -> ColumnDef | None:
        for col in self.columns:
            if col.name == name:
                return col
        return None

    def primary_key(self) -> ConstraintDef | None:
        for c in self.constraints:
            if c.kind == ConstraintKind.PRIMARY_KEY:
                return c
        return None

    def constraint(self, name: str) -> ConstraintDef | None:
        for c in self.constraints:
            if c.name == name:
                return c
        return None

    def signature(self) -> tuple:
        return (
            self.name,
            tuple(col.signature() for col in self.columns),
            tuple(sorted(c.signature() for c in self.constraints)),
        )


@dataclass
class ViewDef:
    name: str
    columns: tuple[str, ...] = ()
    query: str = ""                 # canonical text when standard
    standard: bool = True
    source_text: str = ""           # verbatim CREATE VIEW as ingested
    referenced_tables: tuple[tuple[str | None, str], ...] = ()

    def signature(self) -> tuple:
        return (self.name, self.columns, self.query)


@dataclass
class TriggerDef:
    name: str
    target_table: str | None = None
    source_text: str = ""


@dataclass
class RoutineDef:
    name: str
    kind: str = "FUNCTION"          # FUNCTION or PROCEDURE
    source_text: str = ""


@dataclass
class SynonymDef:
    name: str
    target: str = ""
    source_text: str = ""


@dataclass
class DbLinkDef:
    name: str
    source_text: str = ""


@dataclass
class NativeObjectDef:
    """A statement the grammar could not place anywhere better."""

    kind_guess: str
    name: str
    source_text: str


@dataclass
class SchemaDef:
    name: str
    catalog: str | None = None
    implicit: bool = False          # materialized from a qualified reference
    owner: str | None = None
    tables: list[TableDef] = field(default_factory=list)
    views: list[ViewDef] = field(default_factory=list)
    triggers: list[TriggerDef] = field(default_factory=list)
    routines: list[RoutineDef] = field(default_factory=list)
    synonyms: list[SynonymDef] = field(default_factory=list)
    dblinks: list[DbLinkDef] = field(default_factory=list)

    def table(self, name: str) -> TableDef | None:
        for t in self.tables:
            if t.name == name:
                return t
        return None

    def view(self, name: str) -> ViewDef | None:
        for v in self.views:
            if v.name == name:
                return v
        return None


@dataclass
class UserDef:
    name: str
    source_text: str = ""


@dataclass
class RoleDef:
    name: str
    source_text: str = ""


@dataclass
class PrivilegeDef:
    privilege: str
    on_schema: str
    on_object: str
    grantee: str
    grantor: str | None = None
    grantable: bool = False

    def signature(self) -> tuple:
        return (self.privilege, self.on_schema, self.on_object, self.grantee, self.grantable)


@dataclass
class DatabaseModel:
    source: SourceDescriptor = field(default_factory=SourceDescriptor)
    catalogs: list[str] = field(default_factory=list)
    schemas: list[SchemaDef] = field(default_factory=list)
    users: list[UserDef] = field(default_factory=list)
    roles: list[RoleDef] = field(default_factory=list)
    privileges: list[PrivilegeDef] = field(default_factory=list)
    native_objects: list[NativeObjectDef] = field(default_factory=list)
    # Object classes the source adapter could not introspect at all, as
    # opposed to classes that were introspected and found empty.
    absent_classes: frozenset[str] = frozenset()
    dangling_refs: list[str] = field(default_factory=list)

    # -- lookup ---------------------------------------------------------

    def schema(self, name: str) -> SchemaDef | None:
        for s in self.schemas:
            if s.name == name:
                return s
        return None

    def ensure_schema(self, name: str, implicit: bool = True) -> SchemaDef:
        found = self.schema(name)
        if found is None:
            found = SchemaDef(name=name, implicit=implicit)
            self.schemas.append(found)
        return found

    def table(self, schema: str, name: str) -> TableDef | None:
        s = self.schema(schema)
        return s.table(name) if s else None

    def view(self, schema: str, name: str) -> ViewDef | None:
        s = self.schema(schema)
        return s.view(name) if s else None

    def find_table_any_schema(self, name: str) -> tuple[str, TableDef] | None:
        for s in self.schemas:
            t = s.table(name)
            if t is not None:
                return s.name, t
        return None

    # -- enumeration ----------------------------------------------------

    def iter_objects(self) -> Iterator[tuple[ObjectRef, str, object]]:
        """Yield (ref, kind, definition) for every addressable object."""
        for s in self.schemas:
            yield make_ref("schema", s.name), "schema", s
            for t in s.tables:
                tref = make_ref("table", s.name, t.name)
                yield tref, "table", t
                for col in t.columns:
                    yield make_ref("column", s.name, t.name, col.name), "column", col
                for con in t.constraints:
                    yield make_ref("constraint", s.name, t.name, con.name), "constraint", con
            for v in s.views:
                yield make_ref("view", s.name, v.name), "view", v
            for tr in s.triggers:
                yield make_ref("trigger", s.name, tr.name), "trigger", tr
            for r in s.routines:
                yield make_ref("routine", s.name, r.name), "routine", r
            for sy in s.synonyms:
                yield make_ref("synonym", s.name, sy.name), "synonym", sy
            for dl in s.dblinks:
                yield make_ref("dblink", s.name, dl.name), "dblink", dl
        for u in self.users:
            yield make_ref("user", u.name), "user", u
        for r in self.roles:
            yield make_ref("role", r.name), "role", r
        for p in self.privileges:
            ref = make_ref("privilege", p.privilege, p.on_schema, p.on_object, p.grantee)
            yield ref, "privilege", p
        for nobj in self.native_objects:
            yield make_ref("native", nobj.kind_guess, nobj.name), "native", nobj

    def object_at(self, ref: ObjectRef) -> object | None:
        for candidate, _, obj in self.iter_objects():
            if candidate == ref:
                return obj
        return None

    # -- structural comparison ------------------------------------------

    def signature(self, rendered_only: bool = False) -> tuple:
        """Order-insensitive structural fingerprint.

        With rendered_only, restrict to the object classes that DDL
        rendering can reproduce (schemas, tables, views, privileges).
        """
        schemas = tuple(
            sorted(
                (
                    s.name,
                    s.owner or "",
                    tuple(sorted(t.signature() for t in s.tables)),
                    tuple(sorted(v.signature() for v in s.views)),
                )
                for s in self.schemas
            )
        )
        privileges = tuple(sorted(p.signature() for p in self.privileges))
        if rendered_only:
            return (schemas, privileges)
        extras = tuple(
            sorted(
                (
                    s.name,
                    tuple(sorted((t.name, t.source_text) for t in s.triggers)),
                    tuple(sorted((r.name, r.kind, r.source_text) for r in s.routines)),
                    tuple(sorted((sy.name, sy.target) for sy in s.synonyms)),
                    tuple(sorted(dl.name for dl in s.dblinks)),
                )
                for s in self.schemas
            )
        )
        users = tuple(sorted(u.name for u in self.users))
        roles = tuple(sorted(r.name for r in self.roles))
        return (schemas, privileges, extras, users, roles)

    # -- integrity ------------------------------------------------------

    def link_references(self) -> list[str]:
        """Resolve FK targets; fill default target columns; list dangles.

        A foreign key without explicit target columns points at the target
        table's primary key.  Unresolvable references are recorded (and
        returned) rather than raised: ingestion must document, not abort.
        """
        dangling: list[str] = []
        for s in self.schemas:
            for t in s.tables:
                for con in t.constraints:
                    if con.kind != ConstraintKind.FOREIGN_KEY:
                        continue
                    if con.ref_schema is None:
                        con.ref_schema = s.name
                    target = self.table(con.ref_schema, con.ref_table or "")
                    if target is None:
                        dangling.append(
                            make_ref("constraint", s.name, t.name, con.name)
                            + " -> "
                            + make_ref("table", con.ref_schema, con.ref_table or "?")
                        )
                        continue
                    if not con.ref_columns:
                        pk = target.primary_key()
                        if pk is not None:
                            con.ref_columns = pk.columns
                    for rc in con.ref_columns:
                        if target.column(rc) is None:
                            dangling.append(
                                make_ref("constraint", s.name, t.name, con.name)
                                + " -> "
                                + make_ref("column", con.ref_schema, con.ref_table or "?", rc)
                            )
        self.dangling_refs = dangling
        return dangling


def clone_model(model: DatabaseModel) -> DatabaseModel:
    import copy

    return copy.deepcopy(model)


def qualified_name(schema: str | None, name: str) -> str:
    if schema is None:
        return render_identifier(name)
    return f"{render_identifier(schema)}.{render_identifier(name)}"
