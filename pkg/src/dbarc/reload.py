"""Reloading archives into a live, queryable target database.

An archive directory becomes a working read-only database again: the
archived DDL is translated onto an embedded engine (one database file per
schema), the data files are decoded and bulk-loaded, and a registry in the
target's storage area records which archives are loaded, who is registered
to use them, and every operation performed.  Registered users then run
validated read-only queries — joins across archives included — browse
tables page by page with the archived descriptions and code lists alongside
the data, and export result sets as CSV.

The target is self-contained after a load: the reference document travels
into the registry, so queries, browsing and metadata lookups keep working
when the source archive directory is moved away.  An archive is loaded at
most once; later users merely register.  Releasing a registration drops the
archive's database files only when the last registered user is gone, and
the event log survives the drop.

Where the embedded engine cannot enforce a construct physically — foreign
keys across database files, views selecting from more than one schema,
check constraints using syntax the engine does not parse or that the
archived rows themselves do not satisfy, privileges — the construct is
kept as registry documentation and the chosen disposition is recorded per
object.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
import sqlite3
import xml.etree.ElementTree as ET
from contextlib import closing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from dbarc.analysis import utc_clock
from dbarc.archive import (
    Archive,
    ArchiveError,
    MANIFEST_NAME,
    REFERENCE_PATH,
    fs_name,
    read_archive,
)
from dbarc.sqlcore.expr import ExpressionParser, SubsetViolation
from dbarc.sqlcore.flagger import FlagReport, format_report, validate_query
from dbarc.sqlcore.model import (
    ColumnDef,
    ConstraintDef,
    ConstraintKind,
    DatabaseModel,
    TableDef,
    ViewDef,
    make_ref,
)
from dbarc.sqlcore.modelxml import model_from_element
from dbarc.sqlcore.render import constraint_order
from dbarc.sqlcore.tokens import LexError, tokenize
from dbarc.sqlcore.types import ArchivalType, LOB_KINDS, TypeKind
from dbarc.sqlcore.values import render_value

__all__ = [
    "ACTION_DROPPED",
    "ACTION_QUERY",
    "ACTION_RELOADED",
    "ACTION_TARGET_PREPARED",
    "ACTION_USER_REGISTERED",
    "ACTION_USER_RELEASED",
    "ArchiveEntry",
    "BrowseColumn",
    "BrowsePage",
    "DISPOSITION_DOCUMENTED",
    "DISPOSITION_ENFORCED",
    "DISPOSITION_OMITTED",
    "ExcludedObject",
    "QueryRejected",
    "QueryResult",
    "REGISTRY_NAME",
    "RegistryEvent",
    "RegistryNote",
    "RegistryState",
    "ReloadError",
    "ReloadRecord",
    "ReloadTarget",
    "TargetProfile",
    "archive_identity",
    "archive_model",
    "archive_reference",
    "browse_table",
    "excluded_objects",
    "export_csv",
    "find_archive",
    "load_target_profiles",
    "prepare_target",
    "registry_state",
    "release",
    "reload_archive",
    "run_query",
    "target_profile",
]

REGISTRY_NAME = "registry.db"

# Event actions recorded in the registry log.
ACTION_TARGET_PREPARED = "target-prepared"
ACTION_RELOADED = "archive-reloaded"
ACTION_USER_REGISTERED = "user-registered"
ACTION_QUERY = "query"
ACTION_USER_RELEASED = "user-released"
ACTION_DROPPED = "archive-dropped"

# How an archived construct landed on the target.
DISPOSITION_ENFORCED = "enforced"
DISPOSITION_DOCUMENTED = "documented"
DISPOSITION_OMITTED = "omitted"

# The embedded engine refuses more than this many attached database files
# on one connection; cross-archive queries attach every loaded schema.
_MAX_ATTACHED = 10

_BATCH_ROWS = 500


class ReloadError(ValueError):
    """A reload-stage operation could not be carried out."""


class QueryRejected(ReloadError):
    """A statement failed read-only query validation and was not executed."""

    def __init__(self, report: FlagReport):
        super().__init__("query refused:\n" + format_report(report, "<query>"))
        self.report = report


# ---------------------------------------------------------------------------
# Target profiles


@dataclass(frozen=True)
class TargetProfile:
    """A pre-configured reload destination.

    Profiles are read from a configuration file and never invented at run
    time; the storage path is resolved against that file's directory.
    """

    name: str
    engine: str
    storage: Path
    manager: str
    params: tuple[tuple[str, str], ...] = ()

    def param(self, name: str) -> str | None:
        for key, value in self.params:
            if key == name:
                return value
        return None


def load_target_profiles(path: str | Path) -> tuple[TargetProfile, ...]:
    """Every target profile in a ``<targetProfiles>`` configuration file."""
    path = Path(path)
    try:
        doc = ET.parse(path).getroot()
    except (OSError, ET.ParseError) as exc:
        raise ReloadError(f"unreadable target profile file {path}: {exc}") from exc
    if doc.tag != "targetProfiles":
        raise ReloadError(
            f"expected <targetProfiles> in {path}, found <{doc.tag}>"
        )
    profiles: list[TargetProfile] = []
    seen: set[str] = set()
    for el in doc:
        if el.tag != "targetProfile":
            raise ReloadError(f"unexpected <{el.tag}> in {path}")
        name = el.get("name", "")
        engine = el.get("engine", "")
        manager = el.get("manager", "")
        if not name or not engine or not manager:
            raise ReloadError(
                f"profile in {path} lacks a name, engine or manager attribute"
            )
        if name in seen:
            raise ReloadError(f"duplicate profile name {name!r} in {path}")
        seen.add(name)
        storage_el = el.find("storage")
        storage_path = storage_el.get("path") if storage_el is not None else None
        if not storage_path:
            raise ReloadError(f"profile {name!r} in {path} names no storage area")
        params = tuple(
            (p.get("name", ""), p.get("value", ""))
            for p in el.findall("param")
        )
        profiles.append(
            TargetProfile(
                name=name,
                engine=engine,
                storage=(path.parent / storage_path).resolve(),
                manager=manager,
                params=params,
            )
        )
    if not profiles:
        raise ReloadError(f"{path} defines no target profiles")
    return tuple(profiles)


def target_profile(path: str | Path, name: str) -> TargetProfile:
    """The named profile from a configuration file."""
    for profile in load_target_profiles(path):
        if profile.name == name:
            return profile
    raise ReloadError(f"no target profile named {name!r} in {path}")


# ---------------------------------------------------------------------------
# Target handle and registry


@dataclass
class ReloadTarget:
    """An open reload destination: storage directory plus registry."""

    profile: TargetProfile
    root: Path
    clock: Callable[[], str]
    _models: dict[str, DatabaseModel] = field(default_factory=dict, repr=False)
    _references: dict[str, ET.Element] = field(default_factory=dict, repr=False)

    @property
    def registry_path(self) -> Path:
        return self.root / REGISTRY_NAME

    def _forget(self, archive_id: str) -> None:
        self._models.pop(archive_id, None)
        self._references.pop(archive_id, None)


_REGISTRY_TABLES = (
    """CREATE TABLE IF NOT EXISTS loaded_archive (
        archive_id TEXT PRIMARY KEY,
        label TEXT NOT NULL,
        source_path TEXT NOT NULL,
        loaded_at TEXT NOT NULL,
        loaded_by TEXT NOT NULL,
        with_lobs INTEGER NOT NULL,
        row_count INTEGER NOT NULL,
        reference_xml TEXT NOT NULL
    )""",
    """CREATE TABLE IF NOT EXISTS loaded_schema (
        schema_name TEXT PRIMARY KEY,
        archive_id TEXT NOT NULL,
        db_file TEXT NOT NULL
    )""",
    """CREATE TABLE IF NOT EXISTS registration (
        archive_id TEXT NOT NULL,
        user_name TEXT NOT NULL,
        registered_at TEXT NOT NULL,
        PRIMARY KEY (archive_id, user_name)
    )""",
    """CREATE TABLE IF NOT EXISTS object_note (
        archive_id TEXT NOT NULL,
        object_ref TEXT NOT NULL,
        disposition TEXT NOT NULL,
        note TEXT NOT NULL
    )""",
    """CREATE TABLE IF NOT EXISTS event (
        seq INTEGER PRIMARY KEY AUTOINCREMENT,
        at TEXT NOT NULL,
        user_name TEXT NOT NULL,
        action TEXT NOT NULL,
        archive_id TEXT NOT NULL,
        detail TEXT NOT NULL
    )""",
)


def prepare_target(
    profile: TargetProfile, *, clock: Callable[[], str] | None = None
) -> ReloadTarget:
    """Open a reload destination, creating its registry if absent.

    Idempotent: an existing registry is reused untouched.  A storage area
    that cannot be created or written raises an error naming the missing
    capability.
    """
    if profile.engine != "embedded":
        raise ReloadError(
            f"unsupported target engine {profile.engine!r}; "
            "this build reloads into the embedded engine only"
        )
    clock = clock or utc_clock()
    root = profile.storage
    if root.exists() and not root.is_dir():
        raise ReloadError(f"storage area {root} is not a directory")
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReloadError(
            f"manager account {profile.manager!r} cannot create "
            f"the storage area {root}: {exc}"
        ) from exc
    registry = root / REGISTRY_NAME
    fresh = not registry.exists()
    try:
        with closing(sqlite3.connect(registry, timeout=30)) as conn:
            for ddl in _REGISTRY_TABLES:
                conn.execute(ddl)
            if fresh:
                _event(
                    conn,
                    clock(),
                    profile.manager,
                    ACTION_TARGET_PREPARED,
                    "",
                    f"registry created in {root}",
                )
            conn.commit()
    except sqlite3.Error as exc:
        raise ReloadError(
            f"manager account {profile.manager!r} cannot write "
            f"the registry in {root}: {exc}"
        ) from exc
    return ReloadTarget(profile=profile, root=root, clock=clock)


def _registry(target: ReloadTarget) -> sqlite3.Connection:
    if not target.registry_path.is_file():
        raise ReloadError(
            f"no registry in {target.root}; prepare the target first"
        )
    return sqlite3.connect(target.registry_path, timeout=30)


def _event(
    conn: sqlite3.Connection,
    at: str,
    user: str,
    action: str,
    archive_id: str,
    detail: str,
) -> None:
    conn.execute(
        "INSERT INTO event (at, user_name, action, archive_id, detail)"
        " VALUES (?, ?, ?, ?, ?)",
        (at, user, action, archive_id, detail),
    )


def _check_user_name(name: str) -> str:
    if not name or name != name.strip():
        raise ReloadError(f"not a usable user name: {name!r}")
    if any(ord(c) < 32 or ord(c) == 127 for c in name):
        raise ReloadError(f"user name contains control characters: {name!r}")
    return name


def archive_identity(archive: Archive) -> str:
    """The archive's identity on targets: digest of its manifest file.

    The manifest lists every file with sizes and digests, so two archive
    directories with identical content share one identity no matter where
    they sit on disk.
    """
    manifest = archive.root / MANIFEST_NAME
    digest = hashlib.sha256()
    with open(manifest, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Translation onto the embedded engine


def _q(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


_EXACT_KINDS = frozenset({TypeKind.NUMERIC, TypeKind.DECIMAL})
_INT_KINDS = frozenset({TypeKind.INTEGER, TypeKind.SMALLINT})
_FLOAT_KINDS = frozenset({TypeKind.REAL, TypeKind.DOUBLE_PRECISION})

_SIMPLE_DEFAULT = re.compile(
    r"(?i)^(NULL|TRUE|FALSE|CURRENT_DATE|CURRENT_TIME|CURRENT_TIMESTAMP"
    r"|[+-]?\d+(\.\d+)?([eE][+-]?\d+)?|'([^']|'')*')$"
)

# Standard syntax the embedded engine cannot parse or evaluate; check
# constraints using it are kept as documentation instead of being created.
_UNSUPPORTED_CHECK_WORDS = frozenset(
    {
        "SELECT",
        "EXISTS",
        "SUBSTRING",
        "POSITION",
        "EXTRACT",
        "OVERLAPS",
        "CURRENT_USER",
        "SESSION_USER",
        "USER",
    }
)


def _decimal_route(atype: ArchivalType) -> str:
    """How an exact numeric column is stored: 'int', 'approx' or 'text'.

    The embedded engine has 64-bit integers and binary doubles.  Scale-zero
    columns up to 18 digits load as exact integers; fractional columns up
    to 15 significant digits load through the engine's numeric storage,
    which reproduces their value exactly under shortest-round-trip
    rendering.  Anything wider is stored as canonical text so no digit is
    ever lost; such columns compare as text in queries, which the registry
    notes per column.
    """
    if atype.precision is None:
        return "text"
    if (atype.scale or 0) == 0 and atype.precision <= 18:
        return "int"
    if atype.precision <= 15:
        return "approx"
    return "text"


def _column_decl(atype: ArchivalType) -> str:
    decl = atype.render()
    if atype.kind in _EXACT_KINDS and _decimal_route(atype) == "text":
        # The extra word gives the column text affinity on the embedded
        # engine, keeping every digit of wide decimals.
        head, paren, tail = decl.partition("(")
        return f"{head} TEXT{paren}{tail}"
    return decl


def _check_obstacle(expression: str) -> str | None:
    """Why a standard check expression cannot run on the embedded engine."""
    try:
        tokens = tokenize(expression)
    except LexError as exc:
        return f"unreadable expression: {exc}"
    for index, tok in enumerate(tokens):
        if tok.is_kw("SELECT", "EXISTS"):
            return "the embedded engine prohibits subqueries in check constraints"
        if tok.is_kw("SUBSTRING", "POSITION", "EXTRACT", "OVERLAPS"):
            return f"the embedded engine does not parse {tok.value}"
        if tok.is_kw("CURRENT_USER", "SESSION_USER", "USER"):
            return f"the embedded engine does not provide {tok.value}"
        if tok.is_kw("TRIM") and index + 2 < len(tokens):
            if tokens[index + 2].is_kw("LEADING", "TRAILING", "BOTH"):
                return "the embedded engine does not parse TRIM with a trim specification"
    return None


def _constraint_sql(
    schema_name: str, con: ConstraintDef
) -> tuple[str | None, tuple[str, str] | None]:
    """One table constraint as engine DDL, or a documentation note."""
    head = f"CONSTRAINT {_q(con.name)}"
    cols = ", ".join(_q(c) for c in con.columns)
    if con.kind == ConstraintKind.PRIMARY_KEY:
        return f"{head} PRIMARY KEY ({cols})", None
    if con.kind == ConstraintKind.UNIQUE:
        return f"{head} UNIQUE ({cols})", None
    if con.kind == ConstraintKind.FOREIGN_KEY:
        ref_schema = con.ref_schema or schema_name
        if ref_schema != schema_name:
            return None, (
                DISPOSITION_DOCUMENTED,
                f"foreign key references {ref_schema}.{con.ref_table} in "
                "another database file; recorded as documentation because "
                "the embedded engine cannot enforce references across files",
            )
        text = f"{head} FOREIGN KEY ({cols}) REFERENCES {_q(con.ref_table or '')}"
        if con.ref_columns:
            text += " (" + ", ".join(_q(c) for c in con.ref_columns) + ")"
        if con.on_delete:
            text += f" ON DELETE {con.on_delete}"
        if con.on_update:
            text += f" ON UPDATE {con.on_update}"
        return text, None
    if con.kind == ConstraintKind.CHECK:
        obstacle = _check_obstacle(con.check_source)
        if obstacle:
            return None, (
                DISPOSITION_DOCUMENTED,
                f"check constraint recorded as documentation: {obstacle}",
            )
        return (
            f"{head} CHECK ({con.check_source})",
            (DISPOSITION_ENFORCED, "check constraint enforced by the target engine"),
        )
    return None, (
        DISPOSITION_DOCUMENTED,
        f"constraint kind {con.kind} recorded as documentation",
    )


def _table_sql(
    schema_name: str,
    table: TableDef,
    with_lobs: bool,
    demoted: dict[str, str] | None = None,
) -> tuple[str, list[tuple[str, str, str]]]:
    """CREATE TABLE for the embedded engine plus per-object registry notes.

    ``demoted`` names check constraints that must become documentation
    because the archived rows themselves do not satisfy them.
    """
    demoted = demoted or {}
    notes: list[tuple[str, str, str]] = []
    entries: list[str] = []
    for col in table.columns:
        atype = col.col_type
        if not isinstance(atype, ArchivalType):
            raise ReloadError(
                f"column {schema_name}.{table.name}.{col.name} carries an "
                f"unresolved type {col.type_text()}; the archive is not loadable"
            )
        parts = [_q(col.name), _column_decl(atype)]
        if col.default is not None and _SIMPLE_DEFAULT.match(col.default):
            parts.append(f"DEFAULT {col.default}")
        col_ref = make_ref("column", schema_name, table.name, col.name)
        omit_lob = not with_lobs and atype.is_lob
        if omit_lob:
            note = "large objects omitted at reload; the column loads NULL"
            if not col.nullable:
                note += " and its NOT NULL constraint is relaxed on the target"
            notes.append((col_ref, DISPOSITION_OMITTED, note))
        elif not col.nullable:
            parts.append("NOT NULL")
        if atype.kind in _EXACT_KINDS and _decimal_route(atype) == "text":
            notes.append(
                (
                    col_ref,
                    DISPOSITION_DOCUMENTED,
                    f"{atype.render()} exceeds the embedded engine's exact "
                    "numeric range; values are stored as canonical text and "
                    "compare as text in queries",
                )
            )
        entries.append(" ".join(parts))
    cons = sorted(table.constraints, key=constraint_order)
    for con in cons:
        ref = make_ref("constraint", schema_name, table.name, con.name)
        if con.kind == ConstraintKind.CHECK and con.name in demoted:
            notes.append((ref, DISPOSITION_DOCUMENTED, demoted[con.name]))
            continue
        text, note = _constraint_sql(schema_name, con)
        if text is not None:
            entries.append(text)
        if note is not None:
            notes.append((ref, note[0], note[1]))
    body = ",\n  ".join(entries)
    stmt = f"CREATE TABLE {_q(schema_name)}.{_q(table.name)} (\n  {body}\n)"
    return stmt, notes


def _view_obstacle(schema_name: str, view: ViewDef) -> str | None:
    for dep_schema, dep_name in view.referenced_tables:
        if dep_schema is not None and dep_schema != schema_name:
            return (
                f"view selects from {dep_schema}.{dep_name} in another "
                "database file; the embedded engine only stores views over "
                "their own file, so the definition is recorded as documentation"
            )
    return None


def _view_sql(schema_name: str, view: ViewDef) -> str:
    head = f"CREATE VIEW {_q(schema_name)}.{_q(view.name)}"
    if view.columns:
        head += " (" + ", ".join(_q(c) for c in view.columns) + ")"
    return f"{head} AS {view.query}"


def _fn_char_length(value: object) -> int | None:
    if value is None:
        return None
    if isinstance(value, bytes):
        return len(value)
    return len(str(value))


def _fn_octet_length(value: object) -> int | None:
    if value is None:
        return None
    if isinstance(value, bytes):
        return len(value)
    return len(str(value).encode("utf-8"))


def _fn_mod(a: object, b: object) -> object:
    if a is None or b is None:
        return None
    if isinstance(a, int) and isinstance(b, int):
        if b == 0:
            raise ValueError("MOD by zero")
        magnitude = abs(a) - (abs(a) // abs(b)) * abs(b)
        return magnitude if a >= 0 else -magnitude
    import math

    return math.fmod(float(a), float(b))  # type: ignore[arg-type]


def _register_functions(conn: sqlite3.Connection) -> None:
    """Standard scalar functions the embedded engine lacks natively."""
    conn.create_function("CHAR_LENGTH", 1, _fn_char_length, deterministic=True)
    conn.create_function("CHARACTER_LENGTH", 1, _fn_char_length, deterministic=True)
    conn.create_function("OCTET_LENGTH", 1, _fn_octet_length, deterministic=True)
    conn.create_function("MOD", 2, _fn_mod, deterministic=True)


# ---------------------------------------------------------------------------
# Data loading


class _CheckViolation(Exception):
    """Archived rows do not satisfy a physically created check constraint."""

    def __init__(self, constraint_name: str):
        super().__init__(constraint_name)
        self.constraint_name = constraint_name


_CHECK_FAILED = re.compile(r"CHECK constraint failed: (.+)$")


def _item_loader(
    atype: ArchivalType, with_lobs: bool, archive: Archive
) -> Callable[[str | None], object]:
    kind = atype.kind
    if kind in LOB_KINDS:
        if not with_lobs:
            return lambda item: None
        return lambda item: None if item is None else archive.fetch_lob(item)
    if kind in _INT_KINDS:
        return lambda item: None if item is None else int(item, 10)
    if kind is TypeKind.BOOLEAN:

        def boolean(item: str | None) -> int | None:
            if item is None:
                return None
            if item == "TRUE":
                return 1
            if item == "FALSE":
                return 0
            raise ValueError(f"not a boolean: {item!r}")

        return boolean
    if kind in _FLOAT_KINDS:
        return lambda item: None if item is None else float(item)
    if kind in _EXACT_KINDS and _decimal_route(atype) == "int":
        return lambda item: None if item is None else int(item, 10)
    # Fractional decimals, character data and date/time kinds load as their
    # canonical text; column affinity decides the storage representation.
    return lambda item: item


def _load_table(
    writer: sqlite3.Connection,
    archive: Archive,
    schema_name: str,
    table: TableDef,
    with_lobs: bool,
) -> int:
    info = archive.data_file_for(schema_name, table.name)
    if info is None:
        raise ReloadError(
            f"no data file for {schema_name}.{table.name} in the manifest"
        )
    header, rows = archive.open_table(schema_name, table.name)
    header_names = [c.name for c in header.columns]
    model_names = [c.name for c in table.columns]
    if header_names != model_names:
        raise ReloadError(
            f"{info.path}: data file columns {header_names} disagree with "
            f"the archived table definition {model_names}"
        )
    loaders = [
        _item_loader(col.col_type, with_lobs, archive)  # type: ignore[arg-type]
        for col in table.columns
    ]
    insert = (
        f"INSERT INTO {_q(schema_name)}.{_q(table.name)} "
        f"VALUES ({', '.join('?' * len(loaders))})"
    )
    count = 0
    batch: list[list[object]] = []
    try:
        for number, row in enumerate(rows, start=1):
            try:
                batch.append([load(item) for load, item in zip(loaders, row)])
            except (ValueError, ArchiveError) as exc:
                raise ReloadError(f"{info.path} row {number}: {exc}") from exc
            if len(batch) >= _BATCH_ROWS:
                writer.executemany(insert, batch)
                count += len(batch)
                batch = []
        if batch:
            writer.executemany(insert, batch)
            count += len(batch)
    except ReloadError:
        raise
    except ArchiveError as exc:
        raise ReloadError(f"{info.path}: {exc}") from exc
    except sqlite3.IntegrityError as exc:
        failed = _CHECK_FAILED.search(str(exc))
        if failed:
            raise _CheckViolation(failed.group(1)) from exc
        raise ReloadError(
            f"{info.path}: the target engine refused rows near row "
            f"{count + len(batch)}: {exc}"
        ) from exc
    except sqlite3.Error as exc:
        raise ReloadError(
            f"{info.path}: the target engine refused rows near row "
            f"{count + len(batch)}: {exc}"
        ) from exc
    return count


def _create_and_load(
    writer: sqlite3.Connection,
    archive: Archive,
    schema_name: str,
    table: TableDef,
    with_lobs: bool,
) -> tuple[int, list[tuple[str, str, str]]]:
    """Create one table and load its rows, demoting checks the data breaks.

    A check constraint the archived rows violate cannot be enforced over
    this data; the table is rebuilt without it, the rows load unaltered,
    and a registry note records the demotion.
    """
    check_names = {
        c.name for c in table.constraints if c.kind == ConstraintKind.CHECK
    }
    demoted: dict[str, str] = {}
    while True:
        stmt, notes = _table_sql(schema_name, table, with_lobs, demoted)
        try:
            writer.execute(stmt)
        except sqlite3.Error as exc:
            raise ReloadError(
                f"DDL failed for table {schema_name}.{table.name}: "
                f"{exc}\nstatement:\n{stmt}"
            ) from exc
        try:
            count = _load_table(writer, archive, schema_name, table, with_lobs)
        except _CheckViolation as violation:
            name = violation.constraint_name
            if name not in check_names or name in demoted:
                raise ReloadError(
                    f"{schema_name}.{table.name}: archived rows violate "
                    f"check constraint {name}"
                ) from violation
            demoted[name] = (
                "archived rows do not satisfy this check constraint; "
                "recorded as documentation so the data loads unaltered"
            )
            writer.execute(f"DROP TABLE {_q(schema_name)}.{_q(table.name)}")
            continue
        return count, notes


# ---------------------------------------------------------------------------
# Reloading


@dataclass(frozen=True)
class ReloadRecord:
    """What one reload call did."""

    archive_id: str
    label: str
    loaded: bool
    schemas: tuple[str, ...]
    tables_loaded: int
    rows_loaded: int
    with_lobs: bool
    users: tuple[str, ...]


def _registered_users(conn: sqlite3.Connection, archive_id: str) -> tuple[str, ...]:
    rows = conn.execute(
        "SELECT user_name FROM registration WHERE archive_id = ?"
        " ORDER BY user_name",
        (archive_id,),
    ).fetchall()
    return tuple(r[0] for r in rows)


def _register_user(
    target: ReloadTarget,
    conn: sqlite3.Connection,
    archive_id: str,
    user: str,
    at: str,
) -> None:
    known = conn.execute(
        "SELECT 1 FROM registration WHERE archive_id = ? AND user_name = ?",
        (archive_id, user),
    ).fetchone()
    if known is None:
        conn.execute(
            "INSERT INTO registration (archive_id, user_name, registered_at)"
            " VALUES (?, ?, ?)",
            (archive_id, user, at),
        )
        _event(
            conn, at, user, ACTION_USER_REGISTERED, archive_id,
            f"user {user} registered",
        )
        conn.commit()


def _already_loaded_record(
    conn: sqlite3.Connection, archive_id: str
) -> ReloadRecord:
    row = conn.execute(
        "SELECT label, with_lobs FROM loaded_archive WHERE archive_id = ?",
        (archive_id,),
    ).fetchone()
    schemas = tuple(
        r[0]
        for r in conn.execute(
            "SELECT schema_name FROM loaded_schema WHERE archive_id = ?"
            " ORDER BY schema_name",
            (archive_id,),
        ).fetchall()
    )
    return ReloadRecord(
        archive_id=archive_id,
        label=row[0],
        loaded=False,
        schemas=schemas,
        tables_loaded=0,
        rows_loaded=0,
        with_lobs=bool(row[1]),
        users=_registered_users(conn, archive_id),
    )


def reload_archive(
    target: ReloadTarget,
    archive: Archive | str | Path,
    user: str,
    *,
    with_lobs: bool = True,
) -> ReloadRecord:
    """Load an archive into the target, or register another user of it.

    A path is read and fully verified first; an archive with findings is
    refused.  If the registry already lists the archive, nothing is loaded
    and the user is merely registered.  Otherwise every schema becomes one
    database file, the archived tables and views are created, and the data
    files are decoded and inserted; with_lobs=False loads NULL in place of
    large objects and notes the omission per column.  The reference
    document is copied into the registry, so the target stays usable when
    the source archive directory disappears.
    """
    _check_user_name(user)
    if not isinstance(archive, Archive):
        archive = read_archive(Path(archive))
    if archive.findings:
        shown = "\n".join(f"  - {f}" for f in archive.findings[:8])
        raise ReloadError(f"archive fails verification:\n{shown}")
    archive_id = archive_identity(archive)
    label = archive.label or archive_id[:12]
    now = target.clock()

    with closing(_registry(target)) as conn:
        present = conn.execute(
            "SELECT 1 FROM loaded_archive WHERE archive_id = ?", (archive_id,)
        ).fetchone()
        if present:
            _register_user(target, conn, archive_id, user, now)
            return _already_loaded_record(conn, archive_id)

    model = archive.archived_model()
    schema_names = [s.name for s in model.schemas]

    with closing(_registry(target)) as conn:
        for name in schema_names:
            holder = conn.execute(
                "SELECT a.label, a.archive_id FROM loaded_schema s"
                " JOIN loaded_archive a ON a.archive_id = s.archive_id"
                " WHERE s.schema_name = ?",
                (name,),
            ).fetchone()
            if holder:
                raise ReloadError(
                    f"schema {name} is already loaded from archive "
                    f"{holder[0]!r} ({holder[1][:12]}); release it first"
                )

    files = {
        name: target.root / f"{archive_id[:12]}_{fs_name(name)}.db"
        for name in schema_names
    }
    for path in files.values():
        path.unlink(missing_ok=True)

    writer = sqlite3.connect("file::memory:?cache=private", uri=True)
    notes: list[tuple[str, str, str]] = []
    rows_loaded = 0
    tables_loaded = 0
    try:
        _register_functions(writer)
        for name, path in files.items():
            try:
                writer.execute(f"ATTACH DATABASE ? AS {_q(name)}", (str(path),))
            except sqlite3.Error as exc:
                raise ReloadError(
                    f"manager account {target.profile.manager!r} cannot "
                    f"create the database file {path}: {exc}"
                ) from exc
        for schema in model.schemas:
            for table in schema.tables:
                loaded, table_notes = _create_and_load(
                    writer, archive, schema.name, table, with_lobs
                )
                rows_loaded += loaded
                tables_loaded += 1
                notes.extend(table_notes)
        for schema in model.schemas:
            for view in schema.views:
                view_ref = make_ref("view", schema.name, view.name)
                obstacle = _view_obstacle(schema.name, view)
                if obstacle is None:
                    try:
                        writer.execute(_view_sql(schema.name, view))
                    except sqlite3.Error as exc:
                        obstacle = (
                            f"view could not be created on the target ({exc}); "
                            "its definition is recorded as documentation"
                        )
                if obstacle is not None:
                    notes.append((view_ref, DISPOSITION_DOCUMENTED, obstacle))
        if model.privileges:
            notes.append(
                (
                    "database:",
                    DISPOSITION_DOCUMENTED,
                    f"{len(model.privileges)} archived privilege(s) recorded "
                    "as documentation; the target serves every registered "
                    "user read-only",
                )
            )
        writer.commit()
    except BaseException:
        writer.close()
        for path in files.values():
            path.unlink(missing_ok=True)
            Path(str(path) + "-journal").unlink(missing_ok=True)
        raise
    writer.close()

    reference_text = (archive.root.joinpath(*REFERENCE_PATH.split("/"))).read_text(
        encoding="utf-16"
    )

    with closing(_registry(target)) as conn:
        try:
            with conn:
                conn.execute(
                    "INSERT INTO loaded_archive (archive_id, label,"
                    " source_path, loaded_at, loaded_by, with_lobs,"
                    " row_count, reference_xml)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        archive_id,
                        label,
                        str(archive.root),
                        now,
                        user,
                        int(with_lobs),
                        rows_loaded,
                        reference_text,
                    ),
                )
                for name, path in files.items():
                    conn.execute(
                        "INSERT INTO loaded_schema (schema_name, archive_id,"
                        " db_file) VALUES (?, ?, ?)",
                        (name, archive_id, path.name),
                    )
                for ref, disposition, note in notes:
                    conn.execute(
                        "INSERT INTO object_note (archive_id, object_ref,"
                        " disposition, note) VALUES (?, ?, ?, ?)",
                        (archive_id, ref, disposition, note),
                    )
                conn.execute(
                    "INSERT INTO registration (archive_id, user_name,"
                    " registered_at) VALUES (?, ?, ?)",
                    (archive_id, user, now),
                )
                _event(
                    conn,
                    now,
                    user,
                    ACTION_RELOADED,
                    archive_id,
                    f"{len(schema_names)} schema(s), {tables_loaded} table(s), "
                    f"{rows_loaded} row(s) from {archive.root}",
                )
                _event(
                    conn, now, user, ACTION_USER_REGISTERED, archive_id,
                    f"user {user} registered",
                )
        except sqlite3.IntegrityError:
            # Another loader won the race; keep its copy, drop ours.
            for path in files.values():
                path.unlink(missing_ok=True)
            present = conn.execute(
                "SELECT 1 FROM loaded_archive WHERE archive_id = ?",
                (archive_id,),
            ).fetchone()
            if present is None:
                raise
            _register_user(target, conn, archive_id, user, now)
            return _already_loaded_record(conn, archive_id)

        return ReloadRecord(
            archive_id=archive_id,
            label=label,
            loaded=True,
            schemas=tuple(schema_names),
            tables_loaded=tables_loaded,
            rows_loaded=rows_loaded,
            with_lobs=with_lobs,
            users=_registered_users(conn, archive_id),
        )


# ---------------------------------------------------------------------------
# Registry-backed metadata


def _reference_element(target: ReloadTarget, archive_id: str) -> ET.Element:
    cached = target._references.get(archive_id)
    if cached is not None:
        return cached
    with closing(_registry(target)) as conn:
        row = conn.execute(
            "SELECT reference_xml FROM loaded_archive WHERE archive_id = ?",
            (archive_id,),
        ).fetchone()
    if row is None:
        raise ReloadError(f"archive {archive_id!r} is not loaded")
    try:
        element = ET.fromstring(row[0])
    except ET.ParseError as exc:
        raise ReloadError(
            f"registry holds an unreadable reference document for "
            f"{archive_id!r}: {exc}"
        ) from exc
    target._references[archive_id] = element
    return element


def archive_reference(target: ReloadTarget, archive_id: str) -> ET.Element:
    """The loaded archive's reference document, straight from the registry."""
    return _reference_element(target, archive_id)


def archive_model(target: ReloadTarget, archive_id: str) -> DatabaseModel:
    """The archived logic of a loaded archive, parsed from the registry."""
    cached = target._models.get(archive_id)
    if cached is not None:
        return cached
    doc = _reference_element(target, archive_id)
    model_el = doc.find("archivedLogic/model")
    if model_el is None:
        raise ReloadError(
            f"registry reference document for {archive_id!r} lacks the "
            "archived logic"
        )
    model = model_from_element(model_el)
    target._models[archive_id] = model
    return model


@dataclass(frozen=True)
class ExcludedObject:
    """One object the archive documents but does not carry as data."""

    ref: str
    kind: str
    bullet: str
    findings: tuple[str, ...]
    definition: str


def excluded_objects(
    target: ReloadTarget, archive_id: str
) -> tuple[ExcludedObject, ...]:
    """Documented-only objects of a loaded archive, with their reasons.

    The definition is the object's archived source: a view's query text,
    a trigger's native source, and so on — so excluded ("gray") objects can
    be shown beside the loaded data without the archive directory.
    """
    doc = _reference_element(target, archive_id)
    out: list[ExcludedObject] = []
    for el in doc.findall("excludedObjects/excludedObject"):
        findings = tuple(f.get("text", "") for f in el.findall("finding"))
        definition = ""
        for child in el:
            if child.tag == "finding":
                continue
            definition = (
                child.get("query")
                or child.get("sourceText")
                or child.get("type")
                or ""
            )
            break
        out.append(
            ExcludedObject(
                ref=el.get("ref", ""),
                kind=el.get("kind", ""),
                bullet=el.get("bullet", ""),
                findings=findings,
                definition=definition,
            )
        )
    return tuple(out)


def _loaded_schemas(
    conn: sqlite3.Connection,
) -> dict[str, tuple[str, str]]:
    """schema name -> (archive id, database file name)."""
    rows = conn.execute(
        "SELECT schema_name, archive_id, db_file FROM loaded_schema"
    ).fetchall()
    return {r[0]: (r[1], r[2]) for r in rows}


def find_archive(target: ReloadTarget, key: str) -> str:
    """Resolve an archive id, unique id prefix, or label to the full id."""
    with closing(_registry(target)) as conn:
        rows = conn.execute(
            "SELECT archive_id, label FROM loaded_archive"
        ).fetchall()
    exact = [r[0] for r in rows if r[0] == key]
    if exact:
        return exact[0]
    by_label = [r[0] for r in rows if r[1] == key]
    if len(by_label) == 1:
        return by_label[0]
    if len(by_label) > 1:
        raise ReloadError(
            f"label {key!r} names {len(by_label)} loaded archives; "
            "use the archive id"
        )
    by_prefix = [r[0] for r in rows if r[0].startswith(key)] if key else []
    if len(by_prefix) == 1:
        return by_prefix[0]
    if len(by_prefix) > 1:
        raise ReloadError(f"archive id prefix {key!r} is ambiguous")
    raise ReloadError(f"no loaded archive matches {key!r}")


# ---------------------------------------------------------------------------
# Queries


@dataclass(frozen=True)
class QueryResult:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    truncated: bool = False


def _merged_model(target: ReloadTarget, archive_ids: Iterable[str]) -> DatabaseModel:
    merged = DatabaseModel()
    for archive_id in archive_ids:
        model = archive_model(target, archive_id)
        merged.schemas.extend(model.schemas)
    return merged


def _referenced_schemas(sql_text: str) -> set[str]:
    """Schema names a validated query names explicitly."""
    parser = ExpressionParser(tokenize(sql_text.strip()))
    try:
        parser.parse_query_expr()
        parser.expect_end()
    except SubsetViolation:  # pragma: no cover - validation ran first
        return set()
    return {schema for schema, _ in parser.tables if schema is not None}


def _attach_all_readonly(
    conn: sqlite3.Connection, target: ReloadTarget, schemas: dict[str, tuple[str, str]]
) -> None:
    for name, (_aid, db_file) in sorted(schemas.items()):
        uri = f"file:{(target.root / db_file).resolve()}?mode=ro"
        conn.execute(f"ATTACH DATABASE ? AS {_q(name)}", (uri,))


def run_query(
    target: ReloadTarget,
    sql_text: str,
    user: str,
    *,
    max_rows: int | None = None,
) -> QueryResult:
    """Execute one validated read-only query over the loaded archives.

    The statement must pass subset query validation — anything mutating or
    out of scope is refused before it ever reaches the target engine.  The
    user must be registered for every archive the query names explicitly;
    the connection attaches every loaded schema, so joins across archives
    work.  The run is recorded in the registry event log.
    """
    _check_user_name(user)
    with closing(_registry(target)) as conn:
        schemas = _loaded_schemas(conn)
        archive_ids = sorted({aid for aid, _ in schemas.values()})
        registered = {
            aid for aid in archive_ids
            if conn.execute(
                "SELECT 1 FROM registration WHERE archive_id = ?"
                " AND user_name = ?",
                (aid, user),
            ).fetchone()
        }
        labels = {
            r[0]: r[1]
            for r in conn.execute(
                "SELECT archive_id, label FROM loaded_archive"
            ).fetchall()
        }
    if not registered:
        raise ReloadError(
            f"user {user!r} is not registered for any loaded archive"
        )
    report = validate_query(sql_text, _merged_model(target, archive_ids))
    if not report.conforming:
        raise QueryRejected(report)
    for name in sorted(_referenced_schemas(sql_text)):
        owner = schemas.get(name)
        if owner is None:
            continue
        if owner[0] not in registered:
            raise ReloadError(
                f"user {user!r} is not registered for archive "
                f"{labels.get(owner[0], owner[0])!r} (schema {name})"
            )
    if len(schemas) > _MAX_ATTACHED:
        raise ReloadError(
            f"{len(schemas)} schemas are loaded but the embedded engine "
            f"attaches at most {_MAX_ATTACHED} database files per "
            "connection; release an archive first"
        )
    conn = sqlite3.connect("file::memory:?cache=private", uri=True)
    try:
        _register_functions(conn)
        _attach_all_readonly(conn, target, schemas)
        conn.execute("PRAGMA query_only = 1")
        try:
            cursor = conn.execute(sql_text)
        except sqlite3.Error as exc:
            raise ReloadError(f"query failed: {exc}") from exc
        columns = tuple(d[0] for d in cursor.description or ())
        rows: list[tuple] = []
        truncated = False
        for row in cursor:
            if max_rows is not None and len(rows) >= max_rows:
                truncated = True
                break
            rows.append(tuple(row))
    finally:
        conn.close()
    summary = " ".join(sql_text.split())
    if len(summary) > 200:
        summary = summary[:200] + "…"
    with closing(_registry(target)) as reg:
        _event(reg, target.clock(), user, ACTION_QUERY, "", summary)
        reg.commit()
    return QueryResult(columns=columns, rows=tuple(rows), truncated=truncated)


# ---------------------------------------------------------------------------
# CSV export


def _csv_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bytes):
        return value.hex().upper()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_csv(
    result: "QueryResult | BrowsePage | tuple[Sequence[str], Iterable[Sequence[object]]]",
    destination: str | Path | None = None,
) -> str:
    """A result set or table page as CSV, double-quoted where needed.

    Values are comma-separated, quotes inside a value are doubled, the
    first record carries the column names, and records end with CR LF.
    NULL becomes the empty field.
    """
    if isinstance(result, QueryResult):
        columns: Sequence[str] = result.columns
        rows: Iterable[Sequence[object]] = result.rows
    elif isinstance(result, BrowsePage):
        columns = [c.name for c in result.columns]
        rows = result.rows
    else:
        columns, rows = result
    buffer = io.StringIO()
    writer = csv.writer(
        buffer,
        delimiter=",",
        quotechar='"',
        doublequote=True,
        lineterminator="\r\n",
        quoting=csv.QUOTE_MINIMAL,
    )
    writer.writerow(list(columns))
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    text = buffer.getvalue()
    if destination is not None:
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    return text


# ---------------------------------------------------------------------------
# Browsing


@dataclass(frozen=True)
class BrowseColumn:
    name: str
    type_text: str
    nullable: bool
    full_name: str
    description: str
    codes: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class BrowsePage:
    schema: str
    table: str
    full_name: str
    description: str
    columns: tuple[BrowseColumn, ...]
    rows: tuple[tuple[str | None, ...], ...]
    total_rows: int
    offset: int
    limit: int


_BLOB_PREVIEW_BYTES = 48


def _display_cell(value: object, atype: ArchivalType) -> str | None:
    if value is None:
        return None
    if atype.kind is TypeKind.BLOB and isinstance(value, bytes):
        if len(value) > _BLOB_PREVIEW_BYTES:
            head = value[:_BLOB_PREVIEW_BYTES].hex().upper()
            return f"{head}… ({len(value)} bytes)"
        return value.hex().upper()
    try:
        return render_value(value, atype)
    except ValueError:
        return str(value)


def _object_notes_from_reference(
    doc: ET.Element,
) -> tuple[dict[str, tuple[str, str]], dict[str, tuple[tuple[str, str], ...]]]:
    notes: dict[str, tuple[str, str]] = {}
    for el in doc.findall("descriptions/objectNote"):
        ref = el.get("ref", "")
        notes[ref] = (el.get("fullName", ""), el.get("description", ""))
    codes: dict[str, tuple[tuple[str, str], ...]] = {}
    for el in doc.findall("codeLists/codeList"):
        ref = el.get("column", "")
        codes[ref] = tuple(
            (e.get("code", ""), e.get("meaning", "")) for e in el.findall("entry")
        )
    return notes, codes


def browse_table(
    target: ReloadTarget,
    user: str,
    schema: str,
    table: str,
    *,
    offset: int = 0,
    limit: int = 100,
) -> BrowsePage:
    """One page of a reloaded table, with its archived metadata alongside.

    Rows appear in archive order and are rendered in their canonical text
    forms (long binary values are previewed).  Every column carries its
    type, the free-text name and description from the reference document,
    and its code list, so the data never appears without its meaning.
    """
    _check_user_name(user)
    if offset < 0 or limit < 1:
        raise ReloadError("offset must be >= 0 and limit >= 1")
    with closing(_registry(target)) as conn:
        located = conn.execute(
            "SELECT archive_id, db_file FROM loaded_schema WHERE schema_name = ?",
            (schema,),
        ).fetchone()
        if located is None:
            raise ReloadError(f"schema {schema} is not loaded on this target")
        archive_id, db_file = located
        label = conn.execute(
            "SELECT label FROM loaded_archive WHERE archive_id = ?",
            (archive_id,),
        ).fetchone()[0]
        registered = conn.execute(
            "SELECT 1 FROM registration WHERE archive_id = ? AND user_name = ?",
            (archive_id, user),
        ).fetchone()
    if registered is None:
        raise ReloadError(
            f"user {user!r} is not registered for archive {label!r}"
        )
    model = archive_model(target, archive_id)
    table_def = model.table(schema, table)
    if table_def is None:
        if model.view(schema, table) is not None:
            raise ReloadError(
                f"{schema}.{table} is a view; page through tables here and "
                "query views with run_query"
            )
        raise ReloadError(f"no table {schema}.{table} in archive {label!r}")
    doc = _reference_element(target, archive_id)
    notes, codes = _object_notes_from_reference(doc)
    table_note = notes.get(make_ref("table", schema, table), ("", ""))
    columns = []
    types: list[ArchivalType] = []
    for col in table_def.columns:
        ref = make_ref("column", schema, table, col.name)
        full_name, description = notes.get(ref, ("", ""))
        columns.append(
            BrowseColumn(
                name=col.name,
                type_text=col.type_text(),
                nullable=col.nullable,
                full_name=full_name,
                description=description,
                codes=codes.get(ref, ()),
            )
        )
        types.append(col.col_type)  # type: ignore[arg-type]
    conn = sqlite3.connect("file::memory:?cache=private", uri=True)
    try:
        uri = f"file:{(target.root / db_file).resolve()}?mode=ro"
        conn.execute(f"ATTACH DATABASE ? AS {_q(schema)}", (uri,))
        conn.execute("PRAGMA query_only = 1")
        select_cols = ", ".join(_q(c.name) for c in table_def.columns)
        total = conn.execute(
            f"SELECT COUNT(*) FROM {_q(schema)}.{_q(table)}"
        ).fetchone()[0]
        fetched = conn.execute(
            f"SELECT {select_cols} FROM {_q(schema)}.{_q(table)}"
            " ORDER BY rowid LIMIT ? OFFSET ?",
            (limit, offset),
        ).fetchall()
    finally:
        conn.close()
    rows = tuple(
        tuple(_display_cell(value, atype) for value, atype in zip(row, types))
        for row in fetched
    )
    with closing(_registry(target)) as reg:
        _event(
            reg,
            target.clock(),
            user,
            ACTION_QUERY,
            archive_id,
            f"browse {schema}.{table} offset {offset} limit {limit}",
        )
        reg.commit()
    return BrowsePage(
        schema=schema,
        table=table,
        full_name=table_note[0],
        description=table_note[1],
        columns=tuple(columns),
        rows=rows,
        total_rows=total,
        offset=offset,
        limit=limit,
    )


# ---------------------------------------------------------------------------
# Releasing


def release(target: ReloadTarget, user: str, archive_id: str) -> bool:
    """Drop one user's registration; drop the archive with the last user.

    Returns True when the archive's database files were removed because no
    registered user remains.  The registry keeps the full event history
    either way.
    """
    _check_user_name(user)
    stale_files: list[Path] = []
    dropped = False
    now = target.clock()
    with closing(_registry(target)) as conn:
        row = conn.execute(
            "SELECT label FROM loaded_archive WHERE archive_id = ?",
            (archive_id,),
        ).fetchone()
        if row is None:
            raise ReloadError(f"archive {archive_id!r} is not loaded")
        label = row[0]
        with conn:
            gone = conn.execute(
                "DELETE FROM registration WHERE archive_id = ? AND user_name = ?",
                (archive_id, user),
            ).rowcount
            if not gone:
                raise ReloadError(
                    f"user {user!r} is not registered for archive {label!r}"
                )
            _event(
                conn, now, user, ACTION_USER_RELEASED, archive_id,
                f"user {user} released",
            )
            remaining = conn.execute(
                "SELECT COUNT(*) FROM registration WHERE archive_id = ?",
                (archive_id,),
            ).fetchone()[0]
            if remaining == 0:
                stale_files = [
                    target.root / r[0]
                    for r in conn.execute(
                        "SELECT db_file FROM loaded_schema WHERE archive_id = ?",
                        (archive_id,),
                    ).fetchall()
                ]
                conn.execute(
                    "DELETE FROM loaded_schema WHERE archive_id = ?",
                    (archive_id,),
                )
                conn.execute(
                    "DELETE FROM object_note WHERE archive_id = ?",
                    (archive_id,),
                )
                conn.execute(
                    "DELETE FROM loaded_archive WHERE archive_id = ?",
                    (archive_id,),
                )
                _event(
                    conn,
                    now,
                    user,
                    ACTION_DROPPED,
                    archive_id,
                    f"last user released; {len(stale_files)} database "
                    "file(s) removed",
                )
                dropped = True
    for path in stale_files:
        path.unlink(missing_ok=True)
    if dropped:
        target._forget(archive_id)
    return dropped


# ---------------------------------------------------------------------------
# Registry inspection


@dataclass(frozen=True)
class RegistryNote:
    ref: str
    disposition: str
    note: str


@dataclass(frozen=True)
class RegistryEvent:
    seq: int
    at: str
    user: str
    action: str
    archive_id: str
    detail: str


@dataclass(frozen=True)
class ArchiveEntry:
    archive_id: str
    label: str
    source_path: str
    loaded_at: str
    loaded_by: str
    with_lobs: bool
    row_count: int
    schemas: tuple[str, ...]
    users: tuple[str, ...]
    notes: tuple[RegistryNote, ...]


@dataclass(frozen=True)
class RegistryState:
    archives: tuple[ArchiveEntry, ...]
    events: tuple[RegistryEvent, ...]

    def archive(self, archive_id: str) -> ArchiveEntry | None:
        for entry in self.archives:
            if entry.archive_id == archive_id:
                return entry
        return None


def registry_state(target: ReloadTarget) -> RegistryState:
    """Everything the registry records, for display and audit."""
    with closing(_registry(target)) as conn:
        archives = []
        for row in conn.execute(
            "SELECT archive_id, label, source_path, loaded_at, loaded_by,"
            " with_lobs, row_count FROM loaded_archive ORDER BY loaded_at,"
            " archive_id"
        ).fetchall():
            archive_id = row[0]
            schemas = tuple(
                r[0]
                for r in conn.execute(
                    "SELECT schema_name FROM loaded_schema"
                    " WHERE archive_id = ? ORDER BY schema_name",
                    (archive_id,),
                ).fetchall()
            )
            notes = tuple(
                RegistryNote(ref=r[0], disposition=r[1], note=r[2])
                for r in conn.execute(
                    "SELECT object_ref, disposition, note FROM object_note"
                    " WHERE archive_id = ? ORDER BY object_ref, note",
                    (archive_id,),
                ).fetchall()
            )
            archives.append(
                ArchiveEntry(
                    archive_id=archive_id,
                    label=row[1],
                    source_path=row[2],
                    loaded_at=row[3],
                    loaded_by=row[4],
                    with_lobs=bool(row[5]),
                    row_count=row[6],
                    schemas=schemas,
                    users=_registered_users(conn, archive_id),
                    notes=notes,
                )
            )
        events = tuple(
            RegistryEvent(
                seq=r[0], at=r[1], user=r[2], action=r[3],
                archive_id=r[4], detail=r[5],
            )
            for r in conn.execute(
                "SELECT seq, at, user_name, action, archive_id, detail"
                " FROM event ORDER BY seq"
            ).fetchall()
        )
    return RegistryState(archives=tuple(archives), events=events)
