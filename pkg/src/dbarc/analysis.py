"""Clearance workflow for preparing a database model for archiving.

The entry point is :func:`analyze`, which maps a model onto the archival SQL
subset and assigns every object a status bullet:

* ``GREEN`` — conforming, ready for archiving;
* ``ORANGE`` — conforming but with a data-integrity concern (isolated
  tables, constraints removed by an exclusion);
* ``RED`` — not archivable without a user decision (unknown or
  unconvertible column types);
* ``EXCLUDED_AUTO`` / ``EXCLUDED_MANUAL`` — kept out of the restore plan,
  either by the analysis itself or by the user.  Excluded objects retain
  their full metadata and stay visible; they are documented, not deleted.

Users resolve RED objects by adding type synonyms (then :func:`reanalyze`),
by excluding objects (:func:`exclude`, with a referential-integrity
preserving cascade), or by adding their own key and check constraints
(:func:`add_constraint`).  Every mutation appends to an immutable changelog
and pushes one unit onto an undo stack; :func:`undo` restores the previous
state exactly, changelog excepted.  :func:`readiness` reports whether any
RED statuses remain.  Sessions persist to a single XML file, undo stack
included, so work can stop and resume at any point.

The cascade rule: excluding an object also removes, from the restore plan
only, everything that references it — key constraints pointing at an
excluded table or column, views selecting from it, triggers attached to it,
privileges granted on it — walking breadth-first through the dependency
graph in name order so repeated runs produce identical changelogs.  Tables
that lose a constraint this way turn ORANGE with a finding explaining the
removal.  No primary data is ever touched.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

from dbarc.dialect import (
    ACTION_SOURCE_FLAGGED,
    ACTION_STORAGE_NOTICE,
    ACTION_TYPE_MAPPED,
    STORAGE_NOTICE_TEXT,
    AccessMode,
    DialectError,
    SynonymCatalog,
    auto_map_model,
    builtin_generic_mode,
    catalog_to_xml,
    mode_to_xml,
    parse_catalog_xml,
    parse_mode_xml,
    resolve_type,
)
from dbarc.sqlcore.flagger import validate_statement
from dbarc.sqlcore.model import (
    ConstraintDef,
    ConstraintKind,
    DatabaseModel,
    ObjectRef,
    SchemaDef,
    TableDef,
    clone_model,
    make_ref,
    split_ref,
)
from dbarc.sqlcore.modelxml import model_from_element, model_to_element
from dbarc.sqlcore.tokens import LexError, TokKind, tokenize
from dbarc.sqlcore.types import NativeTypeRef, TypeKind


class AnalysisError(ValueError):
    """Raised for unknown refs, illegal operations, and bad session files."""


class ConfirmationRequired(AnalysisError):
    """An exclusion needs explicit confirmation; nothing was changed.

    Carries the warning texts describing what the cascade would remove
    beyond the selected object itself.
    """

    def __init__(self, warnings: list[str]):
        super().__init__(
            "exclusion needs confirmation: " + "; ".join(warnings)
        )
        self.warnings = list(warnings)


# ---------------------------------------------------------------------------
# Status vocabulary


class Bullet:
    GREEN = "GREEN"
    ORANGE = "ORANGE"
    RED = "RED"
    EXCLUDED_AUTO = "EXCLUDED_AUTO"
    EXCLUDED_MANUAL = "EXCLUDED_MANUAL"

    ALL = frozenset({GREEN, ORANGE, RED, EXCLUDED_AUTO, EXCLUDED_MANUAL})


EXCLUDED_BULLETS = frozenset({Bullet.EXCLUDED_AUTO, Bullet.EXCLUDED_MANUAL})


class Marker:
    CHECK = "CHECK"
    WARNING = "WARNING"
    CROSS = "CROSS"


class Actor:
    AUTO_A0 = "AUTO_A0"
    USER = "USER"
    AUTO_A1 = "AUTO_A1"
    USER_A1 = "USER_A1"

    ALL = frozenset({AUTO_A0, USER, AUTO_A1, USER_A1})


ACTION_ANALYZE = "analyze"
ACTION_EXCLUDE = "exclude"
ACTION_AUTO_EXCLUDE = "auto-exclude"
ACTION_FINDING = "finding"
ACTION_FINDING_CLEARED = "finding-cleared"
ACTION_UNDO = "undo"
ACTION_CONSTRAINT_ADDED = "constraint-added"
ACTION_CONSTRAINT_DELETED = "constraint-deleted"
ACTION_SYNONYM_ADDED = "synonym-added"
ACTION_REANALYZE = "reanalyze"

ISOLATED_FINDING = "isolated table: no key constraints and no incoming foreign keys"
MANUAL_EXCLUSION_FINDING = "excluded from archiving by user decision"

#: Object kinds that have no rendition in the archival SQL subset and are
#: therefore always documentation-only.
DOCUMENTATION_ONLY_KINDS = frozenset(
    {"trigger", "routine", "synonym", "dblink", "user", "role", "native"}
)

_KEY_KINDS = (
    ConstraintKind.PRIMARY_KEY,
    ConstraintKind.FOREIGN_KEY,
    ConstraintKind.UNIQUE,
)

_CONSTRAINT_WORDS = {
    ConstraintKind.PRIMARY_KEY: "primary key",
    ConstraintKind.FOREIGN_KEY: "foreign key",
    ConstraintKind.UNIQUE: "unique key",
    ConstraintKind.CHECK: "check constraint",
}

_FK_ACTIONS = {"CASCADE", "RESTRICT", "SET NULL", "SET DEFAULT", "NO ACTION"}


@dataclass
class ObjectStatus:
    """One object's clearance verdict: a bullet plus finding texts."""

    bullet: str
    details: list[str] = field(default_factory=list)

    def copy(self) -> "ObjectStatus":
        return ObjectStatus(self.bullet, list(self.details))


@dataclass(frozen=True)
class ChangeEntry:
    """One appended line of the activity trace; entries are never edited."""

    timestamp: str
    actor: str
    action: str
    target: ObjectRef
    detail: str


@dataclass(frozen=True)
class Readiness:
    ready: bool
    blockers: tuple[ObjectRef, ...]


@dataclass
class TreeNode:
    """One node of the object tree shown to the user."""

    ref: str
    label: str
    kind: str
    bullet: str | None
    marker: str
    children: list["TreeNode"] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "ref": self.ref,
            "label": self.label,
            "kind": self.kind,
            "bullet": self.bullet,
            "marker": self.marker,
            "children": [c.as_dict() for c in self.children],
        }

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class UndoUnit:
    """A fully materialized prior state; popping one restores it exactly."""

    label: str
    model: DatabaseModel
    statuses: dict[ObjectRef, ObjectStatus]
    catalog: SynonymCatalog


# ---------------------------------------------------------------------------
# Clocks


def utc_clock() -> str:
    """Current instant as UTC ISO-8601 text with a Z suffix."""
    now = datetime.now(timezone.utc)
    return now.isoformat(timespec="microseconds").replace("+00:00", "Z")


def fixed_clock(instant: str) -> Callable[[], str]:
    """A clock that always returns ``instant`` (for reproducible runs)."""

    def clock() -> str:
        return instant

    return clock


# ---------------------------------------------------------------------------
# The session


class AnalysisSession:
    """Mutable clearance state for one model under one access mode.

    Mutations happen through the module-level operations (:func:`exclude`,
    :func:`add_constraint`, ...), each of which appends to the changelog and
    pushes an undo unit.  A session is single-writer; readers may take
    consistent snapshots via :func:`session_to_xml` or :func:`object_tree`.
    With ``audit`` enabled, every mutation re-runs :func:`integrity_scan`
    and fails loudly if the archivable set stopped being dependency-closed.
    """

    def __init__(
        self,
        model: DatabaseModel,
        mode: AccessMode,
        catalog: SynonymCatalog | None = None,
        *,
        clock: Callable[[], str] | None = None,
        audit: bool = False,
    ):
        self.model = model
        self.mode = mode
        self.catalog = catalog if catalog is not None else SynonymCatalog()
        self.statuses: dict[ObjectRef, ObjectStatus] = {}
        self.changelog: list[ChangeEntry] = []
        self.undo_stack: list[UndoUnit] = []
        self.clock = clock or utc_clock
        self.audit = audit

    # -- state helpers --------------------------------------------------

    def status(self, ref: ObjectRef) -> ObjectStatus:
        try:
            return self.statuses[ref]
        except KeyError:
            raise AnalysisError(f"unknown object {ref!r}") from None

    def is_archivable(self, ref: ObjectRef) -> bool:
        stat = self.statuses.get(ref)
        return stat is not None and stat.bullet not in EXCLUDED_BULLETS

    def archivable_refs(self) -> list[ObjectRef]:
        return sorted(r for r in self.statuses if self.is_archivable(r))

    def excluded_refs(self) -> list[ObjectRef]:
        return sorted(r for r in self.statuses if not self.is_archivable(r))

    def user_constraints(self) -> list[tuple[str, str, ConstraintDef]]:
        out = []
        for schema in self.model.schemas:
            for table in schema.tables:
                for con in table.constraints:
                    if con.user_added:
                        out.append((schema.name, table.name, con))
        return out

    # -- bookkeeping ----------------------------------------------------

    def _log(self, actor: str, action: str, target: ObjectRef, detail: str) -> None:
        self.changelog.append(
            ChangeEntry(self.clock(), actor, action, target, detail)
        )

    def record(self, actor: str, action: str, target: ObjectRef, detail: str) -> None:
        """Append a changelog entry on behalf of a later pipeline stage.

        Archive creation and post-archive editing happen outside this
        module but share the session's single chronological record; they
        log through here so the reference document's changelog stays one
        uninterrupted history.  No undo unit: entries recorded this way
        describe work on external artifacts, which undo cannot reverse.
        """
        if actor not in Actor.ALL:
            raise AnalysisError(f"unknown changelog actor {actor!r}")
        self._log(actor, action, target, detail)

    def _push_undo(self, label: str) -> None:
        self.undo_stack.append(
            UndoUnit(
                label,
                clone_model(self.model),
                {ref: stat.copy() for ref, stat in self.statuses.items()},
                self.catalog.clone(),
            )
        )

    def _audit(self) -> None:
        if not self.audit:
            return
        problems = integrity_scan(self)
        if problems:
            raise AnalysisError(
                f"integrity audit found {len(problems)} problem(s): {problems[0]}"
            )


# ---------------------------------------------------------------------------
# Small shared lookups


def describe_ref(ref: ObjectRef) -> str:
    kind, parts = split_ref(ref)
    if kind == "privilege" and len(parts) == 4:
        priv, schema, obj, grantee = parts
        on = f" ON {schema}.{obj}" if obj else ""
        return f"privilege {priv}{on} TO {grantee}"
    return f"{kind} {'.'.join(parts)}" if parts else kind


def _table_at(model: DatabaseModel, schema: str, name: str) -> TableDef:
    table = model.table(schema, name)
    if table is None:
        raise AnalysisError(f"unknown table {schema}.{name}")
    return table


def _text_names_identifier(text: str, name: str, star_counts: bool = False) -> bool:
    """Whether the SQL text mentions ``name`` as an identifier.

    Used to find check constraints and views that depend on an excluded
    column.  Text that cannot be lexed at all (vendor code) is treated as
    naming everything: when dependence cannot be ruled out, the cascade
    must err toward exclusion.  With ``star_counts``, a ``*`` token counts
    as naming every column.
    """
    try:
        toks = tokenize(text)
    except LexError:
        return True
    for tok in toks:
        if tok.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
            if tok.value == name:
                return True
        elif star_counts and tok.kind is TokKind.OP and tok.value == "*":
            return True
    return False


def _parse_qualified(text: str) -> tuple[str | None, str] | None:
    """Split ``S.T`` / ``T`` (either part possibly quoted) into parts."""
    try:
        toks = [t for t in tokenize(text) if t.kind is not TokKind.EOF]
    except LexError:
        return None
    names = []
    expect_name = True
    for tok in toks:
        if expect_name and tok.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
            names.append(tok.value)
            expect_name = False
        elif not expect_name and tok.kind is TokKind.OP and tok.value == ".":
            expect_name = True
        else:
            return None
    if expect_name or not names or len(names) > 2:
        return None
    if len(names) == 1:
        return None, names[0]
    return names[0], names[1]


def _view_references(
    view, own_schema: str
) -> Iterator[tuple[str, str]]:
    for schema, table in view.referenced_tables:
        yield (schema or own_schema, table)


def _trigger_target(trigger, own_schema: str) -> tuple[str, str] | None:
    if not trigger.target_table:
        return None
    parsed = _parse_qualified(trigger.target_table)
    if parsed is None:
        return None
    schema, name = parsed
    return (schema or own_schema, name)


def _backing_keys(
    table: TableDef, columns: Iterable[str]
) -> list[ConstraintDef]:
    """Key constraints of ``table`` covering exactly this column set."""
    wanted = frozenset(columns)
    return [
        con
        for con in table.constraints
        if con.kind in (ConstraintKind.PRIMARY_KEY, ConstraintKind.UNIQUE)
        and frozenset(con.columns) == wanted
    ]


def _relation_exists(model: DatabaseModel, schema: str, name: str) -> bool:
    return model.table(schema, name) is not None or model.view(schema, name) is not None


# ---------------------------------------------------------------------------
# Status assignment


def _unresolved_finding(col, mode: AccessMode, catalog: SynonymCatalog) -> str:
    res = resolve_type(col.col_type, mode, catalog)
    native = col.col_type.render()
    note = res.note or "no known conversion to the archival SQL subset"
    return f"cannot archive type {native}: {note}"


def _source_finding(source_text: str, fallback: str) -> str:
    if source_text:
        report = validate_statement(source_text)
        if report.items:
            return report.items[0].reason
    return fallback


def _assign_initial_statuses(session: AnalysisSession, notes: dict[ObjectRef, str]) -> None:
    """First full status pass; logs every non-GREEN verdict."""
    model = session.model
    statuses = session.statuses

    def put(ref: ObjectRef, bullet: str, details: list[str] | None = None) -> None:
        statuses[ref] = ObjectStatus(bullet, details or [])
        if bullet in EXCLUDED_BULLETS:
            session._log(
                Actor.AUTO_A0, ACTION_AUTO_EXCLUDE, ref, (details or [""])[0]
            )
        elif bullet == Bullet.RED:
            session._log(Actor.AUTO_A0, ACTION_FINDING, ref, (details or [""])[0])

    orange_notes: list[tuple[ObjectRef, str]] = []
    for ref, kind, obj in model.iter_objects():
        if kind in ("schema", "table", "privilege"):
            put(ref, Bullet.GREEN)
        elif kind == "column":
            if isinstance(obj.col_type, NativeTypeRef):
                put(
                    ref,
                    Bullet.RED,
                    [_unresolved_finding(obj, session.mode, session.catalog)],
                )
            else:
                put(ref, Bullet.GREEN)
        elif kind == "constraint":
            put(ref, Bullet.GREEN)
        elif kind == "view":
            if not obj.standard:
                finding = notes.get(ref) or _source_finding(
                    obj.source_text, "view source is outside the archival subset"
                )
                put(ref, Bullet.EXCLUDED_AUTO, [f"view source not archivable: {finding}"])
            else:
                put(ref, Bullet.GREEN)
        elif kind in DOCUMENTATION_ONLY_KINDS:
            finding = _source_finding(
                getattr(obj, "source_text", ""),
                "no standard-SQL rendition in the archival subset",
            )
            put(ref, Bullet.EXCLUDED_AUTO, [f"documented only: {finding}"])
        else:  # pragma: no cover - iter_objects kinds are closed
            put(ref, Bullet.GREEN)

    # Nonstandard check constraints, and references that point nowhere.
    for schema in model.schemas:
        for table in schema.tables:
            tref = make_ref("table", schema.name, table.name)
            for con in table.constraints:
                cref = make_ref("constraint", schema.name, table.name, con.name)
                word = _CONSTRAINT_WORDS.get(con.kind, "constraint")
                if con.kind == ConstraintKind.CHECK and not con.check_standard:
                    finding = notes.get(cref) or _source_finding(
                        f"ALTER TABLE _T ADD CONSTRAINT _C CHECK ({con.check_source})",
                        "check source is outside the archival subset",
                    )
                    put(cref, Bullet.EXCLUDED_AUTO, [f"check source not archivable: {finding}"])
                elif con.kind == ConstraintKind.FOREIGN_KEY:
                    target_schema = con.ref_schema or schema.name
                    target = model.table(target_schema, con.ref_table or "")
                    missing = target is None or any(
                        target.column(c) is None for c in con.ref_columns
                    )
                    if missing:
                        where = f"{target_schema}.{con.ref_table or '?'}"
                        put(
                            cref,
                            Bullet.EXCLUDED_AUTO,
                            [f"references missing table or columns: {where}"],
                        )
                        orange_notes.append(
                            (
                                tref,
                                f"{word} {con.name} removed from the archive plan:"
                                f" its target {where} is missing from the source",
                            )
                        )
        for view in schema.views:
            vref = make_ref("view", schema.name, view.name)
            if statuses[vref].bullet in EXCLUDED_BULLETS:
                continue
            for ref_schema, ref_name in _view_references(view, schema.name):
                if not _relation_exists(model, ref_schema, ref_name):
                    put(
                        vref,
                        Bullet.EXCLUDED_AUTO,
                        [f"references missing relation {ref_schema}.{ref_name}"],
                    )
                    break
        # Privileges granted on relations that do not exist in the model.
    for priv in model.privileges:
        if not priv.on_object:
            continue
        pref = make_ref(
            "privilege", priv.privilege, priv.on_schema, priv.on_object, priv.grantee
        )
        if not _relation_exists(model, priv.on_schema, priv.on_object):
            put(
                pref,
                Bullet.EXCLUDED_AUTO,
                [f"granted on missing object {priv.on_schema}.{priv.on_object}"],
            )

    for tref, finding in orange_notes:
        stat = statuses[tref]
        if stat.bullet not in EXCLUDED_BULLETS and finding not in stat.details:
            stat.details.append(finding)
            stat.bullet = Bullet.ORANGE
            session._log(Actor.AUTO_A0, ACTION_FINDING, tref, finding)

    for change in _recompute_isolated(session):
        session._log(Actor.AUTO_A0, change[1], change[0], change[2])


def _is_isolated(session: AnalysisSession, schema: SchemaDef, table: TableDef) -> bool:
    """No archivable key constraints of its own, none pointing at it."""
    model = session.model
    for con in table.constraints:
        cref = make_ref("constraint", schema.name, table.name, con.name)
        if con.kind in _KEY_KINDS and session.is_archivable(cref):
            return False
    for other_schema in model.schemas:
        for other in other_schema.tables:
            for con in other.constraints:
                if con.kind != ConstraintKind.FOREIGN_KEY:
                    continue
                cref = make_ref(
                    "constraint", other_schema.name, other.name, con.name
                )
                if not session.is_archivable(cref):
                    continue
                if (con.ref_schema or other_schema.name) == schema.name and (
                    con.ref_table == table.name
                ):
                    return False
    return True


def _recompute_isolated(
    session: AnalysisSession,
) -> list[tuple[ObjectRef, str, str]]:
    """Re-derive the isolated-table finding on every archivable table.

    Returns (ref, action, detail) triples for the changelog.  Other table
    findings (constraint-removal notes) are sticky and stay untouched.
    """
    changes: list[tuple[ObjectRef, str, str]] = []
    for schema in session.model.schemas:
        for table in schema.tables:
            tref = make_ref("table", schema.name, table.name)
            stat = session.statuses.get(tref)
            if stat is None or stat.bullet in EXCLUDED_BULLETS:
                continue
            isolated = _is_isolated(session, schema, table)
            has = ISOLATED_FINDING in stat.details
            if isolated and not has:
                stat.details.append(ISOLATED_FINDING)
                changes.append((tref, ACTION_FINDING, ISOLATED_FINDING))
            elif not isolated and has:
                stat.details.remove(ISOLATED_FINDING)
                changes.append((tref, ACTION_FINDING_CLEARED, ISOLATED_FINDING))
            stat.bullet = Bullet.ORANGE if stat.details else Bullet.GREEN
    return changes


# ---------------------------------------------------------------------------
# analyze


def analyze(
    model: DatabaseModel,
    mode: AccessMode | None = None,
    catalog: SynonymCatalog | None = None,
    *,
    clock: Callable[[], str] | None = None,
    audit: bool = False,
) -> AnalysisSession:
    """Map the model onto the archival subset and status every object.

    The input model is deep-copied; the caller's copy is never touched.
    Every automatic action — type mappings, source flags, storage notices,
    automatic exclusions, findings — lands in the changelog.
    """
    mode = mode or builtin_generic_mode()
    session = AnalysisSession(
        clone_model(model),
        mode,
        catalog.clone() if catalog is not None else SynonymCatalog(),
        clock=clock,
        audit=audit,
    )
    session.model.link_references()
    session._log(
        Actor.AUTO_A0,
        ACTION_ANALYZE,
        "",
        f"automatic analysis under access mode {mode.name!r}",
    )
    _, events = auto_map_model(session.model, mode, session.catalog)
    notes: dict[ObjectRef, str] = {}
    for ev in events:
        session._log(Actor.AUTO_A0, ev.action, ev.ref, ev.describe())
        if ev.action == ACTION_SOURCE_FLAGGED:
            notes[ev.ref] = ev.note
    _assign_initial_statuses(session, notes)
    session._audit()
    return session


# ---------------------------------------------------------------------------
# Exclusion cascade


def _containment_set(session: AnalysisSession, ref: ObjectRef) -> set[ObjectRef]:
    """The object itself plus everything that exists only inside it."""
    kind, parts = split_ref(ref)
    out = {ref}
    model = session.model
    if kind == "schema":
        schema = model.schema(parts[0])
        if schema is not None:
            prefix = (
                "table:",
                "column:",
                "constraint:",
                "view:",
                "trigger:",
                "routine:",
                "synonym:",
                "dblink:",
            )
            for oref, _, _ in model.iter_objects():
                okind, oparts = split_ref(oref)
                if oparts and oparts[0] == schema.name and oref.startswith(prefix):
                    out.add(oref)
    elif kind == "table":
        table = model.table(parts[0], parts[1])
        if table is not None:
            for col in table.columns:
                out.add(make_ref("column", parts[0], parts[1], col.name))
            for con in table.constraints:
                out.add(make_ref("constraint", parts[0], parts[1], con.name))
    return out


def _relation_dependents(
    session: AnalysisSession,
    schema_name: str,
    relation_name: str,
    why: str,
    skip: set[ObjectRef],
) -> list[tuple[ObjectRef, str]]:
    """Archivable objects that directly reference one table or view."""
    model = session.model
    out: list[tuple[ObjectRef, str]] = []
    target = (schema_name, relation_name)
    for schema in model.schemas:
        for table in schema.tables:
            for con in table.constraints:
                if con.kind != ConstraintKind.FOREIGN_KEY:
                    continue
                cref = make_ref("constraint", schema.name, table.name, con.name)
                if cref in skip or not session.is_archivable(cref):
                    continue
                if ((con.ref_schema or schema.name), con.ref_table) == target:
                    out.append((cref, f"references {why}"))
        for view in schema.views:
            vref = make_ref("view", schema.name, view.name)
            if vref in skip or not session.is_archivable(vref):
                continue
            if target in _view_references(view, schema.name):
                out.append((vref, f"references {why}"))
        for trigger in schema.triggers:
            gref = make_ref("trigger", schema.name, trigger.name)
            if gref in skip or not session.is_archivable(gref):
                continue
            if _trigger_target(trigger, schema.name) == target:
                out.append((gref, f"attached to {why}"))
    for priv in model.privileges:
        if (priv.on_schema, priv.on_object) != target:
            continue
        pref = make_ref(
            "privilege", priv.privilege, priv.on_schema, priv.on_object, priv.grantee
        )
        if pref in skip or not session.is_archivable(pref):
            continue
        out.append((pref, f"granted on {why}"))
    return out


def _direct_dependents(
    session: AnalysisSession, ref: ObjectRef, skip: set[ObjectRef]
) -> list[tuple[ObjectRef, str]]:
    kind, parts = split_ref(ref)
    model = session.model
    out: list[tuple[ObjectRef, str]] = []

    def add(dref: ObjectRef, reason: str) -> None:
        if dref not in skip and session.is_archivable(dref):
            out.append((dref, reason))

    if kind == "schema":
        schema = model.schema(parts[0])
        if schema is None:
            return out
        why = f"excluded schema {schema.name}"
        for table in schema.tables:
            add(make_ref("table", schema.name, table.name), f"belongs to {why}")
        for view in schema.views:
            add(make_ref("view", schema.name, view.name), f"belongs to {why}")
        for trigger in schema.triggers:
            add(make_ref("trigger", schema.name, trigger.name), f"belongs to {why}")
        for routine in schema.routines:
            add(make_ref("routine", schema.name, routine.name), f"belongs to {why}")
        for syn in schema.synonyms:
            add(make_ref("synonym", schema.name, syn.name), f"belongs to {why}")
        for link in schema.dblinks:
            add(make_ref("dblink", schema.name, link.name), f"belongs to {why}")
    elif kind == "table":
        schema_name, table_name = parts
        table = model.table(schema_name, table_name)
        if table is None:
            return out
        why = f"excluded table {schema_name}.{table_name}"
        for col in table.columns:
            add(
                make_ref("column", schema_name, table_name, col.name),
                f"belongs to {why}",
            )
        for con in table.constraints:
            add(
                make_ref("constraint", schema_name, table_name, con.name),
                f"belongs to {why}",
            )
        out.extend(
            _relation_dependents(session, schema_name, table_name, why, skip)
        )
    elif kind == "view":
        schema_name, view_name = parts
        out.extend(
            _relation_dependents(
                session,
                schema_name,
                view_name,
                f"excluded view {schema_name}.{view_name}",
                skip,
            )
        )
    elif kind == "column":
        schema_name, table_name, column_name = parts
        table = model.table(schema_name, table_name)
        if table is None:
            return out
        full = f"{schema_name}.{table_name}.{column_name}"
        for con in table.constraints:
            cref = make_ref("constraint", schema_name, table_name, con.name)
            if column_name in con.columns:
                add(cref, f"names excluded column {full}")
            elif con.kind == ConstraintKind.CHECK and _text_names_identifier(
                con.check_source, column_name
            ):
                add(cref, f"names excluded column {full}")
        for other_schema in model.schemas:
            for other in other_schema.tables:
                for con in other.constraints:
                    if con.kind != ConstraintKind.FOREIGN_KEY:
                        continue
                    if (
                        (con.ref_schema or other_schema.name),
                        con.ref_table,
                    ) != (schema_name, table_name):
                        continue
                    if column_name in con.ref_columns:
                        add(
                            make_ref(
                                "constraint",
                                other_schema.name,
                                other.name,
                                con.name,
                            ),
                            f"references excluded column {full}",
                        )
            for view in other_schema.views:
                vref = make_ref("view", other_schema.name, view.name)
                if (schema_name, table_name) not in _view_references(
                    view, other_schema.name
                ):
                    continue
                if _text_names_identifier(
                    view.query or view.source_text, column_name, star_counts=True
                ):
                    add(vref, f"selects excluded column {full}")
    elif kind == "constraint":
        schema_name, table_name, con_name = parts
        table = model.table(schema_name, table_name)
        con = table.constraint(con_name) if table else None
        if con is None or con.kind not in (
            ConstraintKind.PRIMARY_KEY,
            ConstraintKind.UNIQUE,
        ):
            return out
        # Foreign keys lose their backing when the last key over their
        # target columns leaves the plan.
        for other_schema in model.schemas:
            for other in other_schema.tables:
                for fk in other.constraints:
                    if fk.kind != ConstraintKind.FOREIGN_KEY:
                        continue
                    if (
                        (fk.ref_schema or other_schema.name),
                        fk.ref_table,
                    ) != (schema_name, table_name):
                        continue
                    if frozenset(fk.ref_columns) != frozenset(con.columns):
                        continue
                    backing_left = [
                        k
                        for k in _backing_keys(table, fk.ref_columns)
                        if k.name != con.name
                        and session.is_archivable(
                            make_ref(
                                "constraint", schema_name, table_name, k.name
                            )
                        )
                        and make_ref("constraint", schema_name, table_name, k.name)
                        not in skip
                    ]
                    if not backing_left:
                        add(
                            make_ref(
                                "constraint", other_schema.name, other.name, fk.name
                            ),
                            f"its referenced key {con_name} on"
                            f" {schema_name}.{table_name} is excluded",
                        )
    return out


@dataclass
class CascadePlan:
    """What an exclusion would remove, before anything is changed."""

    root: ObjectRef
    auto: list[tuple[ObjectRef, str]]
    orange: list[tuple[ObjectRef, str]]


def _cascade_plan(session: AnalysisSession, ref: ObjectRef) -> CascadePlan:
    skip: set[ObjectRef] = {ref}
    planned: list[tuple[ObjectRef, str]] = []
    queue: deque[ObjectRef] = deque([ref])
    while queue:
        current = queue.popleft()
        dependents = sorted(_direct_dependents(session, current, skip))
        for dref, reason in dependents:
            skip.add(dref)
            planned.append((dref, reason))
            queue.append(dref)
    orange: list[tuple[ObjectRef, str]] = []
    model = session.model
    for dref, reason in planned:
        kind, parts = split_ref(dref)
        if kind != "constraint":
            continue
        schema_name, table_name, con_name = parts
        tref = make_ref("table", schema_name, table_name)
        if tref in skip or not session.is_archivable(tref):
            continue
        table = model.table(schema_name, table_name)
        con = table.constraint(con_name) if table else None
        word = _CONSTRAINT_WORDS.get(con.kind if con else "", "constraint")
        orange.append(
            (
                tref,
                f"{word} {con_name} removed from the archive plan: {reason}",
            )
        )
    return CascadePlan(ref, planned, orange)


def exclusion_warnings(session: AnalysisSession, ref: ObjectRef) -> list[str]:
    """What the user should confirm before excluding ``ref``.

    Covers primary keys held by a table about to disappear from the plan
    and every cascade effect outside the object itself.
    """
    session.status(ref)
    plan = _cascade_plan(session, ref)
    return _warnings_for_plan(session, ref, plan)


def _warnings_for_plan(
    session: AnalysisSession, ref: ObjectRef, plan: CascadePlan
) -> list[str]:
    warnings: list[str] = []
    kind, parts = split_ref(ref)
    if kind == "table":
        table = session.model.table(parts[0], parts[1])
        if table is not None:
            pk = table.primary_key()
            if pk is not None and session.is_archivable(
                make_ref("constraint", parts[0], parts[1], pk.name)
            ):
                warnings.append(
                    f"table {parts[0]}.{parts[1]} holds primary key {pk.name}"
                )
    own = _containment_set(session, ref)
    for dref, reason in plan.auto:
        if dref not in own:
            warnings.append(
                f"excluding {describe_ref(ref)} also removes"
                f" {describe_ref(dref)}: {reason}"
            )
    return warnings


def exclude(
    session: AnalysisSession, ref: ObjectRef, *, confirmed: bool = False
) -> AnalysisSession:
    """Take one object (and everything depending on it) out of the plan.

    The object turns EXCLUDED_MANUAL, its dependents EXCLUDED_AUTO; tables
    that lose a constraint turn ORANGE with an explanatory finding.  When
    the exclusion has effects beyond the object itself — or the object is a
    table holding a primary key — a :class:`ConfirmationRequired` is raised
    first unless ``confirmed`` is set.  The whole cascade is one undo unit.
    Object metadata is never removed: only statuses change.
    """
    stat = session.status(ref)
    if stat.bullet in EXCLUDED_BULLETS:
        raise AnalysisError(f"{describe_ref(ref)} is already excluded")
    kind, parts = split_ref(ref)
    if kind == "constraint":
        table = session.model.table(parts[0], parts[1])
        con = table.constraint(parts[2]) if table else None
        if con is not None and con.user_added:
            raise AnalysisError(
                "user-added constraints cannot be excluded, only deleted"
            )
    plan = _cascade_plan(session, ref)
    warnings = _warnings_for_plan(session, ref, plan)
    if warnings and not confirmed:
        raise ConfirmationRequired(warnings)

    session._push_undo(f"exclude {describe_ref(ref)}")
    session.statuses[ref] = ObjectStatus(
        Bullet.EXCLUDED_MANUAL, [MANUAL_EXCLUSION_FINDING]
    )
    session._log(Actor.USER, ACTION_EXCLUDE, ref, MANUAL_EXCLUSION_FINDING)
    for dref, reason in plan.auto:
        session.statuses[dref] = ObjectStatus(Bullet.EXCLUDED_AUTO, [reason])
        session._log(Actor.AUTO_A0, ACTION_AUTO_EXCLUDE, dref, reason)
    for tref, finding in plan.orange:
        tstat = session.statuses[tref]
        if tstat.bullet in EXCLUDED_BULLETS or finding in tstat.details:
            continue
        tstat.details.append(finding)
        tstat.bullet = Bullet.ORANGE
        session._log(Actor.AUTO_A0, ACTION_FINDING, tref, finding)
    for tref, action, detail in _recompute_isolated(session):
        session._log(Actor.AUTO_A0, action, tref, detail)
    session._audit()
    return session


# ---------------------------------------------------------------------------
# Undo


def undo(session: AnalysisSession) -> AnalysisSession:
    """Reverse the most recent user action unit exactly.

    Statuses, the model (user constraints included), and the synonym
    catalog return to their prior state; the changelog alone keeps growing,
    recording the undo itself.
    """
    if not session.undo_stack:
        raise AnalysisError("nothing to undo")
    unit = session.undo_stack.pop()
    session.model = unit.model
    session.statuses = unit.statuses
    session.catalog = unit.catalog
    session._log(Actor.USER, ACTION_UNDO, "", f"reverted: {unit.label}")
    session._audit()
    return session


# ---------------------------------------------------------------------------
# User-added constraints


def add_constraint(
    session: AnalysisSession,
    schema_name: str,
    table_name: str,
    con: ConstraintDef,
) -> AnalysisSession:
    """Attach a user-defined key or check constraint to an archivable table.

    The constraint is validated first — archivable target, existing and
    archivable columns, standard-SQL check source, an archivable unique key
    behind a foreign key's target columns — and added with the user-added
    flag set.  User-added constraints can later be deleted but never
    excluded.  The isolated-table findings are recomputed.
    """
    schema = session.model.schema(schema_name)
    if schema is None:
        raise AnalysisError(f"unknown schema {schema_name}")
    table = schema.table(table_name)
    if table is None:
        raise AnalysisError(f"unknown table {schema_name}.{table_name}")
    tref = make_ref("table", schema_name, table_name)
    if not session.is_archivable(tref):
        raise AnalysisError(
            f"table {schema_name}.{table_name} is excluded from archiving"
        )
    if con.kind not in _CONSTRAINT_WORDS:
        raise AnalysisError(f"unsupported constraint kind {con.kind!r}")
    if not con.name:
        raise AnalysisError("constraint needs a name")
    if table.constraint(con.name) is not None:
        raise AnalysisError(
            f"table {schema_name}.{table_name} already has a constraint"
            f" named {con.name}"
        )
    word = _CONSTRAINT_WORDS[con.kind]

    con = replace(con, user_added=True)
    if con.kind == ConstraintKind.CHECK:
        if not con.check_source:
            raise AnalysisError("check constraint needs an expression")
        probe = f"ALTER TABLE _T ADD CONSTRAINT _C CHECK ({con.check_source})"
        report = validate_statement(probe)
        if report.items:
            raise AnalysisError(
                f"check source is not standard SQL: {report.items[0].reason}"
            )
        con = replace(con, check_standard=True)
    else:
        if not con.columns:
            raise AnalysisError(f"{word} needs at least one column")
        for name in con.columns:
            if table.column(name) is None:
                raise AnalysisError(
                    f"no column {name} in {schema_name}.{table_name}"
                )
            if not session.is_archivable(
                make_ref("column", schema_name, table_name, name)
            ):
                raise AnalysisError(f"column {name} is excluded from archiving")
        if len(set(con.columns)) != len(con.columns):
            raise AnalysisError(f"{word} lists a column twice")
    if con.kind == ConstraintKind.PRIMARY_KEY:
        pk = table.primary_key()
        if pk is not None and session.is_archivable(
            make_ref("constraint", schema_name, table_name, pk.name)
        ):
            raise AnalysisError(
                f"table {schema_name}.{table_name} already has primary key {pk.name}"
            )
    if con.kind == ConstraintKind.FOREIGN_KEY:
        con = replace(con, ref_schema=con.ref_schema or schema_name)
        if not con.ref_table:
            raise AnalysisError("foreign key needs a referenced table")
        target = session.model.table(con.ref_schema, con.ref_table)
        target_ref = make_ref("table", con.ref_schema, con.ref_table)
        if target is None:
            raise AnalysisError(
                f"unknown referenced table {con.ref_schema}.{con.ref_table}"
            )
        if not session.is_archivable(target_ref):
            raise AnalysisError(
                f"referenced table {con.ref_schema}.{con.ref_table}"
                " is excluded from archiving"
            )
        if not con.ref_columns:
            pk = target.primary_key()
            if pk is None:
                raise AnalysisError(
                    f"referenced table {con.ref_schema}.{con.ref_table}"
                    " has no primary key to reference"
                )
            con = replace(con, ref_columns=pk.columns)
        if len(con.ref_columns) != len(con.columns):
            raise AnalysisError(
                "foreign key and referenced column lists differ in length"
            )
        for name in con.ref_columns:
            if target.column(name) is None:
                raise AnalysisError(
                    f"no column {name} in {con.ref_schema}.{con.ref_table}"
                )
            if not session.is_archivable(
                make_ref("column", con.ref_schema, con.ref_table, name)
            ):
                raise AnalysisError(
                    f"referenced column {name} is excluded from archiving"
                )
        backed = [
            k
            for k in _backing_keys(target, con.ref_columns)
            if session.is_archivable(
                make_ref("constraint", con.ref_schema, con.ref_table, k.name)
            )
        ]
        if not backed:
            raise AnalysisError(
                "referenced columns lack an archivable primary or unique key"
            )
        for action in (con.on_delete, con.on_update):
            if action is not None and action not in _FK_ACTIONS:
                raise AnalysisError(f"unknown referential action {action!r}")

    session._push_undo(f"add {word} {con.name} on {schema_name}.{table_name}")
    table.constraints.append(con)
    cref = make_ref("constraint", schema_name, table_name, con.name)
    session.statuses[cref] = ObjectStatus(Bullet.GREEN)
    if con.kind == ConstraintKind.CHECK:
        detail = f"user-added {word}: CHECK ({con.check_source})"
    elif con.kind == ConstraintKind.FOREIGN_KEY:
        detail = (
            f"user-added {word} ({', '.join(con.columns)}) referencing"
            f" {con.ref_schema}.{con.ref_table} ({', '.join(con.ref_columns)})"
        )
    else:
        detail = f"user-added {word} ({', '.join(con.columns)})"
    session._log(Actor.USER, ACTION_CONSTRAINT_ADDED, cref, detail)
    for tref2, action, text in _recompute_isolated(session):
        session._log(Actor.AUTO_A0, action, tref2, text)
    session._audit()
    return session


def delete_constraint(
    session: AnalysisSession, schema_name: str, table_name: str, name: str
) -> AnalysisSession:
    """Remove a user-added constraint completely.

    Only user-added constraints can be deleted; objects that belong to the
    source database can only be excluded.
    """
    table = session.model.table(schema_name, table_name)
    con = table.constraint(name) if table else None
    if table is None or con is None:
        raise AnalysisError(f"unknown constraint {schema_name}.{table_name}.{name}")
    if not con.user_added:
        raise AnalysisError(
            "only user-added constraints can be deleted; source objects"
            " can only be excluded"
        )
    word = _CONSTRAINT_WORDS.get(con.kind, "constraint")
    session._push_undo(f"delete {word} {name} on {schema_name}.{table_name}")
    table.constraints.remove(con)
    cref = make_ref("constraint", schema_name, table_name, name)
    session.statuses.pop(cref, None)
    session._log(
        Actor.USER, ACTION_CONSTRAINT_DELETED, cref, f"user-added {word} deleted"
    )
    for tref, action, text in _recompute_isolated(session):
        session._log(Actor.AUTO_A0, action, tref, text)
    session._audit()
    return session


# ---------------------------------------------------------------------------
# Synonyms and re-analysis


def add_synonym(
    session: AnalysisSession, native_name: str, target: str
) -> AnalysisSession:
    """Record that a native type name stands for a standard archival type.

    Statuses do not change until the user triggers :func:`reanalyze`; that
    keeps every status transition attributable in the changelog.
    """
    probe = session.catalog.clone()
    try:
        rule = probe.add_rule(native_name, target)
    except DialectError as exc:
        raise AnalysisError(str(exc)) from exc
    session._push_undo(f"synonym {rule.native}")
    session.catalog.add_rule(native_name, target)
    session._log(
        Actor.USER,
        ACTION_SYNONYM_ADDED,
        "",
        f"type synonym {rule.native} -> {rule.target.render()}",
    )
    session._audit()
    return session


def reanalyze(session: AnalysisSession) -> AnalysisSession:
    """Re-run type resolution over the still-archivable columns.

    Newly resolvable columns (usually thanks to a fresh synonym rule) turn
    GREEN and their archival type replaces the native spelling, with the
    original preserved.  Excluded columns are left untouched so their
    documentation keeps the native type.  One undo unit.
    """
    session._push_undo("reanalyze")
    session._log(Actor.USER, ACTION_REANALYZE, "", "user-triggered re-analysis")
    for schema in session.model.schemas:
        for table in schema.tables:
            for col in table.columns:
                ref = make_ref("column", schema.name, table.name, col.name)
                if not session.is_archivable(ref):
                    continue
                if not isinstance(col.col_type, NativeTypeRef):
                    continue
                res = resolve_type(col.col_type, session.mode, session.catalog)
                if res.resolved is not None:
                    before = col.col_type.render()
                    col.native_type = col.col_type
                    col.col_type = res.resolved
                    session.statuses[ref] = ObjectStatus(Bullet.GREEN)
                    session._log(
                        Actor.AUTO_A0,
                        ACTION_TYPE_MAPPED,
                        ref,
                        f"type {before} mapped to {res.resolved.render()}"
                        f" ({res.note})",
                    )
                    if res.resolved.kind is TypeKind.CLOB:
                        session._log(
                            Actor.AUTO_A0,
                            ACTION_STORAGE_NOTICE,
                            ref,
                            STORAGE_NOTICE_TEXT,
                        )
                else:
                    finding = _unresolved_finding(col, session.mode, session.catalog)
                    stat = session.statuses[ref]
                    if stat.details != [finding]:
                        session.statuses[ref] = ObjectStatus(Bullet.RED, [finding])
                        session._log(Actor.AUTO_A0, ACTION_FINDING, ref, finding)
    for tref, action, text in _recompute_isolated(session):
        session._log(Actor.AUTO_A0, action, tref, text)
    session._audit()
    return session


# ---------------------------------------------------------------------------
# Readiness and the integrity scan


def readiness(session: AnalysisSession) -> Readiness:
    """Archive-ready iff no RED bullet remains anywhere."""
    blockers = tuple(
        sorted(
            ref
            for ref, stat in session.statuses.items()
            if stat.bullet == Bullet.RED
        )
    )
    return Readiness(not blockers, blockers)


def integrity_scan(session: AnalysisSession) -> list[str]:
    """Exhaustively verify that the archivable set is dependency-closed.

    Returns human-readable violations (empty when consistent): archivable
    objects inside excluded containers, constraints or views or triggers or
    privileges that reference excluded or missing objects, foreign keys
    without an archivable backing key, documentation-only objects marked
    archivable, and status bullets that break the finding rules.
    """
    model = session.model
    problems: list[str] = []

    def bad(text: str) -> None:
        problems.append(text)

    for ref, stat in session.statuses.items():
        if stat.bullet not in Bullet.ALL:
            bad(f"{ref}: unknown bullet {stat.bullet!r}")
        if stat.bullet == Bullet.GREEN and stat.details:
            bad(f"{ref}: GREEN with findings")
        if stat.bullet in (Bullet.RED, Bullet.ORANGE) and not stat.details:
            bad(f"{ref}: {stat.bullet} without a finding")

    for ref, kind, obj in model.iter_objects():
        if ref not in session.statuses:
            bad(f"{ref}: object has no status")

    for schema in model.schemas:
        sref = make_ref("schema", schema.name)
        schema_ok = session.is_archivable(sref)
        for table in schema.tables:
            tref = make_ref("table", schema.name, table.name)
            table_ok = session.is_archivable(tref)
            if table_ok and not schema_ok:
                bad(f"{tref}: archivable inside excluded schema")
            excluded_columns = {
                col.name
                for col in table.columns
                if not session.is_archivable(
                    make_ref("column", schema.name, table.name, col.name)
                )
            }
            for col in table.columns:
                cref = make_ref("column", schema.name, table.name, col.name)
                if session.is_archivable(cref) and not table_ok:
                    bad(f"{cref}: archivable inside excluded table")
            for con in table.constraints:
                cref = make_ref("constraint", schema.name, table.name, con.name)
                if not session.is_archivable(cref):
                    continue
                if not table_ok:
                    bad(f"{cref}: archivable inside excluded table")
                for name in con.columns:
                    if name in excluded_columns:
                        bad(f"{cref}: names excluded column {name}")
                if con.kind == ConstraintKind.CHECK:
                    if not con.check_standard:
                        bad(f"{cref}: nonstandard check is archivable")
                    for name in excluded_columns:
                        if _text_names_identifier(con.check_source, name):
                            bad(f"{cref}: check names excluded column {name}")
                if con.kind == ConstraintKind.FOREIGN_KEY:
                    target_schema = con.ref_schema or schema.name
                    target = model.table(target_schema, con.ref_table or "")
                    if target is None:
                        bad(f"{cref}: references missing table")
                        continue
                    if not session.is_archivable(
                        make_ref("table", target_schema, con.ref_table)
                    ):
                        bad(f"{cref}: references excluded table")
                    for name in con.ref_columns:
                        if target.column(name) is None:
                            bad(f"{cref}: references missing column {name}")
                        elif not session.is_archivable(
                            make_ref(
                                "column", target_schema, con.ref_table, name
                            )
                        ):
                            bad(f"{cref}: references excluded column {name}")
                    backing = _backing_keys(target, con.ref_columns)
                    if backing and not any(
                        session.is_archivable(
                            make_ref(
                                "constraint", target_schema, con.ref_table, k.name
                            )
                        )
                        for k in backing
                    ):
                        bad(f"{cref}: all keys backing its target are excluded")
        for view in schema.views:
            vref = make_ref("view", schema.name, view.name)
            if not session.is_archivable(vref):
                continue
            if not schema_ok:
                bad(f"{vref}: archivable inside excluded schema")
            if not view.standard:
                bad(f"{vref}: nonstandard view is archivable")
            for ref_schema, ref_name in _view_references(view, schema.name):
                target_table = model.table(ref_schema, ref_name)
                target_view = model.view(ref_schema, ref_name)
                if target_table is None and target_view is None:
                    bad(f"{vref}: references missing relation {ref_schema}.{ref_name}")
                elif target_table is not None and not session.is_archivable(
                    make_ref("table", ref_schema, ref_name)
                ):
                    bad(f"{vref}: references excluded table {ref_schema}.{ref_name}")
                elif target_view is not None and not session.is_archivable(
                    make_ref("view", ref_schema, ref_name)
                ):
                    bad(f"{vref}: references excluded view {ref_schema}.{ref_name}")
        for trigger in schema.triggers:
            gref = make_ref("trigger", schema.name, trigger.name)
            if session.is_archivable(gref):
                bad(f"{gref}: documentation-only object is archivable")
        for routine in schema.routines:
            rref = make_ref("routine", schema.name, routine.name)
            if session.is_archivable(rref):
                bad(f"{rref}: documentation-only object is archivable")
        for syn in schema.synonyms:
            yref = make_ref("synonym", schema.name, syn.name)
            if session.is_archivable(yref):
                bad(f"{yref}: documentation-only object is archivable")
        for link in schema.dblinks:
            lref = make_ref("dblink", schema.name, link.name)
            if session.is_archivable(lref):
                bad(f"{lref}: documentation-only object is archivable")
    for user in model.users:
        if session.is_archivable(make_ref("user", user.name)):
            bad(f"user:{user.name}: documentation-only object is archivable")
    for role in model.roles:
        if session.is_archivable(make_ref("role", role.name)):
            bad(f"role:{role.name}: documentation-only object is archivable")
    for nobj in model.native_objects:
        nref = make_ref("native", nobj.kind_guess, nobj.name)
        if session.is_archivable(nref):
            bad(f"{nref}: documentation-only object is archivable")
    for priv in model.privileges:
        if not priv.on_object:
            continue
        pref = make_ref(
            "privilege", priv.privilege, priv.on_schema, priv.on_object, priv.grantee
        )
        if not session.is_archivable(pref):
            continue
        if not _relation_exists(model, priv.on_schema, priv.on_object):
            bad(f"{pref}: granted on missing object")
            continue
        target_table = model.table(priv.on_schema, priv.on_object)
        target_ref = (
            make_ref("table", priv.on_schema, priv.on_object)
            if target_table is not None
            else make_ref("view", priv.on_schema, priv.on_object)
        )
        if not session.is_archivable(target_ref):
            bad(f"{pref}: granted on excluded object")
    return problems


# ---------------------------------------------------------------------------
# Tree, details, report


def _marker_for(has_red: bool, has_orange: bool) -> str:
    if has_red:
        return Marker.CROSS
    if has_orange:
        return Marker.WARNING
    return Marker.CHECK


def _finish_markers(node: TreeNode) -> tuple[bool, bool]:
    has_red = node.bullet == Bullet.RED
    has_orange = node.bullet == Bullet.ORANGE
    for child in node.children:
        child_red, child_orange = _finish_markers(child)
        has_red = has_red or child_red
        has_orange = has_orange or child_orange
    node.marker = _marker_for(has_red, has_orange)
    return has_red, has_orange


def object_tree(session: AnalysisSession) -> TreeNode:
    """The hierarchical object tree with bullets and branch markers.

    Markers are derived from scratch on every call as a pure function of
    the subtree bullets: a CROSS when any RED is below, a WARNING when no
    RED but some ORANGE, a CHECK otherwise.  The tree ends with the
    changelog node.
    """
    model = session.model
    statuses = session.statuses

    def leaf(ref: ObjectRef, label: str, kind: str) -> TreeNode:
        stat = statuses.get(ref)
        return TreeNode(ref, label, kind, stat.bullet if stat else None, Marker.CHECK)

    root_label = model.source.label or "database"
    root = TreeNode("database:", root_label, "database", None, Marker.CHECK)
    for schema in model.schemas:
        snode = leaf(make_ref("schema", schema.name), schema.name, "schema")
        root.children.append(snode)
        for table in schema.tables:
            tnode = leaf(
                make_ref("table", schema.name, table.name), table.name, "table"
            )
            snode.children.append(tnode)
            for col in table.columns:
                tnode.children.append(
                    leaf(
                        make_ref("column", schema.name, table.name, col.name),
                        col.name,
                        "column",
                    )
                )
            for con in table.constraints:
                tnode.children.append(
                    leaf(
                        make_ref("constraint", schema.name, table.name, con.name),
                        con.name,
                        "constraint",
                    )
                )
        for view in schema.views:
            snode.children.append(
                leaf(make_ref("view", schema.name, view.name), view.name, "view")
            )
        for trigger in schema.triggers:
            snode.children.append(
                leaf(
                    make_ref("trigger", schema.name, trigger.name),
                    trigger.name,
                    "trigger",
                )
            )
        for routine in schema.routines:
            snode.children.append(
                leaf(
                    make_ref("routine", schema.name, routine.name),
                    routine.name,
                    "routine",
                )
            )
        for syn in schema.synonyms:
            snode.children.append(
                leaf(
                    make_ref("synonym", schema.name, syn.name), syn.name, "synonym"
                )
            )
        for link in schema.dblinks:
            snode.children.append(
                leaf(make_ref("dblink", schema.name, link.name), link.name, "dblink")
            )

    def group(label: str, children: list[TreeNode]) -> None:
        if children:
            node = TreeNode(f"group:{label}", label, "group", None, Marker.CHECK)
            node.children = children
            root.children.append(node)

    group(
        "users",
        [leaf(make_ref("user", u.name), u.name, "user") for u in model.users],
    )
    group(
        "roles",
        [leaf(make_ref("role", r.name), r.name, "role") for r in model.roles],
    )
    priv_children = []
    for priv in model.privileges:
        pref = make_ref(
            "privilege", priv.privilege, priv.on_schema, priv.on_object, priv.grantee
        )
        priv_children.append(leaf(pref, describe_ref(pref), "privilege"))
    group("privileges", priv_children)
    group(
        "unclassified",
        [
            leaf(
                make_ref("native", n.kind_guess, n.name),
                n.name or n.kind_guess,
                "native",
            )
            for n in model.native_objects
        ],
    )
    root.children.append(
        TreeNode(
            "changelog:",
            f"changelog ({len(session.changelog)} entries)",
            "changelog",
            None,
            Marker.CHECK,
        )
    )
    _finish_markers(root)
    return root


def object_detail(session: AnalysisSession, ref: ObjectRef) -> dict:
    """Status, findings, and a technical summary for one object."""
    stat = session.status(ref)
    kind, parts = split_ref(ref)
    obj = session.model.object_at(ref)
    summary: list[str] = []
    if kind == "column" and obj is not None:
        summary.append(f"type: {obj.col_type.render()}")
        if obj.native_type is not None:
            summary.append(f"source type: {obj.native_type.render()}")
        summary.append("nullable" if obj.nullable else "not nullable")
        if obj.default is not None:
            summary.append(f"default: {obj.default}")
    elif kind == "table" and obj is not None:
        summary.append(f"{len(obj.columns)} column(s)")
        for con in obj.constraints:
            word = _CONSTRAINT_WORDS.get(con.kind, "constraint")
            mark = " (user-added)" if con.user_added else ""
            summary.append(f"{word} {con.name}{mark}")
    elif kind == "constraint" and obj is not None:
        word = _CONSTRAINT_WORDS.get(obj.kind, "constraint")
        if obj.kind == ConstraintKind.CHECK:
            summary.append(f"{word}: CHECK ({obj.check_source})")
        else:
            summary.append(f"{word} on ({', '.join(obj.columns)})")
        if obj.kind == ConstraintKind.FOREIGN_KEY:
            summary.append(
                f"references {obj.ref_schema}.{obj.ref_table}"
                f" ({', '.join(obj.ref_columns)})"
            )
            if obj.on_delete:
                summary.append(f"on delete {obj.on_delete}")
            if obj.on_update:
                summary.append(f"on update {obj.on_update}")
        if obj.user_added:
            summary.append("user-added")
    elif kind == "view" and obj is not None:
        summary.append("standard SQL" if obj.standard else "nonstandard source")
        if obj.query:
            summary.append(f"query: {obj.query}")
        elif obj.source_text:
            summary.append(f"source: {obj.source_text}")
    elif kind == "privilege" and len(parts) == 4:
        summary.append(describe_ref(ref))
    elif obj is not None and getattr(obj, "source_text", ""):
        summary.append(f"source: {obj.source_text}")
    return {
        "ref": ref,
        "kind": kind,
        "bullet": stat.bullet,
        "details": list(stat.details),
        "summary": summary,
    }


def findings_report(session: AnalysisSession) -> str:
    """Plain-text export of every finding, mirroring the detail pane."""
    ready = readiness(session)
    lines = [
        "archive readiness: "
        + ("ready" if ready.ready else f"blocked by {len(ready.blockers)} object(s)")
    ]
    for ref in sorted(session.statuses):
        stat = session.statuses[ref]
        if stat.bullet == Bullet.GREEN and not stat.details:
            continue
        lines.append(f"{stat.bullet:<16} {describe_ref(ref)}")
        for detail in stat.details:
            lines.append(f"    - {detail}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Session persistence


_SESSION_TAG = "clearanceSession"
_SESSION_VERSION = "1"


def _statuses_to_element(statuses: dict[ObjectRef, ObjectStatus]) -> ET.Element:
    el = ET.Element("statuses")
    for ref in sorted(statuses):
        stat = statuses[ref]
        sel = ET.SubElement(el, "status", ref=ref, bullet=stat.bullet)
        for detail in stat.details:
            ET.SubElement(sel, "finding", text=detail)
    return el


def _statuses_from_element(el: ET.Element) -> dict[ObjectRef, ObjectStatus]:
    out: dict[ObjectRef, ObjectStatus] = {}
    for sel in el.findall("status"):
        ref = sel.get("ref")
        bullet = sel.get("bullet")
        if ref is None or bullet not in Bullet.ALL:
            raise AnalysisError("bad status entry in session file")
        out[ref] = ObjectStatus(
            bullet, [f.get("text", "") for f in sel.findall("finding")]
        )
    return out


def _catalog_to_element(catalog: SynonymCatalog) -> ET.Element:
    return ET.fromstring(catalog_to_xml(catalog))


def _catalog_from_element(el: ET.Element) -> SynonymCatalog:
    return parse_catalog_xml(ET.tostring(el, encoding="unicode"))


def session_to_xml(session: AnalysisSession) -> str:
    """The complete session — model, statuses, rules, undo stack, log."""
    root = ET.Element(
        _SESSION_TAG, version=_SESSION_VERSION, savedAt=session.clock()
    )
    root.append(ET.fromstring(mode_to_xml(session.mode)))
    root.append(_catalog_to_element(session.catalog))
    root.append(model_to_element(session.model))
    root.append(_statuses_to_element(session.statuses))
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
    undo_el = ET.SubElement(root, "undoStack")
    for unit in session.undo_stack:
        unit_el = ET.SubElement(undo_el, "unit", label=unit.label)
        unit_el.append(model_to_element(unit.model))
        unit_el.append(_statuses_to_element(unit.statuses))
        unit_el.append(_catalog_to_element(unit.catalog))
    ET.indent(root)
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        + ET.tostring(root, encoding="unicode")
        + "\n"
    )


def session_from_xml(
    text: str,
    *,
    clock: Callable[[], str] | None = None,
    audit: bool = False,
) -> AnalysisSession:
    """Rebuild a session, undo stack included, from its XML file."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise AnalysisError(f"bad session file: {exc}") from exc
    if root.tag != _SESSION_TAG:
        raise AnalysisError(f"expected <{_SESSION_TAG}>, found <{root.tag}>")
    if root.get("version") != _SESSION_VERSION:
        raise AnalysisError(
            f"unsupported session file version {root.get('version')!r}"
        )
    mode_el = root.find("accessMode")
    catalog_el = root.find("synonymCatalog")
    model_el = root.find("model")
    statuses_el = root.find("statuses")
    if mode_el is None or catalog_el is None or model_el is None or statuses_el is None:
        raise AnalysisError("session file lacks a required section")
    try:
        mode = parse_mode_xml(ET.tostring(mode_el, encoding="unicode"))
        catalog = _catalog_from_element(catalog_el)
    except DialectError as exc:
        raise AnalysisError(str(exc)) from exc
    session = AnalysisSession(
        model_from_element(model_el), mode, catalog, clock=clock, audit=audit
    )
    session.statuses = _statuses_from_element(statuses_el)
    log_el = root.find("changelog")
    if log_el is not None:
        for entry_el in log_el.findall("entry"):
            actor = entry_el.get("actor", "")
            if actor not in Actor.ALL:
                raise AnalysisError(f"unknown changelog actor {actor!r}")
            session.changelog.append(
                ChangeEntry(
                    entry_el.get("at", ""),
                    actor,
                    entry_el.get("action", ""),
                    entry_el.get("target", ""),
                    entry_el.get("detail", ""),
                )
            )
    undo_el = root.find("undoStack")
    if undo_el is not None:
        for unit_el in undo_el.findall("unit"):
            unit_model = unit_el.find("model")
            unit_statuses = unit_el.find("statuses")
            unit_catalog = unit_el.find("synonymCatalog")
            if unit_model is None or unit_statuses is None or unit_catalog is None:
                raise AnalysisError("undo unit lacks a required section")
            session.undo_stack.append(
                UndoUnit(
                    unit_el.get("label", ""),
                    model_from_element(unit_model),
                    _statuses_from_element(unit_statuses),
                    _catalog_from_element(unit_catalog),
                )
            )
    return session


def save_session(session: AnalysisSession, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(session_to_xml(session), encoding="utf-8")
    return path


def load_session(
    path: str | Path,
    *,
    clock: Callable[[], str] | None = None,
    audit: bool = False,
) -> AnalysisSession:
    return session_from_xml(
        Path(path).read_text(encoding="utf-8"), clock=clock, audit=audit
    )
