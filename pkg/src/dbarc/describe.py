"""Descriptive metadata for completed archives: the documentation stage.

An archive leaves the creation stage technically complete but humanly
mute: table and column names, types and keys, yet no word on what any of
it meant.  This module opens a completed archive and lets an archivist
add that meaning — free-text names and narratives per object, code lists
decoding magic values, a customizable form of context questions (the
context metadata schema) with per-language field descriptions, and
arbitrary attached documentation files — then freezes the result.

Everything lands inside the archive itself: the reference document grows
the descriptive sections and an own changelog subnode, attachments are
copied under ``docs/``, and the archive manifest is rewritten so
integrity checks keep passing.  Filled form values snapshot the exact
field description (and language) shown at entry time, so later edits to
the form never rewrite what a past archivist actually answered.

Finalizing is a one-way gate: it requires every mandatory form field to
be filled, rewrites the reference document one last time with
``finalized="true"``, and from then on every mutating operation fails.
"""

from __future__ import annotations

import shutil
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from dbarc.analysis import Actor, ChangeEntry, utc_clock
from dbarc.archive import (
    Archive,
    ArchiveFileInfo,
    MANIFEST_NAME,
    REFERENCE_PATH,
    _element_text,
    _file_info,
    _manifest_text,
    _read_xml,
    _write_text,
    check_plain_text,
    read_archive,
)
from dbarc.sqlcore.model import ObjectRef, split_ref
from dbarc.sqlcore.modelxml import model_from_element

__all__ = [
    "FREE_TEXT",
    "PULL_DOWN",
    "CM_SCHEMA_PATH",
    "DescribeError",
    "ConfirmationRequired",
    "FieldSpec",
    "SchemaTab",
    "ContextSchema",
    "ContextValue",
    "Attachment",
    "ObjectNote",
    "Completeness",
    "DescribeSession",
    "add_field",
    "add_tab",
    "attach_document",
    "completeness",
    "describe_object",
    "export_html",
    "finalize",
    "load_schema",
    "move_field",
    "move_tab",
    "open_describe",
    "remove_field",
    "remove_tab",
    "save",
    "save_schema",
    "schema_from_xml",
    "schema_to_xml",
    "set_code_list",
    "set_context_value",
    "set_field_description",
    "set_field_mandatory",
    "use_schema",
    "validate_schema",
]

#: Form field kinds: free-form text, or a fixed list of choices.
FREE_TEXT = "FREE_TEXT"
PULL_DOWN = "PULL_DOWN"

#: Where the active context form definition is copied inside the archive.
CM_SCHEMA_PATH = "reference/cmSchema.xml"

ACTION_DESCRIBED = "described"
ACTION_CODE_LIST_SET = "code-list-set"
ACTION_CODE_LIST_REMOVED = "code-list-removed"
ACTION_SCHEMA_LOADED = "schema-loaded"
ACTION_VALUE_FILLED = "value-filled"
ACTION_VALUE_CLEARED = "value-cleared"
ACTION_ATTACHED = "document-attached"
ACTION_FINALIZED = "finalized"


class DescribeError(ValueError):
    """Raised for unknown refs, illegal edits, and sealed documents."""


class ConfirmationRequired(DescribeError):
    """A schema change would orphan filled mandatory answers.

    Nothing was changed; retry with ``confirmed=True`` to accept that the
    listed values become read-only leftovers of a removed field.
    """

    def __init__(self, warnings: list[str]):
        super().__init__(
            "confirmation required:\n" + "\n".join(f"  - {w}" for w in warnings)
        )
        self.warnings = tuple(warnings)


# ---------------------------------------------------------------------------
# The context metadata schema (the editable form definition)


@dataclass
class FieldSpec:
    """One question on the context form.

    ``descriptions`` maps language codes to the explanation shown next to
    the field; at least one language is required.  ``PULL_DOWN`` fields
    restrict answers to ``values``.
    """

    id: str
    kind: str = FREE_TEXT
    values: tuple[str, ...] = ()
    mandatory: bool = False
    descriptions: dict[str, str] = field(default_factory=dict)


@dataclass
class SchemaTab:
    name: str
    fields: list[FieldSpec] = field(default_factory=list)


@dataclass
class ContextSchema:
    """An ordered set of tabs, each holding ordered form fields."""

    name: str
    tabs: list[SchemaTab] = field(default_factory=list)

    def tab(self, name: str) -> SchemaTab | None:
        for tab in self.tabs:
            if tab.name == name:
                return tab
        return None

    def iter_fields(self):
        for tab in self.tabs:
            for spec in tab.fields:
                yield tab, spec

    def field(self, field_id: str) -> FieldSpec | None:
        for _, spec in self.iter_fields():
            if spec.id == field_id:
                return spec
        return None


def validate_schema(schema: ContextSchema) -> None:
    """Reject schemas that could not be rendered as a usable form."""
    problems: list[str] = []
    if not schema.name:
        problems.append("the schema needs a name")
    seen_tabs: set[str] = set()
    seen_fields: set[str] = set()
    for tab in schema.tabs:
        if not tab.name:
            problems.append("a tab lacks a name")
        elif tab.name in seen_tabs:
            problems.append(f"duplicate tab name {tab.name!r}")
        seen_tabs.add(tab.name)
        for spec in tab.fields:
            if not spec.id:
                problems.append(f"a field on tab {tab.name!r} lacks an id")
                continue
            if spec.id in seen_fields:
                problems.append(f"duplicate field id {spec.id!r}")
            seen_fields.add(spec.id)
            if spec.kind not in (FREE_TEXT, PULL_DOWN):
                problems.append(f"field {spec.id!r}: unknown kind {spec.kind!r}")
            if spec.kind == PULL_DOWN and not spec.values:
                problems.append(
                    f"field {spec.id!r}: a choice field needs at least one value"
                )
            if spec.kind == FREE_TEXT and spec.values:
                problems.append(
                    f"field {spec.id!r}: a free-text field cannot list values"
                )
            if not spec.descriptions:
                problems.append(
                    f"field {spec.id!r}: at least one description language"
                    " is required"
                )
    if problems:
        raise DescribeError(
            "invalid context schema:\n" + "\n".join(f"  - {p}" for p in problems)
        )


def add_tab(schema: ContextSchema, name: str) -> SchemaTab:
    if not name:
        raise DescribeError("a tab needs a name")
    if schema.tab(name) is not None:
        raise DescribeError(f"duplicate tab name {name!r}")
    tab = SchemaTab(name)
    schema.tabs.append(tab)
    return tab


def add_field(schema: ContextSchema, tab_name: str, spec: FieldSpec) -> None:
    tab = schema.tab(tab_name)
    if tab is None:
        raise DescribeError(f"no tab named {tab_name!r}")
    if schema.field(spec.id) is not None:
        raise DescribeError(f"duplicate field id {spec.id!r}")
    tab.fields.append(spec)
    try:
        validate_schema(schema)
    except DescribeError:
        tab.fields.pop()
        raise


def remove_tab(schema: ContextSchema, name: str) -> None:
    tab = schema.tab(name)
    if tab is None:
        raise DescribeError(f"no tab named {name!r}")
    schema.tabs.remove(tab)


def remove_field(schema: ContextSchema, field_id: str) -> None:
    for tab in schema.tabs:
        for spec in tab.fields:
            if spec.id == field_id:
                tab.fields.remove(spec)
                return
    raise DescribeError(f"no field with id {field_id!r}")


def move_tab(schema: ContextSchema, name: str, index: int) -> None:
    tab = schema.tab(name)
    if tab is None:
        raise DescribeError(f"no tab named {name!r}")
    schema.tabs.remove(tab)
    schema.tabs.insert(index, tab)


def move_field(
    schema: ContextSchema, field_id: str, tab_name: str, index: int
) -> None:
    """Reorder a field, possibly across tabs."""
    spec = schema.field(field_id)
    if spec is None:
        raise DescribeError(f"no field with id {field_id!r}")
    target = schema.tab(tab_name)
    if target is None:
        raise DescribeError(f"no tab named {tab_name!r}")
    for tab in schema.tabs:
        if spec in tab.fields:
            tab.fields.remove(spec)
    target.fields.insert(index, spec)


def set_field_description(
    schema: ContextSchema, field_id: str, language: str, text: str
) -> None:
    spec = schema.field(field_id)
    if spec is None:
        raise DescribeError(f"no field with id {field_id!r}")
    if not language:
        raise DescribeError("a description needs a language code")
    spec.descriptions[language] = text


def set_field_mandatory(
    schema: ContextSchema, field_id: str, mandatory: bool
) -> None:
    spec = schema.field(field_id)
    if spec is None:
        raise DescribeError(f"no field with id {field_id!r}")
    spec.mandatory = mandatory


def schema_to_element(schema: ContextSchema) -> ET.Element:
    root = ET.Element("contextSchema", name=schema.name)
    for tab in schema.tabs:
        tab_el = ET.SubElement(root, "tab", name=tab.name)
        for spec in tab.fields:
            f_el = ET.SubElement(
                tab_el,
                "field",
                id=spec.id,
                kind=spec.kind,
                mandatory="true" if spec.mandatory else "false",
            )
            for value in spec.values:
                ET.SubElement(f_el, "choice", value=value)
            for language, text in spec.descriptions.items():
                ET.SubElement(
                    f_el, "description", language=language, text=text
                )
    return root


def schema_from_element(root: ET.Element) -> ContextSchema:
    if root.tag != "contextSchema":
        raise DescribeError(f"expected <contextSchema>, found <{root.tag}>")
    schema = ContextSchema(root.get("name", ""))
    for tab_el in root:
        if tab_el.tag != "tab":
            raise DescribeError(f"unexpected <{tab_el.tag}> in a context schema")
        tab = SchemaTab(tab_el.get("name", ""))
        for f_el in tab_el:
            if f_el.tag != "field":
                raise DescribeError(f"unexpected <{f_el.tag}> in a tab")
            spec = FieldSpec(
                id=f_el.get("id", ""),
                kind=f_el.get("kind", FREE_TEXT),
                values=tuple(
                    c.get("value", "") for c in f_el.findall("choice")
                ),
                mandatory=f_el.get("mandatory") == "true",
                descriptions={
                    d.get("language", ""): d.get("text", "")
                    for d in f_el.findall("description")
                },
            )
            tab.fields.append(spec)
        schema.tabs.append(tab)
    validate_schema(schema)
    return schema


def schema_to_xml(schema: ContextSchema) -> str:
    validate_schema(schema)
    return _element_text(schema_to_element(schema))


def schema_from_xml(text: str) -> ContextSchema:
    stripped = text.lstrip("﻿")
    if stripped.startswith("<?"):
        stripped = stripped.split("?>", 1)[1]
    return schema_from_element(ET.fromstring(stripped))


def save_schema(schema: ContextSchema, path: Path) -> None:
    """Write a form definition as its own file, reusable across archives."""
    _write_text(Path(path), schema_to_xml(schema))


def load_schema(path: Path) -> ContextSchema:
    return schema_from_element(_read_xml(Path(path)))


# ---------------------------------------------------------------------------
# Session state


@dataclass(frozen=True)
class ContextValue:
    """One filled form answer, frozen together with what the user saw.

    The snapshot (description text, its language, the mandatory flag)
    belongs to the moment of entry; later schema edits never touch it.
    """

    field_id: str
    value: str
    language: str
    description_snapshot: str
    mandatory_snapshot: bool
    entered_at: str


@dataclass(frozen=True)
class ObjectNote:
    full_name: str = ""
    description: str = ""


@dataclass(frozen=True)
class Attachment:
    file: str  # name under docs/
    caption: str
    added_at: str


@dataclass(frozen=True)
class Completeness:
    complete: bool
    missing: tuple[str, ...]


class DescribeSession:
    """One documentation pass over one archive directory.

    All state lives in the archive's reference document; :func:`save`
    (or :func:`finalize`) writes it back and refreshes the manifest.
    Mutations go through module functions, which changelog themselves
    under the documentation subnode.
    """

    def __init__(
        self,
        root: Path,
        archive: Archive,
        doc: ET.Element,
        known_refs: frozenset[ObjectRef],
        *,
        language: str,
        clock,
    ):
        self.root = root
        self.archive = archive
        self.doc = doc
        self.known_refs = known_refs
        self.language = language
        self.clock = clock
        self.finalized = doc.get("finalized") == "true"
        self.notes: dict[ObjectRef, ObjectNote] = {}
        self.code_lists: dict[ObjectRef, tuple[tuple[str, str], ...]] = {}
        self.schema: ContextSchema | None = None
        self.values: dict[str, ContextValue] = {}
        self.attachments: list[Attachment] = []
        self.entries: list[ChangeEntry] = []

    # -- helpers --------------------------------------------------------

    def _log(self, action: str, target: str, detail: str) -> None:
        self.entries.append(
            ChangeEntry(
                timestamp=self.clock(),
                actor=Actor.USER,
                action=action,
                target=target,
                detail=detail,
            )
        )

    def _require_open(self) -> None:
        if self.finalized:
            raise DescribeError(
                "the reference document is finalized; no further changes"
                " are possible"
            )

    def _require_known(self, ref: ObjectRef) -> None:
        if ref not in self.known_refs:
            raise DescribeError(
                f"{ref!r} names no object in this archive's reference document"
            )


def _doc_refs(doc: ET.Element) -> frozenset[ObjectRef]:
    """Every object the reference document covers (archived + excluded)."""
    model_el = doc.find("archivedLogic/model")
    if model_el is None:
        raise DescribeError("reference document lacks the archived logic")
    refs = {ref for ref, _, _ in model_from_element(model_el).iter_objects()}
    for el in doc.findall("excludedObjects/excludedObject"):
        ref = el.get("ref")
        if ref:
            refs.add(ref)
    return frozenset(refs)


def _parse_a1(session: DescribeSession, doc: ET.Element) -> None:
    """Load previously saved descriptive state back into the session."""
    for el in doc.findall("descriptions/objectNote"):
        ref = el.get("ref", "")
        session._require_known(ref)
        session.notes[ref] = ObjectNote(
            full_name=el.get("fullName", ""),
            description=el.get("description", ""),
        )
    for el in doc.findall("codeLists/codeList"):
        ref = el.get("column", "")
        session._require_known(ref)
        entries = tuple(
            (e.get("code", ""), e.get("meaning", ""))
            for e in el.findall("entry")
        )
        _check_codes(entries)
        session.code_lists[ref] = entries
    cm_el = doc.find("contextMetadata")
    if cm_el is not None:
        for el in cm_el.findall("value"):
            value = ContextValue(
                field_id=el.get("fieldId", ""),
                value=el.get("value", ""),
                language=el.get("language", ""),
                description_snapshot=el.get("descriptionSnapshot", ""),
                mandatory_snapshot=el.get("mandatorySnapshot") == "true",
                entered_at=el.get("enteredAt", ""),
            )
            session.values[value.field_id] = value
    for el in doc.findall("attachments/attachment"):
        session.attachments.append(
            Attachment(
                file=el.get("file", ""),
                caption=el.get("caption", ""),
                added_at=el.get("addedAt", ""),
            )
        )
    for el in doc.findall("changelog/a1/entry"):
        session.entries.append(
            ChangeEntry(
                timestamp=el.get("at", ""),
                actor=el.get("actor", ""),
                action=el.get("action", ""),
                target=el.get("target", ""),
                detail=el.get("detail", ""),
            )
        )


def open_describe(
    path: Path, *, language: str = "en", clock=None
) -> DescribeSession:
    """Open an archive for documentation (or inspection once finalized).

    ``language`` selects which field descriptions the form shows and
    snapshots; it can differ between sessions on the same archive.
    """
    root = Path(path)
    try:
        archive = read_archive(root, verify=False)
        doc = archive.read_reference()
    except OSError as exc:
        raise DescribeError(f"cannot open archive at {root}: {exc}") from exc
    if not language:
        raise DescribeError("a language code is required")
    session = DescribeSession(
        root,
        archive,
        doc,
        _doc_refs(doc),
        language=language,
        clock=clock or utc_clock,
    )
    _parse_a1(session, doc)
    schema_file = root.joinpath(*CM_SCHEMA_PATH.split("/"))
    if schema_file.is_file():
        session.schema = load_schema(schema_file)
    return session


# ---------------------------------------------------------------------------
# Describing objects


def describe_object(
    session: DescribeSession,
    ref: ObjectRef,
    *,
    full_name: str | None = None,
    description: str | None = None,
) -> DescribeSession:
    """Attach a human name and/or a narrative to any documented object.

    Excluded objects are describable too — they are part of the record.
    ``None`` leaves a part untouched; an empty string clears it.
    """
    session._require_open()
    session._require_known(ref)
    if full_name is None and description is None:
        raise DescribeError("nothing to record: give a full name and/or a description")
    for text in (full_name, description):
        if text:
            check_plain_text(text, f"description of {ref}")
    current = session.notes.get(ref, ObjectNote())
    note = ObjectNote(
        full_name=current.full_name if full_name is None else full_name,
        description=current.description if description is None else description,
    )
    parts = []
    if full_name is not None:
        parts.append(f"full name {full_name!r}")
    if description is not None:
        parts.append(f"description {_shorten(description)!r}")
    if note == ObjectNote():
        session.notes.pop(ref, None)
        session._log(ACTION_DESCRIBED, ref, "note cleared")
    else:
        session.notes[ref] = note
        session._log(ACTION_DESCRIBED, ref, ", ".join(parts))
    return session


def _shorten(text: str, limit: int = 60) -> str:
    return text if len(text) <= limit else text[: limit - 1] + "…"


def object_note(session: DescribeSession, ref: ObjectRef) -> ObjectNote | None:
    return session.notes.get(ref)


# ---------------------------------------------------------------------------
# Code lists


def _check_codes(entries: tuple[tuple[str, str], ...]) -> None:
    seen: set[str] = set()
    for code, _meaning in entries:
        if not code:
            raise DescribeError("a code list entry needs a code")
        if code in seen:
            raise DescribeError(f"duplicate code {code!r} in the code list")
        seen.add(code)


def set_code_list(
    session: DescribeSession, column_ref: ObjectRef, entries
) -> DescribeSession:
    """Record what each stored code means for one column.

    An empty entry list removes the column's code list.
    """
    session._require_open()
    session._require_known(column_ref)
    kind, _ = split_ref(column_ref)
    if kind != "column":
        raise DescribeError(f"code lists attach to columns, not {kind!r}")
    normalized = tuple((str(c), str(m)) for c, m in entries)
    for code, meaning in normalized:
        check_plain_text(code, f"code for {column_ref}")
        check_plain_text(meaning, f"code meaning for {column_ref}")
    if not normalized:
        if column_ref not in session.code_lists:
            raise DescribeError(f"no code list to remove on {column_ref}")
        del session.code_lists[column_ref]
        session._log(ACTION_CODE_LIST_REMOVED, column_ref, "code list removed")
        return session
    _check_codes(normalized)
    session.code_lists[column_ref] = normalized
    session._log(
        ACTION_CODE_LIST_SET, column_ref, f"{len(normalized)} code(s) documented"
    )
    return session


def code_list(
    session: DescribeSession, column_ref: ObjectRef
) -> tuple[tuple[str, str], ...] | None:
    return session.code_lists.get(column_ref)


# ---------------------------------------------------------------------------
# The context form


def use_schema(
    session: DescribeSession, schema: ContextSchema, *, confirmed: bool = False
) -> DescribeSession:
    """Load (or replace) the context form this archive is filled against.

    Filled answers are never destroyed: answers to fields the new schema
    no longer defines stay visible with their snapshots, read-only.
    Dropping a field whose mandatory answer is already filled asks for
    confirmation first.
    """
    session._require_open()
    validate_schema(schema)
    kept = {spec.id for _, spec in schema.iter_fields()}
    warnings = [
        f"field {value.field_id!r} is filled and mandatory; the new schema"
        " drops it, the answer becomes a read-only leftover"
        for value in session.values.values()
        if value.field_id not in kept and value.mandatory_snapshot
    ]
    if warnings and not confirmed:
        raise ConfirmationRequired(warnings)
    session.schema = schema
    n_fields = sum(1 for _ in schema.iter_fields())
    session._log(
        ACTION_SCHEMA_LOADED,
        f"form:{schema.name}",
        f"{len(schema.tabs)} tab(s), {n_fields} field(s)",
    )
    return session


def set_context_value(
    session: DescribeSession, field_id: str, value: str | None
) -> DescribeSession:
    """Fill one form field (or clear it with ``None``).

    The stored answer snapshots the field description in the session's
    language — exactly the text an archivist was looking at — plus the
    mandatory flag, and keeps both even if the schema changes later.
    """
    session._require_open()
    if session.schema is None:
        raise DescribeError("no context schema loaded")
    spec = session.schema.field(field_id)
    if spec is None:
        if field_id in session.values:
            raise DescribeError(
                f"field {field_id!r} is no longer on the form; its answer"
                " is read-only"
            )
        raise DescribeError(f"no field with id {field_id!r} on the form")
    if value is None:
        if field_id not in session.values:
            raise DescribeError(f"field {field_id!r} is not filled")
        del session.values[field_id]
        session._log(ACTION_VALUE_CLEARED, f"field:{field_id}", "answer cleared")
        return session
    value = str(value)
    if not value:
        raise DescribeError("an answer cannot be empty; clear it with None")
    check_plain_text(value, f"answer to {field_id}")
    if spec.kind == PULL_DOWN and value not in spec.values:
        raise DescribeError(
            f"{value!r} is not among the choices for field {field_id!r}:"
            f" {', '.join(spec.values)}"
        )
    if session.language in spec.descriptions:
        language = session.language
    else:
        language = next(iter(spec.descriptions))
    session.values[field_id] = ContextValue(
        field_id=field_id,
        value=value,
        language=language,
        description_snapshot=spec.descriptions[language],
        mandatory_snapshot=spec.mandatory,
        entered_at=session.clock(),
    )
    session._log(ACTION_VALUE_FILLED, f"field:{field_id}", f"answer {value!r}")
    return session


def completeness(session: DescribeSession) -> Completeness:
    """Whether every mandatory form field has an answer; the finalize gate."""
    if session.schema is None:
        return Completeness(True, ())
    missing = tuple(
        spec.id
        for _, spec in session.schema.iter_fields()
        if spec.mandatory and spec.id not in session.values
    )
    return Completeness(not missing, missing)


# ---------------------------------------------------------------------------
# Attachments


def _check_attachment_name(name: str) -> None:
    if not name or name in (".", ".."):
        raise DescribeError(f"unusable attachment name {name!r}")
    if "/" in name or "\\" in name:
        raise DescribeError(f"attachment name {name!r} must not contain path separators")
    if any(ord(ch) < 0x20 or ch == "\x7f" for ch in name):
        raise DescribeError(f"attachment name {name!r} contains control characters")


def attach_document(
    session: DescribeSession, source: Path, caption: str
) -> DescribeSession:
    """Copy one documentation file into the archive's ``docs/`` directory.

    The file's content is taken verbatim and never inspected; only the
    manifest records its size and digest.
    """
    session._require_open()
    src = Path(source)
    if not src.is_file():
        raise DescribeError(f"{src} is not a file")
    name = src.name
    _check_attachment_name(name)
    check_plain_text(caption, f"caption of {name}")
    if any(att.file == name for att in session.attachments):
        raise DescribeError(f"an attachment named {name!r} already exists")
    docs_dir = session.root / "docs"
    docs_dir.mkdir(exist_ok=True)
    dest = docs_dir / name
    if dest.exists():
        raise DescribeError(f"docs/{name} already exists in the archive")
    shutil.copyfile(src, dest)
    session.attachments.append(
        Attachment(file=name, caption=caption, added_at=session.clock())
    )
    session._log(ACTION_ATTACHED, f"document:{name}", caption or "attached")
    return session


# ---------------------------------------------------------------------------
# Saving, exporting, finalizing


def _a1_sections(session: DescribeSession) -> list[ET.Element]:
    sections: list[ET.Element] = []
    if session.notes:
        desc_el = ET.Element("descriptions")
        for ref in sorted(session.notes):
            note = session.notes[ref]
            el = ET.SubElement(desc_el, "objectNote", ref=ref)
            if note.full_name:
                el.set("fullName", note.full_name)
            if note.description:
                el.set("description", note.description)
        sections.append(desc_el)
    if session.code_lists:
        lists_el = ET.Element("codeLists")
        for ref in sorted(session.code_lists):
            cl_el = ET.SubElement(lists_el, "codeList", column=ref)
            for code, meaning in session.code_lists[ref]:
                ET.SubElement(cl_el, "entry", code=code, meaning=meaning)
        sections.append(lists_el)
    if session.schema is not None or session.values:
        cm_el = ET.Element("contextMetadata", language=session.language)
        if session.schema is not None:
            cm_el.set("schemaName", session.schema.name)
        for field_id in sorted(session.values):
            value = session.values[field_id]
            ET.SubElement(
                cm_el,
                "value",
                fieldId=value.field_id,
                value=value.value,
                language=value.language,
                descriptionSnapshot=value.description_snapshot,
                mandatorySnapshot="true" if value.mandatory_snapshot else "false",
                enteredAt=value.entered_at,
            )
        sections.append(cm_el)
    if session.attachments:
        atts_el = ET.Element("attachments")
        for att in session.attachments:
            ET.SubElement(
                atts_el,
                "attachment",
                file=att.file,
                caption=att.caption,
                addedAt=att.added_at,
            )
        sections.append(atts_el)
    return sections


def _updated_document(session: DescribeSession) -> ET.Element:
    doc = session.doc
    doc.set("finalized", "true" if session.finalized else "false")
    for tag in ("descriptions", "codeLists", "contextMetadata", "attachments"):
        for el in doc.findall(tag):
            doc.remove(el)
    log_el = doc.find("changelog")
    if log_el is None:
        raise DescribeError("reference document lacks its changelog")
    for el in log_el.findall("a1"):
        log_el.remove(el)
    a1_el = ET.SubElement(log_el, "a1")
    for entry in session.entries:
        ET.SubElement(
            a1_el,
            "entry",
            at=entry.timestamp,
            actor=entry.actor,
            action=entry.action,
            target=entry.target,
            detail=entry.detail,
        )
    for section in _a1_sections(session):
        doc.append(section)
    return doc


_A1_KINDS = frozenset({"reference", "cmschema", "document"})


def _save(session: DescribeSession) -> None:
    doc = _updated_document(session)
    _write_text(
        session.root.joinpath(*REFERENCE_PATH.split("/")), _element_text(doc)
    )
    kept = [
        info for info in session.archive.files if info.kind not in _A1_KINDS
    ]
    fresh: list[ArchiveFileInfo] = [
        _file_info(session.root, REFERENCE_PATH, "reference")
    ]
    if session.schema is not None:
        _write_text(
            session.root.joinpath(*CM_SCHEMA_PATH.split("/")),
            schema_to_xml(session.schema),
        )
        fresh.append(_file_info(session.root, CM_SCHEMA_PATH, "cmschema"))
    for att in session.attachments:
        rel = f"docs/{att.file}"
        if not session.root.joinpath("docs", att.file).is_file():
            raise DescribeError(f"attachment {rel} disappeared from the archive")
        fresh.append(_file_info(session.root, rel, "document"))
    files = sorted(kept + fresh, key=lambda info: info.path)
    _write_text(
        session.root / MANIFEST_NAME,
        _manifest_text(
            files, session.archive.created, session.archive.label
        ),
    )
    session.archive.files = tuple(files)


def save(session: DescribeSession) -> None:
    """Write the descriptive state back into the archive.

    Rewrites the reference document and the form copy, then refreshes
    the manifest so sizes and digests match again.
    """
    session._require_open()
    _save(session)


def finalize(session: DescribeSession) -> DescribeSession:
    """Seal the documentation: one-way, gated on completeness.

    After this, the reference document answers every mandatory question
    and no operation can change it again.
    """
    session._require_open()
    report = completeness(session)
    if not report.complete:
        raise DescribeError(
            "cannot finalize, mandatory fields are unfilled: "
            + ", ".join(report.missing)
        )
    session._log(ACTION_FINALIZED, "database:", "reference document finalized")
    session.finalized = True
    _save(session)
    return session


# ---------------------------------------------------------------------------
# HTML export


_EXPORT_CSS = """
body { font-family: sans-serif; margin: 2em; }
table.data { border-collapse: collapse; }
table.data th, table.data td {
  border: 1px solid #444;
  padding: 0.25em 0.6em;
  text-align: left;
  vertical-align: top;
}
table.data th { background: #eee; }
td.null { color: #777; font-style: italic; }
.draft { color: #a00; }
.snapshot { color: #555; font-size: 90%; }
"""


def _esc(text: str) -> str:
    import html

    return html.escape(str(text), quote=True)


def export_html(session: DescribeSession) -> str:
    """The whole reference document as one self-contained HTML page.

    Available at any time; before finalization the page carries a draft
    marker and lists what is still missing.
    """
    doc = session.doc
    model = model_from_element(doc.find("archivedLogic/model"))
    out: list[str] = []
    title = "Database archive reference"
    report = completeness(session)
    out.append("<!DOCTYPE html>")
    out.append('<html><head><meta charset="utf-8"/>')
    out.append(f"<title>{_esc(title)}</title>")
    out.append(f"<style>{_EXPORT_CSS}</style></head><body>")
    if session.finalized:
        out.append(f"<h1>{_esc(title)}</h1>")
    else:
        out.append(f'<h1>{_esc(title)} <span class="draft">(draft)</span></h1>')
        if report.missing:
            out.append('<p class="draft">Mandatory fields not yet filled:</p><ul>')
            for field_id in report.missing:
                out.append(f'<li class="draft">{_esc(field_id)}</li>')
            out.append("</ul>")
    out.append("<h2>Archived logic</h2>")
    for schema in model.schemas:
        out.append(f"<h3>Schema {_esc(schema.name)}</h3>")
        for table in schema.tables:
            tref = f"table:{schema.name}.{table.name}"
            out.append(f"<h4>Table {_esc(schema.name)}.{_esc(table.name)}</h4>")
            out.append(_note_html(session, tref))
            out.append('<table class="data">')
            out.append(
                "<tr><th>Column</th><th>Type</th><th>Nullable</th>"
                "<th>Full name</th><th>Description</th><th>Codes</th></tr>"
            )
            for col in table.columns:
                cref = f"column:{schema.name}.{table.name}.{col.name}"
                note = session.notes.get(cref, ObjectNote())
                codes = session.code_lists.get(cref, ())
                codes_html = "<br/>".join(
                    f"{_esc(code)} = {_esc(meaning)}" for code, meaning in codes
                )
                out.append(
                    "<tr>"
                    f"<td>{_esc(col.name)}</td>"
                    f"<td>{_esc(col.type_text())}</td>"
                    f"<td>{'yes' if col.nullable else 'no'}</td>"
                    f"<td>{_esc(note.full_name)}</td>"
                    f"<td>{_esc(note.description)}</td>"
                    f"<td>{codes_html}</td>"
                    "</tr>"
                )
            out.append("</table>")
        for view in schema.views:
            vref = f"view:{schema.name}.{view.name}"
            out.append(f"<h4>View {_esc(schema.name)}.{_esc(view.name)}</h4>")
            out.append(_note_html(session, vref))
    excluded = doc.findall("excludedObjects/excludedObject")
    if excluded:
        out.append("<h2>Excluded objects</h2>")
        out.append('<table class="data">')
        out.append(
            "<tr><th>Object</th><th>Kind</th><th>Status</th>"
            "<th>Findings</th><th>Description</th></tr>"
        )
        for el in excluded:
            ref = el.get("ref", "")
            note = session.notes.get(ref, ObjectNote())
            findings = "<br/>".join(
                _esc(f.get("text", "")) for f in el.findall("finding")
            )
            out.append(
                "<tr>"
                f"<td>{_esc(ref)}</td>"
                f"<td>{_esc(el.get('kind', ''))}</td>"
                f"<td>{_esc(el.get('bullet', ''))}</td>"
                f"<td>{findings}</td>"
                f"<td>{_esc(note.description or note.full_name)}</td>"
                "</tr>"
            )
        out.append("</table>")
    if session.schema is not None or session.values:
        out.append("<h2>Context metadata</h2>")
        shown: set[str] = set()
        if session.schema is not None:
            for tab in session.schema.tabs:
                out.append(f"<h3>{_esc(tab.name)}</h3>")
                out.append('<table class="data">')
                out.append("<tr><th>Field</th><th>Answer</th><th>Shown description</th></tr>")
                for spec in tab.fields:
                    value = session.values.get(spec.id)
                    shown.add(spec.id)
                    answer = _esc(value.value) if value else "<i>unfilled</i>"
                    snapshot = (
                        f'<span class="snapshot">{_esc(value.description_snapshot)}'
                        f" [{_esc(value.language)}]</span>"
                        if value
                        else ""
                    )
                    marker = " *" if spec.mandatory else ""
                    out.append(
                        f"<tr><td>{_esc(spec.id)}{marker}</td>"
                        f"<td>{answer}</td><td>{snapshot}</td></tr>"
                    )
                out.append("</table>")
        leftovers = [
            value
            for field_id, value in sorted(session.values.items())
            if field_id not in shown
        ]
        if leftovers:
            out.append("<h3>Answers to removed fields</h3>")
            out.append('<table class="data">')
            out.append("<tr><th>Field</th><th>Answer</th><th>Shown description</th></tr>")
            for value in leftovers:
                out.append(
                    f"<tr><td>{_esc(value.field_id)}</td>"
                    f"<td>{_esc(value.value)}</td>"
                    f'<td><span class="snapshot">{_esc(value.description_snapshot)}'
                    f" [{_esc(value.language)}]</span></td></tr>"
                )
            out.append("</table>")
    if session.attachments:
        out.append("<h2>Attached documents</h2><ul>")
        for att in session.attachments:
            out.append(
                f"<li>docs/{_esc(att.file)} — {_esc(att.caption)}"
                f" ({_esc(att.added_at)})</li>"
            )
        out.append("</ul>")
    out.append("<h2>Changelog</h2>")
    out.append('<table class="data">')
    out.append(
        "<tr><th>At</th><th>Actor</th><th>Action</th>"
        "<th>Target</th><th>Detail</th></tr>"
    )
    log_entries = [
        (
            el.get("at", ""),
            el.get("actor", ""),
            el.get("action", ""),
            el.get("target", ""),
            el.get("detail", ""),
        )
        for el in doc.findall("changelog/entry")
    ] + [
        (e.timestamp, e.actor, e.action, e.target, e.detail)
        for e in session.entries
    ]
    for at, actor, action, target, detail in log_entries:
        out.append(
            f"<tr><td>{_esc(at)}</td><td>{_esc(actor)}</td>"
            f"<td>{_esc(action)}</td><td>{_esc(target)}</td>"
            f"<td>{_esc(detail)}</td></tr>"
        )
    out.append("</table>")
    out.append("</body></html>")
    return "\n".join(out)


def _note_html(session: DescribeSession, ref: ObjectRef) -> str:
    note = session.notes.get(ref)
    if note is None:
        return ""
    parts = []
    if note.full_name:
        parts.append(f"<p><b>{_esc(note.full_name)}</b></p>")
    if note.description:
        parts.append(f"<p>{_esc(note.description)}</p>")
    return "".join(parts)
