"""Lossless XML codec for the database model.

Serializes every field of :class:`~dbarc.sqlcore.model.DatabaseModel` —
resolved types, native type spellings, verbatim source texts, privileges,
dangling references — so that clearance sessions and archive reference
documents can carry complete models across process boundaries.

Arbitrary strings (source texts, defaults, check expressions) are stored in
XML *attributes*: the serializer escapes tab, carriage return, and line feed
as character references there, so the values survive byte-exactly, which
plain text content would not guarantee (XML line-ending normalization turns
a literal CR into LF).  Control characters below U+0020 other than those
three are not representable and are rejected up front.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from dbarc.sqlcore.model import (
    ColumnDef,
    ConstraintDef,
    DatabaseModel,
    DbLinkDef,
    NativeObjectDef,
    PrivilegeDef,
    RoleDef,
    RoutineDef,
    SchemaDef,
    SourceDescriptor,
    SynonymDef,
    TableDef,
    TriggerDef,
    UserDef,
    ViewDef,
)
from dbarc.sqlcore.types import ArchivalType, NativeTypeRef, TypeKind

_LEGAL_CONTROLS = {"\t", "\n", "\r"}


class ModelXmlError(ValueError):
    """Raised for documents this codec cannot read or write."""


def _check_text(value: str, where: str) -> str:
    for ch in value:
        if ord(ch) < 0x20 and ch not in _LEGAL_CONTROLS:
            raise ModelXmlError(
                f"{where} contains control character U+{ord(ch):04X},"
                " which XML cannot carry"
            )
    return value


def _set(el: ET.Element, attr: str, value: str | None) -> None:
    """Store an optional string; an absent attribute means None."""
    if value is not None:
        el.set(attr, _check_text(value, f"attribute {attr!r}"))


def _set_bool(el: ET.Element, attr: str, value: bool, default: bool) -> None:
    if value != default:
        el.set(attr, "true" if value else "false")


def _get_bool(el: ET.Element, attr: str, default: bool) -> bool:
    raw = el.get(attr)
    if raw is None:
        return default
    if raw not in ("true", "false"):
        raise ModelXmlError(f"attribute {attr!r} must be true or false, not {raw!r}")
    return raw == "true"


def _require(el: ET.Element, attr: str) -> str:
    value = el.get(attr)
    if value is None:
        raise ModelXmlError(f"<{el.tag}> element lacks required attribute {attr!r}")
    return value


# ---------------------------------------------------------------------------
# Types


def type_to_element(col_type: ArchivalType | NativeTypeRef) -> ET.Element:
    if isinstance(col_type, ArchivalType):
        el = ET.Element("type", kind=col_type.kind.name)
        for attr in ("length", "precision", "scale"):
            value = getattr(col_type, attr)
            if value is not None:
                el.set(attr, str(value))
        return el
    if isinstance(col_type, NativeTypeRef):
        el = ET.Element("nativeType", name=col_type.name)
        _set(el, "raw", col_type.raw_text or None)
        for arg in col_type.args:
            arg_el = ET.SubElement(el, "arg", value=str(arg))
            if isinstance(arg, int):
                arg_el.set("int", "true")
        return el
    raise ModelXmlError(f"cannot serialize column type {col_type!r}")


def type_from_element(el: ET.Element) -> ArchivalType | NativeTypeRef:
    if el.tag == "type":
        kind_name = _require(el, "kind")
        try:
            kind = TypeKind[kind_name]
        except KeyError:
            raise ModelXmlError(f"unknown type kind {kind_name!r}") from None
        params = {}
        for attr in ("length", "precision", "scale"):
            raw = el.get(attr)
            if raw is not None:
                try:
                    params[attr] = int(raw)
                except ValueError:
                    raise ModelXmlError(f"bad {attr} {raw!r}") from None
        return ArchivalType(kind, **params)
    if el.tag == "nativeType":
        args = tuple(
            int(arg.get("value", "")) if arg.get("int") == "true" else arg.get("value", "")
            for arg in el.findall("arg")
        )
        return NativeTypeRef(_require(el, "name"), args, el.get("raw", ""))
    raise ModelXmlError(f"expected <type> or <nativeType>, found <{el.tag}>")


# ---------------------------------------------------------------------------
# Tables and views


def _column_to_element(col: ColumnDef) -> ET.Element:
    el = ET.Element("column", name=col.name)
    _set_bool(el, "nullable", col.nullable, True)
    _set(el, "default", col.default)
    el.append(type_to_element(col.col_type))
    if col.native_type is not None:
        origin = type_to_element(col.native_type)
        origin.tag = "nativeOrigin"
        el.append(origin)
    return el


def _column_from_element(el: ET.Element) -> ColumnDef:
    type_el = None
    origin_el = None
    for child in el:
        if child.tag in ("type", "nativeType"):
            type_el = child
        elif child.tag == "nativeOrigin":
            origin_el = child
    if type_el is None:
        raise ModelXmlError(f"column {el.get('name')!r} lacks a type")
    native = None
    if origin_el is not None:
        origin_el.tag = "nativeType"
        parsed = type_from_element(origin_el)
        if not isinstance(parsed, NativeTypeRef):
            raise ModelXmlError("nativeOrigin must describe a native type")
        native = parsed
    return ColumnDef(
        name=_require(el, "name"),
        col_type=type_from_element(type_el),
        nullable=_get_bool(el, "nullable", True),
        default=el.get("default"),
        native_type=native,
    )


def _constraint_to_element(con: ConstraintDef) -> ET.Element:
    el = ET.Element("constraint", name=con.name, kind=con.kind)
    for col in con.columns:
        ET.SubElement(el, "col", name=col)
    _set(el, "refSchema", con.ref_schema)
    _set(el, "refTable", con.ref_table)
    for col in con.ref_columns:
        ET.SubElement(el, "refCol", name=col)
    if con.check_source:
        _set(el, "checkSource", con.check_source)
    _set_bool(el, "checkStandard", con.check_standard, True)
    _set(el, "onDelete", con.on_delete)
    _set(el, "onUpdate", con.on_update)
    _set_bool(el, "userAdded", con.user_added, False)
    return el


def _constraint_from_element(el: ET.Element) -> ConstraintDef:
    return ConstraintDef(
        name=_require(el, "name"),
        kind=_require(el, "kind"),
        columns=tuple(_require(c, "name") for c in el.findall("col")),
        ref_schema=el.get("refSchema"),
        ref_table=el.get("refTable"),
        ref_columns=tuple(_require(c, "name") for c in el.findall("refCol")),
        check_source=el.get("checkSource", ""),
        check_standard=_get_bool(el, "checkStandard", True),
        on_delete=el.get("onDelete"),
        on_update=el.get("onUpdate"),
        user_added=_get_bool(el, "userAdded", False),
    )


def _table_to_element(table: TableDef) -> ET.Element:
    el = ET.Element("table", name=table.name)
    for col in table.columns:
        el.append(_column_to_element(col))
    for con in table.constraints:
        el.append(_constraint_to_element(con))
    return el


def _table_from_element(el: ET.Element) -> TableDef:
    return TableDef(
        name=_require(el, "name"),
        columns=[_column_from_element(c) for c in el.findall("column")],
        constraints=[_constraint_from_element(c) for c in el.findall("constraint")],
    )


def _view_to_element(view: ViewDef) -> ET.Element:
    el = ET.Element("view", name=view.name)
    _set_bool(el, "standard", view.standard, True)
    if view.query:
        _set(el, "query", view.query)
    if view.source_text:
        _set(el, "sourceText", view.source_text)
    for col in view.columns:
        ET.SubElement(el, "col", name=col)
    for schema, table in view.referenced_tables:
        ref = ET.SubElement(el, "references", table=table)
        _set(ref, "schema", schema)
    return el


def _view_from_element(el: ET.Element) -> ViewDef:
    return ViewDef(
        name=_require(el, "name"),
        columns=tuple(_require(c, "name") for c in el.findall("col")),
        query=el.get("query", ""),
        standard=_get_bool(el, "standard", True),
        source_text=el.get("sourceText", ""),
        referenced_tables=tuple(
            (r.get("schema"), _require(r, "table")) for r in el.findall("references")
        ),
    )


# ---------------------------------------------------------------------------
# Source-text object classes


def _trigger_to_element(trg: TriggerDef) -> ET.Element:
    el = ET.Element("trigger", name=trg.name)
    _set(el, "targetTable", trg.target_table)
    _set(el, "sourceText", trg.source_text or None)
    return el


def _routine_to_element(routine: RoutineDef) -> ET.Element:
    el = ET.Element("routine", name=routine.name, kind=routine.kind)
    _set(el, "sourceText", routine.source_text or None)
    return el


def _synonym_to_element(syn: SynonymDef) -> ET.Element:
    el = ET.Element("synonymObject", name=syn.name)
    _set(el, "target", syn.target or None)
    _set(el, "sourceText", syn.source_text or None)
    return el


def _dblink_to_element(link: DbLinkDef) -> ET.Element:
    el = ET.Element("dblink", name=link.name)
    _set(el, "sourceText", link.source_text or None)
    return el


def _user_to_element(user: UserDef) -> ET.Element:
    el = ET.Element("user", name=user.name)
    _set(el, "sourceText", user.source_text or None)
    return el


def _role_to_element(role: RoleDef) -> ET.Element:
    el = ET.Element("role", name=role.name)
    _set(el, "sourceText", role.source_text or None)
    return el


def _privilege_to_element(priv: PrivilegeDef) -> ET.Element:
    el = ET.Element(
        "privilege",
        privilege=priv.privilege,
        onSchema=priv.on_schema,
        onObject=priv.on_object,
        grantee=priv.grantee,
    )
    _set(el, "grantor", priv.grantor)
    _set_bool(el, "grantable", priv.grantable, False)
    return el


def _native_to_element(nobj: NativeObjectDef) -> ET.Element:
    el = ET.Element("nativeObject", kindGuess=nobj.kind_guess)
    _set(el, "name", nobj.name)
    _set(el, "sourceText", nobj.source_text or None)
    return el


def _schema_shell_to_element(schema: SchemaDef) -> ET.Element:
    el = ET.Element("schema", name=schema.name)
    _set(el, "catalog", schema.catalog)
    _set(el, "owner", schema.owner)
    _set_bool(el, "implicit", schema.implicit, False)
    return el


_OBJECT_BUILDERS = {
    "column": _column_to_element,
    "constraint": _constraint_to_element,
    "view": _view_to_element,
    "trigger": _trigger_to_element,
    "routine": _routine_to_element,
    "synonym": _synonym_to_element,
    "dblink": _dblink_to_element,
    "user": _user_to_element,
    "role": _role_to_element,
    "privilege": _privilege_to_element,
    "native": _native_to_element,
}


def object_to_element(kind: str, obj: object) -> ET.Element:
    """Serialize one addressable object, keyed by its reference kind.

    Containers serialize shallow: a schema element carries only its own
    attributes and a table element only its name, because callers that
    document object sets list each contained column, constraint or view as
    an entry of its own.  Every leaf kind serializes completely, native
    source text included.
    """
    if kind == "schema":
        return _schema_shell_to_element(obj)
    if kind == "table":
        return ET.Element("table", name=obj.name)
    try:
        builder = _OBJECT_BUILDERS[kind]
    except KeyError:
        raise ModelXmlError(f"no XML form for object kind {kind!r}") from None
    return builder(obj)


# ---------------------------------------------------------------------------
# Whole model


def model_to_element(model: DatabaseModel, tag: str = "model") -> ET.Element:
    root = ET.Element(tag)
    src = model.source
    if src != SourceDescriptor():
        el = ET.SubElement(root, "source")
        _set(el, "product", src.product)
        _set(el, "version", src.version)
        _set(el, "accessMode", src.access_mode)
        _set(el, "label", src.label)
    for name in model.catalogs:
        ET.SubElement(root, "catalogName", name=name)
    for schema in model.schemas:
        sel = _schema_shell_to_element(schema)
        root.append(sel)
        for table in schema.tables:
            sel.append(_table_to_element(table))
        for view in schema.views:
            sel.append(_view_to_element(view))
        for trg in schema.triggers:
            sel.append(_trigger_to_element(trg))
        for routine in schema.routines:
            sel.append(_routine_to_element(routine))
        for syn in schema.synonyms:
            sel.append(_synonym_to_element(syn))
        for link in schema.dblinks:
            sel.append(_dblink_to_element(link))
    for user in model.users:
        root.append(_user_to_element(user))
    for role in model.roles:
        root.append(_role_to_element(role))
    for priv in model.privileges:
        root.append(_privilege_to_element(priv))
    for nobj in model.native_objects:
        root.append(_native_to_element(nobj))
    for cls in sorted(model.absent_classes):
        ET.SubElement(root, "absentClass", name=cls)
    for ref in model.dangling_refs:
        ET.SubElement(root, "danglingRef", text=ref)
    return root


def model_from_element(root: ET.Element) -> DatabaseModel:
    model = DatabaseModel()
    for el in root:
        if el.tag == "source":
            model.source = SourceDescriptor(
                product=el.get("product", "unknown"),
                version=el.get("version", ""),
                access_mode=el.get("accessMode", "generic"),
                label=el.get("label", ""),
            )
        elif el.tag == "catalogName":
            model.catalogs.append(_require(el, "name"))
        elif el.tag == "schema":
            schema = SchemaDef(
                name=_require(el, "name"),
                catalog=el.get("catalog"),
                owner=el.get("owner"),
                implicit=_get_bool(el, "implicit", False),
            )
            for child in el:
                if child.tag == "table":
                    schema.tables.append(_table_from_element(child))
                elif child.tag == "view":
                    schema.views.append(_view_from_element(child))
                elif child.tag == "trigger":
                    schema.triggers.append(
                        TriggerDef(
                            name=_require(child, "name"),
                            target_table=child.get("targetTable"),
                            source_text=child.get("sourceText", ""),
                        )
                    )
                elif child.tag == "routine":
                    schema.routines.append(
                        RoutineDef(
                            name=_require(child, "name"),
                            kind=child.get("kind", "FUNCTION"),
                            source_text=child.get("sourceText", ""),
                        )
                    )
                elif child.tag == "synonymObject":
                    schema.synonyms.append(
                        SynonymDef(
                            name=_require(child, "name"),
                            target=child.get("target", ""),
                            source_text=child.get("sourceText", ""),
                        )
                    )
                elif child.tag == "dblink":
                    schema.dblinks.append(
                        DbLinkDef(
                            name=_require(child, "name"),
                            source_text=child.get("sourceText", ""),
                        )
                    )
                else:
                    raise ModelXmlError(f"unexpected element <{child.tag}> in schema")
            model.schemas.append(schema)
        elif el.tag == "user":
            model.users.append(
                UserDef(name=_require(el, "name"), source_text=el.get("sourceText", ""))
            )
        elif el.tag == "role":
            model.roles.append(
                RoleDef(name=_require(el, "name"), source_text=el.get("sourceText", ""))
            )
        elif el.tag == "privilege":
            model.privileges.append(
                PrivilegeDef(
                    privilege=_require(el, "privilege"),
                    on_schema=el.get("onSchema", ""),
                    on_object=el.get("onObject", ""),
                    grantee=_require(el, "grantee"),
                    grantor=el.get("grantor"),
                    grantable=_get_bool(el, "grantable", False),
                )
            )
        elif el.tag == "nativeObject":
            model.native_objects.append(
                NativeObjectDef(
                    kind_guess=_require(el, "kindGuess"),
                    name=el.get("name", ""),
                    source_text=el.get("sourceText", ""),
                )
            )
        elif el.tag == "absentClass":
            model.absent_classes = model.absent_classes | {_require(el, "name")}
        elif el.tag == "danglingRef":
            model.dangling_refs.append(_require(el, "text"))
        else:
            raise ModelXmlError(f"unexpected element <{el.tag}> in model document")
    return model


def model_to_xml(model: DatabaseModel, tag: str = "model") -> str:
    root = model_to_element(model, tag)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def model_from_xml(text: str) -> DatabaseModel:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ModelXmlError(f"bad model document: {exc}") from exc
    return model_from_element(root)
