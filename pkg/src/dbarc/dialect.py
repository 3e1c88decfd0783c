"""Source-dialect handling: access modes, synonym catalogs, type mapping.

A source database speaks its own dialect; the archive speaks only the
archival SQL subset.  This module decides, for every native type name the
source reports, whether it already is a subset type, can be mapped onto one
without losing values, or must be surfaced to the operator as unmappable.

Two access strategies exist.  An EXPERT mode knows the engine it reads from
and ships a table of native type names with lossless mappings.  The GENERIC
mode knows nothing beyond the standard itself, so its table holds only the
standard spelling variants (identity mappings); everything else needs a
user-supplied synonym rule.  Losslessness always means declared-domain
inclusion: a mapping is offered only when every value of the native type is
representable in the target archival type.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from dbarc.sqlcore.model import (
    ConstraintKind,
    DatabaseModel,
    ObjectRef,
    make_ref,
)
from dbarc.sqlcore.flagger import validate_query, validate_statement
from dbarc.sqlcore.tokens import LexError, TokKind, tokenize
from dbarc.sqlcore.types import (
    CANONICAL_NAMES,
    STANDARD_ALIASES,
    SUBSET_TYPE_NAMES,
    ArchivalType,
    NativeTypeRef,
    TypeError_,
    TypeKind,
    match_subset_type_name,
    make_archival,
)


class DialectError(ValueError):
    """Raised for invalid modes, rules, catalogs, or type spellings."""


# ---------------------------------------------------------------------------
# Resolution outcomes


class ResolutionOutcome:
    STANDARD = "STANDARD"
    MAPPED_LOSSLESS = "MAPPED_LOSSLESS"
    UNKNOWN = "UNKNOWN"
    PROPRIETARY_UNMAPPABLE = "PROPRIETARY_UNMAPPABLE"

    ALL = frozenset({STANDARD, MAPPED_LOSSLESS, UNKNOWN, PROPRIETARY_UNMAPPABLE})


#: Outcomes that yield a usable archival type.
RESOLVED_OUTCOMES = frozenset(
    {ResolutionOutcome.STANDARD, ResolutionOutcome.MAPPED_LOSSLESS}
)

UNKNOWN_NOTE = "no known conversion to the archival SQL subset"


@dataclass(frozen=True)
class TypeResolution:
    """The verdict for one native type name."""

    outcome: str
    resolved: ArchivalType | None = None
    note: str = ""

    def __post_init__(self) -> None:
        if self.outcome not in ResolutionOutcome.ALL:
            raise DialectError(f"unknown resolution outcome {self.outcome!r}")
        if (self.resolved is not None) != (self.outcome in RESOLVED_OUTCOMES):
            raise DialectError(
                f"outcome {self.outcome} and resolved type do not agree"
            )

    @property
    def is_resolved(self) -> bool:
        return self.resolved is not None


# ---------------------------------------------------------------------------
# Name handling


def normalize_type_name(name: str) -> str:
    """Upper-case a native type spelling and collapse its whitespace."""
    return " ".join(name.split()).upper()


def _strip_params(name: str) -> str:
    """Drop parenthesized parameter groups embedded in a type spelling.

    Needed for spellings such as ``TIMESTAMP (6) WITH TIME ZONE`` where the
    parameters sit in the middle of the name rather than at its end.
    """
    out: list[str] = []
    depth = 0
    for ch in name:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif depth == 0:
            out.append(ch)
    return " ".join("".join(out).split())


def as_native_ref(native: NativeTypeRef | str) -> NativeTypeRef:
    """Coerce a raw type spelling into a NativeTypeRef.

    Adapters report declared types as plain text ("varchar(20)"); split that
    into a name and parameters the way the DDL parser would.
    """
    if isinstance(native, NativeTypeRef):
        return native
    text = native.strip()
    try:
        tokens = tokenize(text)
    except LexError:
        return NativeTypeRef(normalize_type_name(text), (), text)
    words: list[str] = []
    pos = 0
    while tokens[pos].kind is TokKind.IDENT:
        words.append(tokens[pos].value)
        pos += 1
    if not words:
        return NativeTypeRef(normalize_type_name(text), (), text)
    args: list[object] = []
    trailing: list[str] = []
    if tokens[pos].kind is TokKind.OP and tokens[pos].value == "(":
        pos += 1
        while not (tokens[pos].kind is TokKind.OP and tokens[pos].value == ")"):
            t = tokens[pos]
            if t.kind is TokKind.EOF:
                return NativeTypeRef(normalize_type_name(text), (), text)
            if not (t.kind is TokKind.OP and t.value == ","):
                if t.kind is TokKind.NUMBER and t.value.isdigit():
                    args.append(int(t.value))
                else:
                    args.append(t.value)
            pos += 1
        pos += 1
    while tokens[pos].kind is TokKind.IDENT:
        trailing.append(tokens[pos].value)
        pos += 1
    name = " ".join(words)
    if trailing:
        # "TIMESTAMP(6) WITH TIME ZONE": keep the qualifier in the name so
        # rule lookup can still see it after parameter stripping.
        inner = f"({','.join(str(a) for a in args)})" if args else ""
        name = " ".join(filter(None, [name, inner, " ".join(trailing)]))
        return NativeTypeRef(name, tuple(args), text)
    return NativeTypeRef(name, tuple(args), text)


def parse_type_text(text: str) -> ArchivalType:
    """Parse an archival-subset type spelling ("CHARACTER VARYING(10)").

    Raises DialectError when the spelling is not a subset type.  Synonym
    catalog targets and decision files use this.
    """
    ref = as_native_ref(text)
    name = normalize_type_name(ref.name)
    kind = CANONICAL_NAMES.get(name) or STANDARD_ALIASES.get(name)
    if kind is None:
        raise DialectError(f"not an archival subset type: {text.strip()!r}")
    if any(not isinstance(a, int) for a in ref.args):
        raise DialectError(f"non-numeric type parameter in {text.strip()!r}")
    try:
        return make_archival(kind, tuple(a for a in ref.args if isinstance(a, int)))
    except TypeError_ as exc:
        raise DialectError(f"invalid parameters in {text.strip()!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Access modes


class ModeKind:
    EXPERT = "EXPERT"
    GENERIC = "GENERIC"

    ALL = frozenset({EXPERT, GENERIC})


#: Object classes an access strategy may be able to read from a source.
OBJECT_CLASSES = frozenset(
    {
        "schemas",
        "tables",
        "columns",
        "constraints",
        "views",
        "triggers",
        "routines",
        "synonyms",
        "dblinks",
        "users",
        "roles",
        "privileges",
    }
)

_PARAM_STYLES = frozenset({"copy", "fixed"})


@dataclass(frozen=True)
class TypeRule:
    """One native-name entry in a mode's type table.

    ``target is None`` means the name is known but never losslessly mappable
    (the losslessness predicate is constantly false).  Otherwise the rule
    applies when the native parameter count falls inside
    [min_args, max_args]: "copy" passes the parameters through to the target
    kind, "fixed" ignores them and produces the pinned parameters.
    """

    native: str
    target: TypeKind | None = None
    params: str = "copy"
    fixed: tuple[int, ...] = ()
    min_args: int = 0
    max_args: int = 0
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "native", normalize_type_name(self.native))
        if not self.native:
            raise DialectError("type rule needs a native name")
        if self.params not in _PARAM_STYLES:
            raise DialectError(f"unknown parameter style {self.params!r}")
        if self.min_args < 0 or self.max_args < self.min_args:
            raise DialectError(f"bad parameter bounds on rule {self.native}")
        if self.target is not None and self.params == "fixed":
            try:
                make_archival(self.target, self.fixed)
            except TypeError_ as exc:
                raise DialectError(
                    f"rule {self.native}: fixed parameters invalid: {exc}"
                ) from exc
        if self.target is None and self.fixed:
            raise DialectError(f"rule {self.native}: lossy rule takes no parameters")

    def apply(self, args: tuple[object, ...]) -> tuple[ArchivalType | None, str]:
        """Evaluate the losslessness predicate and build the target type.

        Returns (type, "") on success or (None, reason) when the predicate
        is false for these parameters.
        """
        if self.target is None:
            return None, self.note or f"{self.native} has no lossless mapping"
        if not (self.min_args <= len(args) <= self.max_args):
            return None, (
                f"{self.native} with {len(args)} parameter(s) has no lossless mapping"
            )
        if self.params == "fixed":
            return make_archival(self.target, self.fixed), ""
        if any(not isinstance(a, int) for a in args):
            return None, f"non-numeric parameter in {self.native}"
        try:
            return make_archival(self.target, tuple(a for a in args if isinstance(a, int))), ""
        except TypeError_ as exc:
            return None, str(exc)


@dataclass(frozen=True)
class AccessMode:
    """One way of reading a source: a name, a strategy kind, a type table.

    ``object_classes`` lists what the strategy can introspect at all; the
    ingest layer records everything outside it as absent-by-capability.
    """

    name: str
    kind: str
    rules: tuple[TypeRule, ...] = ()
    object_classes: frozenset[str] = frozenset()
    description: str = ""
    _by_name: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.name:
            raise DialectError("access mode needs a name")
        if self.kind not in ModeKind.ALL:
            raise DialectError(f"unknown mode kind {self.kind!r}")
        bad = self.object_classes - OBJECT_CLASSES
        if bad:
            raise DialectError(f"unknown object classes: {', '.join(sorted(bad))}")
        by_name: dict[str, TypeRule] = {}
        for rule in self.rules:
            if rule.native in by_name:
                raise DialectError(f"duplicate type rule for {rule.native}")
            by_name[rule.native] = rule
        if self.kind == ModeKind.GENERIC:
            for rule in self.rules:
                identity = (
                    rule.native in SUBSET_TYPE_NAMES
                    and rule.params == "copy"
                    and rule.target is not None
                    and _subset_kind(rule.native) is rule.target
                )
                if not identity:
                    raise DialectError(
                        f"generic mode {self.name} may only carry identity rules "
                        f"for standard names; {rule.native} is not one"
                    )
        object.__setattr__(self, "_by_name", by_name)

    def rule_for(self, native_name: str) -> TypeRule | None:
        return self._by_name.get(normalize_type_name(native_name))


def _subset_kind(name: str) -> TypeKind | None:
    matched = match_subset_type_name(name.split())
    if matched is None:
        return None
    kind, nwords = matched
    if nwords != len(name.split()):
        return None
    return kind


# ---------------------------------------------------------------------------
# Synonym catalogs


@dataclass(frozen=True)
class SynonymRule:
    """User decision: this native name stands for that archival type."""

    native: str
    target: ArchivalType

    def __post_init__(self) -> None:
        object.__setattr__(self, "native", normalize_type_name(self.native))
        if not self.native:
            raise DialectError("synonym rule needs a native name")


class SynonymCatalog:
    """An ordered set of user synonym rules, one per native name.

    Rules match by exact (case-folded) name and their targets are always
    concrete archival types; the user is trusted without domain checks.
    """

    def __init__(self, rules: Iterator[SynonymRule] | list[SynonymRule] = ()) -> None:
        self._rules: list[SynonymRule] = []
        for rule in rules:
            self.add_rule(rule.native, rule.target)

    def __len__(self) -> int:
        return len(self._rules)

    def __iter__(self) -> Iterator[SynonymRule]:
        return iter(self._rules)

    def add_rule(self, native: str, target: ArchivalType | str) -> SynonymRule:
        if isinstance(target, str):
            target = parse_type_text(target)
        rule = SynonymRule(native, target)
        if self.lookup(rule.native) is not None:
            raise DialectError(f"synonym for {rule.native} already defined")
        self._rules.append(rule)
        return rule

    def remove_rule(self, native: str) -> bool:
        name = normalize_type_name(native)
        before = len(self._rules)
        self._rules = [r for r in self._rules if r.native != name]
        return len(self._rules) != before

    def lookup(self, native_name: str) -> ArchivalType | None:
        name = normalize_type_name(native_name)
        for rule in self._rules:
            if rule.native == name:
                return rule.target
        return None

    def clone(self) -> "SynonymCatalog":
        other = SynonymCatalog()
        other._rules = list(self._rules)
        return other


# ---------------------------------------------------------------------------
# Resolution


def resolve_type(
    native: NativeTypeRef | str,
    mode: AccessMode,
    catalog: SynonymCatalog | None = None,
) -> TypeResolution:
    """Classify one native type name against a mode and a synonym catalog.

    Precedence: standard canonical spelling, standard alias spelling, mode
    table entry whose losslessness predicate holds, user synonym, mode table
    entry whose predicate fails (known but unmappable), and finally UNKNOWN.
    """
    ref = as_native_ref(native)
    name = normalize_type_name(ref.name)
    bare = _strip_params(name)
    failure = ""

    kind = CANONICAL_NAMES.get(name)
    if kind is not None:
        built, why = _try_make(kind, ref.args)
        if built is not None:
            return TypeResolution(ResolutionOutcome.STANDARD, built, "standard archival type")
        failure = why

    alias_kind = STANDARD_ALIASES.get(name)
    if alias_kind is not None:
        built, why = _try_make(alias_kind, ref.args)
        if built is not None:
            return TypeResolution(
                ResolutionOutcome.MAPPED_LOSSLESS,
                built,
                f"standard spelling variant of {alias_kind.value}",
            )
        failure = failure or why

    rule = mode.rule_for(name) or (mode.rule_for(bare) if bare != name else None)
    if rule is not None and rule.target is not None:
        built, why = rule.apply(ref.args)
        if built is not None:
            note = rule.note or f"{mode.name} mode mapping to {rule.target.value}"
            return TypeResolution(ResolutionOutcome.MAPPED_LOSSLESS, built, note)
        failure = failure or why

    if catalog is not None:
        target = catalog.lookup(name)
        if target is None and bare != name:
            target = catalog.lookup(bare)
        if target is not None:
            return TypeResolution(ResolutionOutcome.MAPPED_LOSSLESS, target, "user synonym")

    if rule is not None:
        if rule.target is None:
            note = rule.note or f"{rule.native} has no lossless mapping"
        else:
            note = failure or rule.note or "no lossless mapping for these parameters"
        return TypeResolution(ResolutionOutcome.PROPRIETARY_UNMAPPABLE, None, note)

    if failure:
        # A standard name with unusable parameters is known-but-unmappable,
        # not unknown.
        return TypeResolution(ResolutionOutcome.PROPRIETARY_UNMAPPABLE, None, failure)

    return TypeResolution(ResolutionOutcome.UNKNOWN, None, UNKNOWN_NOTE)


def _try_make(kind: TypeKind, args: tuple[object, ...]) -> tuple[ArchivalType | None, str]:
    if any(not isinstance(a, int) for a in args):
        return None, f"non-numeric parameter in {kind.value}"
    try:
        return make_archival(kind, tuple(a for a in args if isinstance(a, int))), ""
    except TypeError_ as exc:
        return None, str(exc)


# ---------------------------------------------------------------------------
# Auto-mapping a whole model


ACTION_TYPE_MAPPED = "type-mapped"
ACTION_SOURCE_FLAGGED = "source-flagged"
ACTION_STORAGE_NOTICE = "storage-conversion"

STORAGE_NOTICE_TEXT = (
    "large character object content will be transcoded to the archive's "
    "UTF-16 national character form at archive time"
)


@dataclass(frozen=True)
class MappingEvent:
    """One automatic change (or notice) recorded while mapping a model."""

    ref: ObjectRef
    action: str
    before: str = ""
    after: str = ""
    note: str = ""

    def describe(self) -> str:
        if self.action == ACTION_TYPE_MAPPED:
            return f"type {self.before} mapped to {self.after} ({self.note})"
        if self.action == ACTION_SOURCE_FLAGGED:
            return f"source marked nonstandard: {self.note}"
        return self.note


def auto_map_model(
    model: DatabaseModel,
    mode: AccessMode,
    catalog: SynonymCatalog | None = None,
) -> tuple[DatabaseModel, list[MappingEvent]]:
    """Resolve every native column type and re-check every embedded source.

    The model is updated in place and returned together with the events.
    Columns whose resolution fails are left untouched for the clearance
    analysis to status.  Applying this twice changes nothing the second time
    (storage-conversion notices are repeated; they describe a plan, not a
    change).
    """
    events: list[MappingEvent] = []
    for schema in model.schemas:
        for table in schema.tables:
            for col in table.columns:
                ref = make_ref("column", schema.name, table.name, col.name)
                if isinstance(col.col_type, NativeTypeRef):
                    res = resolve_type(col.col_type, mode, catalog)
                    if res.resolved is not None:
                        before = col.col_type.render()
                        col.native_type = col.col_type
                        col.col_type = res.resolved
                        events.append(
                            MappingEvent(
                                ref,
                                ACTION_TYPE_MAPPED,
                                before,
                                res.resolved.render(),
                                res.note,
                            )
                        )
                if (
                    isinstance(col.col_type, ArchivalType)
                    and col.col_type.kind is TypeKind.CLOB
                ):
                    events.append(
                        MappingEvent(ref, ACTION_STORAGE_NOTICE, note=STORAGE_NOTICE_TEXT)
                    )
            for con in table.constraints:
                if (
                    con.kind == ConstraintKind.CHECK
                    and con.check_standard
                    and con.check_source
                ):
                    probe = (
                        f"ALTER TABLE _T ADD CONSTRAINT _C CHECK ({con.check_source})"
                    )
                    report = validate_statement(probe)
                    if report.items:
                        con.check_standard = False
                        events.append(
                            MappingEvent(
                                make_ref("constraint", schema.name, table.name, con.name),
                                ACTION_SOURCE_FLAGGED,
                                "standard",
                                "nonstandard",
                                report.items[0].reason,
                            )
                        )
        for view in schema.views:
            if view.standard and view.query:
                report = validate_query(view.query)
                if report.items:
                    view.standard = False
                    events.append(
                        MappingEvent(
                            make_ref("view", schema.name, view.name),
                            ACTION_SOURCE_FLAGGED,
                            "standard",
                            "nonstandard",
                            report.items[0].reason,
                        )
                    )
    return model, events


# ---------------------------------------------------------------------------
# Built-in modes and the mode registry


def _alias_bounds(name: str, kind: TypeKind) -> tuple[int, int]:
    from dbarc.sqlcore.types import (
        EXACT_NUMERIC_KINDS,
        FRACTIONAL_TIME_KINDS,
        LENGTH_KINDS,
        LOB_KINDS,
    )

    if kind in LOB_KINDS:
        return 0, 0
    if kind in LENGTH_KINDS:
        return (0, 1) if kind is TypeKind.CHARACTER else (1, 1)
    if kind in EXACT_NUMERIC_KINDS:
        return 0, 2
    if kind in FRACTIONAL_TIME_KINDS:
        return 0, 1
    return 0, 0


def builtin_generic_mode() -> AccessMode:
    """The engine-agnostic strategy: identity rules for standard spellings."""
    rules = []
    for name, kind in sorted(STANDARD_ALIASES.items()):
        lo, hi = _alias_bounds(name, kind)
        rules.append(
            TypeRule(
                name,
                kind,
                "copy",
                min_args=lo,
                max_args=hi,
                note=f"standard spelling variant of {kind.value}",
            )
        )
    return AccessMode(
        "generic",
        ModeKind.GENERIC,
        tuple(rules),
        frozenset({"schemas", "tables", "columns", "constraints", "views"}),
        "engine-agnostic access through standard catalog views only",
    )


def builtin_embedded_mode() -> AccessMode:
    """Expert strategy for the embedded engine used as reload target.

    The embedded engine stores declared type names verbatim, so imported
    databases surface a mix of its own affinity names and spellings carried
    over from other engines.  Every mapping below is domain-inclusive.
    """
    K = TypeKind
    rules = (
        TypeRule("TEXT", K.CLOB, "fixed", note="unbounded text"),
        TypeRule("DOUBLE", K.DOUBLE_PRECISION, "fixed", note="8-byte binary float"),
        TypeRule("FLOAT", K.DOUBLE_PRECISION, "fixed", note="stored as 8-byte binary float"),
        TypeRule("BIGINT", K.NUMERIC, "fixed", fixed=(19, 0), note="64-bit integer fits 19 digits"),
        TypeRule("INT8", K.NUMERIC, "fixed", fixed=(19, 0), note="64-bit integer fits 19 digits"),
        TypeRule("TINYINT", K.SMALLINT, "fixed", note="at most one byte"),
        TypeRule("MEDIUMINT", K.INTEGER, "fixed", note="at most three bytes"),
        TypeRule("DATETIME", K.TIMESTAMP, "fixed", note="date and time of day"),
        TypeRule("NVARCHAR", K.NATIONAL_CHARACTER_VARYING, "copy", min_args=1, max_args=1),
        TypeRule("NVARCHAR2", K.NATIONAL_CHARACTER_VARYING, "copy", min_args=1, max_args=1),
        TypeRule("VARCHAR2", K.CHARACTER_VARYING, "copy", min_args=1, max_args=1),
        TypeRule("NUMBER", K.NUMERIC, "copy", min_args=1, max_args=2,
                 note="decimal with declared precision"),
        TypeRule("MONEY", K.NUMERIC, "fixed", fixed=(19, 4),
                 note="fixed-point currency, four decimal places"),
        TypeRule("SMALLMONEY", K.NUMERIC, "fixed", fixed=(10, 4),
                 note="fixed-point currency, four decimal places"),
        TypeRule("ENUM", note="value list is engine-specific"),
        TypeRule("SET", note="value list is engine-specific"),
        TypeRule("SQL_VARIANT", note="per-row dynamic typing cannot be declared"),
        TypeRule("INTERVAL", note="interval values have no archival representation"),
        TypeRule("TIMESTAMP WITH TIME ZONE", note="time zone offsets cannot be preserved"),
        TypeRule("TIME WITH TIME ZONE", note="time zone offsets cannot be preserved"),
        TypeRule("TIMESTAMP WITH LOCAL TIME ZONE", note="time zone offsets cannot be preserved"),
    )
    return AccessMode(
        "embedded",
        ModeKind.EXPERT,
        rules,
        frozenset({"schemas", "tables", "columns", "constraints", "views", "triggers"}),
        "expert access to the embedded engine's catalog",
    )


class ModeRegistry:
    """Registered access modes, in registration order, never mutated."""

    def __init__(self, modes: Iterator[AccessMode] | list[AccessMode] = ()) -> None:
        self._modes: dict[str, AccessMode] = {}
        for mode in modes:
            self.register(mode)

    def register(self, mode: AccessMode) -> AccessMode:
        if mode.name in self._modes:
            raise DialectError(f"access mode {mode.name!r} already registered")
        self._modes[mode.name] = mode
        return mode

    def get(self, name: str) -> AccessMode:
        try:
            return self._modes[name]
        except KeyError:
            raise DialectError(f"no access mode named {name!r}") from None

    def names(self) -> list[str]:
        return list(self._modes)

    def list(self) -> list[AccessMode]:
        return list(self._modes.values())

    def __contains__(self, name: str) -> bool:
        return name in self._modes

    def __len__(self) -> int:
        return len(self._modes)


def builtin_registry() -> ModeRegistry:
    return ModeRegistry([builtin_generic_mode(), builtin_embedded_mode()])


DEFAULT_REGISTRY = builtin_registry()


def register_mode(mode: AccessMode, registry: ModeRegistry | None = None) -> AccessMode:
    return (registry or DEFAULT_REGISTRY).register(mode)


def get_mode(name: str, registry: ModeRegistry | None = None) -> AccessMode:
    return (registry or DEFAULT_REGISTRY).get(name)


def list_modes(registry: ModeRegistry | None = None) -> list[AccessMode]:
    return (registry or DEFAULT_REGISTRY).list()


# ---------------------------------------------------------------------------
# XML configuration


def mode_to_xml(mode: AccessMode) -> str:
    root = ET.Element("accessMode", name=mode.name, kind=mode.kind)
    if mode.description:
        root.set("description", mode.description)
    if mode.object_classes:
        root.set("supports", " ".join(sorted(mode.object_classes)))
    for rule in mode.rules:
        el = ET.SubElement(root, "typeRule", native=rule.native)
        if rule.target is None:
            el.set("lossy", "true")
        else:
            el.set("target", rule.target.value)
            el.set("params", rule.params)
            if rule.params == "fixed" and rule.fixed:
                el.set("fixed", ",".join(str(n) for n in rule.fixed))
            if rule.params == "copy":
                el.set("minArgs", str(rule.min_args))
                el.set("maxArgs", str(rule.max_args))
        if rule.note:
            el.set("note", rule.note)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def parse_mode_xml(text: str) -> AccessMode:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise DialectError(f"bad mode document: {exc}") from exc
    if root.tag != "accessMode":
        raise DialectError(f"expected <accessMode>, found <{root.tag}>")
    name = root.get("name", "")
    kind = root.get("kind", "")
    supports = frozenset(root.get("supports", "").split())
    rules = []
    for el in root:
        if el.tag != "typeRule":
            raise DialectError(f"unexpected element <{el.tag}> in mode {name!r}")
        native = el.get("native", "")
        note = el.get("note", "")
        if el.get("lossy") == "true" or el.get("target") is None:
            rules.append(TypeRule(native, note=note))
            continue
        target_name = normalize_type_name(el.get("target", ""))
        target = CANONICAL_NAMES.get(target_name)
        if target is None:
            raise DialectError(f"rule {native}: unknown target kind {target_name!r}")
        params = el.get("params", "copy")
        fixed = tuple(
            int(n) for n in el.get("fixed", "").split(",") if n.strip()
        )
        try:
            min_args = int(el.get("minArgs", "0"))
            max_args = int(el.get("maxArgs", "0"))
        except ValueError as exc:
            raise DialectError(f"rule {native}: bad parameter bounds") from exc
        rules.append(
            TypeRule(native, target, params, fixed, min_args, max_args, note)
        )
    return AccessMode(name, kind, tuple(rules), supports, root.get("description", ""))


def load_mode_xml(path: str | Path) -> AccessMode:
    return parse_mode_xml(Path(path).read_text(encoding="utf-8"))


def catalog_to_xml(catalog: SynonymCatalog) -> str:
    root = ET.Element("synonymCatalog")
    for rule in catalog:
        ET.SubElement(
            root, "synonym", native=rule.native, target=rule.target.render()
        )
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def parse_catalog_xml(text: str) -> SynonymCatalog:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise DialectError(f"bad synonym catalog document: {exc}") from exc
    if root.tag != "synonymCatalog":
        raise DialectError(f"expected <synonymCatalog>, found <{root.tag}>")
    catalog = SynonymCatalog()
    for el in root:
        if el.tag != "synonym":
            raise DialectError(f"unexpected element <{el.tag}> in synonym catalog")
        catalog.add_rule(el.get("native", ""), el.get("target", ""))
    return catalog


def load_catalog_xml(path: str | Path) -> SynonymCatalog:
    return parse_catalog_xml(Path(path).read_text(encoding="utf-8"))
