"""DDL parser for ingestion and validation.

Statements inside the archival subset (CREATE SCHEMA/TABLE/VIEW, constraint
clauses via ALTER TABLE, GRANT) are parsed into model objects.  Everything
else is classified by its leading keywords and preserved verbatim, because
ingestion must document alien constructs rather than abort on them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from dbarc.sqlcore.expr import (
    CODE_SYNTAX,
    CODE_TYPE,
    ExpressionParser,
    Flag,
    SubsetViolation,
)
from dbarc.sqlcore.model import (
    DEFAULT_SCHEMA,
    ColumnDef,
    ConstraintDef,
    ConstraintKind,
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
from dbarc.sqlcore.tokens import LexError, TokKind, Token, respell, split_statements, tokenize
from dbarc.sqlcore.types import (
    ColumnType,
    NativeTypeRef,
    TypeError_,
    TypeKind,
    make_archival,
    match_subset_type_name,
)


@dataclass(frozen=True)
class ParseIssue:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, column {self.col}: {self.message}"


@dataclass
class StatementOutcome:
    """Per-statement parse result, reusable by the conformance flagger."""

    kind: str                      # canonical statement class, e.g. "CREATE TABLE"
    text: str                      # verbatim statement text
    line: int
    col: int
    flags: list[Flag] = field(default_factory=list)
    issue: ParseIssue | None = None
    schema_name: str | None = None
    object_name: str | None = None
    produced: object | None = None
    # (kind, schema-or-None, name) pairs this statement relies on.
    dependencies: list[tuple[str, str | None, str]] = field(default_factory=list)


@dataclass
class ParsedDdl:
    model: DatabaseModel
    errors: list[ParseIssue] = field(default_factory=list)
    statements: list[StatementOutcome] = field(default_factory=list)


PRIVILEGE_WORDS = frozenset(
    {"SELECT", "INSERT", "UPDATE", "DELETE", "REFERENCES", "USAGE", "TRIGGER", "ALL"}
)
FK_ACTIONS = ("CASCADE", "RESTRICT", "SET NULL", "SET DEFAULT", "NO ACTION")


class StatementParser(ExpressionParser):
    """Parses one statement; records flags and model objects as it goes."""

    def __init__(self, tokens: list[Token], default_schema: str = DEFAULT_SCHEMA):
        super().__init__(tokens)
        self.default_schema = default_schema
        self.outcome: StatementOutcome | None = None

    # -- shared pieces --------------------------------------------------

    def qname(self, what: str = "name") -> tuple[str | None, str]:
        first = self.identifier(what)
        if self.at_op(".") and self.tok(1).kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
            self.advance()
            second = self.identifier(what)
            return first, second
        return None, first

    def respelled(self, start: int, end: int | None = None) -> str:
        end = self.pos if end is None else end
        return respell(self.tokens[start:end])

    def remaining_text(self) -> str:
        return respell([t for t in self.tokens[self.pos :] if t.kind is not TokKind.EOF])

    def skip_balanced(self) -> None:
        depth = 0
        while True:
            t = self.tok()
            if t.kind is TokKind.EOF:
                return
            if t.kind is TokKind.OP and t.value == "(":
                depth += 1
            elif t.kind is TokKind.OP and t.value == ")":
                if depth == 0:
                    return
                depth -= 1
            self.advance()

    # -- types ----------------------------------------------------------

    def parse_column_type(self) -> ColumnType:
        start = self.pos
        words: list[str] = []
        probe = self.pos
        while self.tokens[probe].kind is TokKind.IDENT:
            words.append(self.tokens[probe].value)
            probe += 1
        matched = match_subset_type_name(words)
        if matched is not None:
            kind, nwords = matched
            for _ in range(nwords):
                self.advance()
            args = self.parse_type_args()
            if self.at_kw("WITH", "WITHOUT") and kind in (TypeKind.TIME, TypeKind.TIMESTAMP):
                # Time zone qualifiers are outside the subset's 16 kinds.
                while self.at_kw("WITH", "WITHOUT", "TIME", "ZONE", "LOCAL"):
                    self.advance()
                raw = self.respelled(start)
                self.flag(
                    self.tokens[start], CODE_TYPE,
                    f"time zone qualifier outside archival subset in {raw}", construct=raw,
                )
                return NativeTypeRef(raw, (), raw)
            matched_name = " ".join(words[:nwords])
            numeric = tuple(a for a in args if isinstance(a, int))
            if len(numeric) == len(args):
                try:
                    return make_archival(kind, numeric)
                except TypeError_ as exc:
                    raw = self.respelled(start)
                    self.flag(self.tokens[start], CODE_TYPE, str(exc), construct=raw)
                    return NativeTypeRef(matched_name, args, raw)
            raw = self.respelled(start)
            self.flag(
                self.tokens[start], CODE_TYPE,
                f"non-standard type parameter in {raw}", construct=raw,
            )
            return NativeTypeRef(matched_name, args, raw)
        name_tok = self.tok()
        name = self.identifier("type name")
        while self.at_op(".") and self.tok(1).kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
            self.advance()
            name = name + "." + self.identifier("type name")
        args = self.parse_type_args()
        raw = self.respelled(start)
        self.flag(name_tok, CODE_TYPE, f"non-standard type name {name}", construct=name)
        return NativeTypeRef(name, args, raw)

    def parse_type_args(self) -> tuple[object, ...]:
        if not self.at_op("("):
            return ()
        self.advance()
        args: list[object] = []
        while not self.at_op(")"):
            t = self.advance()
            if t.kind is TokKind.EOF:
                raise SubsetViolation("unterminated type parameter list", t)
            if t.kind is TokKind.OP and t.value == ",":
                continue
            if t.kind is TokKind.NUMBER and t.value.isdigit():
                args.append(int(t.value))
            else:
                args.append(t.value)
        self.advance()
        return tuple(args)

    # -- statement dispatch ---------------------------------------------

    def parse_statement(self, text: str) -> StatementOutcome:
        first = self.tok()
        out = StatementOutcome("", text, first.line, first.col)
        self.outcome = out
        try:
            self.dispatch(out)
            self.flags_into(out)
        except SubsetViolation as exc:
            self.flags_into(out)
            out.issue = ParseIssue(exc.token.line, exc.token.col, exc.message)
            out.flags.append(exc.as_flag())
            if out.produced is None:
                out.produced = NativeObjectDef(out.kind or "UNKNOWN", out.object_name or "", text)
        return out

    def flags_into(self, out: StatementOutcome) -> None:
        out.flags.extend(self.flags)
        self.flags = []

    def dispatch(self, out: StatementOutcome) -> None:
        t = self.tok()
        if t.kind is not TokKind.IDENT:
            out.kind = "UNKNOWN"
            raise SubsetViolation("statement does not begin with a keyword", t)
        if self.at_kw("CREATE"):
            self.parse_create(out)
        elif self.at_kw("ALTER"):
            self.parse_alter(out)
        elif self.at_kw("GRANT"):
            self.parse_grant(out)
        else:
            words = [t.value]
            if self.tok(1).kind is TokKind.IDENT:
                words.append(self.tok(1).value)
            out.kind = t.value
            head = " ".join(words[:2])
            name = ""
            for probe in range(1, 4):
                cand = self.tok(probe)
                if cand.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
                    name = cand.value
                    break
            out.object_name = name
            out.produced = NativeObjectDef(head, name, out.text)
            self.pos = len(self.tokens) - 1

    # -- CREATE ---------------------------------------------------------

    def parse_create(self, out: StatementOutcome) -> None:
        self.expect_kw("CREATE")
        replace = False
        if self.at_kw("OR") and self.tok(1).is_kw("REPLACE"):
            replace = True
            self.advance()
            self.advance()
        if self.at_kw("SCHEMA"):
            out.kind = "CREATE SCHEMA"
            self.parse_create_schema(out)
        elif self.at_kw("TABLE"):
            out.kind = "CREATE TABLE"
            self.parse_create_table(out)
        elif self.at_kw("VIEW") or (self.at_kw("FORCE") and self.tok(1).is_kw("VIEW")):
            if self.accept_kw("FORCE"):
                self.flag(self.tok(), CODE_SYNTAX, "vendor FORCE clause on CREATE VIEW")
            out.kind = "CREATE VIEW"
            if replace:
                self.flag(self.tok(), CODE_SYNTAX, "vendor OR REPLACE clause")
            self.parse_create_view(out)
        else:
            self.parse_create_native(out, replace)

    def parse_create_schema(self, out: StatementOutcome) -> None:
        self.expect_kw("SCHEMA")
        owner = None
        if self.at_kw("AUTHORIZATION"):
            self.advance()
            owner = self.identifier("authorization identifier")
            name = owner
        else:
            _, name = self.qname("schema name")
            if self.accept_kw("AUTHORIZATION"):
                owner = self.identifier("authorization identifier")
        trailing = self.remaining_text()
        if trailing:
            self.flag(self.tok(), CODE_SYNTAX, f"unsupported CREATE SCHEMA clause: {trailing}")
            self.pos = len(self.tokens) - 1
        out.schema_name = name
        out.object_name = name
        out.produced = SchemaDef(name, owner=owner)

    def parse_create_table(self, out: StatementOutcome) -> None:
        self.expect_kw("TABLE")
        schema, name = self.qname("table name")
        out.schema_name = schema
        out.object_name = name
        if schema is not None:
            out.dependencies.append(("schema", None, schema))
        table = TableDef(name)
        self.expect_op("(")
        while True:
            self.parse_table_element(table, out)
            if self.accept_op(","):
                continue
            break
        self.expect_op(")")
        trailing = self.remaining_text()
        if trailing:
            self.flag(self.tok(), CODE_SYNTAX, f"vendor table options: {trailing}")
            self.pos = len(self.tokens) - 1
        self.finish_table(table)
        out.produced = table

    def parse_table_element(self, table: TableDef, out: StatementOutcome) -> None:
        if self.at_kw("CONSTRAINT"):
            self.advance()
            cname = self.identifier("constraint name")
            con = self.parse_table_constraint(cname, out)
            table.constraints.append(con)
            return
        if self.at_kw("PRIMARY", "FOREIGN", "UNIQUE", "CHECK"):
            con = self.parse_table_constraint(None, out)
            table.constraints.append(con)
            return
        self.parse_column_def(table, out)

    def parse_table_constraint(self, name: str | None, out: StatementOutcome) -> ConstraintDef:
        if self.accept_kw("PRIMARY"):
            self.expect_kw("KEY")
            cols = self.parse_name_list()
            return ConstraintDef(name or "", ConstraintKind.PRIMARY_KEY, cols)
        if self.accept_kw("UNIQUE"):
            cols = self.parse_name_list()
            return ConstraintDef(name or "", ConstraintKind.UNIQUE, cols)
        if self.accept_kw("FOREIGN"):
            self.expect_kw("KEY")
            cols = self.parse_name_list()
            return self.parse_references(name, cols, out)
        if self.at_kw("CHECK"):
            return self.parse_check_body(name)
        raise SubsetViolation("expected a constraint definition", self.tok())

    def parse_name_list(self) -> tuple[str, ...]:
        self.expect_op("(")
        names = [self.identifier("column name")]
        while self.accept_op(","):
            names.append(self.identifier("column name"))
        self.expect_op(")")
        return tuple(names)

    def parse_references(
        self, name: str | None, cols: tuple[str, ...], out: StatementOutcome
    ) -> ConstraintDef:
        self.expect_kw("REFERENCES")
        ref_schema, ref_table = self.qname("referenced table")
        ref_cols: tuple[str, ...] = ()
        if self.at_op("("):
            ref_cols = self.parse_name_list()
        on_delete = on_update = None
        while self.at_kw("ON"):
            self.advance()
            which = self.advance()
            if not which.is_kw("DELETE", "UPDATE"):
                raise SubsetViolation("expected DELETE or UPDATE after ON", which)
            action = self.parse_fk_action()
            if which.is_kw("DELETE"):
                on_delete = action
            else:
                on_update = action
        out.dependencies.append(("table", ref_schema, ref_table))
        if ref_cols and len(ref_cols) != len(cols):
            self.flag(
                self.tok(), CODE_SYNTAX,
                "foreign key column count differs from referenced column count",
            )
            ref_cols = ()
        return ConstraintDef(
            name or "", ConstraintKind.FOREIGN_KEY, cols,
            ref_schema=ref_schema, ref_table=ref_table, ref_columns=ref_cols,
            on_delete=on_delete, on_update=on_update,
        )

    def parse_fk_action(self) -> str:
        t = self.advance()
        if t.is_kw("CASCADE", "RESTRICT"):
            return t.value
        if t.is_kw("SET"):
            nxt = self.advance()
            if nxt.is_kw("NULL", "DEFAULT"):
                return f"SET {nxt.value}"
            raise SubsetViolation("expected NULL or DEFAULT after SET", nxt)
        if t.is_kw("NO"):
            nxt = self.advance()
            if nxt.is_kw("ACTION"):
                return "NO ACTION"
            raise SubsetViolation("expected ACTION after NO", nxt)
        raise SubsetViolation("expected a referential action", t)

    def parse_check_body(self, name: str | None) -> ConstraintDef:
        self.expect_kw("CHECK")
        self.expect_op("(")
        start = self.pos
        sub = ExpressionParser(self.tokens, self.pos)
        standard = True
        try:
            sub.parse_condition()
            self.pos = sub.pos
            if not self.at_op(")"):
                raise SubsetViolation("expected ')' after check condition", self.tok())
        except SubsetViolation:
            standard = False
            self.pos = start
            self.skip_balanced()
        if sub.flags:
            standard = False
            self.flags.extend(sub.flags)
        source = self.respelled(start)
        self.expect_op(")")
        cols = tuple(sorted(sub.columns))
        return ConstraintDef(
            name or "", ConstraintKind.CHECK, cols,
            check_source=source, check_standard=standard,
        )

    def parse_column_def(self, table: TableDef, out: StatementOutcome) -> None:
        name = self.identifier("column name")
        col_type = self.parse_column_type()
        col = ColumnDef(name, col_type)
        if isinstance(col_type, NativeTypeRef):
            col.native_type = col_type
        pending_name: str | None = None
        while not self.at_op(",", ")") and self.tok().kind is not TokKind.EOF:
            if self.accept_kw("CONSTRAINT"):
                pending_name = self.identifier("constraint name")
                continue
            if self.at_kw("NOT") and self.tok(1).is_kw("NULL"):
                self.advance()
                self.advance()
                col.nullable = False
                continue
            if self.accept_kw("NULL"):
                col.nullable = True
                continue
            if self.accept_kw("DEFAULT"):
                start = self.pos
                sub = ExpressionParser(self.tokens, self.pos)
                try:
                    sub.parse_value()
                    self.pos = sub.pos
                    self.flags.extend(sub.flags)
                    col.default = self.respelled(start)
                except SubsetViolation:
                    self.pos = start
                    self.skip_default_tokens()
                    text = self.respelled(start)
                    col.default = text
                    self.flag(
                        self.tokens[start], CODE_SYNTAX,
                        f"non-standard default {text}", construct=text,
                    )
                continue
            if self.accept_kw("PRIMARY"):
                self.expect_kw("KEY")
                table.constraints.append(
                    ConstraintDef(pending_name or "", ConstraintKind.PRIMARY_KEY, (name,))
                )
                pending_name = None
                continue
            if self.accept_kw("UNIQUE"):
                table.constraints.append(
                    ConstraintDef(pending_name or "", ConstraintKind.UNIQUE, (name,))
                )
                pending_name = None
                continue
            if self.at_kw("REFERENCES"):
                con = self.parse_references(pending_name, (name,), out)
                table.constraints.append(con)
                pending_name = None
                continue
            if self.at_kw("CHECK"):
                con = self.parse_check_body(pending_name)
                table.constraints.append(con)
                pending_name = None
                continue
            bad = self.tok()
            self.flag(bad, CODE_SYNTAX, f"vendor column option {bad.value}")
            self.advance()
            if self.at_op("("):
                self.advance()
                self.skip_balanced()
                self.expect_op(")")
        if table.column(name) is not None:
            raise SubsetViolation(f"duplicate column name {name}", self.tok())
        table.columns.append(col)

    def skip_default_tokens(self) -> None:
        # Consume a vendor default expression up to the next column boundary.
        depth = 0
        while True:
            t = self.tok()
            if t.kind is TokKind.EOF:
                return
            if t.kind is TokKind.OP:
                if t.value == "(":
                    depth += 1
                elif t.value == ")":
                    if depth == 0:
                        return
                    depth -= 1
                elif t.value == "," and depth == 0:
                    return
            if depth == 0 and t.is_kw(
                "NOT", "NULL", "CONSTRAINT", "PRIMARY", "UNIQUE", "REFERENCES", "CHECK"
            ):
                return
            self.advance()

    def finish_table(self, table: TableDef) -> None:
        pks = [c for c in table.constraints if c.kind == ConstraintKind.PRIMARY_KEY]
        if len(pks) > 1:
            self.flag(self.tokens[0], CODE_SYNTAX, "table declares more than one primary key")
            for extra in pks[1:]:
                table.constraints.remove(extra)
            pks = pks[:1]
        if pks:
            for cname in pks[0].columns:
                col = table.column(cname)
                if col is not None:
                    col.nullable = False
        taken = {c.name for c in table.constraints if c.name}
        counters = {
            ConstraintKind.FOREIGN_KEY: 0,
            ConstraintKind.UNIQUE: 0,
            ConstraintKind.CHECK: 0,
        }
        suffix = {
            ConstraintKind.FOREIGN_KEY: "FK",
            ConstraintKind.UNIQUE: "UQ",
            ConstraintKind.CHECK: "CK",
        }
        for con in table.constraints:
            if con.name:
                continue
            if con.kind == ConstraintKind.PRIMARY_KEY:
                base = f"{table.name}_PK"
                while base in taken:
                    base = base + "_"
                con.name = base
            else:
                counters[con.kind] += 1
                candidate = f"{table.name}_{suffix[con.kind]}_{counters[con.kind]}"
                while candidate in taken:
                    counters[con.kind] += 1
                    candidate = f"{table.name}_{suffix[con.kind]}_{counters[con.kind]}"
                con.name = candidate
            taken.add(con.name)
        for con in table.constraints:
            if con.kind == ConstraintKind.CHECK:
                continue
            for cname in con.columns:
                if table.column(cname) is None:
                    self.flag(
                        self.tokens[0], CODE_SYNTAX,
                        f"constraint {con.name} names unknown column {cname}",
                    )

    def parse_create_view(self, out: StatementOutcome) -> None:
        self.expect_kw("VIEW")
        schema, name = self.qname("view name")
        out.schema_name = schema
        out.object_name = name
        if schema is not None:
            out.dependencies.append(("schema", None, schema))
        columns: tuple[str, ...] = ()
        if self.at_op("("):
            columns = self.parse_name_list()
        self.expect_kw("AS")
        start = self.pos
        sub = ExpressionParser(self.tokens, self.pos)
        view = ViewDef(name, columns=columns, source_text=out.text)
        try:
            sub.parse_query_expr()
            self.pos = sub.pos
            if self.at_kw("WITH"):
                self.advance()
                self.expect_kw("CHECK")
                self.expect_kw("OPTION")
            end = self.pos
            self.expect_end()
        except SubsetViolation as exc:
            view.standard = False
            view.query = ""
            out.flags.append(exc.as_flag())
            out.flags.extend(sub.flags)
            self.flags = []
            self.pos = len(self.tokens) - 1
            out.produced = view
            return
        if sub.flags:
            view.standard = False
            self.flags.extend(sub.flags)
        view.query = self.respelled(start, end)
        view.referenced_tables = tuple(sorted(sub.tables, key=lambda p: (p[0] or "", p[1])))
        for dep_schema, dep_table in view.referenced_tables:
            out.dependencies.append(("table", dep_schema, dep_table))
        out.produced = view

    def parse_create_native(self, out: StatementOutcome, replace: bool) -> None:
        words = []
        probe = self.pos
        while self.tokens[probe].kind is TokKind.IDENT and len(words) < 3:
            words.append(self.tokens[probe].value)
            probe += 1
        head = words[0] if words else "OBJECT"
        two = " ".join(words[:2])
        if two in ("DATABASE LINK", "PUBLIC SYNONYM", "UNIQUE INDEX",
                   "GLOBAL TEMPORARY", "MATERIALIZED VIEW"):
            head = two
        if two == "PUBLIC DATABASE" and len(words) > 2 and words[2] == "LINK":
            head = "PUBLIC DATABASE LINK"
        out.kind = f"CREATE {head}"
        if head == "USER":
            self.advance()
            name = self.identifier("user name")
            out.object_name = name
            out.produced = UserDef(name, out.text)
            self.pos = len(self.tokens) - 1
            return
        if head == "ROLE":
            self.advance()
            name = self.identifier("role name")
            out.object_name = name
            out.produced = RoleDef(name, out.text)
            self.pos = len(self.tokens) - 1
            return
        if head == "TRIGGER":
            self.advance()
            schema, name = self.qname("trigger name")
            out.schema_name = schema
            out.object_name = name
            target = self.scan_trigger_target()
            out.produced = TriggerDef(name, target_table=target, source_text=out.text)
            self.pos = len(self.tokens) - 1
            return
        if head in ("FUNCTION", "PROCEDURE"):
            self.advance()
            schema, name = self.qname("routine name")
            out.schema_name = schema
            out.object_name = name
            out.produced = RoutineDef(name, kind=head, source_text=out.text)
            self.pos = len(self.tokens) - 1
            return
        if head in ("SYNONYM", "PUBLIC SYNONYM"):
            for _ in head.split():
                self.advance()
            schema, name = self.qname("synonym name")
            out.schema_name = schema
            out.object_name = name
            target = ""
            if self.accept_kw("FOR"):
                tschema, tname = self.qname("synonym target")
                target = f"{tschema}.{tname}" if tschema else tname
            out.produced = SynonymDef(name, target=target, source_text=out.text)
            self.pos = len(self.tokens) - 1
            return
        if head in ("DATABASE LINK", "PUBLIC DATABASE LINK"):
            for _ in head.split():
                self.advance()
            name = self.identifier("database link name")
            out.object_name = name
            out.produced = DbLinkDef(name, source_text=out.text)
            self.pos = len(self.tokens) - 1
            return
        name = ""
        skip = len(head.split())
        for probe in range(skip, skip + 3):
            cand = self.tok(probe)
            if cand.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
                name = cand.value
                break
        out.object_name = name
        out.produced = NativeObjectDef(f"CREATE {head}", name, out.text)
        self.pos = len(self.tokens) - 1

    def scan_trigger_target(self) -> str | None:
        # Best-effort: the table after the first ON keyword.
        probe = self.pos
        while self.tokens[probe].kind is not TokKind.EOF:
            if self.tokens[probe].is_kw("ON"):
                nxt = self.tokens[probe + 1]
                if nxt.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
                    name = nxt.value
                    dot = self.tokens[probe + 2]
                    if dot.kind is TokKind.OP and dot.value == ".":
                        tail = self.tokens[probe + 3]
                        if tail.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
                            return f"{name}.{tail.value}"
                    return name
            probe += 1
        return None

    # -- ALTER ----------------------------------------------------------

    def parse_alter(self, out: StatementOutcome) -> None:
        self.expect_kw("ALTER")
        if not self.at_kw("TABLE"):
            kind = self.tok().value if self.tok().kind is TokKind.IDENT else "OBJECT"
            out.kind = f"ALTER {kind}"
            out.produced = NativeObjectDef(out.kind, "", out.text)
            self.pos = len(self.tokens) - 1
            return
        self.advance()
        schema, name = self.qname("table name")
        out.schema_name = schema
        out.object_name = name
        out.dependencies.append(("table", schema, name))
        if self.at_kw("ADD") and self.tok(1).is_kw(
            "CONSTRAINT", "PRIMARY", "FOREIGN", "UNIQUE", "CHECK"
        ):
            self.advance()
            cname = None
            if self.accept_kw("CONSTRAINT"):
                cname = self.identifier("constraint name")
            out.kind = "ALTER TABLE ADD CONSTRAINT"
            con = self.parse_table_constraint(cname, out)
            self.expect_end()
            out.produced = con
            return
        if self.at_kw("DROP") and self.tok(1).is_kw("CONSTRAINT"):
            self.advance()
            self.advance()
            cname = self.identifier("constraint name")
            self.expect_end()
            out.kind = "ALTER TABLE DROP CONSTRAINT"
            out.produced = cname
            return
        out.kind = "ALTER TABLE"
        out.produced = NativeObjectDef("ALTER TABLE", name, out.text)
        self.flag(self.tok(), CODE_SYNTAX, "unsupported ALTER TABLE form")
        self.pos = len(self.tokens) - 1

    # -- GRANT ----------------------------------------------------------

    def parse_grant(self, out: StatementOutcome) -> None:
        self.expect_kw("GRANT")
        out.kind = "GRANT"
        privs: list[str] = []
        role_grant = False
        while True:
            t = self.tok()
            if t.kind is TokKind.IDENT and t.value in PRIVILEGE_WORDS:
                word = self.advance().value
                if word == "ALL":
                    self.accept_kw("PRIVILEGES")
                    word = "ALL PRIVILEGES"
                if self.at_op("("):
                    self.flag(self.tok(), CODE_SYNTAX, "column-scoped privilege outside subset")
                    self.advance()
                    self.skip_balanced()
                    self.expect_op(")")
                privs.append(word)
            else:
                privs.append(self.identifier("privilege or role name"))
                role_grant = True
            if not self.accept_op(","):
                break
        if role_grant or not self.at_kw("ON"):
            self.expect_kw("TO")
            grantees = self.parse_grantees()
            grantable = self.parse_grant_option(admin=True)
            out.produced = [
                PrivilegeDef(priv, "", "", grantee, grantable=grantable)
                for priv in privs
                for grantee in grantees
            ]
            self.expect_end()
            return
        self.expect_kw("ON")
        self.accept_kw("TABLE")
        schema, obj = self.qname("object name")
        out.schema_name = schema
        out.object_name = obj
        out.dependencies.append(("table", schema, obj))
        self.expect_kw("TO")
        grantees = self.parse_grantees()
        grantable = self.parse_grant_option(admin=False)
        out.produced = [
            PrivilegeDef(priv, schema or "", obj, grantee, grantable=grantable)
            for priv in privs
            for grantee in grantees
        ]
        self.expect_end()

    def parse_grantees(self) -> list[str]:
        grantees = []
        while True:
            if self.at_kw("PUBLIC"):
                self.advance()
                grantees.append("PUBLIC")
            else:
                grantees.append(self.identifier("grantee"))
            if not self.accept_op(","):
                return grantees

    def parse_grant_option(self, admin: bool) -> bool:
        if self.at_kw("WITH"):
            self.advance()
            if self.accept_kw("GRANT") or (admin and self.accept_kw("ADMIN")):
                self.expect_kw("OPTION")
                return True
            raise SubsetViolation("expected GRANT OPTION", self.tok())
        return False


def parse_statement_text(text: str, default_schema: str = DEFAULT_SCHEMA) -> StatementOutcome:
    """Parse a single statement in isolation."""
    try:
        tokens = tokenize(text)
    except LexError as exc:
        out = StatementOutcome("UNKNOWN", text, exc.line, exc.col)
        out.issue = ParseIssue(exc.line, exc.col, str(exc))
        out.flags.append(Flag(exc.line, exc.col, "<lex>", CODE_SYNTAX, str(exc)))
        out.produced = NativeObjectDef("UNKNOWN", "", text)
        return out
    parser = StatementParser(tokens, default_schema)
    return parser.parse_statement(text)


def parse_ddl(text: str, dialect_hint: str = "generic") -> ParsedDdl:
    """Parse a DDL script into a database model.

    Every recognized object lands in the model; unrecognized statements are
    preserved verbatim as native-source objects.  Malformed statements are
    reported with a location and skipped to the next top-level semicolon.
    """
    model = DatabaseModel(source=SourceDescriptor(access_mode=dialect_hint))
    result = ParsedDdl(model)
    for raw in split_statements(text):
        try:
            tokens = tokenize(raw.text, start_line=raw.line, start_col=raw.col)
        except LexError as exc:
            issue = ParseIssue(exc.line, exc.col, str(exc))
            result.errors.append(issue)
            out = StatementOutcome("UNKNOWN", raw.text, raw.line, raw.col, issue=issue)
            out.produced = NativeObjectDef("UNKNOWN", "", raw.text)
            result.statements.append(out)
            model.native_objects.append(out.produced)
            continue
        parser = StatementParser(tokens)
        out = parser.parse_statement(raw.text)
        result.statements.append(out)
        if out.issue is not None:
            result.errors.append(out.issue)
        apply_statement(model, out, result)
    model.link_references()
    return result


def apply_statement(model: DatabaseModel, out: StatementOutcome, result: ParsedDdl) -> None:
    obj = out.produced
    if obj is None:
        return
    if out.issue is not None:
        # The statement broke part-way; keep only the verbatim record.
        if isinstance(obj, NativeObjectDef):
            model.native_objects.append(obj)
        else:
            model.native_objects.append(
                NativeObjectDef(out.kind or "UNKNOWN", out.object_name or "", out.text)
            )
        return
    if isinstance(obj, SchemaDef):
        existing = model.schema(obj.name)
        if existing is None:
            model.schemas.append(obj)
        else:
            existing.implicit = False
            existing.owner = obj.owner or existing.owner
        return
    if isinstance(obj, TableDef):
        schema = model.ensure_schema(out.schema_name or DEFAULT_SCHEMA)
        if schema.table(obj.name) is not None:
            result.errors.append(
                ParseIssue(out.line, out.col, f"duplicate table {obj.name} in schema {schema.name}")
            )
            return
        schema.tables.append(obj)
        return
    if isinstance(obj, ViewDef):
        schema = model.ensure_schema(out.schema_name or DEFAULT_SCHEMA)
        if schema.view(obj.name) is not None:
            result.errors.append(
                ParseIssue(out.line, out.col, f"duplicate view {obj.name} in schema {schema.name}")
            )
            return
        schema.views.append(obj)
        return
    if isinstance(obj, TriggerDef):
        schema = model.ensure_schema(out.schema_name or DEFAULT_SCHEMA)
        schema.triggers.append(obj)
        return
    if isinstance(obj, RoutineDef):
        schema = model.ensure_schema(out.schema_name or DEFAULT_SCHEMA)
        schema.routines.append(obj)
        return
    if isinstance(obj, SynonymDef):
        schema = model.ensure_schema(out.schema_name or DEFAULT_SCHEMA)
        schema.synonyms.append(obj)
        return
    if isinstance(obj, DbLinkDef):
        schema = model.ensure_schema(out.schema_name or DEFAULT_SCHEMA)
        schema.dblinks.append(obj)
        return
    if isinstance(obj, UserDef):
        if all(u.name != obj.name for u in model.users):
            model.users.append(obj)
        return
    if isinstance(obj, RoleDef):
        if all(r.name != obj.name for r in model.roles):
            model.roles.append(obj)
        return
    if isinstance(obj, list):  # privileges from one GRANT
        for priv in obj:
            bind_privilege(model, priv)
            model.privileges.append(priv)
        return
    if isinstance(obj, ConstraintDef):  # ALTER TABLE ... ADD CONSTRAINT
        found = find_target_table(model, out.schema_name, out.object_name or "")
        if found is None:
            result.errors.append(
                ParseIssue(out.line, out.col, f"ALTER TABLE references unknown table {out.object_name}")
            )
            model.native_objects.append(
                NativeObjectDef("ALTER TABLE", out.object_name or "", out.text)
            )
            return
        table = found
        if obj.kind == ConstraintKind.PRIMARY_KEY and table.primary_key() is not None:
            result.errors.append(
                ParseIssue(out.line, out.col, f"table {table.name} already has a primary key")
            )
            return
        if not obj.name:
            obj.name = synthesize_name(table, obj.kind)
        table.constraints.append(obj)
        if obj.kind == ConstraintKind.PRIMARY_KEY:
            for cname in obj.columns:
                col = table.column(cname)
                if col is not None:
                    col.nullable = False
        return
    if isinstance(obj, str) and out.kind == "ALTER TABLE DROP CONSTRAINT":
        found = find_target_table(model, out.schema_name, out.object_name or "")
        if found is not None:
            found.constraints = [c for c in found.constraints if c.name != obj]
        return
    if isinstance(obj, NativeObjectDef):
        model.native_objects.append(obj)
        return


def find_target_table(model: DatabaseModel, schema: str | None, name: str):
    if schema is not None:
        s = model.schema(schema)
        return s.table(name) if s is not None else None
    hit = model.find_table_any_schema(name)
    return hit[1] if hit is not None else None


def synthesize_name(table: TableDef, kind: str) -> str:
    suffix = {
        ConstraintKind.PRIMARY_KEY: "PK",
        ConstraintKind.FOREIGN_KEY: "FK",
        ConstraintKind.UNIQUE: "UQ",
        ConstraintKind.CHECK: "CK",
    }[kind]
    taken = {c.name for c in table.constraints}
    if kind == ConstraintKind.PRIMARY_KEY:
        base = f"{table.name}_PK"
        while base in taken:
            base = base + "_"
        return base
    n = 1
    while f"{table.name}_{suffix}_{n}" in taken:
        n += 1
    return f"{table.name}_{suffix}_{n}"


def bind_privilege(model: DatabaseModel, priv: PrivilegeDef) -> None:
    """Resolve an unqualified GRANT target to the schema that holds it."""
    if priv.on_schema or not priv.on_object:
        return
    for s in model.schemas:
        if s.table(priv.on_object) is not None or s.view(priv.on_object) is not None:
            priv.on_schema = s.name
            return
    priv.on_schema = DEFAULT_SCHEMA
