"""Conformance checking against the archival SQL subset.

Modeled on the flagger idea from the FIPS era: instead of failing on
proprietary SQL, classify each statement and report every non-standard
construct with its location, so a database owner can see exactly what would
not survive archiving.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from dbarc.sqlcore.expr import (
    CODE_DEP_COLUMN,
    CODE_DEP_SCHEMA,
    CODE_DEP_TABLE,
    CODE_MUTATING,
    CODE_STMT,
    ExpressionParser,
    Flag,
    SubsetViolation,
)
from dbarc.sqlcore.model import DEFAULT_SCHEMA, DatabaseModel, clone_model, qualified_name
from dbarc.sqlcore.tokens import LexError, TokKind, split_statements, tokenize
from dbarc.sqlcore.parser import StatementOutcome, StatementParser, apply_statement, ParsedDdl


class Verdict(enum.Enum):
    CONFORMING = "CONFORMING"
    FLAGGED = "FLAGGED"


@dataclass(frozen=True)
class FlagItem:
    line: int
    col: int
    construct: str
    code: str
    reason: str


@dataclass(frozen=True)
class FlagReport:
    verdict: Verdict
    items: tuple[FlagItem, ...]

    @property
    def conforming(self) -> bool:
        return self.verdict is Verdict.CONFORMING


# Statement classes the archival subset admits.
SUBSET_STATEMENTS = frozenset(
    {
        "CREATE SCHEMA",
        "CREATE TABLE",
        "CREATE VIEW",
        "GRANT",
        "ALTER TABLE ADD CONSTRAINT",
        "ALTER TABLE DROP CONSTRAINT",
        "SELECT",
    }
)

MUTATING_HEADS = frozenset(
    {"INSERT", "UPDATE", "DELETE", "DROP", "TRUNCATE", "MERGE", "REPLACE"}
)


def make_report(items: list[FlagItem]) -> FlagReport:
    verdict = Verdict.CONFORMING if not items else Verdict.FLAGGED
    return FlagReport(verdict, tuple(items))


def format_report(report: FlagReport, source_name: str = "<sql>") -> str:
    """One finding per line: file:line:col reason-code text."""
    lines = [
        f"{source_name}:{it.line}:{it.col} {it.code} {it.reason}"
        for it in report.items
    ]
    return "\n".join(lines)


def _items_from_outcome(out: StatementOutcome, model: DatabaseModel | None) -> list[FlagItem]:
    items = [
        FlagItem(f.line, f.col, f.construct, f.code, f.reason) for f in out.flags
    ]
    if out.kind not in SUBSET_STATEMENTS:
        items.insert(
            0,
            FlagItem(
                out.line, out.col, out.kind, CODE_STMT,
                f"statement class outside archival subset: {out.kind}",
            ),
        )
    if model is not None:
        items.extend(_dependency_items(out, model))
    return items


def _is_self_reference(out: StatementOutcome, schema: str | None, name: str) -> bool:
    """A CREATE TABLE may legally reference itself (self foreign key)."""
    if out.kind != "CREATE TABLE" or out.object_name != name:
        return False
    own = out.schema_name or DEFAULT_SCHEMA
    return schema is None or schema == own


def _dependency_items(out: StatementOutcome, model: DatabaseModel) -> list[FlagItem]:
    items: list[FlagItem] = []
    for kind, schema, name in out.dependencies:
        if kind == "schema":
            if model.schema(name) is None:
                items.append(
                    FlagItem(
                        out.line, out.col, name, CODE_DEP_SCHEMA,
                        f"unresolved schema reference: {name}",
                    )
                )
        elif kind == "table":
            if _is_self_reference(out, schema, name):
                continue
            target = _lookup_relation(model, schema, name)
            if target is None:
                label = qualified_name(schema, name)
                items.append(
                    FlagItem(
                        out.line, out.col, label, CODE_DEP_TABLE,
                        f"unresolved table reference: {label}",
                    )
                )
    items.extend(_fk_column_items(out, model))
    return items


def _lookup_relation(model: DatabaseModel, schema: str | None, name: str):
    if schema is not None:
        s = model.schema(schema)
        if s is None:
            return None
        return s.table(name) or s.view(name)
    s = model.schema(DEFAULT_SCHEMA)
    if s is not None:
        hit = s.table(name) or s.view(name)
        if hit is not None:
            return hit
    for s in model.schemas:
        hit = s.table(name) or s.view(name)
        if hit is not None:
            return hit
    return None


def _fk_column_items(out: StatementOutcome, model: DatabaseModel) -> list[FlagItem]:
    from dbarc.sqlcore.model import ConstraintDef, ConstraintKind, TableDef

    constraints: list[ConstraintDef] = []
    if isinstance(out.produced, TableDef):
        constraints = [
            c for c in out.produced.constraints if c.kind == ConstraintKind.FOREIGN_KEY
        ]
    elif isinstance(out.produced, ConstraintDef) and out.produced.kind == ConstraintKind.FOREIGN_KEY:
        constraints = [out.produced]
    items = []
    for con in constraints:
        if not con.ref_table or not con.ref_columns:
            continue
        target = _lookup_relation(model, con.ref_schema, con.ref_table)
        if (
            target is None
            and isinstance(out.produced, TableDef)
            and _is_self_reference(out, con.ref_schema, con.ref_table)
        ):
            target = out.produced
        if target is None or not isinstance(target, TableDef):
            continue
        for cname in con.ref_columns:
            if target.column(cname) is None:
                items.append(
                    FlagItem(
                        out.line, out.col, cname, CODE_DEP_COLUMN,
                        f"unresolved column reference: {con.ref_table}.{cname}",
                    )
                )
    return items


def _query_outcome(text: str) -> StatementOutcome:
    out = StatementOutcome("SELECT", text, 1, 1)
    try:
        tokens = tokenize(text)
    except LexError as exc:
        out.flags.append(Flag(exc.line, exc.col, "<lex>", "SQL-SYNTAX", str(exc)))
        return out
    parser = ExpressionParser(tokens)
    try:
        parser.parse_query_expr()
        parser.expect_end()
    except SubsetViolation as exc:
        out.flags.append(exc.as_flag())
    out.flags.extend(parser.flags)
    for schema, name in sorted(parser.tables, key=lambda p: (p[0] or "", p[1])):
        out.dependencies.append(("table", schema, name))
    return out


def validate_query(text: str, model: DatabaseModel | None = None) -> FlagReport:
    """Check a read-only query against the subset grammar.

    Anything that is not a SELECT is reported as mutating or out of scope,
    never executed.
    """
    stripped = text.strip()
    try:
        tokens = tokenize(stripped)
    except LexError as exc:
        return make_report([FlagItem(exc.line, exc.col, "<lex>", "SQL-SYNTAX", str(exc))])
    first = tokens[0]
    if not (first.is_kw("SELECT") or (first.kind is TokKind.OP and first.value == "(")):
        head = first.value if first.value else "<empty>"
        code = CODE_MUTATING if first.is_kw(*MUTATING_HEADS) else CODE_STMT
        reason = (
            f"mutating statement refused: {head}"
            if code == CODE_MUTATING
            else f"not a query: {head}"
        )
        return make_report([FlagItem(first.line, first.col, head, code, reason)])
    out = _query_outcome(stripped)
    return make_report(_items_from_outcome(out, model))


def validate_statement(text: str, model: DatabaseModel | None = None) -> FlagReport:
    """Classify one statement as CONFORMING or FLAGGED.

    With a model supplied, cross-object dependencies are checked too: a
    table can only be created in a schema that already exists, a foreign key
    must point at an existing table, and so on.
    """
    stripped = text.strip()
    if not stripped:
        return make_report([])
    try:
        tokens = tokenize(stripped)
    except LexError as exc:
        return make_report([FlagItem(exc.line, exc.col, "<lex>", "SQL-SYNTAX", str(exc))])
    if tokens[0].is_kw("SELECT"):
        return validate_query(stripped, model)
    parser = StatementParser(tokens)
    out = parser.parse_statement(stripped)
    return make_report(_items_from_outcome(out, model))


def validate_script(text: str, model: DatabaseModel | None = None) -> list[tuple[StatementOutcome, FlagReport]]:
    """Validate a whole script, statement by statement.

    Statements see the objects created earlier in the same script, so a
    script that creates a schema and then populates it is conforming.
    """
    working = clone_model(model) if model is not None else DatabaseModel()
    result = ParsedDdl(working)
    reports: list[tuple[StatementOutcome, FlagReport]] = []
    for raw in split_statements(text):
        try:
            tokens = tokenize(raw.text, start_line=raw.line, start_col=raw.col)
        except LexError as exc:
            out = StatementOutcome("UNKNOWN", raw.text, exc.line, exc.col)
            reports.append(
                (out, make_report([FlagItem(exc.line, exc.col, "<lex>", "SQL-SYNTAX", str(exc))]))
            )
            continue
        parser = StatementParser(tokens)
        out = parser.parse_statement(raw.text)
        reports.append((out, make_report(_items_from_outcome(out, working))))
        apply_statement(working, out, result)
    return reports


def flag_script(text: str, model: DatabaseModel | None = None) -> FlagReport:
    """Merge per-statement reports for a whole script into one."""
    items: list[FlagItem] = []
    for _, report in validate_script(text, model):
        items.extend(report.items)
    return make_report(items)
