"""Validating parser for the subset's value expressions and queries.

Soft deviations (unknown type or function names, vendor operators) are
collected as flags so one statement can report several findings; anything
the grammar cannot place at all raises :class:`SubsetViolation` at the
offending token.
"""

from __future__ import annotations

from dataclasses import dataclass

from dbarc.sqlcore.tokens import TokKind, Token
from dbarc.sqlcore.types import match_subset_type_name

# Reason codes, referenced in docs/sql-subset.md.
CODE_TYPE = "SQL-TYPE"
CODE_FUNC = "SQL-FUNC"
CODE_SYNTAX = "SQL-SYNTAX"
CODE_STMT = "SQL-STMT"
CODE_QUOTE = "SQL-QUOTE"
CODE_DEP_SCHEMA = "DEP-SCHEMA"
CODE_DEP_TABLE = "DEP-TABLE"
CODE_DEP_COLUMN = "DEP-COLUMN"
CODE_MUTATING = "SQL-MUTATING"


@dataclass(frozen=True)
class Flag:
    line: int
    col: int
    construct: str
    code: str
    reason: str


class SubsetViolation(Exception):
    def __init__(self, message: str, token: Token):
        super().__init__(f"{message} at line {token.line}, column {token.col}")
        self.message = message
        self.token = token

    def as_flag(self) -> Flag:
        construct = self.token.value if self.token.kind is not TokKind.EOF else "<end>"
        return Flag(self.token.line, self.token.col, construct, CODE_SYNTAX, self.message)


SCALAR_FUNCTIONS = frozenset(
    {
        "ABS", "MOD", "CHAR_LENGTH", "CHARACTER_LENGTH", "OCTET_LENGTH",
        "UPPER", "LOWER", "COALESCE", "NULLIF",
    }
)
AGGREGATE_FUNCTIONS = frozenset({"COUNT", "SUM", "AVG", "MIN", "MAX"})
NILADIC_FUNCTIONS = frozenset(
    {"CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "CURRENT_USER", "SESSION_USER", "USER"}
)
EXTRACT_FIELDS = frozenset(
    {"YEAR", "MONTH", "DAY", "HOUR", "MINUTE", "SECOND", "TIMEZONE_HOUR", "TIMEZONE_MINUTE"}
)
COMPARISON_OPS = frozenset({"=", "<>", "<", ">", "<=", ">="})


class ExpressionParser:
    """Recursive-descent validator over a token list.

    Collects referenced tables (for view dependency tracking) and referenced
    column names (for check-constraint cascade) while it validates.
    """

    def __init__(self, tokens: list[Token], pos: int = 0, allow_aggregates: bool = False):
        self.tokens = tokens
        self.pos = pos
        self.allow_aggregates = allow_aggregates
        self.flags: list[Flag] = []
        self.tables: set[tuple[str | None, str]] = set()
        self.columns: set[str] = set()

    # -- token plumbing -------------------------------------------------

    def tok(self, offset: int = 0) -> Token:
        idx = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[idx]

    def advance(self) -> Token:
        t = self.tok()
        if t.kind is not TokKind.EOF:
            self.pos += 1
        return t

    def at_kw(self, *words: str) -> bool:
        return self.tok().is_kw(*words)

    def accept_kw(self, *words: str) -> bool:
        if self.at_kw(*words):
            self.advance()
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise SubsetViolation(f"expected {word}", self.tok())
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        t = self.tok()
        return t.kind is TokKind.OP and t.value in ops

    def accept_op(self, *ops: str) -> bool:
        if self.at_op(*ops):
            self.advance()
            return True
        return False

    def expect_op(self, op: str) -> Token:
        if not self.at_op(op):
            raise SubsetViolation(f"expected {op!r}", self.tok())
        return self.advance()

    def flag(self, token: Token, code: str, reason: str, construct: str | None = None) -> None:
        self.flags.append(Flag(token.line, token.col, construct or token.value, code, reason))

    def identifier(self, what: str = "identifier") -> str:
        t = self.tok()
        if t.kind is TokKind.IDENT or t.kind is TokKind.QIDENT:
            self.advance()
            return t.value
        if t.kind is TokKind.VIDENT:
            self.flag(t, CODE_QUOTE, "vendor identifier quoting")
            self.advance()
            return t.value
        raise SubsetViolation(f"expected {what}", t)

    # -- expressions ----------------------------------------------------

    def parse_condition(self) -> None:
        self.parse_or()

    def parse_or(self) -> None:
        self.parse_and()
        while self.accept_kw("OR"):
            self.parse_and()

    def parse_and(self) -> None:
        self.parse_not()
        while self.accept_kw("AND"):
            self.parse_not()

    def parse_not(self) -> None:
        while self.accept_kw("NOT"):
            pass
        self.parse_predicate()

    def parse_predicate(self) -> None:
        if self.at_kw("EXISTS"):
            self.advance()
            self.expect_op("(")
            self.parse_query_expr()
            self.expect_op(")")
            self.maybe_is_truth()
            return
        self.parse_value()
        t = self.tok()
        if t.kind is TokKind.OP and t.value in COMPARISON_OPS | {"!="}:
            if t.value == "!=":
                self.flag(t, CODE_SYNTAX, "vendor inequality operator != (standard is <>)")
            self.advance()
            if self.at_kw("ANY", "ALL", "SOME"):
                self.advance()
                self.expect_op("(")
                self.parse_query_expr()
                self.expect_op(")")
            else:
                self.parse_value()
        elif self.at_kw("IS"):
            self.advance()
            self.accept_kw("NOT")
            if not self.accept_kw("NULL", "TRUE", "FALSE", "UNKNOWN"):
                raise SubsetViolation("expected NULL, TRUE, FALSE or UNKNOWN after IS", self.tok())
        elif self.at_kw("BETWEEN") or (self.at_kw("NOT") and self.tok(1).is_kw("BETWEEN")):
            self.accept_kw("NOT")
            self.expect_kw("BETWEEN")
            self.accept_kw("ASYMMETRIC", "SYMMETRIC")
            self.parse_value()
            self.expect_kw("AND")
            self.parse_value()
        elif self.at_kw("IN") or (self.at_kw("NOT") and self.tok(1).is_kw("IN")):
            self.accept_kw("NOT")
            self.expect_kw("IN")
            self.expect_op("(")
            if self.at_kw("SELECT"):
                self.parse_query_expr()
            else:
                self.parse_value()
                while self.accept_op(","):
                    self.parse_value()
            self.expect_op(")")
        elif self.at_kw("LIKE") or (self.at_kw("NOT") and self.tok(1).is_kw("LIKE")):
            self.accept_kw("NOT")
            self.expect_kw("LIKE")
            self.parse_value()
            if self.accept_kw("ESCAPE"):
                self.parse_value()
        self.maybe_is_truth()

    def maybe_is_truth(self) -> None:
        if self.at_kw("IS"):
            self.advance()
            self.accept_kw("NOT")
            if not self.accept_kw("NULL", "TRUE", "FALSE", "UNKNOWN"):
                raise SubsetViolation("expected NULL, TRUE, FALSE or UNKNOWN after IS", self.tok())

    def parse_value(self) -> None:
        self.parse_term()
        while True:
            if self.at_op("+", "-", "||"):
                self.advance()
                self.parse_term()
            else:
                break

    def parse_term(self) -> None:
        self.parse_factor()
        while True:
            if self.at_op("*", "/"):
                self.advance()
                self.parse_factor()
            elif self.at_op("%"):
                self.flag(self.tok(), CODE_SYNTAX, "vendor modulo operator % (standard is MOD)")
                self.advance()
                self.parse_factor()
            else:
                break

    def parse_factor(self) -> None:
        if self.at_op("+", "-"):
            self.advance()
        self.parse_primary()

    def parse_primary(self) -> None:
        t = self.tok()
        if t.kind is TokKind.NUMBER or t.kind is TokKind.STRING:
            self.advance()
            return
        if t.kind is TokKind.OP and t.value == "(":
            self.advance()
            if self.at_kw("SELECT"):
                self.parse_query_expr()
            else:
                self.parse_condition()
            self.expect_op(")")
            return
        if self.at_kw("NULL", "TRUE", "FALSE", "UNKNOWN"):
            self.advance()
            return
        if self.at_kw("DATE", "TIME", "TIMESTAMP") and self.tok(1).kind is TokKind.STRING:
            self.advance()
            self.advance()
            return
        if self.at_kw("INTERVAL"):
            raise SubsetViolation("INTERVAL is outside the archival subset", t)
        if self.at_kw("CASE"):
            self.parse_case()
            return
        if self.at_kw("CAST"):
            self.advance()
            self.expect_op("(")
            self.parse_condition()
            self.expect_kw("AS")
            self.parse_type_spec()
            self.expect_op(")")
            return
        if self.at_kw("SUBSTRING"):
            self.advance()
            self.expect_op("(")
            self.parse_value()
            self.expect_kw("FROM")
            self.parse_value()
            if self.accept_kw("FOR"):
                self.parse_value()
            self.expect_op(")")
            return
        if self.at_kw("POSITION"):
            self.advance()
            self.expect_op("(")
            self.parse_value()
            self.expect_kw("IN")
            self.parse_value()
            self.expect_op(")")
            return
        if self.at_kw("TRIM"):
            self.advance()
            self.expect_op("(")
            spec = self.accept_kw("LEADING", "TRAILING", "BOTH")
            if spec:
                if not self.at_kw("FROM"):
                    self.parse_value()
                self.expect_kw("FROM")
                self.parse_value()
            else:
                self.parse_value()
                if self.accept_kw("FROM"):
                    self.parse_value()
            self.expect_op(")")
            return
        if self.at_kw("EXTRACT"):
            self.advance()
            self.expect_op("(")
            fld = self.tok()
            if not self.accept_kw(*EXTRACT_FIELDS):
                raise SubsetViolation("expected a datetime field in EXTRACT", fld)
            self.expect_kw("FROM")
            self.parse_value()
            self.expect_op(")")
            return
        if t.kind is TokKind.IDENT and t.value in NILADIC_FUNCTIONS:
            self.advance()
            if t.value in {"CURRENT_TIME", "CURRENT_TIMESTAMP"} and self.at_op("("):
                self.advance()
                if self.tok().kind is not TokKind.NUMBER:
                    raise SubsetViolation("expected precision", self.tok())
                self.advance()
                self.expect_op(")")
            return
        if t.kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
            # Function call or column reference.
            if self.tok(1).kind is TokKind.OP and self.tok(1).value == "(":
                self.parse_call(t)
                return
            self.parse_column_reference()
            return
        raise SubsetViolation("expected a value expression", t)

    def parse_case(self) -> None:
        self.expect_kw("CASE")
        if not self.at_kw("WHEN"):
            self.parse_value()
            while self.accept_kw("WHEN"):
                self.parse_value()
                self.expect_kw("THEN")
                self.parse_condition()
        else:
            while self.accept_kw("WHEN"):
                self.parse_condition()
                self.expect_kw("THEN")
                self.parse_condition()
        if self.accept_kw("ELSE"):
            self.parse_condition()
        self.expect_kw("END")

    def parse_call(self, name_tok: Token) -> None:
        name = name_tok.value
        if name_tok.kind is TokKind.IDENT and name in AGGREGATE_FUNCTIONS:
            if not self.allow_aggregates:
                self.flag(name_tok, CODE_SYNTAX, f"aggregate {name} outside a query")
            self.advance()
            self.expect_op("(")
            if name == "COUNT" and self.accept_op("*"):
                self.expect_op(")")
                return
            self.accept_kw("DISTINCT", "ALL")
            self.parse_value()
            self.expect_op(")")
            return
        if name_tok.kind is TokKind.IDENT and name in SCALAR_FUNCTIONS:
            self.advance()
            self.expect_op("(")
            if not self.at_op(")"):
                self.parse_condition()
                while self.accept_op(","):
                    self.parse_condition()
            self.expect_op(")")
            return
        # Unknown function: flag it, then skip its balanced argument list so
        # validation can continue and report further findings.
        self.flag(name_tok, CODE_FUNC, f"non-standard function {name}")
        self.advance()
        self.expect_op("(")
        depth = 1
        while depth > 0:
            t = self.advance()
            if t.kind is TokKind.EOF:
                raise SubsetViolation("unbalanced parenthesis", t)
            if t.kind is TokKind.OP and t.value == "(":
                depth += 1
            elif t.kind is TokKind.OP and t.value == ")":
                depth -= 1

    def parse_column_reference(self) -> None:
        parts = [self.identifier("column reference")]
        while self.at_op(".") and self.tok(1).kind in (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT):
            self.advance()
            if self.at_op("*"):
                break
            parts.append(self.identifier())
        if len(parts) > 3:
            raise SubsetViolation("identifier chain deeper than schema.table.column", self.tok())
        self.columns.add(parts[-1])

    def parse_type_spec(self) -> None:
        words: list[str] = []
        probe = self.pos
        while self.tokens[probe].kind is TokKind.IDENT:
            words.append(self.tokens[probe].value)
            probe += 1
        matched = match_subset_type_name(words)
        if matched is None:
            t = self.tok()
            name = self.identifier("type name")
            self.flag(t, CODE_TYPE, f"non-standard type name {name}", construct=name)
        else:
            for _ in range(matched[1]):
                self.advance()
        if self.accept_op("("):
            while not self.at_op(")"):
                self.advance()
            self.expect_op(")")

    # -- queries --------------------------------------------------------

    def parse_query_expr(self) -> None:
        self.parse_query_term()
        while self.at_kw("UNION", "EXCEPT"):
            self.advance()
            self.accept_kw("ALL", "DISTINCT")
            self.parse_query_term()
        if self.accept_kw("ORDER"):
            self.expect_kw("BY")
            self.parse_sort_item()
            while self.accept_op(","):
                self.parse_sort_item()

    def parse_query_term(self) -> None:
        self.parse_query_primary()
        while self.at_kw("INTERSECT"):
            self.advance()
            self.accept_kw("ALL", "DISTINCT")
            self.parse_query_primary()

    def parse_query_primary(self) -> None:
        if self.at_op("("):
            self.advance()
            self.parse_query_expr()
            self.expect_op(")")
            return
        self.parse_query_spec()

    def parse_query_spec(self) -> None:
        self.expect_kw("SELECT")
        self.allow_aggregates = True
        self.accept_kw("ALL", "DISTINCT")
        self.parse_select_list()
        self.expect_kw("FROM")
        self.parse_table_reference()
        while self.accept_op(","):
            self.parse_table_reference()
        if self.accept_kw("WHERE"):
            self.parse_condition()
        if self.accept_kw("GROUP"):
            self.expect_kw("BY")
            self.parse_column_reference()
            while self.accept_op(","):
                self.parse_column_reference()
        if self.accept_kw("HAVING"):
            self.parse_condition()

    def parse_select_list(self) -> None:
        if self.accept_op("*"):
            return
        self.parse_select_item()
        while self.accept_op(","):
            self.parse_select_item()

    def parse_select_item(self) -> None:
        # qualifier.* needs a lookahead check before expression parsing.
        probe = self.pos
        parts = 0
        while self.tokens[probe].kind in (TokKind.IDENT, TokKind.QIDENT):
            parts += 1
            nxt = self.tokens[probe + 1]
            if nxt.kind is TokKind.OP and nxt.value == ".":
                after = self.tokens[probe + 2]
                if after.kind is TokKind.OP and after.value == "*":
                    for _ in range(parts * 2):
                        self.advance()
                    self.advance()
                    return
                probe += 2
                continue
            break
        self.parse_condition()
        if self.accept_kw("AS"):
            self.identifier("column alias")
        elif self.tok().kind in (TokKind.IDENT, TokKind.QIDENT) and not self.at_kw(
            "FROM", "WHERE", "GROUP", "HAVING", "ORDER", "UNION", "INTERSECT", "EXCEPT",
            "JOIN", "ON", "INNER", "LEFT", "RIGHT", "FULL", "CROSS", "NATURAL", "USING",
        ):
            self.identifier("column alias")

    def parse_table_reference(self) -> None:
        self.parse_table_primary()
        while True:
            if self.at_kw("CROSS"):
                self.advance()
                self.expect_kw("JOIN")
                self.parse_table_primary()
                continue
            natural = False
            if self.at_kw("NATURAL"):
                natural = True
                self.advance()
            join_kind = None
            if self.at_kw("INNER"):
                join_kind = self.advance().value
            elif self.at_kw("LEFT", "RIGHT", "FULL"):
                join_kind = self.advance().value
                self.accept_kw("OUTER")
            if self.at_kw("JOIN"):
                self.advance()
                self.parse_table_primary()
                if natural:
                    continue
                if self.accept_kw("ON"):
                    self.parse_condition()
                elif self.accept_kw("USING"):
                    self.expect_op("(")
                    self.identifier()
                    while self.accept_op(","):
                        self.identifier()
                    self.expect_op(")")
                else:
                    raise SubsetViolation("JOIN requires ON or USING", self.tok())
                continue
            if join_kind is not None or natural:
                raise SubsetViolation("expected JOIN", self.tok())
            break

    def parse_table_primary(self) -> None:
        if self.at_op("("):
            self.advance()
            if self.at_kw("SELECT"):
                self.parse_query_expr()
                self.expect_op(")")
                self.accept_kw("AS")
                self.identifier("derived table alias")
                self.maybe_column_list()
            else:
                self.parse_table_reference()
                self.expect_op(")")
            return
        first = self.identifier("table name")
        parts = [first]
        while self.at_op("."):
            self.advance()
            parts.append(self.identifier())
        if len(parts) == 1:
            self.tables.add((None, parts[0]))
        elif len(parts) == 2:
            self.tables.add((parts[0], parts[1]))
        else:
            raise SubsetViolation("table name deeper than schema.table", self.tok())
        if self.accept_kw("AS"):
            self.identifier("correlation name")
            self.maybe_column_list()
        elif self.tok().kind in (TokKind.IDENT, TokKind.QIDENT) and not self.at_kw(
            "WHERE", "GROUP", "HAVING", "ORDER", "UNION", "INTERSECT", "EXCEPT", "ON",
            "JOIN", "INNER", "LEFT", "RIGHT", "FULL", "CROSS", "NATURAL", "USING",
        ):
            self.identifier("correlation name")
            self.maybe_column_list()

    def maybe_column_list(self) -> None:
        if self.at_op("("):
            self.advance()
            self.identifier()
            while self.accept_op(","):
                self.identifier()
            self.expect_op(")")

    def parse_sort_item(self) -> None:
        self.parse_value()
        self.accept_kw("ASC", "DESC")

    def expect_end(self) -> None:
        t = self.tok()
        if t.kind is TokKind.OP and t.value == ";":
            self.advance()
            t = self.tok()
        if t.kind is not TokKind.EOF:
            raise SubsetViolation("unexpected trailing tokens", t)
