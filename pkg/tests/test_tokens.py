"""Lexer, statement splitter, and canonical respelling."""

import pytest
from hypothesis import given, strategies as st

from dbarc.sqlcore.tokens import (
    LexError,
    TokKind,
    normalize_sql,
    respell,
    split_statements,
    tokenize,
)


def kinds(text):
    return [(t.kind, t.value) for t in tokenize(text) if t.kind is not TokKind.EOF]


def test_identifiers_fold_to_upper():
    assert kinds("create Table foo") == [
        (TokKind.IDENT, "CREATE"), (TokKind.IDENT, "TABLE"), (TokKind.IDENT, "FOO"),
    ]


def test_quoted_identifier_preserved():
    assert kinds('"MiXed Case"') == [(TokKind.QIDENT, "MiXed Case")]
    assert kinds('"a""b"') == [(TokKind.QIDENT, 'a"b')]


def test_vendor_quoting_lexes_as_vident():
    assert kinds("`back tick`") == [(TokKind.VIDENT, "back tick")]
    assert kinds("[square]") == [(TokKind.VIDENT, "square")]


def test_string_literals_with_doubled_quote():
    assert kinds("'it''s'") == [(TokKind.STRING, "it's")]
    assert kinds("''") == [(TokKind.STRING, "")]


def test_unterminated_string_reports_position():
    with pytest.raises(LexError) as err:
        tokenize("SELECT 'oops")
    assert err.value.line == 1
    assert err.value.col == 8


def test_numbers():
    # Numeric text is canonicalized to upper case (exponent marker included).
    vals = [v for _, v in kinds("1 2.5 .5 1e10 3.14E-2")]
    assert vals == ["1", "2.5", ".5", "1E10", "3.14E-2"]


def test_two_char_operators():
    ops = [v for _, v in kinds("<= >= <> != ||")]
    assert ops == ["<=", ">=", "<>", "!=", "||"]


def test_comments_are_skipped():
    assert kinds("a -- comment\nb /* block\nstill */ c") == [
        (TokKind.IDENT, "A"), (TokKind.IDENT, "B"), (TokKind.IDENT, "C"),
    ]


def test_line_and_column_tracking():
    toks = tokenize("ab\n  cd")
    assert (toks[0].line, toks[0].col) == (1, 1)
    assert (toks[1].line, toks[1].col) == (2, 3)


def test_split_statements_basic():
    parts = split_statements("CREATE TABLE a (x INTEGER); CREATE TABLE b (y INTEGER);")
    assert len(parts) == 2
    assert parts[0].text.startswith("CREATE TABLE a")
    assert parts[1].text.startswith("CREATE TABLE b")


def test_split_ignores_semicolons_in_literals_and_comments():
    text = "INSERT INTO t VALUES ('a;b'); -- c;d\nSELECT 1;"
    parts = split_statements(text)
    assert len(parts) == 2
    assert "a;b" in parts[0].text


def test_split_records_statement_positions():
    parts = split_statements("SELECT 1;\n\n  SELECT 2;")
    assert parts[0].line == 1
    assert parts[1].line == 3
    assert parts[1].col == 3


def test_respell_canonical_spacing():
    assert normalize_sql("select  a,b   from t where(a>1)") == (
        "SELECT A, B FROM T WHERE (A > 1)"
    )


def test_respell_function_call_tightness():
    assert normalize_sql("count ( * )") == "COUNT(*)"
    assert normalize_sql("upper( name )") == "UPPER(NAME)"


def test_respell_preserves_quoted_identifiers():
    assert normalize_sql('select "MiXed" from t') == 'SELECT "MiXed" FROM T'


def test_respell_converts_vendor_quotes():
    assert normalize_sql("select `a b` from t") == 'SELECT "a b" FROM T'


def test_respell_qualified_names():
    assert normalize_sql("select s . t . c from s . t") == "SELECT S.T.C FROM S.T"


def test_respell_string_literal_escaping():
    assert normalize_sql("select 'it''s'") == "SELECT 'it''s'"


@given(st.sampled_from([
    "SELECT A, B FROM S.T WHERE A > 1 AND B <= 'x''y'",
    "CREATE TABLE T (ID INTEGER NOT NULL, NAME CHARACTER VARYING(40))",
    "SELECT COUNT(*) FROM T GROUP BY A HAVING COUNT(*) > 2",
    'SELECT "Mixed Case", C FROM T',
    "SELECT A || '-' || B FROM T",
    "SELECT -1.5E2, .5, 0.25 FROM T",
]))
def test_respell_is_idempotent(text):
    once = normalize_sql(text)
    assert normalize_sql(once) == once


@given(st.text(alphabet="abcXYZ09_ ',;()<>=|.*-/\n\t", max_size=80))
def test_respell_idempotent_on_lexable_soup(text):
    try:
        once = normalize_sql(text)
    except LexError:
        return
    assert normalize_sql(once) == once
