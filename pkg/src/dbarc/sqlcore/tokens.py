"""SQL lexer, statement splitter, and canonical token respelling.

The lexer is shared by the strict subset parser and the lenient ingestion
path.  Vendor quoting styles (backticks, square brackets) are tokenized so
that ingestion can still read a model out of foreign DDL; the flagger reports
them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class TokKind(Enum):
    IDENT = "ident"          # unquoted, value case-folded to upper
    QIDENT = "qident"        # "..." delimited, value exact
    VIDENT = "vident"        # `...` or [...] vendor quoting
    STRING = "string"        # '...' literal, value without quotes
    NUMBER = "number"
    OP = "op"
    EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: TokKind
    value: str
    line: int
    col: int

    def is_kw(self, *words: str) -> bool:
        return self.kind is TokKind.IDENT and self.value in words


class LexError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


_TWO_CHAR_OPS = ("<=", ">=", "<>", "!=", "||")
_ONE_CHAR_OPS = "(),;.=<>+-*/%"


def tokenize(text: str, *, start_line: int = 1, start_col: int = 1) -> list[Token]:
    """Lex ``text`` into tokens; raises LexError on unterminated literals."""
    tokens: list[Token] = []
    i, n = 0, len(text)
    line, col = start_line, start_col

    def advance(count: int) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if ch == "-" and text.startswith("--", i):
            end = text.find("\n", i)
            advance((end - i) if end != -1 else (n - i))
            continue
        if ch == "/" and text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end == -1:
                raise LexError("unterminated comment", line, col)
            advance(end + 2 - i)
            continue
        tline, tcol = line, col
        if ch == "'":
            j = i + 1
            buf: list[str] = []
            while True:
                if j >= n:
                    raise LexError("unterminated string literal", tline, tcol)
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        buf.append("'")
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(Token(TokKind.STRING, "".join(buf), tline, tcol))
            advance(j + 1 - i)
            continue
        if ch == '"':
            j = i + 1
            buf = []
            while True:
                if j >= n:
                    raise LexError("unterminated quoted identifier", tline, tcol)
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            tokens.append(Token(TokKind.QIDENT, "".join(buf), tline, tcol))
            advance(j + 1 - i)
            continue
        if ch == "`":
            j = text.find("`", i + 1)
            if j == -1:
                raise LexError("unterminated backtick identifier", tline, tcol)
            tokens.append(Token(TokKind.VIDENT, text[i + 1 : j], tline, tcol))
            advance(j + 1 - i)
            continue
        if ch == "[":
            j = text.find("]", i + 1)
            if j == -1:
                raise LexError("unterminated bracket identifier", tline, tcol)
            tokens.append(Token(TokKind.VIDENT, text[i + 1 : j], tline, tcol))
            advance(j + 1 - i)
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # Two dots ("1..2") never occur in the subset; stop early.
                    if j + 1 < n and text[j + 1] == ".":
                        break
                    seen_dot = True
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            value = text[i:j].upper()
            tokens.append(Token(TokKind.NUMBER, value, tline, tcol))
            advance(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_$#"):
                j += 1
            tokens.append(Token(TokKind.IDENT, text[i:j].upper(), tline, tcol))
            advance(j - i)
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR_OPS:
            # != is the vendor spelling of <>; keep it distinct for flagging.
            tokens.append(Token(TokKind.OP, two, tline, tcol))
            advance(2)
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token(TokKind.OP, ch, tline, tcol))
            advance(1)
            continue
        raise LexError(f"unexpected character {ch!r}", tline, tcol)
    tokens.append(Token(TokKind.EOF, "", line, col))
    return tokens


@dataclass(frozen=True)
class RawStatement:
    text: str
    line: int
    col: int


def split_statements(text: str) -> list[RawStatement]:
    """Split a script at top-level semicolons, respecting literals/comments.

    Unterminated literals swallow text up to the next semicolon so that one
    bad statement cannot hide the rest of the script.
    """
    out: list[RawStatement] = []
    i, n = 0, len(text)
    line, col = 1, 1
    start = 0
    start_line, start_col = line, col

    def bump(ch: str) -> None:
        nonlocal line, col
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1

    def skip_until(idx: int, closer: str, allow_double: bool = False) -> int:
        j = idx
        while j < n:
            if text[j] == closer:
                if allow_double and j + 1 < n and text[j + 1] == closer:
                    j += 2
                    continue
                return j + 1
            j += 1
        return j

    while i < n:
        ch = text[i]
        if ch == "-" and text.startswith("--", i):
            end = text.find("\n", i)
            end = n if end == -1 else end
            while i < end:
                bump(text[i])
                i += 1
            continue
        if ch == "/" and text.startswith("/*", i):
            end = text.find("*/", i + 2)
            end = n if end == -1 else end + 2
            while i < end:
                bump(text[i])
                i += 1
            continue
        if ch in "'\"":
            end = skip_until(i + 1, ch, allow_double=True)
            while i < end:
                bump(text[i])
                i += 1
            continue
        if ch in "`[":
            end = skip_until(i + 1, "`" if ch == "`" else "]")
            while i < end:
                bump(text[i])
                i += 1
            continue
        if ch == ";":
            stmt = text[start:i]
            if stmt.strip():
                out.append(RawStatement(stmt.strip(), start_line, start_col))
            bump(ch)
            i += 1
            start = i
            start_line, start_col = line, col
            continue
        if start == i and ch in " \t\r\n":
            bump(ch)
            i += 1
            start = i
            start_line, start_col = line, col
            continue
        bump(ch)
        i += 1
    tail = text[start:]
    if tail.strip():
        out.append(RawStatement(tail.strip(), start_line, start_col))
    return out


# Function-style names that glue to their opening parenthesis when respelled.
_TIGHT_PAREN_NAMES = frozenset(
    {
        "ABS", "AVG", "CAST", "CHAR_LENGTH", "CHARACTER_LENGTH", "COALESCE",
        "COUNT", "EXTRACT", "LOWER", "MAX", "MIN", "MOD", "NULLIF",
        "OCTET_LENGTH", "POSITION", "SUBSTRING", "SUM", "TRIM", "UPPER",
        "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP",
    }
)


def respell(tokens: list[Token]) -> str:
    """Deterministic canonical spelling of a token stream.

    Keywords and unquoted identifiers come out upper-case, literals exactly
    as lexed, with fixed spacing.  respell(tokenize(respell(x))) == respell(x).
    """
    named = (TokKind.IDENT, TokKind.QIDENT, TokKind.VIDENT)
    toks = [t for t in tokens if t.kind is not TokKind.EOF]
    parts: list[str] = []
    for i, tok in enumerate(toks):
        if tok.kind is TokKind.STRING:
            text = "'" + tok.value.replace("'", "''") + "'"
        elif tok.kind in (TokKind.QIDENT, TokKind.VIDENT):
            text = '"' + tok.value.replace('"', '""') + '"'
        else:
            text = tok.value
        if i == 0:
            parts.append(text)
            continue
        prev = toks[i - 1]
        before = toks[i - 2] if i >= 2 else None
        joiner = " "
        if tok.kind is TokKind.OP and tok.value in {",", ";", ")"}:
            joiner = ""
        elif tok.kind is TokKind.OP and tok.value == "." and prev.kind in named:
            # Dots glue only inside name chains; elsewhere they stay spaced
            # so a following number cannot fuse into a new literal.
            joiner = ""
        elif prev.kind is TokKind.OP and prev.value == "(":
            joiner = ""
        elif (
            prev.kind is TokKind.OP
            and prev.value == "."
            and before is not None
            and before.kind in named
            and (tok.kind in named or (tok.kind is TokKind.OP and tok.value == "*"))
        ):
            joiner = ""
        elif (
            tok.kind is TokKind.OP
            and tok.value == "("
            and prev.kind is TokKind.IDENT
            and prev.value in _TIGHT_PAREN_NAMES
        ):
            joiner = ""
        parts.append(joiner + text)
    return "".join(parts)


def normalize_sql(text: str) -> str:
    """Canonical respelling of a single statement (no trailing semicolon)."""
    toks = tokenize(text)
    while toks and toks[-1].kind is TokKind.EOF:
        toks = toks[:-1]
    while toks and toks[-1].kind is TokKind.OP and toks[-1].value == ";":
        toks = toks[:-1]
    return respell(toks + [Token(TokKind.EOF, "", 0, 0)])
