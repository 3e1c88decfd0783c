"""Canonical text forms for typed values of the archival types.

The archive stores every non-LOB value as a character string; these
functions define the one canonical spelling per type so that archives are
byte-reproducible and reload comparisons can be done on typed values.
"""

from __future__ import annotations

import datetime as dt
from decimal import Context, Decimal, InvalidOperation

from dbarc.sqlcore.types import ArchivalType, TypeKind

STRING_KINDS = frozenset(
    {
        TypeKind.CHARACTER,
        TypeKind.CHARACTER_VARYING,
        TypeKind.NATIONAL_CHARACTER_VARYING,
        TypeKind.CLOB,
        TypeKind.NCLOB,
    }
)
EXACT_KINDS = frozenset({TypeKind.NUMERIC, TypeKind.DECIMAL})
INT_KINDS = frozenset({TypeKind.INTEGER, TypeKind.SMALLINT})
FLOAT_KINDS = frozenset({TypeKind.REAL, TypeKind.DOUBLE_PRECISION})


class ValueError_(ValueError):
    """A value does not fit its declared archival type."""


def render_value(value: object, atype: ArchivalType) -> str:
    """Canonical text for a non-NULL value of the given type."""
    if value is None:
        raise ValueError_("NULL has no text form; encode it at the item level")
    kind = atype.kind
    if kind in STRING_KINDS:
        if isinstance(value, str):
            return value
        raise ValueError_(f"expected a string for {kind.value}, got {type(value).__name__}")
    if kind is TypeKind.BLOB:
        if isinstance(value, (bytes, bytearray, memoryview)):
            return bytes(value).hex().upper()
        raise ValueError_(f"expected bytes for BLOB, got {type(value).__name__}")
    if kind in EXACT_KINDS:
        return _render_decimal(value, atype)
    if kind in INT_KINDS:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, str):
                try:
                    value = int(value, 10)
                except ValueError as exc:
                    raise ValueError_(f"not an integer: {value!r}") from exc
            else:
                raise ValueError_(f"expected an integer for {kind.value}")
        return str(value)
    if kind in FLOAT_KINDS:
        if isinstance(value, bool):
            raise ValueError_("expected a number for approximate numeric")
        if isinstance(value, str):
            value = float(value)
        if isinstance(value, int):
            value = float(value)
        if not isinstance(value, float):
            raise ValueError_(f"expected a number for {kind.value}")
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError_("non-finite values have no SQL text form")
        return repr(value)
    if kind is TypeKind.BOOLEAN:
        if isinstance(value, bool):
            return "TRUE" if value else "FALSE"
        if isinstance(value, int) and value in (0, 1):
            return "TRUE" if value else "FALSE"
        if isinstance(value, str) and value.upper() in ("TRUE", "FALSE"):
            return value.upper()
        raise ValueError_(f"not a boolean: {value!r}")
    if kind is TypeKind.DATE:
        if isinstance(value, dt.datetime):
            value = value.date()
        if isinstance(value, dt.date):
            return value.isoformat()
        if isinstance(value, str):
            return _parse_date(value).isoformat()
        raise ValueError_(f"not a date: {value!r}")
    if kind is TypeKind.TIME:
        if isinstance(value, str):
            value = _parse_time(value)
        if not isinstance(value, dt.time):
            raise ValueError_(f"not a time: {value!r}")
        return _render_time(value, atype.precision or 0)
    if kind is TypeKind.TIMESTAMP:
        if isinstance(value, str):
            value = _parse_timestamp(value)
        if not isinstance(value, dt.datetime):
            raise ValueError_(f"not a timestamp: {value!r}")
        digits = atype.precision if atype.precision is not None else 6
        text = value.date().isoformat() + " " + _render_time(value.time(), digits)
        return text
    raise ValueError_(f"unsupported kind {kind}")


def _render_decimal(value: object, atype: ArchivalType) -> str:
    if isinstance(value, bool):
        raise ValueError_("expected a number for exact numeric")
    try:
        if isinstance(value, Decimal):
            dec = value
        elif isinstance(value, int):
            dec = Decimal(value)
        elif isinstance(value, float):
            # Shortest-repr conversion; the source already lost exactness.
            dec = Decimal(repr(value))
        elif isinstance(value, str):
            dec = Decimal(value)
        else:
            raise ValueError_(f"expected a number for {atype.kind.value}")
    except InvalidOperation as exc:
        raise ValueError_(f"not a number: {value!r}") from exc
    if not dec.is_finite():
        raise ValueError_("non-finite values have no SQL text form")
    scale = atype.scale if atype.scale is not None else 0
    # Quantize under a context wide enough for any declared precision; the
    # default 28-digit context would round wide-but-legal values.
    tup = dec.as_tuple()
    ctx = Context(prec=len(tup.digits) + abs(tup.exponent) + scale + 2)
    try:
        quantized = dec.quantize(Decimal(1).scaleb(-scale), context=ctx)
    except InvalidOperation as exc:
        raise ValueError_(f"value {dec} does not fit scale {scale}") from exc
    if quantized != dec:
        raise ValueError_(f"value {dec} does not fit scale {scale}")
    if atype.precision is not None:
        digits = len(quantized.as_tuple().digits)
        # Leading zeros of a sub-one value do not count as digits.
        if quantized == 0:
            digits = 1
        if digits > atype.precision:
            raise ValueError_(
                f"value {dec} exceeds precision {atype.precision}"
            )
    text = format(quantized, "f")
    if text.startswith("-0") and quantized == 0:
        text = text[1:]
    return text


def _render_time(value: dt.time, digits: int) -> str:
    base = value.strftime("%H:%M:%S")
    if digits <= 0:
        return base
    frac = f"{value.microsecond:06d}"[:digits]
    return f"{base}.{frac}"


def _parse_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise ValueError_(f"not a date: {text!r}") from exc


def _pad_fraction(text: str) -> str:
    # Python 3.10 fromisoformat insists on exactly 3 or 6 fractional digits.
    head, dot, frac = text.partition(".")
    if dot and frac and len(frac) != 3 and len(frac) <= 6 and frac.isdigit():
        return f"{head}.{frac.ljust(6, '0')}"
    return text


def _parse_time(text: str) -> dt.time:
    try:
        return dt.time.fromisoformat(_pad_fraction(text.strip()))
    except ValueError as exc:
        raise ValueError_(f"not a time: {text!r}") from exc


def _parse_timestamp(text: str) -> dt.datetime:
    cleaned = text.strip()
    if " " in cleaned:
        cleaned = cleaned.replace(" ", "T", 1)
    try:
        return dt.datetime.fromisoformat(_pad_fraction(cleaned))
    except ValueError as exc:
        raise ValueError_(f"not a timestamp: {text!r}") from exc


def parse_value(text: str, atype: ArchivalType) -> object:
    """Typed value for a canonical (or tolerated) text form."""
    kind = atype.kind
    if kind in STRING_KINDS:
        return text
    if kind is TypeKind.BLOB:
        compact = "".join(text.split())
        try:
            return bytes.fromhex(compact)
        except ValueError as exc:
            raise ValueError_(f"not a hexadecimal dump: {text[:40]!r}") from exc
    if kind in EXACT_KINDS:
        try:
            return Decimal(text)
        except InvalidOperation as exc:
            raise ValueError_(f"not a number: {text!r}") from exc
    if kind in INT_KINDS:
        try:
            return int(text, 10)
        except ValueError as exc:
            raise ValueError_(f"not an integer: {text!r}") from exc
    if kind in FLOAT_KINDS:
        try:
            return float(text)
        except ValueError as exc:
            raise ValueError_(f"not a number: {text!r}") from exc
    if kind is TypeKind.BOOLEAN:
        up = text.strip().upper()
        if up == "TRUE":
            return True
        if up == "FALSE":
            return False
        raise ValueError_(f"not a boolean: {text!r}")
    if kind is TypeKind.DATE:
        return _parse_date(text)
    if kind is TypeKind.TIME:
        return _parse_time(text)
    if kind is TypeKind.TIMESTAMP:
        return _parse_timestamp(text)
    raise ValueError_(f"unsupported kind {kind}")


def values_equal(a: object, b: object, atype: ArchivalType) -> bool:
    """Typed equality: 1.50 equals 1.5 for NUMERIC, but not for strings."""
    if a is None or b is None:
        return a is None and b is None
    kind = atype.kind
    if kind in EXACT_KINDS or kind in INT_KINDS:
        return _as_decimal(a) == _as_decimal(b)
    if kind in FLOAT_KINDS:
        return float(a) == float(b)  # type: ignore[arg-type]
    if kind in STRING_KINDS or kind is TypeKind.BLOB:
        return a == b
    norm_a = render_value(a, atype)
    norm_b = render_value(b, atype)
    return norm_a == norm_b


def _as_decimal(value: object) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, int):
        return Decimal(value)
    if isinstance(value, float):
        return Decimal(repr(value))
    if isinstance(value, str):
        return Decimal(value)
    raise ValueError_(f"not a number: {value!r}")
