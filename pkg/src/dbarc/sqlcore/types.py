"""The archival type system.

Sixteen SQL:1999 kinds form the closed target set every archived column must
land in.  Anything else travels as a :class:`NativeTypeRef` until the dialect
layer resolves it (or the user excludes the column).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class TypeKind(Enum):
    CHARACTER = "CHARACTER"
    CHARACTER_VARYING = "CHARACTER VARYING"
    NATIONAL_CHARACTER_VARYING = "NATIONAL CHARACTER VARYING"
    CLOB = "CLOB"
    NCLOB = "NCLOB"
    BLOB = "BLOB"
    NUMERIC = "NUMERIC"
    DECIMAL = "DECIMAL"
    INTEGER = "INTEGER"
    SMALLINT = "SMALLINT"
    REAL = "REAL"
    DOUBLE_PRECISION = "DOUBLE PRECISION"
    BOOLEAN = "BOOLEAN"
    DATE = "DATE"
    TIME = "TIME"
    TIMESTAMP = "TIMESTAMP"


# Kinds that carry a character length.
LENGTH_KINDS = frozenset(
    {TypeKind.CHARACTER, TypeKind.CHARACTER_VARYING, TypeKind.NATIONAL_CHARACTER_VARYING}
)
# Kinds that carry (precision[, scale]).
EXACT_NUMERIC_KINDS = frozenset({TypeKind.NUMERIC, TypeKind.DECIMAL})
# Kinds that carry a fractional-seconds precision.
FRACTIONAL_TIME_KINDS = frozenset({TypeKind.TIME, TypeKind.TIMESTAMP})

LOB_KINDS = frozenset({TypeKind.CLOB, TypeKind.NCLOB, TypeKind.BLOB})


class TypeError_(ValueError):
    """Raised for an ill-formed archival type (bad parameters)."""


@dataclass(frozen=True)
class ArchivalType:
    """A fully resolved type inside the archival subset.

    length counts characters; precision counts decimal digits for exact
    numerics and fractional-second digits for TIME/TIMESTAMP.
    """

    kind: TypeKind
    length: int | None = None
    precision: int | None = None
    scale: int | None = None

    def __post_init__(self) -> None:
        k = self.kind
        if self.length is not None:
            if k not in LENGTH_KINDS:
                raise TypeError_(f"{k.value} takes no length")
            if self.length < 1:
                raise TypeError_("length must be positive")
        if k in LENGTH_KINDS and self.length is None:
            # CHARACTER defaults to length 1; the varying kinds require one.
            if k is TypeKind.CHARACTER:
                object.__setattr__(self, "length", 1)
            else:
                raise TypeError_(f"{k.value} requires a length")
        if self.precision is not None:
            if k not in EXACT_NUMERIC_KINDS and k not in FRACTIONAL_TIME_KINDS:
                raise TypeError_(f"{k.value} takes no precision")
            if k in EXACT_NUMERIC_KINDS and self.precision < 1:
                raise TypeError_("precision must be positive")
            if k in FRACTIONAL_TIME_KINDS and self.precision < 0:
                raise TypeError_("fractional-seconds precision must be non-negative")
        if self.scale is not None:
            if k not in EXACT_NUMERIC_KINDS:
                raise TypeError_(f"{k.value} takes no scale")
            if self.scale < 0:
                raise TypeError_("scale must be non-negative")
            if self.precision is None:
                raise TypeError_("scale requires a precision")
            if self.scale > self.precision:
                raise TypeError_("scale must not exceed precision")
        # NUMERIC(p) and NUMERIC(p, 0) are the same type; keep one spelling.
        if k in EXACT_NUMERIC_KINDS and self.precision is not None and self.scale is None:
            object.__setattr__(self, "scale", 0)

    def render(self) -> str:
        """Canonical SQL spelling of this type."""
        name = self.kind.value
        if self.kind in LENGTH_KINDS:
            return f"{name}({self.length})"
        if self.kind in EXACT_NUMERIC_KINDS:
            if self.precision is None:
                return name
            if self.scale:
                return f"{name}({self.precision},{self.scale})"
            return f"{name}({self.precision})"
        if self.kind in FRACTIONAL_TIME_KINDS and self.precision is not None:
            return f"{name}({self.precision})"
        return name

    @property
    def is_lob(self) -> bool:
        return self.kind in LOB_KINDS


@dataclass(frozen=True)
class NativeTypeRef:
    """A type name the archival grammar does not know.

    Preserved verbatim so excluded columns stay fully documented and so a
    synonym rule can resolve the name later.  ``args`` keeps any parenthesized
    parameters as written (ints where they lex as plain integers).
    """

    name: str
    args: tuple[object, ...] = ()
    raw_text: str = ""

    def render(self) -> str:
        if self.raw_text:
            return self.raw_text
        if self.args:
            return f"{self.name}({','.join(str(a) for a in self.args)})"
        return self.name

    def int_args(self) -> tuple[int, ...]:
        """The numeric parameters, skipping any non-numeric ones."""
        return tuple(a for a in self.args if isinstance(a, int))


ColumnType = ArchivalType | NativeTypeRef


# Canonical spellings: resolving one of these is outcome STANDARD.
CANONICAL_NAMES: dict[str, TypeKind] = {kind.value: kind for kind in TypeKind}

# Standard alias spellings from the SQL:1999 grammar itself.  These are part
# of the conforming subset (the flagger accepts them) but resolve through the
# generic mode's identity table, not as STANDARD.
STANDARD_ALIASES: dict[str, TypeKind] = {
    "CHAR": TypeKind.CHARACTER,
    "CHAR VARYING": TypeKind.CHARACTER_VARYING,
    "VARCHAR": TypeKind.CHARACTER_VARYING,
    "NCHAR VARYING": TypeKind.NATIONAL_CHARACTER_VARYING,
    "NATIONAL CHAR VARYING": TypeKind.NATIONAL_CHARACTER_VARYING,
    "CHARACTER LARGE OBJECT": TypeKind.CLOB,
    "CHAR LARGE OBJECT": TypeKind.CLOB,
    "NATIONAL CHARACTER LARGE OBJECT": TypeKind.NCLOB,
    "NCHAR LARGE OBJECT": TypeKind.NCLOB,
    "BINARY LARGE OBJECT": TypeKind.BLOB,
    "DEC": TypeKind.DECIMAL,
    "INT": TypeKind.INTEGER,
}

# Every multi-token spelling above, longest first, for greedy matching.
_MULTIWORD_SPELLINGS: list[tuple[tuple[str, ...], TypeKind]] = sorted(
    (
        (tuple(name.split()), kind)
        for name, kind in {**CANONICAL_NAMES, **STANDARD_ALIASES}.items()
    ),
    key=lambda item: -len(item[0]),
)

SUBSET_TYPE_NAMES = frozenset(CANONICAL_NAMES) | frozenset(STANDARD_ALIASES)


def match_subset_type_name(words: list[str]) -> tuple[TypeKind, int] | None:
    """Greedily match a subset type spelling at the head of ``words``.

    Returns (kind, token count) or None.  ``words`` must be upper-cased.
    """
    for spelling, kind in _MULTIWORD_SPELLINGS:
        n = len(spelling)
        if len(words) >= n and tuple(words[:n]) == spelling:
            return kind, n
    return None


def make_archival(kind: TypeKind, args: tuple[int, ...]) -> ArchivalType:
    """Build an ArchivalType from a subset spelling plus its parameters."""
    if kind in LENGTH_KINDS:
        if len(args) > 1:
            raise TypeError_(f"{kind.value} takes at most one parameter")
        return ArchivalType(kind, length=args[0] if args else None)
    if kind in EXACT_NUMERIC_KINDS:
        if len(args) > 2:
            raise TypeError_(f"{kind.value} takes at most two parameters")
        precision = args[0] if args else None
        scale = args[1] if len(args) > 1 else None
        return ArchivalType(kind, precision=precision, scale=scale)
    if kind in FRACTIONAL_TIME_KINDS:
        if len(args) > 1:
            raise TypeError_(f"{kind.value} takes at most one parameter")
        return ArchivalType(kind, precision=args[0] if args else None)
    if args:
        raise TypeError_(f"{kind.value} takes no parameters")
    return ArchivalType(kind)
