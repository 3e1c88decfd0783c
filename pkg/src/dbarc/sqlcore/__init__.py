"""Archival-SQL core: lexer, DDL/query parser, conformance flagger, renderer.

The subset accepted here ("archival SQL") is pinned normatively in
docs/sql-subset.md.  Everything else in the package is built on top of the
guarantee that whatever this module accepts as conforming can be rendered
back out canonically and re-parsed to a structurally equal model.
"""

from dbarc.sqlcore.types import ArchivalType, NativeTypeRef, TypeKind
from dbarc.sqlcore.model import (
    ColumnDef,
    ConstraintDef,
    ConstraintKind,
    DatabaseModel,
    DbLinkDef,
    ObjectRef,
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
from dbarc.sqlcore.flagger import FlagItem, FlagReport, Verdict, validate_query, validate_statement
from dbarc.sqlcore.parser import ParsedDdl, ParseIssue, parse_ddl
from dbarc.sqlcore.render import RenderError, render_ddl

__all__ = [
    "ArchivalType",
    "ColumnDef",
    "ConstraintDef",
    "ConstraintKind",
    "DatabaseModel",
    "DbLinkDef",
    "FlagItem",
    "FlagReport",
    "NativeTypeRef",
    "ObjectRef",
    "ParsedDdl",
    "ParseIssue",
    "PrivilegeDef",
    "RenderError",
    "RoleDef",
    "RoutineDef",
    "SchemaDef",
    "SourceDescriptor",
    "SynonymDef",
    "TableDef",
    "TriggerDef",
    "TypeKind",
    "UserDef",
    "Verdict",
    "ViewDef",
    "parse_ddl",
    "render_ddl",
    "validate_query",
    "validate_statement",
]
