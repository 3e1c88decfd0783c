"""Canonical DDL rendering for the archival subset.

Emits deterministic, dependency-ordered statements.  A model that still
contains unresolved native types or non-standard source must be mapped or
pruned before it can be rendered; that is reported as a RenderError listing
every offender, not just the first.
"""

from __future__ import annotations

from dbarc.sqlcore.model import (
    ColumnDef,
    ConstraintDef,
    ConstraintKind,
    DatabaseModel,
    PrivilegeDef,
    SchemaDef,
    TableDef,
    ViewDef,
    make_ref,
    qualified_name,
    render_identifier,
)


class RenderError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__(
            "model is not renderable:\n" + "\n".join(f"  - {p}" for p in problems)
        )
        self.problems = problems


def check_renderable(model: DatabaseModel) -> list[str]:
    """Everything that would block a faithful subset-only rendering."""
    problems: list[str] = []
    for s in model.schemas:
        for t in s.tables:
            for col in t.columns:
                if not col.resolved:
                    ref = make_ref("column", s.name, t.name, col.name)
                    problems.append(f"{ref}: unresolved native type {col.type_text()}")
            for con in t.constraints:
                if con.kind == ConstraintKind.CHECK and not con.check_standard:
                    ref = make_ref("constraint", s.name, t.name, con.name)
                    problems.append(f"{ref}: non-standard check expression")
        for v in s.views:
            if not v.standard or not v.query:
                ref = make_ref("view", s.name, v.name)
                problems.append(f"{ref}: non-standard view source")
        for tr in s.triggers:
            problems.append(f"{make_ref('trigger', s.name, tr.name)}: native trigger source")
        for r in s.routines:
            problems.append(f"{make_ref('routine', s.name, r.name)}: native routine source")
    for nobj in model.native_objects:
        problems.append(
            f"{make_ref('native', nobj.kind_guess, nobj.name)}: native statement preserved verbatim"
        )
    return problems


def render_ddl(model: DatabaseModel) -> str:
    """Render the model as canonical, dependency-ordered DDL.

    Users, roles and synonyms have no subset DDL; they live in the archive
    description instead and are skipped here.
    """
    problems = check_renderable(model)
    if problems:
        raise RenderError(problems)
    statements: list[str] = []
    for schema in sorted(model.schemas, key=lambda s: s.name):
        statements.append(render_schema(schema))
    tables, deferred = order_tables(model)
    for schema_name, table, skip in tables:
        statements.append(render_table(schema_name, table, skip))
    for schema_name, table, con in deferred:
        statements.append(render_alter_constraint(schema_name, table, con))
    for schema_name, view in order_views(model):
        statements.append(render_view(schema_name, view))
    for priv in sorted(model.privileges, key=privilege_key):
        statements.append(render_grant(priv))
    if not statements:
        return ""
    return "\n\n".join(statements) + "\n"


def render_schema(schema: SchemaDef) -> str:
    text = f"CREATE SCHEMA {render_identifier(schema.name)}"
    if schema.owner:
        text += f" AUTHORIZATION {render_identifier(schema.owner)}"
    return text + ";"


def order_tables(model: DatabaseModel):
    """Topological order by FK target; cycles fall back to deferred ALTERs."""
    nodes: dict[tuple[str, str], TableDef] = {}
    for s in model.schemas:
        for t in s.tables:
            nodes[(s.name, t.name)] = t
    emitted: list[tuple[str, TableDef, set[str]]] = []
    done: set[tuple[str, str]] = set()
    deferred: list[tuple[str, TableDef, ConstraintDef]] = []
    remaining = sorted(nodes, key=lambda k: k)
    while remaining:
        progress = False
        for key in list(remaining):
            table = nodes[key]
            blocked = _blocking_targets(key, table, nodes, done)
            if not blocked:
                emitted.append((key[0], table, set()))
                done.add(key)
                remaining.remove(key)
                progress = True
        if progress:
            continue
        # Constraint cycle: emit the first remaining table without the
        # blocking foreign keys and add them back afterwards.
        key = remaining.pop(0)
        table = nodes[key]
        skip: set[str] = set()
        for con in table.constraints:
            if con.kind != ConstraintKind.FOREIGN_KEY:
                continue
            target = (con.ref_schema or key[0], con.ref_table or "")
            if target != key and target in nodes and target not in done:
                skip.add(con.name)
                deferred.append((key[0], table, con))
        emitted.append((key[0], table, skip))
        done.add(key)
    return emitted, deferred


def _blocking_targets(key, table: TableDef, nodes, done) -> list[tuple[str, str]]:
    blocked = []
    for con in table.constraints:
        if con.kind != ConstraintKind.FOREIGN_KEY:
            continue
        target = (con.ref_schema or key[0], con.ref_table or "")
        if target == key or target not in nodes:
            continue
        if target not in done:
            blocked.append(target)
    return blocked


def order_views(model: DatabaseModel):
    """Views after tables, and after any view they select from."""
    nodes: dict[tuple[str, str], ViewDef] = {}
    home: dict[tuple[str, str], str] = {}
    for s in model.schemas:
        for v in s.views:
            nodes[(s.name, v.name)] = v
            home[(s.name, v.name)] = s.name
    done: set[tuple[str, str]] = set()
    out: list[tuple[str, ViewDef]] = []
    remaining = sorted(nodes, key=lambda k: k)
    while remaining:
        progress = False
        for key in list(remaining):
            view = nodes[key]
            blocked = False
            for dep_schema, dep_name in view.referenced_tables:
                dep = (dep_schema or key[0], dep_name)
                if dep in nodes and dep not in done and dep != key:
                    blocked = True
                    break
            if not blocked:
                out.append((key[0], view))
                done.add(key)
                remaining.remove(key)
                progress = True
        if not progress:
            # Mutually recursive view texts cannot be ordered; emit by name.
            key = remaining.pop(0)
            out.append((key[0], nodes[key]))
            done.add(key)
    return out


def render_column(col: ColumnDef) -> str:
    parts = [render_identifier(col.name), col.type_text()]
    if col.default is not None:
        parts.append(f"DEFAULT {col.default}")
    if not col.nullable:
        parts.append("NOT NULL")
    return " ".join(parts)


def render_constraint(con: ConstraintDef) -> str:
    head = f"CONSTRAINT {render_identifier(con.name)}"
    cols = ", ".join(render_identifier(c) for c in con.columns)
    if con.kind == ConstraintKind.PRIMARY_KEY:
        return f"{head} PRIMARY KEY ({cols})"
    if con.kind == ConstraintKind.UNIQUE:
        return f"{head} UNIQUE ({cols})"
    if con.kind == ConstraintKind.FOREIGN_KEY:
        target = qualified_name(con.ref_schema, con.ref_table or "")
        text = f"{head} FOREIGN KEY ({cols}) REFERENCES {target}"
        if con.ref_columns:
            text += " (" + ", ".join(render_identifier(c) for c in con.ref_columns) + ")"
        if con.on_delete:
            text += f" ON DELETE {con.on_delete}"
        if con.on_update:
            text += f" ON UPDATE {con.on_update}"
        return text
    if con.kind == ConstraintKind.CHECK:
        return f"{head} CHECK ({con.check_source})"
    raise RenderError([f"unknown constraint kind {con.kind}"])


def constraint_order(con: ConstraintDef) -> int:
    return {
        ConstraintKind.PRIMARY_KEY: 0,
        ConstraintKind.FOREIGN_KEY: 1,
        ConstraintKind.UNIQUE: 2,
        ConstraintKind.CHECK: 3,
    }[con.kind]


def render_table(schema_name: str, table: TableDef, skip: set[str]) -> str:
    lines = [f"CREATE TABLE {qualified_name(schema_name, table.name)} ("]
    entries = [render_column(col) for col in table.columns]
    cons = [c for c in table.constraints if c.name not in skip]
    cons.sort(key=constraint_order)
    entries.extend(render_constraint(c) for c in cons)
    lines.extend(
        f"  {entry}," if i < len(entries) - 1 else f"  {entry}"
        for i, entry in enumerate(entries)
    )
    lines.append(");")
    return "\n".join(lines)


def render_alter_constraint(schema_name: str, table: TableDef, con: ConstraintDef) -> str:
    return (
        f"ALTER TABLE {qualified_name(schema_name, table.name)} "
        f"ADD {render_constraint(con)};"
    )


def render_view(schema_name: str, view: ViewDef) -> str:
    head = f"CREATE VIEW {qualified_name(schema_name, view.name)}"
    if view.columns:
        head += " (" + ", ".join(render_identifier(c) for c in view.columns) + ")"
    return f"{head} AS {view.query};"


def privilege_key(priv: PrivilegeDef) -> tuple:
    return (priv.on_schema, priv.on_object, priv.grantee, priv.privilege)


def render_grant(priv: PrivilegeDef) -> str:
    if not priv.on_object:
        text = f"GRANT {priv.privilege} TO {render_identifier(priv.grantee)}"
        if priv.grantable:
            text += " WITH ADMIN OPTION"
        return text + ";"
    target = qualified_name(priv.on_schema or None, priv.on_object)
    grantee = priv.grantee if priv.grantee == "PUBLIC" else render_identifier(priv.grantee)
    text = f"GRANT {priv.privilege} ON {target} TO {grantee}"
    if priv.grantable:
        text += " WITH GRANT OPTION"
    return text + ";"
