"""DDL parsing: model construction, recovery, and name synthesis."""

import pytest

from dbarc.sqlcore.model import DEFAULT_SCHEMA, ConstraintKind
from dbarc.sqlcore.parser import parse_ddl, parse_statement_text
from dbarc.sqlcore.types import ArchivalType, NativeTypeRef, TypeKind


def only_table(parsed, name="T"):
    for s in parsed.model.schemas:
        t = s.table(name)
        if t is not None:
            return t
    raise AssertionError(f"table {name} not found")


class TestCreateTable:
    def test_columns_and_types(self):
        p = parse_ddl(
            "CREATE TABLE T (ID INTEGER, NAME CHARACTER VARYING(40) NOT NULL,"
            " PRICE NUMERIC(10,2));"
        )
        assert not p.errors
        t = only_table(p)
        assert [c.name for c in t.columns] == ["ID", "NAME", "PRICE"]
        assert t.column("ID").col_type == ArchivalType(TypeKind.INTEGER)
        assert t.column("NAME").col_type == ArchivalType(
            TypeKind.CHARACTER_VARYING, length=40
        )
        assert t.column("NAME").nullable is False
        assert t.column("PRICE").col_type == ArchivalType(
            TypeKind.NUMERIC, precision=10, scale=2
        )

    def test_unqualified_table_lands_in_default_schema(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER);")
        assert p.model.schema(DEFAULT_SCHEMA).table("T") is not None

    def test_qualified_table_materializes_schema(self):
        p = parse_ddl("CREATE TABLE WAREHOUSE.BOXES (A INTEGER);")
        schema = p.model.schema("WAREHOUSE")
        assert schema is not None
        assert schema.implicit is True
        assert schema.table("BOXES") is not None

    def test_explicit_schema_with_owner(self):
        p = parse_ddl("CREATE SCHEMA S1 AUTHORIZATION CURATOR;")
        s = p.model.schema("S1")
        assert s.owner == "CURATOR"
        assert s.implicit is False

    def test_implicit_schema_upgraded_by_later_create(self):
        p = parse_ddl("CREATE TABLE S1.T (A INTEGER);\nCREATE SCHEMA S1;")
        assert not p.errors
        s = p.model.schema("S1")
        assert s.implicit is False
        assert s.table("T") is not None

    def test_quoted_identifiers_preserve_case(self):
        p = parse_ddl('CREATE TABLE T ("Amount Due" NUMERIC(8,2));')
        assert only_table(p).column("Amount Due") is not None

    def test_default_text_is_canonicalized(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER DEFAULT    5, B CHARACTER(3) DEFAULT 'ab');"
        )
        t = only_table(p)
        assert t.column("A").default == "5"
        assert t.column("B").default == "'ab'"

    def test_duplicate_table_is_an_error(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER);\nCREATE TABLE T (B INTEGER);")
        assert len(p.errors) == 1
        assert "T" in p.errors[0].message

    def test_duplicate_column_preserved_as_native(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER, A INTEGER);")
        assert len(p.errors) == 1
        assert "duplicate column" in p.errors[0].message
        # The statement is never dropped: it survives verbatim.
        assert len(p.model.native_objects) == 1
        assert "A INTEGER, A INTEGER" in p.model.native_objects[0].source_text


class TestUnknownTypes:
    def test_unknown_type_becomes_native_ref(self):
        p = parse_ddl("CREATE TABLE T (C MY_TYPE);")
        assert not p.errors
        col = only_table(p).column("C")
        assert isinstance(col.col_type, NativeTypeRef)
        assert col.col_type.name == "MY_TYPE"
        assert not col.resolved

    def test_unknown_type_keeps_args(self):
        p = parse_ddl("CREATE TABLE T (C VARCHAR2(80));")
        col = only_table(p).column("C")
        assert isinstance(col.col_type, NativeTypeRef)
        assert col.col_type.int_args() == (80,)

    def test_known_type_with_bad_args_stays_native(self):
        p = parse_ddl("CREATE TABLE T (C INT(11));")
        col = only_table(p).column("C")
        assert isinstance(col.col_type, NativeTypeRef)
        # The matched subset spelling is retained for later mode lookups.
        assert col.col_type.name == "INT"


class TestConstraints:
    def test_synthesized_names(self):
        p = parse_ddl(
            "CREATE TABLE ORDERS ("
            " ID INTEGER, WHO INTEGER, NOTE CHARACTER(4),"
            " PRIMARY KEY (ID),"
            " FOREIGN KEY (WHO) REFERENCES ORDERS (ID),"
            " UNIQUE (NOTE),"
            " CHECK (ID > 0));"
        )
        t = only_table(p, "ORDERS")
        names = sorted(c.name for c in t.constraints)
        assert names == ["ORDERS_CK_1", "ORDERS_FK_1", "ORDERS_PK", "ORDERS_UQ_1"]

    def test_synthesized_name_skips_collisions(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER, B INTEGER,"
            " CONSTRAINT T_UQ_1 UNIQUE (A),"
            " UNIQUE (B));"
        )
        t = only_table(p)
        names = {c.name for c in t.constraints}
        assert names == {"T_UQ_1", "T_UQ_2"}

    def test_pk_columns_become_not_null(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER, B INTEGER, PRIMARY KEY (A, B));")
        t = only_table(p)
        assert t.column("A").nullable is False
        assert t.column("B").nullable is False

    def test_inline_column_constraints(self):
        p = parse_ddl(
            "CREATE TABLE T ("
            " A INTEGER PRIMARY KEY,"
            " B INTEGER UNIQUE,"
            " C INTEGER REFERENCES T (A),"
            " D INTEGER CHECK (D > 0));"
        )
        t = only_table(p)
        kinds = sorted(c.kind for c in t.constraints)
        assert kinds == [
            ConstraintKind.CHECK,
            ConstraintKind.FOREIGN_KEY,
            ConstraintKind.PRIMARY_KEY,
            ConstraintKind.UNIQUE,
        ]
        assert t.primary_key().columns == ("A",)
        assert t.column("A").nullable is False

    def test_fk_actions(self):
        p = parse_ddl(
            "CREATE TABLE P (ID INTEGER, PRIMARY KEY (ID));\n"
            "CREATE TABLE C (PID INTEGER,"
            " FOREIGN KEY (PID) REFERENCES P (ID)"
            " ON DELETE CASCADE ON UPDATE SET NULL);"
        )
        fk = next(
            c for c in only_table(p, "C").constraints
            if c.kind == ConstraintKind.FOREIGN_KEY
        )
        assert fk.on_delete == "CASCADE"
        assert fk.on_update == "SET NULL"

    def test_fk_without_target_columns_uses_target_pk(self):
        p = parse_ddl(
            "CREATE TABLE P (ID INTEGER, PRIMARY KEY (ID));\n"
            "CREATE TABLE C (PID INTEGER, FOREIGN KEY (PID) REFERENCES P);"
        )
        fk = next(
            c for c in only_table(p, "C").constraints
            if c.kind == ConstraintKind.FOREIGN_KEY
        )
        assert fk.ref_columns == ("ID",)
        assert fk.ref_schema == DEFAULT_SCHEMA

    def test_dangling_fk_recorded_not_raised(self):
        p = parse_ddl("CREATE TABLE C (PID INTEGER, FOREIGN KEY (PID) REFERENCES GONE (X));")
        assert not p.errors
        assert len(p.model.dangling_refs) == 1
        assert "GONE" in p.model.dangling_refs[0]

    def test_check_source_is_canonical(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER, CHECK(a>0));")
        ck = next(
            c for c in only_table(p).constraints if c.kind == ConstraintKind.CHECK
        )
        assert ck.check_source == "A > 0"
        assert ck.check_standard is True
        assert ck.columns == ("A",)

    def test_nonstandard_check_kept_verbatim(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER, CHECK (NVL(A, 0) > 0));")
        assert not p.errors
        ck = next(
            c for c in only_table(p).constraints if c.kind == ConstraintKind.CHECK
        )
        assert ck.check_standard is False
        assert "NVL" in ck.check_source


class TestAlterAndGrant:
    def test_alter_add_and_drop_constraint(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER);\n"
            "ALTER TABLE T ADD CONSTRAINT T_CK CHECK (A > 0);\n"
            "ALTER TABLE T DROP CONSTRAINT T_CK;"
        )
        assert not p.errors
        assert only_table(p).constraints == []

    def test_alter_add_synthesizes_name(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER);\nALTER TABLE T ADD UNIQUE (A);"
        )
        assert only_table(p).constraints[0].name == "T_UQ_1"

    def test_alter_add_pk_enforces_not_null(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER);\nALTER TABLE T ADD PRIMARY KEY (A);"
        )
        assert only_table(p).column("A").nullable is False

    def test_alter_unknown_table_is_error(self):
        p = parse_ddl("ALTER TABLE NOPE ADD UNIQUE (X);")
        assert len(p.errors) == 1
        assert "unknown table" in p.errors[0].message

    def test_second_primary_key_is_error(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER, PRIMARY KEY (A));\n"
            "ALTER TABLE T ADD PRIMARY KEY (A);"
        )
        assert len(p.errors) == 1
        assert "already has a primary key" in p.errors[0].message

    def test_grant_binds_to_owning_schema(self):
        p = parse_ddl(
            "CREATE SCHEMA S1;\nCREATE TABLE S1.T (A INTEGER);\n"
            "GRANT SELECT ON T TO U;"
        )
        g = p.model.privileges[0]
        assert (g.privilege, g.on_schema, g.on_object, g.grantee) == (
            "SELECT", "S1", "T", "U"
        )

    def test_grant_multiple_privileges_and_grantees(self):
        p = parse_ddl(
            "CREATE TABLE T (A INTEGER);\n"
            "GRANT SELECT, UPDATE ON T TO ALICE, BOB WITH GRANT OPTION;"
        )
        got = {(g.privilege, g.grantee, g.grantable) for g in p.model.privileges}
        assert got == {
            ("SELECT", "ALICE", True), ("SELECT", "BOB", True),
            ("UPDATE", "ALICE", True), ("UPDATE", "BOB", True),
        }

    def test_grant_role(self):
        p = parse_ddl("GRANT AUDITOR TO ALICE WITH ADMIN OPTION;")
        g = p.model.privileges[0]
        assert (g.privilege, g.on_object, g.grantee, g.grantable) == (
            "AUDITOR", "", "ALICE", True
        )

    def test_grant_to_public(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER);\nGRANT SELECT ON T TO PUBLIC;")
        assert p.model.privileges[0].grantee == "PUBLIC"


class TestViews:
    def test_query_is_canonicalized(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER, B INTEGER);\n"
                      "create view v as select a,b from t where a>1;")
        v = p.model.schema(DEFAULT_SCHEMA).view("V")
        assert v.standard is True
        assert v.query == "SELECT A, B FROM T WHERE A > 1"

    def test_view_column_list(self):
        p = parse_ddl("CREATE TABLE T (A INTEGER);\n"
                      "CREATE VIEW V (N) AS SELECT COUNT(*) FROM T;")
        v = p.model.schema(DEFAULT_SCHEMA).view("V")
        assert v.columns == ("N",)

    def test_nonstandard_view_is_preserved_not_rejected(self):
        p = parse_ddl("CREATE VIEW V AS SELECT TOP 5 A FROM T;")
        assert not p.errors
        v = p.model.schema(DEFAULT_SCHEMA).view("V")
        assert v.standard is False
        assert "TOP 5" in v.source_text

    def test_view_records_referenced_tables(self):
        p = parse_ddl(
            "CREATE TABLE S1.T (A INTEGER);\n"
            "CREATE VIEW V AS SELECT A FROM S1.T;"
        )
        v = p.model.schema(DEFAULT_SCHEMA).view("V")
        assert v.referenced_tables == (("S1", "T"),)


class TestNativeStatements:
    def test_sequence_preserved_verbatim(self):
        text = "CREATE SEQUENCE SEQ1 START WITH 10 INCREMENT BY 5;"
        p = parse_ddl(text)
        assert not p.errors
        native = p.model.native_objects[0]
        assert native.kind_guess == "CREATE SEQUENCE"
        assert native.name == "SEQ1"
        assert native.source_text == text.rstrip(";")

    def test_trigger_classified_with_target_table(self):
        p = parse_ddl(
            "CREATE TRIGGER TRG1 BEFORE INSERT ON T1 FOR EACH ROW SET X = 1;"
        )
        trg = p.model.schema(DEFAULT_SCHEMA).triggers[0]
        assert trg.name == "TRG1"
        assert trg.target_table == "T1"

    def test_user_and_role(self):
        p = parse_ddl("CREATE USER U1 IDENTIFIED BY X;\nCREATE ROLE R1;")
        assert [u.name for u in p.model.users] == ["U1"]
        assert [r.name for r in p.model.roles] == ["R1"]

    def test_synonym_records_target(self):
        p = parse_ddl("CREATE SYNONYM SYN1 FOR FLUGLE.T9;")
        syn = p.model.schema(DEFAULT_SCHEMA).synonyms[0]
        assert syn.name == "SYN1"
        assert syn.target == "FLUGLE.T9"


class TestRecovery:
    def test_malformed_statement_reports_and_continues(self):
        p = parse_ddl("CREATE TABLE T1 (;\nCREATE TABLE T2 (ID INTEGER);")
        assert len(p.errors) == 1
        assert p.errors[0].line == 1
        # Later statements still parse.
        assert only_table(p, "T2") is not None
        # The broken text is preserved, never silently dropped.
        assert p.model.native_objects[0].source_text == "CREATE TABLE T1 ("

    def test_error_positions_use_script_lines(self):
        p = parse_ddl("CREATE TABLE A1 (X INTEGER);\n\nCREATE TABLE A2 (;")
        assert p.errors[0].line == 3

    def test_statement_outcome_for_single_text(self):
        out = parse_statement_text("CREATE TABLE W.T (A INTEGER)")
        assert out.kind == "CREATE TABLE"
        assert out.schema_name == "W"
        assert out.object_name == "T"
        assert out.issue is None

    def test_every_statement_is_accounted_for(self):
        text = (
            "CREATE TABLE T1 (A INTEGER);\n"
            "THIS IS NOT SQL AT ALL;\n"
            "CREATE TABLE T2 (!!!;\n"
            "CREATE TABLE T3 (B INTEGER);"
        )
        p = parse_ddl(text)
        assert len(p.statements) == 4
        tables = {t.name for s in p.model.schemas for t in s.tables}
        assert tables == {"T1", "T3"}
        # Both unusable statements survive as native objects.
        assert len(p.model.native_objects) == 2
