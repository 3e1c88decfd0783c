"""Source-adapter contract tests: fixtures, embedded databases, streams.

Oracles: handcrafted files with hand-computed expected rows for the fixture
format; the engine's own documented catalog behavior for the embedded
adapter; and cross-checking the two independent adapter implementations
against each other on generated sources that hold the same content.
"""

from __future__ import annotations

import hashlib
import random
import sqlite3
import tracemalloc
from itertools import islice
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbarc.dialect import OBJECT_CLASSES, ModeKind, builtin_generic_mode
from dbarc.ingest import (
    Capability,
    EmbeddedAdapter,
    FIXTURE_EXPERT_MODE,
    FixtureAdapter,
    IngestError,
    LobLocator,
    RowStream,
    SourceConnectError,
    StreamError,
    StreamOrder,
    charset_of,
    escape_field,
    unescape_field,
)
from dbarc.sqlcore.model import ColumnDef, ConstraintDef, ConstraintKind, TableDef
from dbarc.sqlcore.parser import parse_ddl
from dbarc.sqlcore.types import ArchivalType, TypeKind
from dbarc.sqlcore.values import render_value

from fixturegen import (
    clamp_exact,
    prepare_portable,
    write_fixture,
    write_sqlite,
)
from modelgen import populate_rows, random_model


# -- handcrafted sources -------------------------------------------------

NOTE_TEXT = "line1\r\nline2 é"
PHOTO_BYTES = bytes(range(64))

HR_DDL = """\
CREATE SCHEMA HR;

CREATE TABLE HR.STAFF (
  ID INTEGER NOT NULL,
  NAME CHARACTER VARYING(30),
  NOTE CHARACTER LARGE OBJECT,
  PHOTO BINARY LARGE OBJECT,
  CONSTRAINT STAFF_PK PRIMARY KEY (ID)
);

CREATE TABLE HR.TAGS (
  LABEL CHARACTER VARYING(10)
);

CREATE SCHEMA SYS;

CREATE TABLE SYS.SETTINGS (
  K INTEGER
);
"""

STAFF_DATA = "\n".join(
    [
        "ID\tNAME\tNOTE\tPHOTO",
        "1\tAmy\t@lobs/1_note.txt\t@lobs/1_photo.bin",
        "2\t\\N\t\\N\t\\N",
        "10\tA\\tB\\nC\\\\D\t\\N\t\\N",
    ]
) + "\n"

# One value row, one empty-string row, one NULL row — three different things.
TAGS_DATA = "LABEL\nalpha\n\n\\N\n"


def build_hr_fixture(root: Path, access: str = "expert", staff_data: str = STAFF_DATA,
                     tags_entry: bool = True) -> Path:
    root.mkdir(parents=True)
    (root / "schema.sql").write_text(HR_DDL)
    (root / "data").mkdir()
    (root / "data" / "staff.txt").write_bytes(staff_data.encode("utf-8"))
    (root / "data" / "tags.txt").write_bytes(TAGS_DATA.encode("utf-8"))
    (root / "lobs").mkdir()
    (root / "lobs" / "1_note.txt").write_bytes(NOTE_TEXT.encode("utf-8"))
    (root / "lobs" / "1_photo.bin").write_bytes(PHOTO_BYTES)
    tags = (
        '  <table schema="HR" name="TAGS" file="data/tags.txt"/>\n'
        if tags_entry
        else ""
    )
    (root / "manifest.xml").write_text(
        f'<sourceFixture product="testdb" version="9.1" charset="UTF-8" '
        f'access="{access}" label="hr">\n'
        f'  <ddl file="schema.sql"/>\n'
        f'  <systemSchema name="SYS"/>\n'
        f'  <table schema="HR" name="STAFF" file="data/staff.txt"/>\n'
        f"{tags}"
        f"</sourceFixture>\n"
    )
    return root


TWO_SCHEMA_DDL = """\
CREATE SCHEMA AA;

CREATE SCHEMA BB;

CREATE TABLE AA.PARENT (
  ID INTEGER NOT NULL,
  CONSTRAINT PARENT_PK PRIMARY KEY (ID)
);

CREATE TABLE BB.CHILD (
  RID INTEGER,
  CONSTRAINT CHILD_FK FOREIGN KEY (RID) REFERENCES AA.PARENT (ID)
);
"""


def build_two_schema_fixture(root: Path) -> Path:
    root.mkdir(parents=True)
    (root / "schema.sql").write_text(TWO_SCHEMA_DDL)
    (root / "manifest.xml").write_text(
        '<sourceFixture product="testdb" access="expert" label="two">\n'
        '  <ddl file="schema.sql"/>\n'
        "</sourceFixture>\n"
    )
    return root


def build_big_fixture(root: Path, rows: int, tail: list[str] = ()) -> Path:
    root.mkdir(parents=True)
    (root / "schema.sql").write_text(
        "CREATE SCHEMA BIG;\n\nCREATE TABLE BIG.SEQ (\n  N INTEGER NOT NULL,\n"
        "  CONSTRAINT SEQ_PK PRIMARY KEY (N)\n);\n"
    )
    lines = ["N"]
    lines.extend(str(i) for i in range(1, rows + 1))
    lines.extend(tail)
    (root / "seq.txt").write_text("\n".join(lines) + "\n")
    (root / "manifest.xml").write_text(
        '<sourceFixture product="testdb" access="expert" label="big">\n'
        '  <ddl file="schema.sql"/>\n'
        '  <table schema="BIG" name="SEQ" file="seq.txt"/>\n'
        "</sourceFixture>\n"
    )
    return root


def tree_digest(root: Path) -> dict[str, str]:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def deliver(adapter, model):
    """All rows of all tables with LOB payloads fetched in place."""
    out = {}
    notes = {}
    for schema in model.schemas:
        for table in schema.tables:
            stream = adapter.stream_rows(schema.name, table.name)
            notes[(schema.name, table.name)] = stream.order_note
            out[(schema.name, table.name)] = [
                tuple(
                    adapter.fetch_lob(item) if isinstance(item, LobLocator) else item
                    for item in row
                )
                for row in stream
            ]
    return out, notes


# -- field escaping ------------------------------------------------------


class TestFieldEscaping:
    def test_round_trip_examples(self):
        assert escape_field("a\tb\nc\rd\\e") == "a\\tb\\nc\\rd\\\\e"
        assert unescape_field("a\\tb\\nc\\rd\\\\e") == "a\tb\nc\rd\\e"

    def test_escaped_text_never_breaks_the_line_format(self):
        escaped = escape_field("x\ty\nz")
        assert "\t" not in escaped
        assert "\n" not in escaped

    def test_literal_backslash_n_is_not_null(self):
        # The two-character string \N must stay distinguishable from the
        # NULL marker, which is the same two characters unescaped.
        assert escape_field("\\N") == "\\\\N"
        assert unescape_field("\\\\N") == "\\N"

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_round_trip_property(self, text):
        assert unescape_field(escape_field(text)) == text


# -- row stream wrapper --------------------------------------------------


def _cols(n):
    return tuple(ColumnDef(f"C{i}", ArchivalType(TypeKind.INTEGER)) for i in range(n))


class TestRowStream:
    def test_counts_delivered_rows(self):
        stream = RowStream(_cols(1), iter([("1",), ("2",)]), "note")
        assert list(stream) == [("1",), ("2",)]
        assert stream.rows_delivered == 2

    def test_width_mismatch_is_a_stream_error_with_count(self):
        stream = RowStream(_cols(2), iter([("1", "2"), ("3",)]), "note")
        it = iter(stream)
        assert next(it) == ("1", "2")
        with pytest.raises(StreamError) as err:
            next(it)
        assert err.value.rows_delivered == 1

    def test_source_failures_carry_the_delivered_count(self):
        def rows():
            yield ("1",)
            yield ("2",)
            raise OSError("disk gone")

        stream = RowStream(_cols(1), rows(), "note")
        with pytest.raises(StreamError) as err:
            list(stream)
        assert err.value.rows_delivered == 2
        assert "disk gone" in str(err.value)

    def test_existing_stream_errors_pass_through(self):
        def rows():
            yield ("1",)
            raise StreamError("already counted", 7)

        stream = RowStream(_cols(1), rows(), "note")
        with pytest.raises(StreamError) as err:
            list(stream)
        assert err.value.rows_delivered == 7


class TestStreamOrder:
    def test_primary_key_order(self):
        table = TableDef(
            "T",
            columns=[ColumnDef("A", ArchivalType(TypeKind.INTEGER))],
            constraints=[ConstraintDef("T_PK", ConstraintKind.PRIMARY_KEY, ("A", "B"))],
        )
        order = StreamOrder.for_table(table)
        assert order.columns == ("A", "B")
        assert order.note == "primary key (A, B)"

    def test_natural_order(self):
        order = StreamOrder.for_table(TableDef("T"))
        assert order.columns == ()
        assert order.note == "natural (source storage order)"


class TestCapabilityNames:
    def test_charset_capability_round_trip(self):
        assert charset_of({Capability.native_charset("UTF-16")}) == "UTF-16"
        assert charset_of({Capability.LIST_SCHEMAS}) is None


# -- fixture adapter: connection and manifest ----------------------------


class TestFixtureManifest:
    def test_missing_manifest_is_a_connect_error(self, tmp_path):
        with pytest.raises(SourceConnectError):
            FixtureAdapter(tmp_path / "nowhere")

    def test_wrong_root_element(self, tmp_path):
        (tmp_path / "manifest.xml").write_text("<somethingElse/>")
        with pytest.raises(SourceConnectError, match="sourceFixture"):
            FixtureAdapter(tmp_path)

    def test_unreadable_xml(self, tmp_path):
        (tmp_path / "manifest.xml").write_text("<sourceFixture")
        with pytest.raises(SourceConnectError):
            FixtureAdapter(tmp_path)

    def test_manifest_without_ddl_entry(self, tmp_path):
        (tmp_path / "manifest.xml").write_text("<sourceFixture access='expert'/>")
        with pytest.raises(SourceConnectError, match="ddl"):
            FixtureAdapter(tmp_path)

    def test_missing_ddl_file(self, tmp_path):
        (tmp_path / "manifest.xml").write_text(
            "<sourceFixture access='expert'><ddl file='gone.sql'/></sourceFixture>"
        )
        with pytest.raises(SourceConnectError, match="gone.sql"):
            FixtureAdapter(tmp_path)

    def test_unknown_access_strategy(self, tmp_path):
        (tmp_path / "schema.sql").write_text("")
        (tmp_path / "manifest.xml").write_text(
            "<sourceFixture access='psychic'><ddl file='schema.sql'/></sourceFixture>"
        )
        with pytest.raises(SourceConnectError, match="psychic"):
            FixtureAdapter(tmp_path)

    def test_descriptor_and_capabilities(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        assert adapter.descriptor.product == "testdb"
        assert adapter.descriptor.version == "9.1"
        assert adapter.descriptor.label == "hr"
        assert adapter.descriptor.access_mode == FIXTURE_EXPERT_MODE.name
        assert Capability.LIST_SCHEMAS in adapter.capabilities
        assert Capability.INTROSPECT in adapter.capabilities
        assert Capability.STREAM_ROWS in adapter.capabilities
        assert Capability.FETCH_LOB in adapter.capabilities
        assert adapter.charset() == "UTF-8"

    def test_access_selects_the_mode(self, tmp_path):
        expert = FixtureAdapter(build_hr_fixture(tmp_path / "a", access="expert"))
        generic = FixtureAdapter(build_hr_fixture(tmp_path / "b", access="generic"))
        assert expert.mode is FIXTURE_EXPERT_MODE
        assert expert.mode.kind is ModeKind.EXPERT
        assert generic.mode == builtin_generic_mode()
        assert generic.mode.kind is ModeKind.GENERIC

    def test_empty_source_is_not_a_connect_error(self, tmp_path):
        # Opening fine but containing nothing is an empty listing, not a
        # failure to connect.
        (tmp_path / "schema.sql").write_text("")
        (tmp_path / "manifest.xml").write_text(
            "<sourceFixture access='expert'><ddl file='schema.sql'/></sourceFixture>"
        )
        adapter = FixtureAdapter(tmp_path)
        assert adapter.list_schemas() == []


class TestFixtureListing:
    def test_expert_listing_omits_declared_system_schemas(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        assert adapter.list_schemas() == ["HR"]

    def test_generic_listing_cannot_tell_system_schemas_apart(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", access="generic"))
        assert adapter.list_schemas() == ["HR", "SYS"]

    def test_selection_outside_the_source_is_rejected(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        with pytest.raises(IngestError, match="SYS"):
            adapter.introspect(["SYS"])  # hidden by the expert listing


# -- fixture adapter: introspection --------------------------------------


class TestFixtureIntrospection:
    def test_model_matches_an_independent_parse_of_the_ddl(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        model = adapter.introspect()
        expected = parse_ddl(HR_DDL).model
        expected.schemas = [s for s in expected.schemas if s.name == "HR"]
        assert [s.name for s in model.schemas] == ["HR"]
        got = model.schema("HR")
        assert got is not None
        assert [t.signature() for t in got.tables] == [
            t.signature() for t in expected.schemas[0].tables
        ]

    def test_staff_columns_are_typed(self, tmp_path):
        model = FixtureAdapter(build_hr_fixture(tmp_path / "hr")).introspect()
        staff = model.table("HR", "STAFF")
        assert staff.column("ID").col_type == ArchivalType(TypeKind.INTEGER)
        assert staff.column("NAME").col_type == ArchivalType(
            TypeKind.CHARACTER_VARYING, length=30
        )
        assert staff.column("NOTE").col_type.kind is TypeKind.CLOB
        assert staff.column("PHOTO").col_type.kind is TypeKind.BLOB

    def test_expert_mode_sees_every_object_class(self, tmp_path):
        model = FixtureAdapter(build_hr_fixture(tmp_path / "hr")).introspect()
        assert model.absent_classes == frozenset()
        assert model.privileges == []  # introspected and found empty

    def test_generic_mode_marks_unreachable_classes_absent(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", access="generic"))
        model = adapter.introspect()
        expected_absent = OBJECT_CLASSES - builtin_generic_mode().object_classes
        assert model.absent_classes == expected_absent
        assert "triggers" in model.absent_classes
        assert "privileges" in model.absent_classes

    def test_schema_selection_restricts_the_model(self, tmp_path):
        adapter = FixtureAdapter(build_two_schema_fixture(tmp_path / "two"))
        model = adapter.introspect(["AA"])
        assert [s.name for s in model.schemas] == ["AA"]
        assert model.dangling_refs == []

    def test_selection_records_dangling_references(self, tmp_path):
        adapter = FixtureAdapter(build_two_schema_fixture(tmp_path / "two"))
        model = adapter.introspect(["BB"])
        assert [s.name for s in model.schemas] == ["BB"]
        assert len(model.dangling_refs) == 1
        assert "CHILD_FK" in model.dangling_refs[0]
        assert "PARENT" in model.dangling_refs[0]
        # The constraint itself is preserved; only its target is noted gone.
        child = model.table("BB", "CHILD")
        assert child.constraint("CHILD_FK") is not None

    def test_unparsable_statements_become_warnings_not_failures(self, tmp_path):
        root = tmp_path / "odd"
        root.mkdir()
        (root / "schema.sql").write_text(
            "CREATE SCHEMA OK;\n\nCREATE TABLE OK.T (A INTEGER);\n\n"
            "CREATE GIZMO OK.Q;\n\nCREATE TABLE OK.BAD (A INTEGER;\n"
        )
        (root / "manifest.xml").write_text(
            "<sourceFixture access='expert'><ddl file='schema.sql'/></sourceFixture>"
        )
        adapter = FixtureAdapter(root)
        model = adapter.introspect()
        assert model.table("OK", "T") is not None
        # The statement kind nobody recognizes is preserved as a native
        # object; the malformed one is preserved and reported.
        assert any(n.kind_guess == "CREATE GIZMO" for n in model.native_objects)
        assert any("preserved verbatim" in w for w in adapter.warnings)

    def test_declared_charset_decodes_every_file(self, tmp_path):
        root = tmp_path / "latin"
        root.mkdir()
        ddl = "CREATE SCHEMA L1;\n\nCREATE TABLE L1.T (\n  NAME CHARACTER VARYING(10)\n);\n"
        (root / "schema.sql").write_bytes(ddl.encode("iso-8859-1"))
        (root / "t.txt").write_bytes("NAME\nCafé\n".encode("iso-8859-1"))
        (root / "manifest.xml").write_text(
            "<sourceFixture access='expert' charset='ISO-8859-1'>"
            "<ddl file='schema.sql'/>"
            "<table schema='L1' name='T' file='t.txt'/>"
            "</sourceFixture>"
        )
        adapter = FixtureAdapter(root)
        assert adapter.charset() == "ISO-8859-1"
        rows = list(adapter.stream_rows("L1", "T"))
        assert rows == [("Café",)]


# -- fixture adapter: streaming ------------------------------------------


class TestFixtureStreaming:
    def test_rows_arrive_in_typed_primary_key_order(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        stream = adapter.stream_rows("HR", "STAFF")
        assert stream.order_note == "primary key (ID)"
        rows = list(stream)
        # 1, 2, 10: numeric order, which text order would reject.
        assert [r[0] for r in rows] == ["1", "2", "10"]

    def test_null_and_escapes_decode_exactly(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        rows = list(adapter.stream_rows("HR", "STAFF"))
        assert rows[0][1] == "Amy"
        assert rows[1][1] is None
        assert rows[2][1] == "A\tB\nC\\D"

    def test_empty_string_and_null_stay_distinct(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        stream = adapter.stream_rows("HR", "TAGS")
        assert stream.order_note == "natural (source storage order)"
        assert list(stream) == [("alpha",), ("",), (None,)]

    def test_lob_cells_become_locators(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        first = next(iter(adapter.stream_rows("HR", "STAFF")))
        note, photo = first[2], first[3]
        assert isinstance(note, LobLocator)
        assert (note.schema, note.table, note.column) == ("HR", "STAFF", "NOTE")
        assert note.kind == "clob"
        assert note.row_ordinal == 0
        assert isinstance(photo, LobLocator)
        assert photo.kind == "blob"

    def test_lob_payloads_fetch_byte_exactly(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        first = next(iter(adapter.stream_rows("HR", "STAFF")))
        # The \r\n inside the text payload must survive untranslated.
        assert adapter.fetch_lob(first[2]) == NOTE_TEXT
        assert adapter.fetch_lob(first[3]) == PHOTO_BYTES

    def test_inline_lob_text_is_rejected(self, tmp_path):
        data = "ID\tNAME\tNOTE\tPHOTO\n1\tAmy\toops-not-a-reference\t\\N\n"
        adapter = FixtureAdapter(
            build_hr_fixture(tmp_path / "hr", staff_data=data)
        )
        with pytest.raises(StreamError, match="payload file"):
            list(adapter.stream_rows("HR", "STAFF"))

    def test_header_mismatch_fails_before_any_row(self, tmp_path):
        data = "ID\tWRONG\tNOTE\tPHOTO\n1\tAmy\t\\N\t\\N\n"
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", staff_data=data))
        with pytest.raises(StreamError) as err:
            list(adapter.stream_rows("HR", "STAFF"))
        assert err.value.rows_delivered == 0

    def test_width_mismatch_reports_the_position(self, tmp_path):
        data = "ID\tNAME\tNOTE\tPHOTO\n1\tAmy\t\\N\t\\N\n2\tonly-two\n"
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", staff_data=data))
        with pytest.raises(StreamError) as err:
            list(adapter.stream_rows("HR", "STAFF"))
        assert err.value.rows_delivered == 1
        assert "row 2" in str(err.value)

    def test_out_of_order_file_is_rejected_where_it_breaks(self, tmp_path):
        data = "ID\tNAME\tNOTE\tPHOTO\n1\ta\t\\N\t\\N\n10\tb\t\\N\t\\N\n2\tc\t\\N\t\\N\n"
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", staff_data=data))
        with pytest.raises(StreamError, match="primary-key order") as err:
            list(adapter.stream_rows("HR", "STAFF"))
        assert err.value.rows_delivered == 2

    def test_duplicate_key_counts_as_order_violation(self, tmp_path):
        data = "ID\tNAME\tNOTE\tPHOTO\n5\ta\t\\N\t\\N\n5\tb\t\\N\t\\N\n"
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", staff_data=data))
        with pytest.raises(StreamError, match="primary-key order"):
            list(adapter.stream_rows("HR", "STAFF"))

    def test_table_without_data_file_streams_nothing(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr", tags_entry=False))
        assert list(adapter.stream_rows("HR", "TAGS")) == []

    def test_unknown_table_is_an_error(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        with pytest.raises(IngestError, match="NOSUCH"):
            adapter.stream_rows("HR", "NOSUCH")

    def test_streams_are_repeatable(self, tmp_path):
        adapter = FixtureAdapter(build_hr_fixture(tmp_path / "hr"))
        first = list(adapter.stream_rows("HR", "STAFF"))
        second = list(adapter.stream_rows("HR", "STAFF"))
        assert first == second

    def test_reading_never_modifies_the_source(self, tmp_path):
        root = build_hr_fixture(tmp_path / "hr")
        before = tree_digest(root)
        adapter = FixtureAdapter(root)
        adapter.list_schemas()
        model = adapter.introspect()
        deliver(adapter, model)
        assert tree_digest(root) == before


class TestFixtureLargeStreams:
    def test_quarter_million_rows_stream_within_bounded_memory(self, tmp_path):
        adapter = FixtureAdapter(build_big_fixture(tmp_path / "big", 250_000))
        stream = adapter.stream_rows("BIG", "SEQ")
        tracemalloc.start()
        count = sum(1 for _ in stream)
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert count == 250_000
        # One row at a time: far below the ~4 MB the file itself occupies.
        assert peak < 2 * 2**20

    def test_order_checking_is_on_the_fly_not_buffered(self, tmp_path):
        # The violation sits at the end of a 200k-row file.  If validation
        # pre-read the file, the first rows could not be delivered.
        adapter = FixtureAdapter(
            build_big_fixture(tmp_path / "big", 200_000, tail=["100"])
        )
        head = list(islice(iter(adapter.stream_rows("BIG", "SEQ")), 5))
        assert [r[0] for r in head] == ["1", "2", "3", "4", "5"]
        with pytest.raises(StreamError) as err:
            list(adapter.stream_rows("BIG", "SEQ"))
        assert err.value.rows_delivered == 200_000


# -- embedded adapter ----------------------------------------------------


MEASURE_DDL = """\
CREATE TABLE MEASURE (
  ID INTEGER NOT NULL,
  AMT NUMERIC(7,2),
  FLAG BOOLEAN,
  NOTE CHARACTER LARGE OBJECT,
  CONSTRAINT MEASURE_PK PRIMARY KEY (ID)
)"""


def build_measure_db(path: Path) -> None:
    conn = sqlite3.connect(path)
    conn.execute(MEASURE_DDL)
    conn.execute(
        "CREATE TABLE SCRAP (\n  PAYLOAD BINARY LARGE OBJECT\n)"
    )
    conn.executemany(
        "INSERT INTO MEASURE (ID, AMT, FLAG, NOTE) VALUES (?, ?, ?, ?)",
        [
            (1, "30.20", 1, "hello clob"),
            (2, "0.10", 0, None),
            (3, "hello", None, "second"),
            (10, "12345.67", 1, None),
        ],
    )
    conn.execute("INSERT INTO SCRAP (PAYLOAD) VALUES (?)", (b"\x00\x01\xfe",))
    conn.commit()
    conn.close()


class TestEmbeddedConnection:
    def test_profile_must_name_databases(self):
        with pytest.raises(SourceConnectError):
            EmbeddedAdapter([])

    def test_missing_database_file(self, tmp_path):
        with pytest.raises(SourceConnectError, match="gone.db"):
            EmbeddedAdapter([("S", tmp_path / "gone.db")])

    def test_profile_xml_round_trip(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        (tmp_path / "profile.xml").write_text(
            '<connectionProfile adapter="embedded" label="lab">\n'
            '  <database schema="LAB" path="m.db"/>\n'
            "</connectionProfile>\n"
        )
        with EmbeddedAdapter.from_profile_xml(tmp_path / "profile.xml") as adapter:
            assert adapter.list_schemas() == ["LAB"]
            assert adapter.descriptor.label == "lab"
            assert adapter.descriptor.access_mode == "embedded"

    def test_profile_for_another_adapter_is_rejected(self, tmp_path):
        (tmp_path / "profile.xml").write_text(
            '<connectionProfile adapter="teleport"><database schema="S" path="x.db"/>'
            "</connectionProfile>"
        )
        with pytest.raises(SourceConnectError, match="teleport"):
            EmbeddedAdapter.from_profile_xml(tmp_path / "profile.xml")

    def test_wrong_root_element_is_rejected(self, tmp_path):
        (tmp_path / "profile.xml").write_text("<sourceFixture/>")
        with pytest.raises(SourceConnectError, match="connectionProfile"):
            EmbeddedAdapter.from_profile_xml(tmp_path / "profile.xml")

    def test_attachments_are_read_only(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        adapter = EmbeddedAdapter([("LAB", tmp_path / "m.db")])
        try:
            # The database file is attached with a read-only URI; even a
            # direct write through the session must be refused.
            with pytest.raises(sqlite3.OperationalError):
                adapter._conn.execute("DELETE FROM LAB.MEASURE")
        finally:
            adapter.close()

    def test_reading_never_modifies_the_source(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        before = tree_digest(tmp_path)
        with EmbeddedAdapter([("LAB", tmp_path / "m.db")]) as adapter:
            model = adapter.introspect()
            deliver(adapter, model)
        assert tree_digest(tmp_path) == before


class TestEmbeddedIntrospection:
    def test_stored_subset_ddl_is_recovered_structurally(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        with EmbeddedAdapter([("LAB", tmp_path / "m.db")]) as adapter:
            model = adapter.introspect()
        table = model.table("LAB", "MEASURE")
        parsed = parse_ddl(MEASURE_DDL + ";").model.find_table_any_schema("MEASURE")
        assert parsed is not None
        assert table.signature() == parsed[1].signature()
        assert table.column("AMT").col_type == ArchivalType(
            TypeKind.NUMERIC, precision=7, scale=2
        )
        assert table.constraint("MEASURE_PK") is not None

    def test_unreachable_classes_are_marked_absent(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        with EmbeddedAdapter([("LAB", tmp_path / "m.db")]) as adapter:
            model = adapter.introspect()
        for cls in ("routines", "synonyms", "dblinks", "users", "roles", "privileges"):
            assert cls in model.absent_classes
        assert "tables" not in model.absent_classes
        assert "triggers" not in model.absent_classes

    def test_engine_specific_ddl_falls_back_to_catalog_pragmas(self, tmp_path):
        conn = sqlite3.connect(tmp_path / "g.db")
        conn.execute(
            "CREATE TABLE GADGET (ID INTEGER PRIMARY KEY AUTOINCREMENT, "
            "BODY TEXT, W REAL DEFAULT 1.5, CHECK (W > 0))"
        )
        conn.execute(
            "CREATE TABLE PART (GID INTEGER REFERENCES GADGET(ID) "
            "ON DELETE CASCADE ON UPDATE NO ACTION, X INT2)"
        )
        conn.execute("CREATE TABLE DUO (A INT2, B INT2, UNIQUE (A, B))")
        conn.commit()
        conn.close()
        with EmbeddedAdapter([("W", tmp_path / "g.db")]) as adapter:
            model = adapter.introspect()
            warnings = list(adapter.warnings)
        gadget = model.table("W", "GADGET")
        pk = gadget.primary_key()
        assert pk is not None
        assert pk.name == "GADGET_PK"
        assert pk.columns == ("ID",)
        assert gadget.column("ID").nullable is False
        assert gadget.column("W").default == "1.5"
        # The engine-specific text hid the check constraint; that loss is
        # reported instead of silently dropped.
        assert any("GADGET" in w and "check" in w.lower() for w in warnings)
        part = model.table("W", "PART")
        fk = part.constraint("PART_FK_1")
        assert fk is not None
        assert fk.ref_table == "GADGET"
        assert fk.ref_columns == ("ID",)
        assert fk.on_delete == "CASCADE"
        assert fk.on_update is None  # the no-op action is not an action
        duo = model.table("W", "DUO")
        uq = duo.constraint("DUO_UQ_1")
        assert uq is not None
        assert uq.columns == ("A", "B")

    def test_views_standard_and_native(self, tmp_path):
        conn = sqlite3.connect(tmp_path / "v.db")
        conn.execute("CREATE TABLE T9 (\n  A INTEGER\n)")
        conn.execute("CREATE VIEW GOOD AS SELECT A FROM T9")
        conn.execute("CREATE VIEW WILD AS SELECT hex(A) AS H FROM T9")
        conn.commit()
        conn.close()
        with EmbeddedAdapter([("V", tmp_path / "v.db")]) as adapter:
            model = adapter.introspect()
        schema = model.schema("V")
        good = schema.view("GOOD")
        assert good.standard is True
        assert good.query == "SELECT A FROM T9"
        wild = schema.view("WILD")
        assert wild.standard is False
        assert "hex(A)" in wild.source_text

    def test_triggers_are_captured_verbatim(self, tmp_path):
        conn = sqlite3.connect(tmp_path / "t.db")
        conn.execute("CREATE TABLE T1 (\n  A INTEGER\n)")
        trigger = (
            "CREATE TRIGGER BUMP AFTER INSERT ON T1 "
            "BEGIN UPDATE T1 SET A = A + 1; END"
        )
        conn.execute(trigger)
        conn.commit()
        conn.close()
        with EmbeddedAdapter([("V", tmp_path / "t.db")]) as adapter:
            model = adapter.introspect()
        trig = model.schema("V").triggers[0]
        assert trig.name == "BUMP"
        assert trig.target_table == "T1"
        assert trig.source_text == trigger


class TestEmbeddedStreaming:
    def test_rows_in_primary_key_order_with_canonical_text(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        with EmbeddedAdapter([("LAB", tmp_path / "m.db")]) as adapter:
            stream = adapter.stream_rows("LAB", "MEASURE")
            assert stream.order_note == "primary key (ID)"
            rows = [
                tuple(
                    adapter.fetch_lob(i) if isinstance(i, LobLocator) else i
                    for i in row
                )
                for row in stream
            ]
        assert [r[0] for r in rows] == ["1", "2", "3", "10"]
        assert rows[0][1:] == ("30.20", "TRUE", "hello clob")
        assert rows[1][1:] == ("0.10", "FALSE", None)
        # Flexible typing lets the engine hold junk in a numeric column;
        # it is delivered verbatim rather than failing the stream.
        assert rows[2][1] == "hello"
        assert rows[3][1] == "12345.67"

    def test_exact_numeric_text_is_independent_of_storage_class(self, tmp_path):
        # The engine stores 30.20 as a float and 12345.67 maybe as text;
        # the adapter must deliver the declared-scale text either way.
        conn = sqlite3.connect(tmp_path / "n.db")
        conn.execute("CREATE TABLE N1 (\n  A NUMERIC(12,4)\n)")
        conn.executemany(
            "INSERT INTO N1 (A) VALUES (?)",
            [("3.1000",), ("0.0001",), ("250",), ("99999999.9999",)],
        )
        conn.commit()
        conn.close()
        with EmbeddedAdapter([("V", tmp_path / "n.db")]) as adapter:
            rows = [r[0] for r in adapter.stream_rows("V", "N1")]
        assert rows == ["3.1000", "0.0001", "250.0000", "99999999.9999"]

    def test_lob_locators_stay_valid_after_the_stream_ends(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        with EmbeddedAdapter([("LAB", tmp_path / "m.db")]) as adapter:
            notes = [row[3] for row in adapter.stream_rows("LAB", "MEASURE")]
            scraps = [row[0] for row in adapter.stream_rows("LAB", "SCRAP")]
            assert isinstance(notes[0], LobLocator)
            assert notes[0].kind == "clob"
            assert adapter.fetch_lob(notes[0]) == "hello clob"
            assert notes[1] is None
            assert isinstance(scraps[0], LobLocator)
            assert scraps[0].kind == "blob"
            assert adapter.fetch_lob(scraps[0]) == b"\x00\x01\xfe"

    def test_engine_text_columns_resolve_to_character_objects(self, tmp_path):
        # A TEXT column is engine dialect; through the embedded access mode
        # it maps to a large character object and streams as a locator.
        conn = sqlite3.connect(tmp_path / "d.db")
        conn.execute("CREATE TABLE RAW (ID INTEGER PRIMARY KEY AUTOINCREMENT, BODY TEXT)")
        conn.execute("INSERT INTO RAW (BODY) VALUES ('payload here')")
        conn.commit()
        conn.close()
        with EmbeddedAdapter([("D", tmp_path / "d.db")]) as adapter:
            row = next(iter(adapter.stream_rows("D", "RAW")))
            body = row[1]
            assert isinstance(body, LobLocator)
            assert body.kind == "clob"
            assert adapter.fetch_lob(body) == "payload here"

    def test_streams_are_repeatable(self, tmp_path):
        build_measure_db(tmp_path / "m.db")
        with EmbeddedAdapter([("LAB", tmp_path / "m.db")]) as adapter:
            first = list(adapter.stream_rows("LAB", "MEASURE"))
            second = list(adapter.stream_rows("LAB", "MEASURE"))
        assert [r[:3] for r in first] == [r[:3] for r in second]


# -- the two adapters agree on identical content -------------------------


def materialize(seed: int, tmp: Path):
    rng = random.Random(seed)
    model = prepare_portable(random_model(rng))
    rows = clamp_exact(model, populate_rows(rng, model))
    fixture_root = write_fixture(tmp / "fx", model, rows)
    profile = write_sqlite(tmp / "db", model, rows)
    return model, fixture_root, profile


class TestAdapterEquivalence:
    @given(st.integers(min_value=0, max_value=10**9))
    @settings(max_examples=20, deadline=None)
    def test_same_content_yields_same_model_and_rows(self, tmp_path_factory, seed):
        tmp = tmp_path_factory.mktemp("eq")
        model, fixture_root, profile = materialize(seed, tmp)
        fixture = FixtureAdapter(fixture_root)
        with EmbeddedAdapter.from_profile_xml(profile) as engine:
            got_fixture = fixture.introspect()
            got_engine = engine.introspect()
            assert got_fixture.signature() == got_engine.signature()
            assert got_fixture.signature() == model.signature()
            rows_fixture, notes_fixture = deliver(fixture, got_fixture)
            rows_engine, notes_engine = deliver(engine, got_engine)
        assert notes_fixture == notes_engine
        assert rows_fixture == rows_engine

    def test_delivered_values_parse_under_the_declared_types(self, tmp_path):
        # Spot-check on one seed that canonical text round-trips through
        # the shared value codec for every delivered item.
        from dbarc.sqlcore.values import parse_value

        model, fixture_root, _ = materialize(424242, tmp_path)
        adapter = FixtureAdapter(fixture_root)
        introspected = adapter.introspect()
        rows, _ = deliver(adapter, introspected)
        checked = 0
        for schema in introspected.schemas:
            for table in schema.tables:
                for row in rows[(schema.name, table.name)]:
                    for item, col in zip(row, table.columns):
                        if item is None or not isinstance(item, str):
                            continue
                        if col.col_type.is_lob:
                            continue
                        text = render_value(
                            parse_value(item, col.col_type), col.col_type
                        )
                        assert text == item
                        checked += 1
        assert checked > 0
