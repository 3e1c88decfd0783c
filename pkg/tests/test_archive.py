"""Archive writing and reading: codec, layout, round trips, integrity.

Oracles: the item codec is checked against fixed expected tokens and a
round-trip property over generated values including delimiter look-alikes;
archives are re-read and compared against the independently known model
and typed rows they came from; integrity findings are provoked by
deliberate on-disk mutations; the streaming bound is measured with the
allocation tracer against a generator-backed source.
"""

import html.parser
import io
import random
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbarc.analysis import (
    Actor,
    Bullet,
    analyze,
    exclude,
    add_synonym,
    fixed_clock,
    reanalyze,
    readiness,
)
from dbarc.archive import (
    ACTION_ARCHIVE_CREATED,
    ACTION_ARCHIVE_FAILED,
    Archive,
    ArchiveError,
    DATA_SENTINEL,
    DMP_STYLESHEET,
    DataFormatError,
    FORMAT_VERSION,
    HEX_WRAP,
    ItemCursor,
    MANIFEST_NAME,
    REFERENCE_PATH,
    archival_model,
    build_reference,
    create_archive,
    ddl_files,
    decode_item,
    encode_item,
    encode_row,
    fs_name,
    hex_dump,
    iter_data_rows,
    open_table_data,
    parse_hex_dump,
    read_archive,
    render_pretty,
    schema_order,
    table_to_xml,
    write_table_data,
)
from dbarc.ingest.base import LobLocator, RowStream
from dbarc.ingest.fixture import FixtureAdapter
from dbarc.sqlcore.model import make_ref
from dbarc.sqlcore.modelxml import model_from_element
from dbarc.sqlcore.parser import parse_ddl
from dbarc.sqlcore.types import ArchivalType, TypeKind
from dbarc.sqlcore.values import render_value

from fixturegen import sort_rows, write_fixture
from modelgen import populate_rows, random_model

CLOCK = fixed_clock("2026-02-03T04:05:06Z")

_CONTROL = re.compile("[\x00-\x08\x0b\x0c\x0e-\x1f]")


def build_model(ddl: str):
    parsed = parse_ddl(ddl)
    assert not parsed.errors, parsed.errors
    parsed.model.link_references()
    return parsed.model


def fixture_session(tmp: Path, ddl: str, rows: dict, name: str = "fx"):
    """A ready-to-archive session plus its adapter, from DDL and typed rows."""
    model = build_model(ddl)
    root = write_fixture(tmp / name, model, rows)
    adapter = FixtureAdapter(root)
    session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK, audit=True)
    return session, adapter


def write_raw_fixture(root: Path, ddl: str, tables: dict) -> Path:
    """A hand-written fixture: raw DDL text plus tab-separated data lines."""
    root.mkdir(parents=True, exist_ok=True)
    (root / "schema.sql").write_text(ddl, encoding="utf-8")
    doc = ET.Element(
        "sourceFixture",
        product="hand fixture",
        version="1",
        charset="UTF-8",
        access="expert",
        label="hand",
    )
    ET.SubElement(doc, "ddl", file="schema.sql")
    (root / "data").mkdir(exist_ok=True)
    for (schema, table), (cols, lines) in tables.items():
        rel = f"data/{schema}_{table}.txt"
        (root / rel).write_text(
            "\n".join(["\t".join(cols)] + lines) + "\n", encoding="utf-8"
        )
        ET.SubElement(doc, "table", schema=schema, name=table, file=rel)
    tree = ET.ElementTree(doc)
    ET.indent(tree)
    tree.write(root / "manifest.xml", encoding="utf-8", xml_declaration=True)
    return root


def read_utf16(path: Path) -> str:
    data = path.read_bytes()
    assert data[:2] == b"\xff\xfe", f"{path} lacks the UTF-16 byte-order mark"
    return data[2:].decode("utf-16-le")


def data_section(path: Path) -> str:
    text = read_utf16(path)
    marker = DATA_SENTINEL + "\n"
    pos = text.index(marker)
    return text[pos + len(marker) :]


BASIC_DDL = """
CREATE SCHEMA APP;
CREATE SCHEMA EXTRA;
CREATE TABLE APP.CUSTOMER (
  ID INTEGER NOT NULL,
  NAME CHARACTER VARYING(20),
  NOTES CLOB,
  PHOTO BLOB,
  CONSTRAINT CUST_PK PRIMARY KEY (ID)
);
CREATE TABLE EXTRA.ORDERS (
  ONO INTEGER NOT NULL,
  CUST INTEGER,
  CONSTRAINT ORD_PK PRIMARY KEY (ONO),
  CONSTRAINT ORD_FK FOREIGN KEY (CUST) REFERENCES APP.CUSTOMER (ID)
);
CREATE VIEW APP.CUST_V (CID) AS SELECT ID FROM APP.CUSTOMER;
GRANT SELECT ON APP.CUSTOMER TO ARCHIVIST;
"""

BASIC_ROWS = {
    ("APP", "CUSTOMER"): [
        (1, "Ann", "long note\nwith a line break", b"\xde\xad\xbe\xef"),
        (2, None, None, None),
    ],
    ("EXTRA", "ORDERS"): [(10, 1), (11, None)],
}


# ---------------------------------------------------------------------------
# The item codec


class TestItemCodec:
    def test_expected_tokens(self):
        assert encode_item("hello") == "5,hello;"
        assert encode_item("") == "0,;"
        assert encode_item(None) == "-1,;"

    def test_length_counts_characters_not_bytes(self):
        # Five characters, six UTF-8 bytes: the prefix must say five.
        assert len("héllo".encode("utf-8")) == 6
        assert encode_item("héllo") == "5,héllo;"

    def test_null_and_empty_stay_distinct(self):
        assert encode_item(None) != encode_item("")
        assert decode_item(ItemCursor("-1,;")) is None
        assert decode_item(ItemCursor("0,;")) == ""

    def test_value_that_looks_like_a_token(self):
        token = encode_item("5,hello;")
        assert token == "8,5,hello;;"
        assert decode_item(ItemCursor(token)) == "5,hello;"

    def test_embedded_delimiters_and_line_breaks(self):
        for value in [",", ";", "\n", ";;;", "1,x;\n2,y;", "\n\n\n"]:
            cursor = ItemCursor(encode_item(value))
            assert decode_item(cursor) == value
            assert cursor.at_end()

    @settings(max_examples=200, deadline=None)
    @given(
        value=st.one_of(
            st.none(),
            st.text(alphabet=st.sampled_from(list("ab,;-\n0123456789")), max_size=12),
            st.text(max_size=40),
        )
    )
    def test_round_trip_single(self, value):
        token = encode_item(value)
        cursor = ItemCursor(token)
        assert decode_item(cursor) == value
        assert cursor.at_end()
        assert cursor.offset == len(token)

    @settings(max_examples=100, deadline=None)
    @given(data=st.data())
    def test_round_trip_rows(self, data):
        ncols = data.draw(st.integers(1, 4))
        rows = data.draw(
            st.lists(
                st.lists(
                    st.one_of(st.none(), st.text(max_size=10)),
                    min_size=ncols,
                    max_size=ncols,
                ),
                max_size=6,
            )
        )
        text = "\n".join(encode_row(row) for row in rows)
        decoded = list(iter_data_rows(ItemCursor(text), ncols))
        assert decoded == rows
        # Valid token streams re-encode to the identical text.
        assert "\n".join(encode_row(row) for row in decoded) == text
        # Chunked stream reading agrees with whole-string reading.
        chunked = list(iter_data_rows(ItemCursor(io.StringIO(text), chunk=16), ncols))
        assert chunked == rows

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("", "length prefix"),
            ("x,a;", "malformed length prefix"),
            ("5", "premature end of input"),
            ("-2,;", "malformed length prefix"),
            ("-,;", "malformed length prefix"),
            ("05,hello;", "malformed length prefix"),
            ("5,hell", "premature end of input"),
            ("3,abc:", "unterminated item"),
            ("3,abc", "unterminated item"),
            ("1234567890123,x;", "length prefix too long"),
        ],
    )
    def test_malformed_tokens(self, text, fragment):
        with pytest.raises(DataFormatError) as err:
            decode_item(ItemCursor(text))
        assert fragment in str(err.value)
        assert "character offset" in str(err.value)

    def test_row_terminator_required_between_rows(self):
        with pytest.raises(DataFormatError) as err:
            list(iter_data_rows(ItemCursor("2,ab;2,cd;"), 1))
        assert "expected a row terminator" in str(err.value)
        assert "offset 5" in str(err.value)

    def test_trailing_terminator_is_an_error(self):
        # A line feed promises another row; end of input breaks the promise.
        with pytest.raises(DataFormatError):
            list(iter_data_rows(ItemCursor("2,ab;\n"), 1))

    def test_error_offset_survives_chunked_reading(self):
        text = "2,ab;\n" + "2,cd;\n" + "9,short;"
        with pytest.raises(DataFormatError) as err:
            list(iter_data_rows(ItemCursor(io.StringIO(text), chunk=16), 1))
        assert "premature end of input" in str(err.value)


class TestNamesAndDumps:
    def test_fs_name_passthrough_and_escaping(self):
        assert fs_name("CUSTOMER_2") == "CUSTOMER_2"
        assert fs_name("My Table") == "My%20Table"
        assert fs_name("a.b") == "a%2Eb"
        assert fs_name("50%") == "50%25"
        assert fs_name("é") == "%C3%A9"

    def test_fs_name_is_injective_on_tricky_pairs(self):
        pairs = [("a.b", "a%2Eb"), ("x y", "x%20y"), ("A", "a"), (".", "%2E")]
        for left, right in pairs:
            assert fs_name(left) != fs_name(right)

    def test_fs_name_never_yields_dot_segments(self):
        assert fs_name(".") == "%2E"
        assert fs_name("..") == "%2E%2E"

    def test_hex_dump_wraps_at_fixed_width(self):
        dumped = hex_dump(bytes(100))
        lines = dumped.split("\n")
        assert [len(line) for line in lines] == [HEX_WRAP, HEX_WRAP, 40]
        assert parse_hex_dump(dumped) == bytes(100)

    def test_hex_dump_uppercase_pairs(self):
        assert hex_dump(b"\xde\xad\xbe\xef") == "DEADBEEF"
        assert hex_dump(b"") == ""
        assert parse_hex_dump("") == b""

    def test_hex_parse_rejects_garbage(self):
        with pytest.raises(ArchiveError):
            parse_hex_dump("DEADBEEG")
        with pytest.raises(ArchiveError):
            parse_hex_dump("ABC")
        with pytest.raises(ArchiveError):
            parse_hex_dump("deadbeef")  # lowercase is not the archive form


# ---------------------------------------------------------------------------
# Writing one table


def small_table(ddl: str):
    model = build_model(ddl)
    schema = model.schemas[0]
    return schema.name, schema.tables[0]


def make_stream(table, rows, note="test order"):
    return RowStream(tuple(table.columns), iter(rows), note)


def no_lobs(locator):
    raise AssertionError("no large objects in this stream")


class TestWriteTableData:
    def test_two_column_row_line(self, tmp_path):
        schema, table = small_table(
            "CREATE SCHEMA S;"
            "CREATE TABLE S.T (A CHARACTER VARYING(5), B CHARACTER VARYING(5));"
        )
        result = write_table_data(
            tmp_path, schema, table, make_stream(table, [("ab", None)]), no_lobs
        )
        assert result.rows == 1
        assert result.data_path == "data/S/T.txt"
        assert data_section(tmp_path / "data/S/T.txt") == "2,ab;-1,;"

    def test_blob_becomes_hex_side_file(self, tmp_path):
        schema, table = small_table(
            "CREATE SCHEMA S; CREATE TABLE S.T (P BLOB);"
        )
        locator = LobLocator("S", "T", "P", 0, "blob", handle="h")
        result = write_table_data(
            tmp_path,
            schema,
            table,
            make_stream(table, [(locator,)]),
            lambda loc: b"\xde\xad\xbe\xef",
        )
        assert result.lob_paths == ("lobs/S/T/P/1.blob",)
        assert read_utf16(tmp_path / "lobs/S/T/P/1.blob") == "DEADBEEF"
        assert data_section(tmp_path / "data/S/T.txt") == "17,lobs/S/T/P/1.blob;"

    def test_zero_row_table_still_writes_its_file(self, tmp_path):
        schema, table = small_table("CREATE SCHEMA S; CREATE TABLE S.T (A INTEGER);")
        result = write_table_data(tmp_path, schema, table, make_stream(table, []), no_lobs)
        assert result.rows == 0
        assert data_section(tmp_path / "data/S/T.txt") == ""
        header, rows = open_table_data(tmp_path / "data/S/T.txt")
        assert [c.name for c in header.columns] == ["A"]
        assert list(rows) == []

    def test_clob_accepts_inline_text_cell(self, tmp_path):
        schema, table = small_table("CREATE SCHEMA S; CREATE TABLE S.T (N CLOB);")
        write_table_data(
            tmp_path, schema, table, make_stream(table, [("payload text",)]), no_lobs
        )
        assert read_utf16(tmp_path / "lobs/S/T/N/1.nclob") == "payload text"

    def test_lob_files_numbered_by_row_ordinal(self, tmp_path):
        schema, table = small_table("CREATE SCHEMA S; CREATE TABLE S.T (N CLOB);")
        write_table_data(
            tmp_path,
            schema,
            table,
            make_stream(table, [("first",), (None,), ("third",)]),
            no_lobs,
        )
        lob_dir = tmp_path / "lobs/S/T/N"
        assert sorted(p.name for p in lob_dir.iterdir()) == ["1.nclob", "3.nclob"]

    def test_embedded_newline_value_round_trips(self, tmp_path):
        schema, table = small_table(
            "CREATE SCHEMA S; CREATE TABLE S.T (A CHARACTER VARYING(10));"
        )
        write_table_data(
            tmp_path, schema, table, make_stream(table, [("a\nb",), ("c",)]), no_lobs
        )
        header, rows = open_table_data(tmp_path / "data/S/T.txt")
        assert list(rows) == [["a\nb"], ["c"]]
        # The physical file has more lines than rows; only the length
        # prefixes make that unambiguous.
        assert data_section(tmp_path / "data/S/T.txt").count("\n") == 2

    def test_control_character_rejected_and_partial_file_removed(self, tmp_path):
        schema, table = small_table(
            "CREATE SCHEMA S; CREATE TABLE S.T (A CHARACTER VARYING(10));"
        )
        with pytest.raises(ArchiveError) as err:
            write_table_data(
                tmp_path, schema, table, make_stream(table, [("ok",), ("a\x01b",)]), no_lobs
            )
        assert "column:S.T.A" in str(err.value)
        assert "row 2" in str(err.value)
        assert "U+0001" in str(err.value)
        assert not (tmp_path / "data/S/T.txt").exists()

    def test_tab_and_line_breaks_are_legal_text(self, tmp_path):
        schema, table = small_table(
            "CREATE SCHEMA S; CREATE TABLE S.T (A CHARACTER VARYING(10));"
        )
        write_table_data(
            tmp_path, schema, table, make_stream(table, [("a\tb\r\nc",)]), no_lobs
        )
        header, rows = open_table_data(tmp_path / "data/S/T.txt")
        assert list(rows) == [["a\tb\r\nc"]]

    def test_stream_column_mismatch(self, tmp_path):
        schema, table = small_table("CREATE SCHEMA S; CREATE TABLE S.T (A INTEGER);")
        other = build_model(
            "CREATE SCHEMA X; CREATE TABLE X.Y (B INTEGER);"
        ).schemas[0].tables[0]
        with pytest.raises(ArchiveError) as err:
            write_table_data(
                tmp_path, schema, table, make_stream(other, [("1",)]), no_lobs
            )
        assert "does not deliver this column" in str(err.value)

    def test_locator_in_scalar_column_rejected(self, tmp_path):
        schema, table = small_table("CREATE SCHEMA S; CREATE TABLE S.T (A INTEGER);")
        locator = LobLocator("S", "T", "A", 0, "clob", handle="h")
        with pytest.raises(ArchiveError) as err:
            write_table_data(
                tmp_path, schema, table, make_stream(table, [(locator,)]), no_lobs
            )
        assert "expected text or NULL" in str(err.value)
        assert not (tmp_path / "data/S/T.txt").exists()

    def test_header_contents(self, tmp_path):
        ddl = (
            "CREATE SCHEMA S;"
            "CREATE TABLE S.T ("
            "  ID INTEGER NOT NULL,"
            "  N CHARACTER VARYING(8) DEFAULT 'x',"
            "  CONSTRAINT T_PK PRIMARY KEY (ID)"
            ");"
        )
        schema, table = small_table(ddl)
        write_table_data(
            tmp_path, schema, table, make_stream(table, [], note="primary key (ID)"), no_lobs
        )
        header, rows = open_table_data(tmp_path / "data/S/T.txt")
        list(rows)
        assert header.schema == "S" and header.table == "T"
        assert header.row_order == "primary key (ID)"
        assert [(c.name, c.type_text, c.nullable, c.default) for c in header.columns] == [
            ("ID", "INTEGER", False, None),
            ("N", "CHARACTER VARYING(8)", True, "'x'"),
        ]
        assert [(k.kind, k.name, k.columns) for k in header.keys] == [
            ("PRIMARY_KEY", "T_PK", ("ID",))
        ]


# ---------------------------------------------------------------------------
# DDL partitioning


class TestDdlFiles:
    def test_schema_order_follows_references(self):
        model = build_model(BASIC_DDL)
        assert schema_order(model) == ["APP", "EXTRA"]

    def test_cross_schema_foreign_key_moves_to_later_file(self):
        files = ddl_files(build_model(BASIC_DDL))
        assert [f.filename for f in files] == ["0001_APP.sql", "0002_EXTRA.sql"]
        assert "ALTER TABLE" not in files[0].text
        assert (
            "ALTER TABLE EXTRA.ORDERS ADD CONSTRAINT ORD_FK FOREIGN KEY (CUST)"
            " REFERENCES APP.CUSTOMER (ID);" in files[1].text
        )
        # The CREATE TABLE itself must not reference the other schema.
        create = files[1].text.split("ALTER")[0]
        assert "REFERENCES" not in create

    def test_mutual_schema_references_resolve_in_last_file(self):
        ddl = """
        CREATE SCHEMA A;
        CREATE SCHEMA B;
        CREATE TABLE A.T1 (X INTEGER, CONSTRAINT T1_PK PRIMARY KEY (X),
          CONSTRAINT T1_FK FOREIGN KEY (X) REFERENCES B.T2 (Y));
        CREATE TABLE B.T2 (Y INTEGER, CONSTRAINT T2_PK PRIMARY KEY (Y),
          CONSTRAINT T2_FK FOREIGN KEY (Y) REFERENCES A.T1 (X));
        """
        files = ddl_files(build_model(ddl))
        assert [f.schema for f in files] == ["A", "B"]
        assert files[0].text.count("ALTER TABLE") == 0
        assert files[1].text.count("ALTER TABLE") == 2
        # Executed in order, every statement only references existing tables.
        parsed = parse_ddl("\n".join(f.text for f in files))
        assert not parsed.errors
        assert not parsed.model.link_references()

    def test_views_keep_their_schema_after_their_sources(self):
        ddl = """
        CREATE SCHEMA A;
        CREATE SCHEMA Z;
        CREATE TABLE Z.BASE (X INTEGER, CONSTRAINT B_PK PRIMARY KEY (X));
        CREATE VIEW A.V1 (C) AS SELECT X FROM Z.BASE;
        """
        files = ddl_files(build_model(ddl))
        assert [f.schema for f in files] == ["Z", "A"]
        assert "CREATE VIEW A.V1" in files[1].text

    def test_grants_live_in_their_schema_file(self):
        files = ddl_files(build_model(BASIC_DDL))
        assert "GRANT SELECT ON APP.CUSTOMER TO ARCHIVIST;" in files[0].text
        assert "GRANT" not in files[1].text

    def test_quoted_schema_name_escaped_in_filename(self):
        ddl = 'CREATE SCHEMA "My App";CREATE TABLE "My App".T (A INTEGER);'
        files = ddl_files(build_model(ddl))
        assert files[0].filename == "0001_My%20App.sql"

    def test_concatenated_files_reparse_to_the_same_model(self):
        model = build_model(BASIC_DDL)
        text = "\n".join(f.text for f in ddl_files(model))
        parsed = parse_ddl(text)
        assert not parsed.errors
        parsed.model.link_references()
        assert parsed.model.signature(rendered_only=True) == model.signature(
            rendered_only=True
        )


# ---------------------------------------------------------------------------
# Whole archives


class TestCreateArchive:
    def test_layout_and_manifest(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        archive = create_archive(session, adapter, tmp_path / "arc", label="basic")
        expected = {
            "ddl/0001_APP.sql",
            "ddl/0002_EXTRA.sql",
            "data/APP/CUSTOMER.txt",
            "data/APP/dmpFile.xsl",
            "data/EXTRA/ORDERS.txt",
            "data/EXTRA/dmpFile.xsl",
            "lobs/APP/CUSTOMER/NOTES/1.nclob",
            "lobs/APP/CUSTOMER/PHOTO/1.blob",
            "reference/reference.xml",
        }
        assert {info.path for info in archive.files} == expected
        on_disk = {
            p.relative_to(tmp_path / "arc").as_posix()
            for p in (tmp_path / "arc").rglob("*")
            if p.is_file()
        }
        assert on_disk == expected | {MANIFEST_NAME}
        assert (tmp_path / "arc" / "docs").is_dir()
        info = archive.data_file_for("APP", "CUSTOMER")
        assert info.rows == 2 and info.kind == "data"
        for entry in archive.files:
            path = tmp_path / "arc" / Path(*entry.path.split("/"))
            assert path.stat().st_size == entry.size
        manifest = ET.fromstring((tmp_path / "arc" / MANIFEST_NAME).read_bytes())
        assert manifest.get("formatVersion") == FORMAT_VERSION
        assert manifest.get("created") == "2026-02-03T04:05:06Z"
        assert manifest.get("label") == "basic"
        paths = [el.get("path") for el in manifest]
        assert paths == sorted(paths)

    def test_every_file_is_utf16_plain_text(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        create_archive(session, adapter, tmp_path / "arc")
        checked = 0
        for path in (tmp_path / "arc").rglob("*"):
            if not path.is_file():
                continue
            text = read_utf16(path)
            assert not _CONTROL.search(text), f"{path} holds control characters"
            checked += 1
        assert checked >= 10

    def test_not_ready_session_refused(self, tmp_path):
        ddl = "CREATE SCHEMA S; CREATE TABLE S.T (A MY_TYPE(10));"
        root = write_raw_fixture(tmp_path / "fx", ddl, {})
        adapter = FixtureAdapter(root)
        session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK)
        dest = tmp_path / "arc"
        with pytest.raises(ArchiveError) as err:
            create_archive(session, adapter, dest)
        assert "not ready" in str(err.value)
        assert "column:S.T.A" in str(err.value)
        assert not dest.exists()

    def test_destination_must_be_empty(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        dest = tmp_path / "arc"
        dest.mkdir()
        (dest / "leftover.txt").write_text("x")
        with pytest.raises(ArchiveError) as err:
            create_archive(session, adapter, dest)
        assert "not empty" in str(err.value)

    def test_empty_model_archive(self, tmp_path):
        root = write_raw_fixture(tmp_path / "fx", "", {})
        adapter = FixtureAdapter(root)
        session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK)
        archive = create_archive(session, adapter, tmp_path / "arc")
        assert [info.kind for info in archive.files] == ["reference"]
        assert read_archive(tmp_path / "arc").findings == []

    def test_single_empty_table(self, tmp_path):
        ddl = "CREATE SCHEMA S; CREATE TABLE S.T (A INTEGER);"
        session, adapter = fixture_session(tmp_path, ddl, {("S", "T"): []})
        archive = create_archive(session, adapter, tmp_path / "arc")
        kinds = sorted(info.kind for info in archive.files)
        assert kinds == ["data", "ddl", "reference", "stylesheet"]
        assert archive.data_file_for("S", "T").rows == 0

    def test_identical_runs_produce_identical_bytes(self, tmp_path):
        # One source, two independent sessions and archives.
        model = build_model(BASIC_DDL)
        root = write_fixture(tmp_path / "fx", model, BASIC_ROWS)
        for run in ("one", "two"):
            adapter = FixtureAdapter(root)
            session = analyze(
                adapter.introspect(), adapter.mode, clock=CLOCK, audit=True
            )
            create_archive(session, adapter, tmp_path / run, label="same")
        first = sorted(
            p.relative_to(tmp_path / "one").as_posix()
            for p in (tmp_path / "one").rglob("*")
            if p.is_file()
        )
        second = sorted(
            p.relative_to(tmp_path / "two").as_posix()
            for p in (tmp_path / "two").rglob("*")
            if p.is_file()
        )
        assert first == second
        for rel in first:
            left = (tmp_path / "one" / Path(*rel.split("/"))).read_bytes()
            right = (tmp_path / "two" / Path(*rel.split("/"))).read_bytes()
            assert left == right, f"{rel} differs between identical runs"

    def test_stream_failure_leaves_no_manifest_and_logs_rows(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)

        class FailingAdapter:
            def __init__(self, inner, target, after):
                self._inner = inner
                self._target = target
                self._after = after

            def stream_rows(self, schema, table):
                stream = self._inner.stream_rows(schema, table)
                if (schema, table) != self._target:
                    return stream
                after = self._after

                def rows():
                    for i, row in enumerate(iter(stream)):
                        if i >= after:
                            raise RuntimeError("simulated source failure")
                        yield row

                return RowStream(stream.columns, rows(), stream.order_note)

            def fetch_lob(self, locator):
                return self._inner.fetch_lob(locator)

        failing = FailingAdapter(adapter, ("EXTRA", "ORDERS"), after=1)
        dest = tmp_path / "arc"
        with pytest.raises(ArchiveError) as err:
            create_archive(session, failing, dest)
        assert "table:EXTRA.ORDERS" in str(err.value)
        assert not (dest / MANIFEST_NAME).exists()
        assert not (dest / "data/EXTRA/ORDERS.txt").exists()
        with pytest.raises(ArchiveError):
            read_archive(dest)
        entry = session.changelog[-1]
        assert entry.action == ACTION_ARCHIVE_FAILED
        assert entry.actor == Actor.USER
        assert entry.target == "table:EXTRA.ORDERS"
        assert "1 row(s) written before failure" in entry.detail
        # The session survives the failure: a sound adapter archives fine.
        archive = create_archive(session, adapter, tmp_path / "arc2")
        assert read_archive(tmp_path / "arc2").findings == []
        assert any(
            e.get("action") == ACTION_ARCHIVE_FAILED
            for e in _reference_entries(archive)
        )

    def test_creation_recorded_in_changelog_and_reference(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        archive = create_archive(session, adapter, tmp_path / "arc", label="rec")
        entry = session.changelog[-1]
        assert entry.action == ACTION_ARCHIVE_CREATED
        assert entry.actor == Actor.USER
        assert entry.target == "database:"
        assert "2 table(s), 4 row(s)" in entry.detail
        assert FORMAT_VERSION in entry.detail
        assert 'label "rec"' in entry.detail
        entries = _reference_entries(archive)
        assert entries[-1].get("action") == ACTION_ARCHIVE_CREATED
        assert len(entries) == len(session.changelog)

    def test_no_undo_unit_for_archiving(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        depth = len(session.undo_stack)
        create_archive(session, adapter, tmp_path / "arc")
        assert len(session.undo_stack) == depth


def _reference_entries(archive: Archive):
    return archive.read_reference().findall("changelog/entry")


# ---------------------------------------------------------------------------
# The reference document


class TestReferenceDocument:
    def _session_with_exclusions(self, tmp_path):
        ddl = BASIC_DDL + (
            "CREATE TRIGGER APP.TRG_AUDIT AFTER INSERT ON APP.CUSTOMER"
            " CALL NATIVE_AUDIT();"
        )
        root = write_raw_fixture(
            tmp_path / "fx",
            ddl,
            {
                ("APP", "CUSTOMER"): (
                    ["ID", "NAME", "NOTES", "PHOTO"],
                    ["1\tAnn\t\\N\t\\N", "2\t\\N\t\\N\t\\N"],
                ),
                ("EXTRA", "ORDERS"): (["ONO", "CUST"], ["10\t1"]),
            },
        )
        adapter = FixtureAdapter(root)
        session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK, audit=True)
        exclude(session, make_ref("column", "APP", "CUSTOMER", "NAME"))
        exclude(session, make_ref("table", "EXTRA", "ORDERS"), confirmed=True)
        return session, adapter

    def test_parts_cover_every_tracked_object(self, tmp_path):
        session, adapter = self._session_with_exclusions(tmp_path)
        archive = create_archive(session, adapter, tmp_path / "arc")
        doc = archive.read_reference()
        assert doc.get("version") == "1"
        assert doc.get("finalized") == "false"
        part1 = model_from_element(doc.find("archivedLogic/model"))
        part1_refs = {ref for ref, _, _ in part1.iter_objects()}
        part2_refs = {
            el.get("ref") for el in doc.findall("excludedObjects/excludedObject")
        }
        assert part1_refs | part2_refs == set(session.statuses)
        assert not (part1_refs & part2_refs)

    def test_excluded_column_documented_with_status_and_definition(self, tmp_path):
        session, adapter = self._session_with_exclusions(tmp_path)
        archive = create_archive(session, adapter, tmp_path / "arc")
        doc = archive.read_reference()
        ref = make_ref("column", "APP", "CUSTOMER", "NAME")
        entry = next(
            el
            for el in doc.findall("excludedObjects/excludedObject")
            if el.get("ref") == ref
        )
        assert entry.get("kind") == "column"
        assert entry.get("bullet") == Bullet.EXCLUDED_MANUAL
        assert any(
            "user decision" in f.get("text", "")
            for f in entry.findall("finding")
        )
        col = entry.find("column")
        assert col.get("name") == "NAME"
        assert col.find("type").get("kind") == "CHARACTER_VARYING"

    def test_native_trigger_source_preserved_in_part2(self, tmp_path):
        session, adapter = self._session_with_exclusions(tmp_path)
        archive = create_archive(session, adapter, tmp_path / "arc")
        doc = archive.read_reference()
        entries = {
            el.get("ref"): el
            for el in doc.findall("excludedObjects/excludedObject")
        }
        trigger_refs = [r for r in entries if r.startswith("trigger:")]
        assert trigger_refs, "the native trigger must appear among the exclusions"
        trigger_el = entries[trigger_refs[0]].find("trigger")
        assert "NATIVE_AUDIT" in trigger_el.get("sourceText", "")

    def test_excluded_table_is_shallow_its_members_have_entries(self, tmp_path):
        session, adapter = self._session_with_exclusions(tmp_path)
        doc = build_reference(session)
        entries = {
            el.get("ref"): el
            for el in doc.findall("excludedObjects/excludedObject")
        }
        table_ref = make_ref("table", "EXTRA", "ORDERS")
        assert list(entries[table_ref].find("table")) == []
        assert make_ref("column", "EXTRA", "ORDERS", "ONO") in entries
        assert make_ref("constraint", "EXTRA", "ORDERS", "ORD_PK") in entries

    def test_changelog_entries_match_session(self, tmp_path):
        session, adapter = self._session_with_exclusions(tmp_path)
        doc = build_reference(session)
        entries = doc.findall("changelog/entry")
        assert len(entries) == len(session.changelog)
        for el, entry in zip(entries, session.changelog):
            assert el.get("at") == entry.timestamp
            assert el.get("actor") == entry.actor
            assert el.get("action") == entry.action
            assert el.get("target") == entry.target
            assert el.get("detail") == entry.detail


# ---------------------------------------------------------------------------
# The two clearance routes around a native type


FIG_DDL = """
CREATE SCHEMA SHOP;
CREATE TABLE SHOP.PRODUCT (
  ID INTEGER NOT NULL,
  CODE MY_TYPE(10),
  CONSTRAINT PROD_PK PRIMARY KEY (ID)
);
"""

FIG_DATA = {
    ("SHOP", "PRODUCT"): (["ID", "CODE"], ["1\tAB-12", "2\tZZ"]),
}


class TestNativeTypeRoutes:
    def _session(self, tmp_path):
        root = write_raw_fixture(tmp_path / "fx", FIG_DDL, FIG_DATA)
        adapter = FixtureAdapter(root)
        session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK, audit=True)
        return session, adapter

    def test_synonym_route_archives_the_column_as_mapped(self, tmp_path):
        session, adapter = self._session(tmp_path)
        assert not readiness(session).ready
        add_synonym(session, "MY_TYPE", "CHARACTER VARYING(10)")
        reanalyze(session)
        assert readiness(session).ready
        archive = create_archive(session, adapter, tmp_path / "arc")
        assert "CODE CHARACTER VARYING(10)" in archive.ddl_text()
        header, rows = archive.open_table("SHOP", "PRODUCT")
        assert [c.type_text for c in header.columns] == [
            "INTEGER",
            "CHARACTER VARYING(10)",
        ]
        assert list(rows) == [["1", "AB-12"], ["2", "ZZ"]]
        # The archived logic still records where the type came from.
        code = archive.archived_model().table("SHOP", "PRODUCT").column("CODE")
        assert code.native_type is not None
        assert code.native_type.name == "MY_TYPE"
        assert code.native_type.args == (10,)

    def test_exclusion_route_documents_the_native_column(self, tmp_path):
        session, adapter = self._session(tmp_path)
        exclude(session, make_ref("column", "SHOP", "PRODUCT", "CODE"))
        assert readiness(session).ready
        archive = create_archive(session, adapter, tmp_path / "arc")
        assert "CODE" not in archive.ddl_text()
        header, rows = archive.open_table("SHOP", "PRODUCT")
        assert [c.name for c in header.columns] == ["ID"]
        assert list(rows) == [["1"], ["2"]]
        doc = archive.read_reference()
        entry = next(
            el
            for el in doc.findall("excludedObjects/excludedObject")
            if el.get("ref") == make_ref("column", "SHOP", "PRODUCT", "CODE")
        )
        native = entry.find("column/nativeType")
        assert native.get("name") == "MY_TYPE"
        assert [a.get("value") for a in native.findall("arg")] == ["10"]

    def test_both_routes_reach_the_same_row_payloads_for_kept_columns(self, tmp_path):
        session_a, adapter_a = self._session(tmp_path)
        add_synonym(session_a, "MY_TYPE", "CHARACTER VARYING(10)")
        reanalyze(session_a)
        archive_a = create_archive(session_a, adapter_a, tmp_path / "arc_a")
        root_b = write_raw_fixture(tmp_path / "fx_b", FIG_DDL, FIG_DATA)
        adapter_b = FixtureAdapter(root_b)
        session_b = analyze(adapter_b.introspect(), adapter_b.mode, clock=CLOCK)
        exclude(session_b, make_ref("column", "SHOP", "PRODUCT", "CODE"))
        archive_b = create_archive(session_b, adapter_b, tmp_path / "arc_b")
        _, rows_a = archive_a.open_table("SHOP", "PRODUCT")
        _, rows_b = archive_b.open_table("SHOP", "PRODUCT")
        assert [row[0] for row in rows_a] == [row[0] for row in rows_b]


# ---------------------------------------------------------------------------
# Reading and integrity


class TestReadArchive:
    def _fresh(self, tmp_path) -> Path:
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        create_archive(session, adapter, tmp_path / "arc")
        return tmp_path / "arc"

    def test_fresh_archive_has_no_findings(self, tmp_path):
        root = self._fresh(tmp_path)
        archive = read_archive(root)
        assert archive.findings == []
        assert archive.format_version == FORMAT_VERSION
        assert archive.created == "2026-02-03T04:05:06Z"

    def test_missing_manifest_is_an_invalid_archive(self, tmp_path):
        root = self._fresh(tmp_path)
        (root / MANIFEST_NAME).unlink()
        with pytest.raises(ArchiveError) as err:
            read_archive(root)
        assert "invalid or incomplete archive" in str(err.value)

    def test_garbage_manifest_is_an_invalid_archive(self, tmp_path):
        root = self._fresh(tmp_path)
        (root / MANIFEST_NAME).write_text("not xml at all")
        with pytest.raises(ArchiveError):
            read_archive(root)

    def test_unknown_format_version_refused(self, tmp_path):
        root = self._fresh(tmp_path)
        text = read_utf16(root / MANIFEST_NAME).replace(
            FORMAT_VERSION, "other-format/9"
        )
        _rewrite_utf16(root / MANIFEST_NAME, text)
        with pytest.raises(ArchiveError) as err:
            read_archive(root)
        assert "unsupported archive format" in str(err.value)

    def test_deleted_lob_file_yields_orphaned_reference_finding(self, tmp_path):
        root = self._fresh(tmp_path)
        lob = "lobs/APP/CUSTOMER/NOTES/1.nclob"
        (root / Path(*lob.split("/"))).unlink()
        findings = read_archive(root).findings
        assert f"{lob}: file missing" in findings
        assert any(
            "orphaned large-object reference " + lob in f for f in findings
        ), findings

    def test_truncated_file_yields_size_finding(self, tmp_path):
        root = self._fresh(tmp_path)
        target = root / "ddl" / "0001_APP.sql"
        target.write_bytes(target.read_bytes()[:-8])
        findings = read_archive(root).findings
        assert any(
            f.startswith("ddl/0001_APP.sql:") and "manifest says" in f
            for f in findings
        )

    def test_flipped_byte_yields_digest_finding(self, tmp_path):
        root = self._fresh(tmp_path)
        target = root / "lobs/APP/CUSTOMER/PHOTO/1.blob"
        data = bytearray(target.read_bytes())
        # Swap one hex digit for another: same size, different content.
        pos = data.index(ord("D"))
        data[pos] = ord("A")
        target.write_bytes(bytes(data))
        findings = read_archive(root).findings
        assert "lobs/APP/CUSTOMER/PHOTO/1.blob: content digest mismatch" in findings
        assert read_archive(root, verify=False).findings == []

    def test_stray_file_reported(self, tmp_path):
        root = self._fresh(tmp_path)
        (root / "data" / "APP" / "extra.tmp").write_text("x")
        findings = read_archive(root).findings
        assert "data/APP/extra.tmp: file not in manifest" in findings

    def test_row_count_mismatch_reported(self, tmp_path):
        root = self._fresh(tmp_path)
        text = read_utf16(root / MANIFEST_NAME)
        assert 'rows="2"' in text
        _rewrite_utf16(root / MANIFEST_NAME, text.replace('rows="2"', 'rows="3"', 1))
        findings = read_archive(root).findings
        assert any("2 row(s) on disk, manifest says 3" in f for f in findings)

    def test_reader_needs_no_source(self, tmp_path):
        session, adapter = fixture_session(tmp_path, BASIC_DDL, BASIC_ROWS)
        create_archive(session, adapter, tmp_path / "arc")
        import shutil

        shutil.rmtree(tmp_path / "fx")
        archive = read_archive(tmp_path / "arc")
        assert archive.findings == []
        header, rows = archive.open_table("APP", "CUSTOMER")
        decoded = list(rows)
        assert decoded[0][0] == "1"
        assert archive.fetch_lob(decoded[0][2]) == "long note\nwith a line break"
        assert archive.fetch_lob(decoded[0][3]) == b"\xde\xad\xbe\xef"

    def test_lob_reference_path_traversal_refused(self, tmp_path):
        root = self._fresh(tmp_path)
        archive = read_archive(root)
        for bad in ["../secret", "/etc/passwd", "docs/x.nclob", "lobs/../x.nclob"]:
            with pytest.raises(ArchiveError):
                archive.fetch_lob(bad)


def _rewrite_utf16(path: Path, text: str) -> None:
    path.write_bytes(b"\xff\xfe" + text.encode("utf-16-le"))


# ---------------------------------------------------------------------------
# Generated round trips


class TestArchiveRoundTrip:
    @pytest.mark.parametrize("seed", range(6))
    def test_generated_models_round_trip(self, tmp_path, seed):
        rng = random.Random(2600 + seed)
        model = random_model(rng, max_schemas=2, max_tables=4)
        rows = populate_rows(rng, model, max_rows=8)
        root = write_fixture(tmp_path / "fx", model, rows)
        adapter = FixtureAdapter(root)
        session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK, audit=True)
        report = readiness(session)
        assert report.ready, report.blockers
        archive = create_archive(session, adapter, tmp_path / "arc")
        back = read_archive(tmp_path / "arc")
        assert back.findings == []
        # The DDL, executed in order, reproduces the archivable logic.
        parsed = parse_ddl(back.ddl_text())
        assert not parsed.errors
        parsed.model.link_references()
        expected_model = archival_model(session)
        assert parsed.model.signature(rendered_only=True) == expected_model.signature(
            rendered_only=True
        )
        # The reference document's first part carries the same logic.
        assert back.archived_model().signature() == expected_model.signature()
        # Every table's decoded rows equal the typed rows, payloads included.
        for schema in model.schemas:
            for table in schema.tables:
                expected = [
                    _expected_items(table, row)
                    for row in sort_rows(table, rows[(schema.name, table.name)])
                ]
                header, decoded = back.open_table(schema.name, table.name)
                actual = []
                for row in decoded:
                    cells = []
                    for col, item in zip(header.columns, row):
                        if col.lob is not None and item is not None:
                            cells.append(back.fetch_lob(item))
                        else:
                            cells.append(item)
                    actual.append(cells)
                assert actual == expected, f"{schema.name}.{table.name}"

    @pytest.mark.parametrize("seed", [0, 1])
    def test_generated_archives_are_plain_utf16_text(self, tmp_path, seed):
        rng = random.Random(9100 + seed)
        model = random_model(rng, max_schemas=2, max_tables=3)
        rows = populate_rows(rng, model, max_rows=5)
        root = write_fixture(tmp_path / "fx", model, rows)
        adapter = FixtureAdapter(root)
        session = analyze(adapter.introspect(), adapter.mode, clock=CLOCK)
        create_archive(session, adapter, tmp_path / "arc")
        for path in (tmp_path / "arc").rglob("*"):
            if path.is_file():
                assert not _CONTROL.search(read_utf16(path)), path


def _expected_items(table, row):
    cells = []
    for col, value in zip(table.columns, row):
        if value is None:
            cells.append(None)
        elif isinstance(col.col_type, ArchivalType) and col.col_type.is_lob:
            cells.append(
                bytes(value) if col.col_type.kind is TypeKind.BLOB else str(value)
            )
        else:
            cells.append(render_value(value, col.col_type))
    return cells


# ---------------------------------------------------------------------------
# Pretty-printing


class _TableScrape(html.parser.HTMLParser):
    def __init__(self):
        super().__init__()
        self.headers: list[str] = []
        self.rows: list[list[tuple[str, str | None]]] = []
        self._cell: list[str] | None = None
        self._tag = None
        self._class = None

    def handle_starttag(self, tag, attrs):
        if tag == "tr":
            self.rows.append([])
        elif tag in ("th", "td"):
            self._tag = tag
            self._class = dict(attrs).get("class")
            self._cell = []

    def handle_endtag(self, tag):
        if tag == "th" and self._cell is not None:
            self.headers.append("".join(self._cell))
            self._cell = None
        elif tag == "td" and self._cell is not None:
            self.rows[-1].append(("".join(self._cell), self._class))
            self._cell = None

    def handle_data(self, data):
        if self._cell is not None:
            self._cell.append(data)


def _scrape(html_text: str) -> _TableScrape:
    scraper = _TableScrape()
    scraper.feed(html_text)
    scraper.rows = [r for r in scraper.rows if r]
    return scraper


class TestRenderPretty:
    def _data_file(self, tmp_path, rows):
        schema, table = small_table(
            "CREATE SCHEMA S;"
            "CREATE TABLE S.T (A CHARACTER VARYING(10), B CHARACTER VARYING(10));"
        )
        write_table_data(tmp_path, schema, table, make_stream(table, rows), no_lobs)
        return tmp_path / "data/S/T.txt"

    def test_named_columns_and_cells(self, tmp_path):
        path = self._data_file(tmp_path, [("a", "b"), ("c", "d")])
        scraped = _scrape(render_pretty(path))
        assert scraped.headers == ["A", "B"]
        assert [[c[0] for c in row] for row in scraped.rows] == [
            ["a", "b"],
            ["c", "d"],
        ]

    def test_null_distinguishable_from_the_word_null(self, tmp_path):
        path = self._data_file(tmp_path, [(None, "NULL")])
        scraped = _scrape(render_pretty(path))
        (row,) = scraped.rows
        assert row[0] == ("NULL", "null")
        assert row[1] == ("NULL", None)

    def test_empty_string_cell_stays_empty(self, tmp_path):
        path = self._data_file(tmp_path, [("", "x")])
        scraped = _scrape(render_pretty(path))
        assert scraped.rows[0][0] == ("", None)

    def test_zero_rows_render_header_only(self, tmp_path):
        path = self._data_file(tmp_path, [])
        scraped = _scrape(render_pretty(path))
        assert scraped.headers == ["A", "B"]
        assert scraped.rows == []

    def test_markup_in_values_is_escaped(self, tmp_path):
        path = self._data_file(tmp_path, [("<b>&amp;", "ok")])
        text = render_pretty(path)
        assert "<td>&lt;b&gt;&amp;amp;</td>" in text
        assert _scrape(text).rows[0][0][0] == "<b>&amp;"

    def test_grid_styling_present(self, tmp_path):
        text = render_pretty(self._data_file(tmp_path, [("a", "b")]))
        assert "border-collapse: collapse" in text
        assert "border: 1px solid" in text

    def test_malformed_data_diagnosed_with_offset(self, tmp_path):
        path = self._data_file(tmp_path, [("a", "b")])
        raw = read_utf16(path)
        _rewrite_utf16(path, raw[:-1])  # chop the final ';'
        with pytest.raises(DataFormatError) as err:
            render_pretty(path)
        assert "character offset" in str(err.value)

    def test_stylesheet_well_formed_and_aligned_with_renderer(self):
        root = ET.fromstring(DMP_STYLESHEET.encode("utf-16"))
        xsl = "{http://www.w3.org/1999/XSL/Transform}"
        assert root.tag == f"{xsl}stylesheet"
        template = root.find(f"{xsl}template")
        assert template.get("match") == "/tableDump"
        text = DMP_STYLESHEET
        # Same visual vocabulary as the direct renderer.
        assert 'class="data"' in text
        assert 'class="null"' in text and ">NULL<" in text
        assert "border-collapse: collapse" in text
        assert 'select="@value"' in text and "@null = 'true'" in text

    def test_table_xml_round_trips_awkward_characters(self, tmp_path):
        path = self._data_file(tmp_path, [("a\tb", "c\r\nd"), (None, "")])
        doc = ET.fromstring(table_to_xml(path).encode("utf-16"))
        rows = [
            [
                None if item.get("null") == "true" else item.get("value")
                for item in row
            ]
            for row in doc.findall("rows/row")
        ]
        assert rows == [["a\tb", "c\r\nd"], [None, ""]]
        assert [c.get("name") for c in doc.findall("tableData/column")] == ["A", "B"]


# ---------------------------------------------------------------------------
# Streaming bound


class _GeneratedSource:
    """A source that materializes rows only as the stream asks for them."""

    def __init__(self, table, nrows: int):
        self._table = table
        self.nrows = nrows

    def stream_rows(self, schema, table):
        nrows = self.nrows

        def rows():
            for i in range(nrows):
                yield (str(i), "x" * 40, "y" * 40)

        return RowStream(tuple(self._table.columns), rows(), "generated")

    def fetch_lob(self, locator):
        raise AssertionError("no large objects here")


class TestStreamingBound:
    def test_peak_memory_independent_of_table_size(self, tmp_path):
        import tracemalloc

        ddl = (
            "CREATE SCHEMA S; CREATE TABLE S.T ("
            "ID CHARACTER VARYING(12), A CHARACTER VARYING(64),"
            " B CHARACTER VARYING(64));"
        )
        model = build_model(ddl)
        table = model.schemas[0].tables[0]
        session = analyze(model, clock=CLOCK)
        source = _GeneratedSource(table, nrows=20_000)
        tracemalloc.start()
        create_archive(session, source, tmp_path / "arc")
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        data_bytes = (tmp_path / "arc" / "data/S/T.txt").stat().st_size
        assert data_bytes > 3_000_000
        # Far below the table size: the writer held rows, not tables.
        assert peak < data_bytes / 4
        assert read_archive(tmp_path / "arc").data_file_for("S", "T").rows == 20_000
