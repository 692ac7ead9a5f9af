"""Parser behaviour over the built-in schemas and mapping configs."""

import json

import pytest

from evigraph.casestudy import fixture_bytes, fixture_text
from evigraph.ingest import mapping_config_from_dict, parse_source
from evigraph.types import (
    AttributeKind,
    ColumnMapping,
    MappingConfig,
    Role,
    SourceDescriptor,
    SourceKind,
    UnknownFormat,
    make_source_id,
)


def descr(kind: SourceKind, content: bytes = b"") -> SourceDescriptor:
    return SourceDescriptor(
        source_id=make_source_id(kind, content), source_kind=kind,
        display_name="test", ingested_at=0, original_uri="")


def kinds_of(record):
    return sorted((a.kind.value, a.column) for a in record.attributes)


class TestMemorySchema:
    def test_endpoint_cells_expand(self):
        content = fixture_bytes("memory.csv")
        records, warnings = parse_source(
            content, descr(SourceKind.MEMORY_ARTIFACT, content))
        assert len(records) == 1 and not warnings
        rec = records[0]
        by_col = {(a.kind, a.column): a for a in rec.attributes}
        local_ip = by_col[(AttributeKind.IPV4, "local_address")]
        assert local_ip.value == "10.0.0.20" and local_ip.role == Role.LOCAL
        assert by_col[(AttributeKind.PORT, "local_address")].value == 52814
        # A service-name endpoint yields port and protocol attributes.
        assert by_col[(AttributeKind.PORT, "foreign_address")].value == 22
        proto = by_col[(AttributeKind.PROTOCOL, "foreign_address#service")]
        assert proto.value == "ssh"
        assert by_col[(AttributeKind.PROCESS_NAME, "process_name")].value == "putty"

    def test_raw_line_preserved(self):
        content = fixture_bytes("memory.csv")
        records, _ = parse_source(
            content, descr(SourceKind.MEMORY_ARTIFACT, content))
        assert records[0].raw_line == content.decode().split("\n")[1]
        assert records[0].line_number == 2


class TestNetworkSchema:
    def test_fixture_counts(self):
        content = fixture_bytes("network.csv")
        records, warnings = parse_source(
            content, descr(SourceKind.NETWORK_LOG, content))
        # Row 3 carries "---" markers; empty size cells stay silent.
        assert len(records) == 3
        assert len(warnings) == 1
        assert warnings[0].line_number == 4
        assert "missing" in warnings[0].message

    def test_values(self):
        content = fixture_bytes("network.csv")
        records, _ = parse_source(
            content, descr(SourceKind.NETWORK_LOG, content))
        first = {(a.kind, a.role): a.value for a in records[0].attributes}
        assert first[(AttributeKind.TIMESTAMP, Role.CREATED)] == 1652868605
        assert first[(AttributeKind.MAC, Role.SOURCE)] == "ff:df:f9:c4:94:ac"
        assert first[(AttributeKind.PROTOCOL, Role.NONE)] == "sshv2"
        third = {a.kind: a.value for a in records[2].attributes}
        assert third[AttributeKind.FILE_SIZE] == 4_200_000_000

    def test_required_column_failure_skips_row(self):
        content = (b"timestamp,source_ip\n"
                   b"not a date,10.0.0.1\n"
                   b"18/5/2022 10:10:05,10.0.0.2\n")
        records, warnings = parse_source(
            content, descr(SourceKind.NETWORK_LOG, content))
        assert len(records) == 1
        assert len(warnings) == 1
        assert warnings[0].line_number == 2
        assert warnings[0].message.startswith("malformed row:")

    def test_bad_optional_cell_is_soft(self):
        content = (b"timestamp,source_ip\n"
                   b"18/5/2022 10:10:05,999.999.999.999\n")
        records, warnings = parse_source(
            content, descr(SourceKind.NETWORK_LOG, content))
        assert len(records) == 1
        assert len(warnings) == 1
        assert not any(a.kind == AttributeKind.IPV4
                       for a in records[0].attributes)


class TestCloudSchema:
    def test_identity_cells_split_by_shape(self):
        content = fixture_bytes("cloud.csv")
        records, warnings = parse_source(
            content, descr(SourceKind.CLOUD_AUDIT, content))
        assert len(records) == 1 and not warnings
        by_kind = {}
        for a in records[0].attributes:
            by_kind.setdefault(a.kind, []).append(a.value)
        assert by_kind[AttributeKind.EMAIL] == ["alex@aixz.ai"]
        assert by_kind[AttributeKind.USERNAME] == ["aixz"]
        assert by_kind[AttributeKind.FILE_NAME] == ["FinAI.h5"]
        assert sorted(by_kind[AttributeKind.TIMESTAMP]) == [1650460822, 1652868640]

    def test_attribute_count(self):
        content = fixture_bytes("cloud.csv")
        records, _ = parse_source(
            content, descr(SourceKind.CLOUD_AUDIT, content))
        assert len(records[0].attributes) == 6


class TestJsonLines:
    def test_json_variant_equals_csv(self):
        csv_content = fixture_bytes("syslog.csv")
        csv_records, _ = parse_source(
            csv_content, descr(SourceKind.SYSLOG, csv_content))
        lines = csv_content.decode().strip().split("\n")
        header = lines[0].split(",")
        json_lines = []
        for row in lines[1:]:
            cells = row.split(",")
            json_lines.append(json.dumps(dict(zip(header, cells))))
        json_content = ("\n".join(json_lines) + "\n").encode()
        json_records, warnings = parse_source(
            json_content, descr(SourceKind.SYSLOG, json_content))
        assert not warnings
        assert len(json_records) == len(csv_records)
        for a, b in zip(json_records, csv_records):
            assert sorted((x.kind, x.role, x.value) for x in a.attributes) == \
                sorted((x.kind, x.role, x.value) for x in b.attributes)

    def test_malformed_json_line_warns(self):
        content = b'{"device_name": "fw"}\n{broken\n'
        records, warnings = parse_source(
            content, descr(SourceKind.SYSLOG, content))
        assert len(records) == 1
        assert warnings[0].line_number == 2


class TestMappingConfig:
    def test_generic_requires_mapping(self):
        content = b"a,b\n1,2\n"
        with pytest.raises(UnknownFormat):
            parse_source(content, descr(SourceKind.GENERIC_TABULAR, content))

    def test_mapping_fixture(self):
        config = mapping_config_from_dict(
            json.loads(fixture_text("external.mapping.json")))
        content = fixture_bytes("external.csv")
        records, warnings = parse_source(
            content, descr(SourceKind.GENERIC_TABULAR, content), config)
        assert len(records) == 1 and not warnings
        assert records[0].entity_kind.value == "ec"
        values = {a.kind: a.value for a in records[0].attributes}
        assert values[AttributeKind.IPV4] == "93.125.188.220"

    def test_mapping_overrides_builtin_schema(self):
        config = MappingConfig(column_map=(
            ColumnMapping("when", AttributeKind.TIMESTAMP, Role.CREATED),
        ), timestamp_format="%Y-%m-%d %H:%M:%S")
        content = b"when\n2022-05-18 10:10:05\n"
        records, _ = parse_source(
            content, descr(SourceKind.NETWORK_LOG, content), config)
        assert records[0].attributes[0].value == 1652868605

    def test_duplicate_columns_rejected(self):
        with pytest.raises(ValueError):
            MappingConfig(column_map=(
                ColumnMapping("a", AttributeKind.IPV4),
                ColumnMapping("a", AttributeKind.MAC),
            ))


class TestFormatDetection:
    def test_alien_header_rejected(self):
        content = b"frobs,wibbles\n1,2\n"
        with pytest.raises(UnknownFormat):
            parse_source(content, descr(SourceKind.NETWORK_LOG, content))

    def test_empty_input_yields_nothing(self):
        records, warnings = parse_source(b"", descr(SourceKind.SYSLOG))
        assert records == [] and warnings == []

    def test_record_ids_are_stable(self):
        content = fixture_bytes("syslog.csv")
        d = descr(SourceKind.SYSLOG, content)
        once, _ = parse_source(content, d)
        twice, _ = parse_source(content, d)
        assert [r.record_id for r in once] == [r.record_id for r in twice]
