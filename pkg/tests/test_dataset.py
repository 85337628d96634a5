import io
from datetime import datetime
from datetime import timezone

import pytest
import requests
from conftest import HEADER
from conftest import SIX_ROWS
from conftest import make_csv
from conftest import make_record

from cvetree.dataset import VOCABULARIES
from cvetree.dataset import balance_by_kev
from cvetree.dataset import decode_field
from cvetree.dataset import encode_row
from cvetree.dataset import encode_token
from cvetree.dataset import filter_by_date
from cvetree.dataset import filter_by_field
from cvetree.dataset import format_date
from cvetree.dataset import load_records
from cvetree.dataset import open_source
from cvetree.dataset import parse_date
from cvetree.dataset import parse_raw_csv
from cvetree.dataset import read_encoded_csv
from cvetree.dataset import validate_dataset
from cvetree.dataset import write_encoded_csv
from cvetree.exceptions import ArgumentError
from cvetree.exceptions import DatasetEncodingError
from cvetree.exceptions import DatasetSourceError
from cvetree.exceptions import DateParseError
from cvetree.exceptions import EmptyDatasetError
from cvetree.exceptions import RowError
from cvetree.exceptions import SchemaError
from cvetree.exceptions import VocabularyError

# ----------------------------------------------------------------------------


def test_parse_raw_rows(sample_csv_bytes):
    rows = list(parse_raw_csv(io.BytesIO(sample_csv_bytes)))

    assert len(rows) == 6
    assert rows[0].cve_id == "CVE-1999-0199"
    assert rows[0].base_severity == "CRITICAL"
    assert rows[0].base_score == 9.8
    assert rows[0].epss_percentile == 0.81305
    assert rows[0].line_number == 2
    assert rows[5].line_number == 7


def test_encode_sample_rows(sample_csv_bytes):
    records = [encode_row(r) for r in parse_raw_csv(io.BytesIO(sample_csv_bytes))]

    expected = [
        # severity, kev, av, ac, pr, ui, scope, cia
        (3, 0, 3, 0, 0, 0, 0, (2, 2, 2)),
        (2, 0, 3, 0, 0, 0, 0, (2, 0, 0)),
        (0, 0, 1, 0, 1, 0, 0, (1, 0, 0)),
        (2, 0, 3, 0, 0, 0, 0, (0, 0, 2)),
        (2, 0, 1, 0, 0, 1, 0, (2, 2, 2)),
        (2, 0, 1, 0, 0, 1, 0, (2, 2, 2)),
    ]
    for record, codes in zip(records, expected):
        assert (
            record.base_severity,
            record.cisa_kev,
            record.attack_vector,
            record.attack_complexity,
            record.privileges_required,
            record.user_interaction,
            record.scope,
            record.cia_impacts,
        ) == codes

    assert records[0].published_date == datetime(2020, 10, 6, 13, 15, tzinfo=timezone.utc)
    assert records[1].published_date == datetime(1997, 1, 1, 5, 0, tzinfo=timezone.utc)


def test_header_by_name_any_order_and_case():
    names = HEADER.split(",")
    reordered = [names[-1]] + [n.upper() for n in names[:-1]] + ["extra"]
    cells = SIX_ROWS[0].split(",")
    line = ",".join([cells[-1]] + cells[:-1] + ["ignored"])
    data = make_csv([line], header=",".join(reordered))

    (row,) = parse_raw_csv(io.BytesIO(data))
    assert row.cve_id == "CVE-1999-0199"
    assert row.published_date == "2020-10-06T13:15Z"


def test_bom_and_blank_lines(sample_csv_bytes):
    data = b"\xef\xbb\xbf" + sample_csv_bytes.replace(b"\n", b"\n\n", 1)
    assert len(list(parse_raw_csv(io.BytesIO(data)))) == 6


def test_missing_column():
    header = HEADER.replace(",scope", "")
    with pytest.raises(SchemaError) as exc_info:
        list(parse_raw_csv(io.BytesIO(make_csv([], header=header))))
    assert exc_info.value.column == "scope"


def test_row_errors():
    short = SIX_ROWS[1].rsplit(",", 1)[0]
    data = make_csv([SIX_ROWS[0], short])
    with pytest.raises(RowError) as exc_info:
        list(parse_raw_csv(io.BytesIO(data)))
    assert exc_info.value.line_number == 3
    assert exc_info.value.cells == tuple(short.split(","))
    assert "row: " + short in str(exc_info.value)

    empty_score = SIX_ROWS[0].replace(",9.8,", ",,")
    with pytest.raises(RowError, match="empty numeric cell"):
        list(parse_raw_csv(io.BytesIO(make_csv([empty_score]))))

    text_score = SIX_ROWS[0].replace(",9.8,", ",high,")
    with pytest.raises(RowError, match="not numeric"):
        list(parse_raw_csv(io.BytesIO(make_csv([text_score]))))

    out_of_range = SIX_ROWS[0].replace(",9.8,", ",10.5,")
    with pytest.raises(RowError, match="outside"):
        list(parse_raw_csv(io.BytesIO(make_csv([out_of_range]))))


def test_not_utf8():
    data = make_csv(SIX_ROWS[:1]).replace(b"CVE-1999-0199", b"CVE-1999-0199\xff\xfe")
    with pytest.raises(DatasetEncodingError):
        list(parse_raw_csv(io.BytesIO(data)))


def test_empty_inputs():
    with pytest.raises(EmptyDatasetError, match="empty dataset"):
        list(parse_raw_csv(io.BytesIO(b"")))

    # header only: no rows, no error
    assert list(parse_raw_csv(io.BytesIO(make_csv([])))) == []
    with pytest.raises(EmptyDatasetError):
        validate_dataset([])


# ----------------------------------------------------------------------------


def test_encode_token_normalization():
    assert encode_token("attack_vector", " adjacent network ") == 2
    assert encode_token("attack_vector", "Adjacent-Network") == 2
    assert encode_token("cisa_kev", "true") == 1
    assert encode_token("base_severity", "2", allow_codes=True) == 2

    with pytest.raises(VocabularyError) as exc_info:
        encode_token("base_severity", "MEDIUM-HIGH")
    assert exc_info.value.field == "base_severity"
    assert exc_info.value.token == "MEDIUM-HIGH"

    with pytest.raises(VocabularyError):
        encode_token("base_severity", "2")
    with pytest.raises(VocabularyError):
        encode_token("base_severity", "4", allow_codes=True)


def test_decode_inverts_encode():
    for name, vocab in VOCABULARIES.items():
        for code, token in enumerate(vocab):
            assert decode_field(name, code) == token
            assert encode_token(name, decode_field(name, code)) == code

    with pytest.raises(VocabularyError):
        decode_field("scope", 2)


def test_bad_cve_id_and_date(sample_csv_bytes):
    (row,) = list(parse_raw_csv(io.BytesIO(make_csv(SIX_ROWS[:1]))))

    bad_id = make_csv([SIX_ROWS[0].replace("CVE-1999-0199", "CVE-99-1")])
    (bad_row,) = list(parse_raw_csv(io.BytesIO(bad_id)))
    with pytest.raises(VocabularyError):
        encode_row(bad_row)

    bad_date = make_csv([SIX_ROWS[0].replace("2020-10-06T13:15Z", "06/10/2020")])
    (bad_row,) = list(parse_raw_csv(io.BytesIO(bad_date)))
    with pytest.raises(DateParseError):
        encode_row(bad_row)

    assert encode_row(row).cve_id == "CVE-1999-0199"


def test_read_encoded_csv_reports_line():
    data = make_csv([SIX_ROWS[0], SIX_ROWS[1].replace(",HIGH,7.5,", ",SEVERE,7.5,")])
    with pytest.raises(RowError) as exc_info:
        list(read_encoded_csv(io.BytesIO(data)))
    assert exc_info.value.line_number == 3
    assert "SEVERE" in str(exc_info.value)
    assert exc_info.value.cells[:2] == ("CVE-1999-0236", "SEVERE")


@pytest.mark.parametrize(
    "text,expected",
    [
        ("2020-10-06T13:15Z", datetime(2020, 10, 6, 13, 15, tzinfo=timezone.utc)),
        ("2020-10-06T13:15:30Z", datetime(2020, 10, 6, 13, 15, 30, tzinfo=timezone.utc)),
        ("2020-10-06T13:15:30.5+02:00", datetime(2020, 10, 6, 11, 15, 30, 500000, tzinfo=timezone.utc)),
        ("2020-10-06", datetime(2020, 10, 6, tzinfo=timezone.utc)),
        ("2020-10-06 13:15", datetime(2020, 10, 6, 13, 15, tzinfo=timezone.utc)),
    ],
)
def test_parse_date(text, expected):
    assert parse_date(text) == expected


def test_parse_date_invalid():
    for text in ("", "2020-13-01", "yesterday", "2020/10/06"):
        with pytest.raises(DateParseError):
            parse_date(text)


def test_format_date():
    assert format_date(datetime(2020, 10, 6, 13, 15, tzinfo=timezone.utc)) == "2020-10-06T13:15Z"
    assert format_date(datetime(2020, 10, 6, 13, 15, 7, tzinfo=timezone.utc)) == "2020-10-06T13:15:07Z"


# ----------------------------------------------------------------------------


def test_filter_by_date(sample_csv):
    records = load_records(str(sample_csv))
    kept = filter_by_date(
        records,
        datetime(2020, 1, 1, tzinfo=timezone.utc),
        datetime(2020, 12, 31, 23, 59, 59, tzinfo=timezone.utc),
    )
    assert [r.cve_id for r in kept] == ["CVE-1999-0199", "CVE-2020-8579"]

    # naive bounds are UTC
    assert filter_by_date(records, datetime(2020, 1, 1), datetime(2020, 12, 31, 23, 59)) == kept

    with pytest.raises(ArgumentError):
        filter_by_date(records, datetime(2021, 1, 1), datetime(2020, 1, 1))


def test_filter_by_field(sample_csv):
    records = load_records(str(sample_csv))

    network = filter_by_field(records, "attack_vector", ["NETWORK"])
    assert [r.cve_id for r in network] == ["CVE-1999-0199", "CVE-1999-0236", "CVE-2020-8579"]
    assert filter_by_field(records, "attack_vector", [3]) == network
    assert filter_by_field(records, "attack_vector", ["3"]) == network

    assert len(filter_by_field(records, "impact_score", ["5.9"])) == 3
    assert filter_by_field(records, "cve_id", ["cve-2020-8578"])[0].cve_id == "CVE-2020-8578"

    with pytest.raises(ArgumentError):
        filter_by_field(records, "published_date", ["2020"])
    with pytest.raises(ArgumentError):
        filter_by_field(records, "vendor", ["x"])


def test_validate_dataset(sample_csv):
    records = load_records(str(sample_csv))
    stats = validate_dataset(records)

    assert stats.row_count == 6
    assert stats.exploited_count == 0
    assert stats.non_exploited_count == 6
    assert stats.duplicate_id_count == 0
    assert stats.per_field_min_max["base_score"] == (3.3, 9.8)
    assert stats.per_field_min_max["attack_vector"] == (1, 3)


def test_validate_dataset_duplicates(caplog):
    records = [make_record("CVE-2023-0001"), make_record("CVE-2023-0001")]
    stats = validate_dataset(records)
    assert stats.duplicate_id_count == 1
    assert "duplicate" in caplog.text


def test_balance_by_kev():
    records = [make_record(f"CVE-2023-{i:04d}", cisa_kev=int(i in (3, 5))) for i in range(1, 8)]

    balanced = balance_by_kev(records, seed=7)
    assert len(balanced) == 4
    assert sum(r.exploited for r in balanced) == 2
    # input order is kept
    assert [r.cve_id for r in balanced] == sorted(r.cve_id for r in balanced)
    assert balance_by_kev(records, seed=7) == balanced

    with pytest.raises(EmptyDatasetError):
        balance_by_kev([make_record()], seed=0)


def test_record_ranges():
    with pytest.raises(ArgumentError):
        make_record(attack_vector=4)
    with pytest.raises(ArgumentError):
        make_record(cia_impacts=(3, 0, 0))
    with pytest.raises(ArgumentError):
        make_record(epss_score=float("nan"))


# ----------------------------------------------------------------------------


def test_encoded_csv_reimport(sample_csv):
    records = load_records(str(sample_csv))

    sink = io.StringIO()
    assert write_encoded_csv(records, sink) == 6
    text = sink.getvalue()
    assert text.splitlines()[0] == HEADER
    assert text.splitlines()[1].startswith("CVE-1999-0199,3,9.8,3.9,5.9,")

    assert list(read_encoded_csv(io.BytesIO(text.encode("utf-8")))) == records

    sink = io.StringIO()
    write_encoded_csv(records, sink, decode=True)
    assert sink.getvalue().splitlines()[1] == SIX_ROWS[0]


def test_open_source_missing_file(tmp_path):
    with pytest.raises(DatasetSourceError):
        with open_source(str(tmp_path / "missing.csv")):
            pass


def test_remote_dataset(mocker, sample_csv_bytes):
    mocksession = mocker.patch("requests.Session")
    session = mocksession.return_value
    session.headers = dict()
    session.get.return_value.raw = io.BytesIO(sample_csv_bytes)

    records = load_records("https://example.org/cve.csv")

    assert len(records) == 6
    session.get.assert_called_once_with("https://example.org/cve.csv", stream=True, timeout=60.0)
    assert session.headers["User-Agent"].startswith("cvetree/")


def test_remote_dataset_http_error(mocker):
    mocksession = mocker.patch("requests.Session")
    session = mocksession.return_value
    session.headers = dict()
    session.get.return_value.raise_for_status.side_effect = requests.HTTPError("404 Not Found")

    with pytest.raises(DatasetSourceError, match="404"):
        load_records("https://example.org/missing.csv")


# ----------------------------------------------------------------------------
