import json

import pytest
from conftest import SIX_ROWS
from conftest import make_csv

from cvetree.cli import main
from cvetree.risk import read_report

# ----------------------------------------------------------------------------


@pytest.fixture(autouse=True)
def _isolated(no_config_env):
    return None


@pytest.fixture(scope="function")
def json_report(tmp_path, sample_csv):
    path = tmp_path / "report.json"
    assert main(["score", str(sample_csv), "--out", str(path)]) == 0
    return path


def table_ids(out):
    return [line.split()[1] for line in out.splitlines()[1:] if line.strip() and line.split()[0].isdigit()]


# ----------------------------------------------------------------------------


def test_score(tmp_path, sample_csv, capsys):
    path = tmp_path / "report.json"
    assert main(["score", str(sample_csv), "--out", str(path)]) == 0

    out = capsys.readouterr().out
    assert "6 rows, 4 risky" in out

    report = read_report(path)
    assert report.row_count == 6
    assert report.config.threshold == 0.5


def test_score_csv_and_stdout(tmp_path, sample_csv, capsys):
    path = tmp_path / "report.csv"
    assert main(["-q", "score", str(sample_csv), "--out", str(path)]) == 0
    assert read_report(path).row_count == 6
    capsys.readouterr()

    assert main(["score", str(sample_csv)]) == 0
    out = capsys.readouterr().out
    assert table_ids(out)[0] == "CVE-1999-0199"


def test_score_empty(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_bytes(b"")
    assert main(["score", str(empty)]) == 1
    assert "empty dataset" in capsys.readouterr().err

    empty.write_bytes(make_csv([]))
    assert main(["score", str(empty)]) == 1
    assert "empty dataset" in capsys.readouterr().err


def test_score_config_errors(tmp_path, sample_csv, capsys):
    assert main(["score", str(sample_csv), "--threshold", "1.5"]) == 2
    assert "threshold" in capsys.readouterr().err

    assert main(["score", str(sample_csv), "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["score", str(sample_csv), "--cycles", "0"]) == 2
    assert main(["score", str(sample_csv), "--variant", "fancy"]) == 2
    assert main(["score", str(sample_csv), "--from", "yesterday"]) == 2
    assert main(["score", str(sample_csv), "--from", "2021-01-01", "--to", "2020-01-01"]) == 2


def test_score_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_bytes(make_csv([SIX_ROWS[0], SIX_ROWS[1].replace(",HIGH,7.5,", ",SEVERE,7.5,")]))
    assert main(["score", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "Line 3" in err
    assert "SEVERE" in err
    assert "row: CVE-1999-0236,SEVERE,7.5," in err

    assert main(["score", str(tmp_path / "missing.csv")]) == 1


def test_score_env_config(tmp_path, sample_csv, monkeypatch):
    config = tmp_path / "strict.json"
    config.write_text(json.dumps({"threshold": 0.9, "impact_source": "cia-composite"}))
    monkeypatch.setenv("CVETREE_CONFIG", str(config))

    path = tmp_path / "report.json"
    assert main(["score", str(sample_csv), "--out", str(path), "--smoothing", "add-one"]) == 0
    report = read_report(path)
    assert report.config.threshold == 0.9
    assert report.config.impact_source == "cia-composite"
    assert report.config.smoothing == "add-one"


def test_score_filters(tmp_path, sample_csv):
    path = tmp_path / "report.json"

    assert main(["score", str(sample_csv), "--out", str(path), "--from", "2020-01-01", "--to", "2020-12-31"]) == 0
    assert [s.cve_id for s in read_report(path)] == ["CVE-1999-0199", "CVE-2020-8579"]

    assert main(["score", str(sample_csv), "--out", str(path), "--area", "attack_vector=NETWORK"]) == 0
    assert read_report(path).row_count == 3

    assert main(["score", str(sample_csv), "--out", str(path), "--conditional", "--log-space"]) == 0
    assert read_report(path).config.likelihood_model == "conditional"


def test_score_option_aliases(tmp_path, sample_csv):
    config = tmp_path / "c.json"
    config.write_text(json.dumps({"impact_source": "eq9-cia", "pipeline_variant": "algorithm1-raw"}))
    path = tmp_path / "report.json"

    assert main(["score", str(sample_csv), "--config", str(config), "--out", str(path)]) == 0
    assert read_report(path).config.impact_source == "cia-composite"

    assert main(["score", str(sample_csv), "--out", str(path), "--variant", "algorithm1-raw"]) == 0
    assert read_report(path).config.pipeline_variant == "raw"


def test_score_check_paths(sample_csv, capsys):
    assert main(["-q", "score", str(sample_csv), "--check-paths"]) == 0
    out = capsys.readouterr().out
    # 4 base scores x 2 exploitability x 5 percentiles x 2 vectors x 2 privileges x 2 interactions
    assert "320 paths, total probability 1" in out

    assert main(["-q", "score", str(sample_csv), "--check-paths", "--enumeration-cap", "100"]) == 1
    assert "exceed enumeration cap 100" in capsys.readouterr().err
    assert main(["score", str(sample_csv), "--enumeration-cap", "0"]) == 2


def test_score_reproducible(tmp_path, sample_csv):
    def strip_run(text):
        doc = json.loads(text)
        del doc["metadata"]["run"]
        return json.dumps(doc, indent=2)

    first, second = tmp_path / "first.json", tmp_path / "second.json"
    assert main(["score", str(sample_csv), "--out", str(first)]) == 0
    assert main(["score", str(sample_csv), "--out", str(second)]) == 0
    assert strip_run(first.read_text()) == strip_run(second.read_text())

    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert main(["score", str(sample_csv), "--out", str(first)]) == 0
    assert main(["score", str(sample_csv), "--out", str(second)]) == 0
    # first line holds the run metadata
    assert first.read_text().splitlines()[1:] == second.read_text().splitlines()[1:]



# ----------------------------------------------------------------------------


def test_explain(json_report, capsys):
    capsys.readouterr()
    assert main(["explain", str(json_report), "CVE-2024-9996"]) == 0
    out = capsys.readouterr().out

    assert out.splitlines()[0] == "CVE-2024-9996"
    assert "user_interaction" in out
    assert "risk_norm        1\n" in out
    assert "risk_class       Risky" in out

    score = read_report(json_report).find("CVE-2024-9996")
    product = 1.0
    for factor in score.factors:
        product *= factor.probability
    assert product == pytest.approx(score.likelihood_raw, abs=1e-9)


def test_explain_single_row(tmp_path, capsys):
    data = tmp_path / "one.csv"
    data.write_bytes(make_csv(SIX_ROWS[:1]))
    report = tmp_path / "one.json"
    assert main(["score", str(data), "--out", str(report)]) == 0
    capsys.readouterr()

    assert main(["explain", str(report), "CVE-1999-0199"]) == 0
    out = capsys.readouterr().out
    factor_lines = [line for line in out.splitlines() if " p = " in line]
    assert len(factor_lines) == 8
    assert all(line.endswith("p = 1") for line in factor_lines)
    assert "likelihood_raw   1\n" in out


def test_explain_unknown(json_report, capsys):
    assert main(["explain", str(json_report), "CVE-2024-9999"]) == 1
    err = capsys.readouterr().err
    assert "Unknown CVE id" in err
    assert "CVE-2024-999" in err


def test_explain_csv_report(tmp_path, sample_csv, capsys):
    path = tmp_path / "report.csv"
    assert main(["score", str(sample_csv), "--out", str(path)]) == 0
    assert main(["explain", str(path), "CVE-1999-0199"]) == 1
    assert "factors" in capsys.readouterr().err

    assert main(["score", "--help"]) == 0
    assert "(explain needs .json)" in " ".join(capsys.readouterr().out.split())


# ----------------------------------------------------------------------------


def test_rank(json_report, capsys):
    capsys.readouterr()
    assert main(["rank", str(json_report), "--top", "1"]) == 0
    assert table_ids(capsys.readouterr().out) == ["CVE-2024-9996"]

    assert main(["rank", str(json_report)]) == 0
    assert table_ids(capsys.readouterr().out) == [
        "CVE-2024-9996",
        "CVE-2024-9997",
        "CVE-1999-0236",
        "CVE-2020-8579",
        "CVE-1999-0199",
        "CVE-2020-8578",
    ]


def test_rank_filters_and_errors(json_report, capsys):
    capsys.readouterr()
    assert main(["rank", str(json_report), "--to", "1990-01-01"]) == 0
    out = capsys.readouterr().out
    assert len(out.splitlines()) == 1
    assert table_ids(out) == []

    assert main(["rank", str(json_report), "--from", "2024-01-01"]) == 0
    assert table_ids(capsys.readouterr().out) == ["CVE-2024-9996", "CVE-2024-9997"]

    assert main(["rank", str(json_report), "--top", "0"]) == 2
    assert main(["rank", str(json_report), "--top", "x"]) == 2


# ----------------------------------------------------------------------------


def test_register_flow(tmp_path, json_report, capsys):
    store = tmp_path / "annotations.json"
    assert (
        main(
            [
                "register",
                "annotate",
                str(store),
                "--cve",
                "CVE-2024-9996",
                "--context",
                "Software",
                "--factor",
                "local privilege escalation",
                "--consequence",
                "confidentiality: full read access",
            ]
        )
        == 0
    )
    assert json.loads(store.read_text())["annotations"][0]["context"] == "Software"

    register = tmp_path / "register.json"
    assert main(["register", "export", str(json_report), "--annotations", str(store), "--out", str(register)]) == 0
    doc = json.loads(register.read_text())
    assert doc["entries"][0]["cve_id"] == "CVE-2024-9996"
    assert doc["entries"][0]["priority"] == 1
    assert doc["entries"][0]["annotation"]["context"] == "Software"
    assert doc["entries"][0]["description"] == "local privilege escalation"

    capsys.readouterr()
    assert main(["register", "import", str(register)]) == 0
    out = capsys.readouterr().out
    assert "6 entries" in out
    assert out.splitlines()[0].split()[:2] == ["1", "CVE-2024-9996"]


def test_register_errors(tmp_path, json_report):
    assert main(["register", "annotate", str(tmp_path / "a.json"), "--cve", "CVE-1"]) == 2

    truncated = tmp_path / "register.json"
    truncated.write_text('{"schema_version": 1, "entries": [')
    assert main(["register", "import", str(truncated)]) == 1
    assert main(["register", "import", str(tmp_path / "missing.json")]) == 1
    assert main(["register"]) == 2


# ----------------------------------------------------------------------------


def test_ingest(tmp_path, sample_csv, capsys):
    encoded = tmp_path / "encoded.csv"
    assert main(["ingest", str(sample_csv), "--out", str(encoded)]) == 0
    out = capsys.readouterr().out
    assert "rows: 6" in out
    assert "exploited (KEV): 0" in out
    assert encoded.read_text().splitlines()[1].startswith("CVE-1999-0199,3,9.8,")

    # encoded input is accepted as well
    decoded = tmp_path / "decoded.csv"
    assert main(["ingest", str(encoded), "--out", str(decoded), "--decode"]) == 0
    assert decoded.read_text().splitlines()[1] == SIX_ROWS[0]

    assert main(["ingest", str(sample_csv), "--from", "2020-01-01", "--to", "2020-12-31"]) == 0
    assert "rows: 2" in capsys.readouterr().out


def test_usage(capsys):
    assert main([]) == 2
    assert main(["--version"]) == 0
    assert "cvetree" in capsys.readouterr().out


# ----------------------------------------------------------------------------
