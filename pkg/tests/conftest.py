from datetime import datetime
from datetime import timezone

import pytest

# ----------------------------------------------------------------------------


def pytest_addoption(parser):
    parser.addoption(
        "--kaggle-snapshot",
        action="store",
        default=None,
        metavar="PATH",
        help="consolidated CVE/EPSS/KEV CSV snapshot for tests marked with 'snapshot'",
    )


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "snapshot: mark test to run against a full dataset snapshot"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--kaggle-snapshot"):
        # snapshot given in cli: do not skip snapshot tests
        return

    skip_snapshot = pytest.mark.skip(reason="need '--kaggle-snapshot PATH' option to run")
    for item in items:
        if "snapshot" in item.keywords:
            item.add_marker(skip_snapshot)


# ----------------------------------------------------------------------------


HEADER = (
    "cve_id,base_severity,base_score,exploitability_score,impact_score,"
    "epss_score,epss_percentile,cisa_kev,attack_vector,attack_complexity,"
    "privileges_required,user_interaction,scope,confidentiality_impact,"
    "integrity_impact,availability_impact,published_date"
)

SIX_ROWS = [
    "CVE-1999-0199,CRITICAL,9.8,3.9,5.9,0.00729,0.81305,FALSE,NETWORK,LOW,NONE,NONE,UNCHANGED,HIGH,HIGH,HIGH,2020-10-06T13:15Z",
    "CVE-1999-0236,HIGH,7.5,3.9,3.6,0.0028,0.69174,FALSE,NETWORK,LOW,NONE,NONE,UNCHANGED,HIGH,NONE,NONE,1997-01-01T05:00Z",
    "CVE-2020-8578,LOW,3.3,1.8,1.4,0.00044,0.14123,FALSE,LOCAL,LOW,LOW,NONE,UNCHANGED,LOW,NONE,NONE,2021-02-08T22:15Z",
    "CVE-2020-8579,HIGH,7.5,3.9,3.6,0.00103,0.43754,FALSE,NETWORK,LOW,NONE,NONE,UNCHANGED,NONE,NONE,HIGH,2020-10-27T14:15Z",
    "CVE-2024-9996,HIGH,7.8,1.8,5.9,0.00066,0.31062,FALSE,LOCAL,LOW,NONE,REQUIRED,UNCHANGED,HIGH,HIGH,HIGH,2024-10-29T22:15Z",
    "CVE-2024-9997,HIGH,7.8,1.8,5.9,0.00066,0.31062,FALSE,LOCAL,LOW,NONE,REQUIRED,UNCHANGED,HIGH,HIGH,HIGH,2024-10-29T22:15Z",
]


def make_csv(rows, header=HEADER) -> bytes:
    return ("\n".join([header] + list(rows)) + "\n").encode("utf-8")


def make_record(cve_id="CVE-2023-0001", **kwargs):
    """Encoded record with neutral defaults, override any field."""
    from cvetree.dataset import CveRecord

    values = dict(
        cve_id=cve_id,
        base_severity=2,
        base_score=7.5,
        exploitability_score=3.9,
        impact_score=3.6,
        epss_score=0.001,
        epss_percentile=0.4,
        cisa_kev=0,
        attack_vector=3,
        attack_complexity=0,
        privileges_required=0,
        user_interaction=0,
        scope=0,
        cia_impacts=(2, 0, 0),
        published_date=datetime(2023, 1, 1, tzinfo=timezone.utc),
    )
    values.update(kwargs)
    return CveRecord(**values)


@pytest.fixture(scope="function")
def sample_csv_bytes():
    """Six pre-processed rows of the consolidated dataset (raw tokens)."""
    return make_csv(SIX_ROWS)


@pytest.fixture(scope="function")
def sample_csv(tmp_path, sample_csv_bytes):
    """Six row dataset as file."""
    path = tmp_path / "data.csv"
    path.write_bytes(sample_csv_bytes)
    return path


@pytest.fixture(scope="function")
def oracle_records():
    """Four rows, complexity and user interaction as the only likelihood
    attributes; hand computed risks."""
    return [
        make_record("CVE-2023-0001", attack_complexity=0, user_interaction=0, impact_score=2.0),
        make_record("CVE-2023-0002", attack_complexity=0, user_interaction=1, impact_score=4.0),
        make_record("CVE-2023-0003", attack_complexity=1, user_interaction=0, impact_score=4.0),
        make_record("CVE-2023-0004", attack_complexity=0, user_interaction=0, impact_score=6.0),
    ]


@pytest.fixture(scope="function")
def oracle_config():
    from cvetree.config import PipelineConfig

    return PipelineConfig(likelihood_attributes=("attack_complexity", "user_interaction"))


@pytest.fixture(scope="function")
def no_config_env(monkeypatch, tmp_path):
    """No config from the environment or the working directory."""
    monkeypatch.delenv("CVETREE_CONFIG", raising=False)
    monkeypatch.chdir(tmp_path)


@pytest.fixture(scope="session")
def snapshot_path(request):
    return request.config.getoption("--kaggle-snapshot")


# ----------------------------------------------------------------------------
