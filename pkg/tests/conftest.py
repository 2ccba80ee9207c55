import copy
import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slicesim.engine import run
from slicesim.scenario import load_scenario, scenario_from_json

SLICE_A = {"sst": 1, "sd": 1}
SLICE_B = {"sst": 1, "sd": 2}

BASE = {
    "name": "unit",
    "clock": {"tick_s": 0.1, "horizon_s": 100.0},
    "seed": 0,
    "channel": {"effective_capacity_mbps": 100.0, "quantum_mbps": None},
    "slices": [{"name": "only", "snssai": SLICE_A, "priority": 0, "residual_floor": 0.0}],
    "gnb": {"gnb_id": "g", "supported_snssais": [SLICE_A]},
    "limits": {"max_sessions": 16},
    "ues": [{"ue_id": "ue-1", "subscribed_snssais": [SLICE_A], "allowed_dnns": ["internet"]}],
    "ursp": [{"ue_id": "*", "rules": [
        {"rule_precedence": 1, "descriptor": {"match_all": True},
         "rsds": [{"rsd_precedence": 1, "snssai": SLICE_A, "dnn": "internet"}]},
    ]}],
    "flows": [],
}


def scenario_doc(**overrides):
    doc = copy.deepcopy(BASE)
    doc.update(copy.deepcopy(overrides))
    return doc


def burst(flow_id, ue_id, size_bytes, rate, start=0.0):
    return {"flow_id": flow_id, "ue_id": ue_id, "demand": {
        "type": "finite_burst", "size_bytes": size_bytes, "requested_rate_mbps": rate, "start_time_s": start}}


def constant(flow_id, ue_id, rate, start=0.0):
    return {"flow_id": flow_id, "ue_id": ue_id,
            "demand": {"type": "constant_rate", "rate_mbps": rate, "start_time_s": start}}


def make_scenario(**overrides):
    return scenario_from_json(scenario_doc(**overrides))


def write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture(scope="session")
def scenario1():
    return load_scenario("scenario1")


@pytest.fixture(scope="session")
def scenario2():
    return load_scenario("scenario2")


@pytest.fixture(scope="session")
def trace1(scenario1):
    return run(scenario1)


@pytest.fixture(scope="session")
def trace2(scenario2):
    return run(scenario2)


ACCEPTANCE = []


@pytest.fixture
def verdict(request, capsys):
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n    {line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
