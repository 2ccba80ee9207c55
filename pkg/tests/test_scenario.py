import json

import pytest

from conftest import burst, scenario_doc, write_json
from slicesim.errors import ParseError, ValidationError
from slicesim.scenario import bundled_names, load_scenario, scenario_from_json


def test_bundled_scenarios(scenario1, scenario2):
    assert set(bundled_names()) >= {"scenario1.json", "scenario2.json", "scenario2_ideal.json"}
    assert len(scenario1.ues) == 125 and len(scenario2.ues) == 125
    test = next(f for f in scenario1.flows if f.is_burst)
    assert test.demand_profile.size_bytes == 500e6
    assert test.demand_profile.requested_rate_mbps == 500.0
    assert test.start_time_s == 30.0
    background = [f for f in scenario1.flows if not f.is_burst]
    assert len(background) == 124 and {f.demand_profile.rate_mbps for f in background} == {4.0}
    assert scenario1.channel.effective_capacity == 339.89
    assert scenario2.channel.effective_capacity == 337.527
    assert [s.residual_floor for s in sorted(scenario2.slices, key=lambda s: s.priority)] == [0.03073, 0.0]


def test_unknown_ue_names_flow():
    doc = scenario_doc(flows=[burst("orphan", "ue-9", 10, 1.0)])
    with pytest.raises(ValidationError) as info:
        scenario_from_json(doc)
    assert "orphan" in str(info.value) and info.value.path == "$.flows[0].ue_id"


def test_empty_file(tmp_path):
    path = tmp_path / "empty.json"
    path.write_bytes(b"")
    with pytest.raises(ParseError) as info:
        load_scenario(path)
    assert info.value.offset == 0


def test_parse_error_offset(tmp_path):
    path = tmp_path / "bad.json"
    path.write_bytes(b'{"name": "x",, }')
    with pytest.raises(ParseError) as info:
        load_scenario(path)
    assert info.value.offset == 13


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.pop("channel"), "$"),
    (lambda d: d["slices"][0].update(residual_floor=1.5), "$.slices[0]"),
    (lambda d: d["gnb"].update(supported_snssais=[{"sst": 9}]), "$.gnb"),
    (lambda d: d["ues"].append(dict(d["ues"][0])), "$.ues[1]"),
    (lambda d: d["ursp"][0]["rules"][0]["rsds"][0].update(dnn="ims"), "$.ursp"),
    (lambda d: d["slices"][0]["snssai"].update(sst=300), "$.slices[0]"),
])
def test_validation_paths(mutate, path):
    doc = scenario_doc()
    mutate(doc)
    with pytest.raises(ValidationError) as info:
        scenario_from_json(doc)
    assert (info.value.path or "").startswith(path)


def test_duplicate_flow_ids():
    doc = scenario_doc(flows=[burst("f", "ue-1", 10, 1.0), burst("f", "ue-1", 10, 1.0)])
    with pytest.raises(ValidationError):
        scenario_from_json(doc)


def test_load_from_path(tmp_path):
    sc = load_scenario(write_json(tmp_path / "s.json", scenario_doc(name="mine")))
    assert sc.name == "mine" and sc.tick == 0.1
    assert json.loads((tmp_path / "s.json").read_text())["name"] == "mine"
