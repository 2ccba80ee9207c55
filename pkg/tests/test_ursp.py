import pytest
from hypothesis import given, strategies as st

from slicesim.domain import FlowDescriptor, SNssai, TransportProtocol
from slicesim.errors import AllRsdsFailed, NoMatchingRule, SliceNotAllowed, ValidationFailed
from slicesim.ursp import (
    ForwardingTable, RouteSelectionDescriptor as RSD, TrafficDescriptor as TD, UrspRule, UrspTable,
    match_flow, rule_from_json, rule_to_json, select_route, table_from_json, update_table,
)


class Sess:
    def __init__(self, session_id, snssai, dnn):
        self.session_id, self.snssai, self.dnn = session_id, snssai, dnn


def rsd(sst, prec=1, dnn="internet"):
    return RSD(prec, SNssai(sst), dnn)


def table(*rules):
    return UrspTable("ue", tuple(rules)).validate()


def flow(**kw):
    kw.setdefault("flow_id", "f")
    kw.setdefault("ue_id", "ue")
    return FlowDescriptor(**kw)


class Recorder:
    """establish() stub: fails for the listed SSTs, counts calls."""

    def __init__(self, failing=()):
        self.failing = set(failing)
        self.calls = []

    def __call__(self, snssai, dnn):
        self.calls.append((snssai, dnn))
        if snssai.sst in self.failing:
            raise SliceNotAllowed(f"{snssai} unsupported")
        return Sess(len(self.calls), snssai, dnn)


def test_single_port_rule():
    t = table(UrspRule(1, TD(match_dst_port=8443), (rsd(1),)))
    assert match_flow(t, flow(dst_port=8443)) == (rsd(1),)


def test_lower_precedence_wins():
    t = table(
        UrspRule(10, TD(match_protocol=TransportProtocol.UDP), (rsd(2),)),
        UrspRule(5, TD(match_all=True), (rsd(1),)),
    )
    assert match_flow(t, flow(transport_protocol="UDP")) == (rsd(1),)


def test_no_matching_rule():
    t = table(UrspRule(1, TD(match_dst_port=80), (rsd(1),)))
    with pytest.raises(NoMatchingRule):
        match_flow(t, flow(dst_port=443))


def test_port_range_inclusive():
    t = table(UrspRule(1, TD(match_dst_port=(1000, 2000)), (rsd(1),)))
    for port in (1000, 1500, 2000):
        match_flow(t, flow(dst_port=port))
    for port in (999, 2001):
        with pytest.raises(NoMatchingRule):
            match_flow(t, flow(dst_port=port))


def test_every_matcher_must_hold():
    t = table(UrspRule(1, TD(match_dst_port=53, match_protocol="UDP"), (rsd(1),)))
    match_flow(t, flow(dst_port=53, transport_protocol="UDP"))
    with pytest.raises(NoMatchingRule):
        match_flow(t, flow(dst_port=53, transport_protocol="TCP"))


def test_app_id_and_address():
    t = table(
        UrspRule(1, TD(match_app_id="video"), (rsd(2),)),
        UrspRule(2, TD(match_dst_address="10.0.0.0/8"), (rsd(3),)),
        UrspRule(3, TD(match_all=True), (rsd(1),)),
    )
    assert match_flow(t, flow(app_id="video"))[0].snssai.sst == 2
    assert match_flow(t, flow(dst_address="10.1.2.3"))[0].snssai.sst == 3
    assert match_flow(t, flow(dst_address="192.0.2.1"))[0].snssai.sst == 1


def test_fallback_to_next_rsd():
    t = table(UrspRule(1, TD(match_all=True), (rsd(2, 1), rsd(1, 2))))
    est = Recorder(failing={2})
    session, rule = select_route(t, flow(), est)
    assert session.snssai == SNssai(1)
    assert rule.session_ref == session.session_id
    assert [c[0].sst for c in est.calls] == [2, 1]


def test_none_counts_as_failure():
    t = table(UrspRule(1, TD(match_all=True), (rsd(2, 1), rsd(1, 2))))
    calls = []

    def est(snssai, dnn):
        calls.append(snssai)
        return None if snssai.sst == 2 else Sess(9, snssai, dnn)

    session, _ = select_route(t, flow(), est)
    assert session.session_id == 9 and len(calls) == 2


def test_existing_session_reused():
    t = table(UrspRule(1, TD(match_all=True), (rsd(1),)))
    existing = Sess(7, SNssai(1), "internet")
    est = Recorder()
    session, rule = select_route(t, flow(), est, sessions=[existing])
    assert session is existing and rule.session_ref == 7
    assert est.calls == []


def test_all_rsds_fail_installs_nothing():
    t = table(UrspRule(1, TD(match_all=True), (rsd(2, 1), rsd(3, 2))))
    fwd = ForwardingTable()
    with pytest.raises(AllRsdsFailed) as info:
        select_route(t, flow(), Recorder(failing={2, 3}), forwarding=fwd)
    assert len(info.value.attempts) == 2
    assert len(fwd) == 0


def test_update_keeps_bindings():
    old = table(UrspRule(1, TD(match_all=True), (rsd(1),)))
    fwd = ForwardingTable()
    select_route(old, flow(flow_id="a"), Recorder(), forwarding=fwd)
    new = update_table(old, table(UrspRule(1, TD(match_all=True), (rsd(2),))))
    assert fwd.get("a").session_ref == 1
    session, _ = select_route(new, flow(flow_id="b"), Recorder(), forwarding=fwd)
    assert session.snssai == SNssai(2)


def test_update_rejects_duplicate_precedence():
    bad = UrspTable("ue", (UrspRule(1, TD(match_all=True), (rsd(1),)), UrspRule(1, TD(match_dst_port=1), (rsd(2),))))
    with pytest.raises(ValidationFailed):
        update_table(None, bad)


def test_empty_table_accepted():
    t = update_table(None, UrspTable("ue"))
    with pytest.raises(NoMatchingRule):
        match_flow(t, flow())


@pytest.mark.parametrize("desc", [TD(), TD(match_all=True, match_dst_port=1), TD(match_dst_port=(5, 1))])
def test_descriptor_invariants(desc):
    with pytest.raises(ValidationFailed):
        table(UrspRule(1, desc, (rsd(1),)))


def test_duplicate_rsd_precedence():
    with pytest.raises(ValidationFailed):
        table(UrspRule(1, TD(match_all=True), (rsd(1, 1), rsd(2, 1))))


def test_rsds_sorted():
    r = UrspRule(1, TD(match_all=True), (rsd(3, 9), rsd(1, 2)))
    assert [x.rsd_precedence for x in r.rsds] == [2, 9]


def test_json_round_trip():
    r = UrspRule(4, TD(match_dst_port=(1, 9), match_protocol="TCP"), (rsd(1), RSD(2, SNssai(1, 0), "ims", "NR", 1)))
    assert rule_from_json(rule_to_json(r)) == r


def test_malformed_json_rule():
    with pytest.raises(ValidationFailed):
        table_from_json("ue", [{"rule_precedence": 1, "descriptor": {"match_all": True}}])


# --- properties ----------------------------------------------------------------

descriptors = st.one_of(
    st.just(TD(match_all=True)),
    st.builds(TD, match_dst_port=st.integers(0, 5)),
    st.builds(TD, match_protocol=st.sampled_from(["UDP", "TCP"])),
    st.builds(TD, match_app_id=st.sampled_from(["a", "b"])),
)
tables = st.lists(st.tuples(st.integers(0, 50), descriptors, st.integers(0, 6)), max_size=8,
                  unique_by=lambda t: t[0]).map(
    lambda rows: table(*[UrspRule(p, d, (rsd(s),)) for p, d, s in rows]))
flows = st.builds(flow, dst_port=st.integers(0, 5), transport_protocol=st.sampled_from(["UDP", "TCP"]),
                  app_id=st.sampled_from(["a", "b", None]))


def _result(t, f):
    try:
        return match_flow(t, f)
    except NoMatchingRule:
        return None


@given(tables, flows)
def test_precedence_soundness(t, f):
    matching = [r for r in t.rules if r.descriptor.matches(f)]
    got = _result(t, f)
    if not matching:
        assert got is None
    else:
        best = min(matching, key=lambda r: r.rule_precedence)
        assert got == best.rsds
    assert _result(t, f) == got


@given(tables, flows, st.data())
def test_monotone_under_deleting_non_matching(t, f, data):
    drop = [r for r in t.rules if not r.descriptor.matches(f)]
    dropped = data.draw(st.sets(st.sampled_from(drop)) if drop else st.just(set()))
    smaller = UrspTable(t.ue_id, tuple(r for r in t.rules if r not in dropped))
    assert _result(smaller, f) == _result(t, f)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=12))
def test_session_reuse_per_triple(ops):
    """Repeated routing never creates two sessions for one (snssai, dnn)."""
    sessions = []
    fwd = ForwardingTable()

    def establish(snssai, dnn):
        s = Sess(len(sessions) + 1, snssai, dnn)
        sessions.append(s)
        return s

    for n, sst in enumerate(ops):
        t = table(UrspRule(1, TD(match_all=True), (rsd(sst),)))
        select_route(t, flow(flow_id=f"f{n}"), establish, sessions=list(sessions), forwarding=fwd)
    keys = [(s.snssai, s.dnn) for s in sessions]
    assert len(keys) == len(set(keys))
    assert len(fwd) == len(ops)
