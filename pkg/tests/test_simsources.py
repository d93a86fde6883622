"""Seeded generators and the scripted scenario driver."""

import pytest

from gridops.adapters import ScriptedSource
from gridops.document import from_xml, to_xml
from gridops.errors import ScriptInvalid
from gridops.service import GridOpsService, ServiceConfig
from gridops.simsources import (
    generate_alarm_feed, generate_topology, parse_scenario, run_scenario,
)
from gridops.topology import parse_topology
from conftest import TOPOLOGY_XML
from support import scripted_view


def scenario(text):
    return from_xml(text, strip_space=True)


# -- generators ------------------------------------------------------------

def test_generated_topology_is_well_formed():
    registry = parse_topology(generate_topology(4, seed=11))
    assert registry.site_names() == ["SITE-001", "SITE-002", "SITE-003",
                                     "SITE-004"]
    for name in registry.site_names():
        site = registry.site(name)
        assert site.certification_status.value == "CERTIFIED"
        assert site.contact_email == f"ops@{name.lower()}.example"
        assert 1 <= len(registry.nodes_of(name)) <= 4
        for node in registry.nodes_of(name):
            assert node.hostname.endswith(f"{name.lower()}.example")
            assert registry.resolve_node(node.hostname) == name


def test_generated_topology_is_deterministic():
    first = to_xml(generate_topology(5, seed=42))
    again = to_xml(generate_topology(5, seed=42))
    other = to_xml(generate_topology(5, seed=43))
    assert first == again
    assert first != other


def test_generated_topology_of_size_zero_is_valid():
    registry = parse_topology(generate_topology(0))
    assert registry.site_names() == []


def test_alarm_feed_references_real_nodes():
    registry = parse_topology(generate_topology(3, seed=7))
    feed = generate_alarm_feed(registry, 10, seed=3, start_time=50.0)
    alarms = feed.child_elements("alarm")
    assert len(alarms) == 10
    for index, alarm in enumerate(alarms):
        assert alarm.attributes["failure-time"] == str(50 + index * 7)
        site = registry.resolve_node(alarm.attributes["node"])
        assert site in registry.site_names()
        assert alarm.attributes["node"] in alarm.attributes["message"]


def test_alarm_feed_is_deterministic():
    registry = parse_topology(generate_topology(3, seed=7))
    assert to_xml(generate_alarm_feed(registry, 5, seed=9)) == \
        to_xml(generate_alarm_feed(registry, 5, seed=9))


def test_alarm_feed_needs_nodes():
    registry = parse_topology(generate_topology(0))
    with pytest.raises(ScriptInvalid):
        generate_alarm_feed(registry, 1)


# -- scenario parsing ------------------------------------------------------

def test_parse_scenario_collects_timed_steps():
    steps = parse_scenario(scenario("""
        <scenario name="m">
          <at time="60"><refresh view="feed"/><notify topic="ops"/></at>
          <at time="120"><expect view="feed" state="FRESH"/></at>
          <until time="600"/>
        </scenario>"""))
    assert [(when, len(actions)) for when, actions in steps] == \
        [(60.0, 2), (120.0, 1), (600.0, 0)]
    assert steps[0][1][0].label == "refresh"


@pytest.mark.parametrize("text", [
    "<not-a-scenario/>",
    '<scenario><at time="60"/><at time="30"/></scenario>',
    '<scenario><at time="soon"/></scenario>',
    '<scenario><at time="5"><frobnicate/></at></scenario>',
    '<scenario><at time="50"/><until time="10"/></scenario>',
    '<scenario><boom/></scenario>',
])
def test_parse_scenario_rejections(text):
    with pytest.raises(ScriptInvalid):
        parse_scenario(scenario(text))


def test_scenarios_need_a_virtual_clock(tmp_path):
    system = GridOpsService(ServiceConfig(
        base_dir=str(tmp_path), storage_dir=str(tmp_path / "var"),
        clock_virtual=False))
    with pytest.raises(ScriptInvalid):
        run_scenario(system, scenario("<scenario/>"))


def test_empty_scenario_produces_no_log(service):
    assert run_scenario(service, scenario("<scenario/>")) == []


# -- running ---------------------------------------------------------------

ALARM_FLOW = """
<scenario name="shift">
  <at time="160">
    <ingest-alarms>
      <alarms>
        <alarm sensor="s1" test="ping" node="ce1.alfa.example"
               failure-time="150" message="m"/>
        <alarm sensor="s2" test="ping" node="se1.alfa.example"
               failure-time="151" message="m"/>
        <alarm sensor="s3" test="ping" node="ce1.bravo.example"
               failure-time="152" message="m"/>
      </alarms>
    </ingest-alarms>
  </at>
  <at time="200">
    <alarm-action id="A-000001" action="ASSIGN" actor="kim"/>
    <alarm-action id="A-000002" action="SET_OFF" actor="kim"/>
    <create-ticket subject="power loss" site="ALFA" alarm="A-000003"/>
  </at>
  <until time="90000"/>
</scenario>
"""


def test_scenario_alarm_flow(service):
    lines = run_scenario(service, scenario(ALARM_FLOW))
    assert "t=160 ingest-alarms -> new=3 duplicates=0 malformed=0" in lines
    assert "t=200 alarm-action A-000001 -> ASSIGNED" in lines
    assert "t=200 alarm-action A-000002 -> OFF" in lines
    assert "t=200 create-ticket -> T-000001" in lines
    # The OFF alarm sat quiet past the window, so the final tick closed it.
    assert "t=90000 tick auto-closed A-000002" in lines
    assert service.alarms.get("A-000002").status.value == "CLOSED"
    assert service.tickets.get("T-000001").alarm_id == "A-000003"


SOURCE_CONTROL = """
<scenario>
  <at time="110">
    <refresh view="feed"/>
    <expect view="feed" state="FRESH" version="1"/>
  </at>
  <at time="120"><stop-source source="feed"/><refresh view="feed"/></at>
  <at time="130">
    <resume-source source="feed"/>
    <refresh view="feed"/>
    <expect view="feed" version="2"/>
  </at>
</scenario>
"""


def test_scenario_source_control(service):
    service.registry.add_script(
        "feed", ScriptedSource().add(from_xml("<feed><m/></feed>")))
    configs, groups = service.merge_auto_views([scripted_view("feed")], [])
    service.engine.reload_configuration(configs, groups)

    lines = run_scenario(service, scenario(SOURCE_CONTROL))
    assert "t=110 refresh feed -> EXPOSED v1" in lines
    assert "t=110 expect feed PASS" in lines
    assert "t=120 stop-source feed" in lines
    assert any(l.startswith("t=120 refresh feed -> FAILED") for l in lines)
    assert any(l.startswith("t=120 REFRESH_FAILED feed") for l in lines)
    assert "t=130 refresh feed -> EXPOSED v2" in lines
    assert "t=130 expect feed PASS" in lines


def test_scenario_expect_failures_are_logged(service):
    lines = run_scenario(service, scenario("""
        <scenario>
          <at time="110"><expect view="topology" state="FRESH"/></at>
        </scenario>"""))
    assert lines == ["t=110 expect topology FAIL: state=EMPTY wanted FRESH"]


def test_scenario_action_errors_become_log_lines(service):
    lines = run_scenario(service, scenario("""
        <scenario>
          <at time="110"><alarm-action id="A-404" action="ASSIGN"/></at>
        </scenario>"""))
    assert len(lines) == 1
    assert lines[0].startswith("t=110 alarm-action !! ")


def test_scenario_generate_alarms_uses_the_live_topology(service):
    lines = run_scenario(service, scenario("""
        <scenario>
          <at time="110"><generate-alarms count="4" seed="2"/></at>
        </scenario>"""))
    assert "t=110 generate-alarms -> new=4" in lines
    assert service.alarms.count_open() == 4
    for alarm in service.alarms.list_alarms():
        assert alarm.status.value == "NEW"
        assert alarm.site in ("ALFA", "BRAVO", "CHARLIE")
