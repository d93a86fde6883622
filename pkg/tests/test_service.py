"""Service wiring: config parsing, auto views, composite documents, roles."""

import pytest

from gridops.config import CacheType
from gridops.document import from_xml
from gridops.errors import (
    AlarmNotLinkable, ConfigInvalid, SiteNotFound, TicketNotFound,
)
from gridops.service import (
    GridOpsService, Role, ServiceConfig, parse_service_config,
)
from conftest import TOPOLOGY_XML, alarm_feed, alarm_record

SERVICE_XML = """
<service>
  <storage dir="var"/>
  <clock virtual="true" start="500"/>
  <topology file="topology.xml"/>
  <tokens>
    <token value="r-token" role="readonly"/>
    <token value="o-token" role="operator"/>
    <token value="a-token" role="admin"/>
  </tokens>
  <alarms quiet-period="7200"/>
  <tickets backend="dual" outbox="outbox"/>
  <views>
    <view name="feed">
      <adapter kind="local-file"><param name="path" value="feed.xml"/></adapter>
    </view>
  </views>
</service>
"""


def test_parse_service_config_full_form(tmp_path):
    cfg = parse_service_config(from_xml(SERVICE_XML, strip_space=True),
                               base_dir=str(tmp_path))
    assert cfg.clock_virtual and cfg.clock_start == 500.0
    assert cfg.topology_file == "topology.xml"
    assert cfg.quiet_period == 7200.0
    assert cfg.ticket_backend == "dual"
    assert cfg.tokens == {"r-token": Role.READONLY, "o-token": Role.OPERATOR,
                          "a-token": Role.ADMIN}
    assert cfg.views_doc.label == "views"


@pytest.mark.parametrize("text", [
    "<nope/>",
    '<service><tokens><token role="admin"/></tokens></service>',
    '<service><tokens><token value="t" role="demigod"/></tokens></service>',
])
def test_parse_service_config_rejections(text):
    with pytest.raises(ConfigInvalid):
        parse_service_config(from_xml(text, strip_space=True))


def test_from_file_builds_a_working_service(tmp_path):
    (tmp_path / "topology.xml").write_text(TOPOLOGY_XML)
    (tmp_path / "service.xml").write_text(SERVICE_XML)
    service = GridOpsService.from_file(str(tmp_path / "service.xml"))
    assert service.clock.now() == 500.0
    assert service.sites.site_names() == ["ALFA", "BRAVO", "CHARLIE"]
    # Declared views merge with the automatic book-backed ones.
    assert set(service.engine.view_names()) == \
        {"feed", "alarms", "tickets", "topology"}
    assert service.engine.get_view("topology").label == "topology"


def test_auto_views_are_uncached_book_windows(service):
    for name in ("alarms", "tickets", "topology"):
        assert service.engine.runtime(name).config.cache is CacheType.NONE
    assert service.engine.get_view("alarms").label == "alarms"
    assert service.engine.get_view("tickets").label == "tickets"


def test_ingest_flows_into_the_alarms_view(service):
    report = service.ingest_alarms(alarm_feed(
        alarm_record(node="ce1.alfa.example", failure_time=100),
        alarm_record(node="ce1.bravo.example", sensor="disk",
                     failure_time=110)))
    assert len(report.new_ids) == 2
    doc = service.engine.get_view("alarms")
    assert {el.get("site") for el in doc.child_elements()} == {"ALFA", "BRAVO"}


def test_alarm_actions_are_applied(service):
    report = service.ingest_alarms(alarm_feed(alarm_record(failure_time=1)))
    alarm = service.alarm_action(report.new_ids[0], "ASSIGN", "alice")
    assert alarm.status.value == "ASSIGNED"


def test_create_ticket_from_alarm_links_both_ways(service):
    report = service.ingest_alarms(alarm_feed(alarm_record(failure_time=5)))
    alarm_id = report.new_ids[0]
    result = service.create_ticket("power", "ALFA", from_alarm=alarm_id,
                                   author="alice")
    alarm = service.alarms.get(alarm_id)
    assert alarm.ticket_id == result.ticket_id
    assert alarm.status.value == "ASSIGNED"
    ticket = service.tickets.get(result.ticket_id)
    assert ticket.alarm_id == alarm_id


def test_create_ticket_checks_the_alarm_before_storing(service):
    report = service.ingest_alarms(alarm_feed(alarm_record(failure_time=7)))
    alarm_id = report.new_ids[0]
    service.alarm_action(alarm_id, "SET_OFF", "op")
    with pytest.raises(AlarmNotLinkable):
        service.create_ticket("x", "ALFA", from_alarm=alarm_id)
    assert service.tickets.ops.tickets == {}


def test_link_alarm_requires_existing_ticket(service):
    report = service.ingest_alarms(alarm_feed(alarm_record(failure_time=9)))
    with pytest.raises(TicketNotFound):
        service.link_alarm(report.new_ids[0], "T-404404")
    assert service.alarms.get(report.new_ids[0]).ticket_id == ""
    tid = service.create_ticket("t", "ALFA").ticket_id
    service.link_alarm(report.new_ids[0], tid, actor="bob")
    assert service.alarms.get(report.new_ids[0]).ticket_id == tid


def test_sites_overview_collects_counters(service):
    service.ingest_alarms(alarm_feed(alarm_record(failure_time=1)))
    service.create_ticket("t1", "ALFA")
    service.create_ticket("t2", "BRAVO")
    doc = service.sites_overview()
    rows = {el.get("name"): el for el in doc.child_elements("site")}
    assert set(rows) == {"ALFA", "BRAVO", "CHARLIE"}
    alfa = rows["ALFA"]
    assert alfa.get("region") == "north"
    assert alfa.get("status") == "certified"
    assert alfa.get("nodes") == "2"
    assert alfa.get("open-alarms") == "1"
    assert alfa.get("open-tickets") == "1"
    assert alfa.get("in-downtime") == "false"
    assert rows["CHARLIE"].get("open-alarms") == "0"


def test_site_summary_combines_books(service):
    service.ingest_alarms(alarm_feed(alarm_record(failure_time=1)))
    service.create_ticket("t1", "ALFA")
    doc = service.site_summary("ALFA")
    assert doc.find("alarms").get("count") == "1"
    assert doc.find("tickets").get("count") == "1"
    with pytest.raises(SiteNotFound):
        service.site_summary("GHOST")


def test_ticket_edit_operations_route_through_service(service):
    tid = service.create_ticket("subject", "ALFA").ticket_id
    service.update_ticket(tid, "status", "IN_PROGRESS", author="a")
    assert service.escalate_ticket(tid, author="a") == 1
    service.comment_ticket(tid, "a", "note")
    service.close_ticket(tid, author="a")
    assert service.tickets.get(tid).status == "CLOSED"
    assert service.sync_tickets().applied >= 0


def test_tick_advances_quiet_periods(service):
    report = service.ingest_alarms(alarm_feed(alarm_record(failure_time=1)))
    service.alarm_action(report.new_ids[0], "SET_OFF", "op")
    service.clock.advance(service.alarms.quiet_period + 1)
    plan, closed = service.tick()
    assert closed == report.new_ids


def test_role_for_tokens(tmp_path):
    (tmp_path / "topology.xml").write_text(TOPOLOGY_XML)
    (tmp_path / "service.xml").write_text(SERVICE_XML)
    service = GridOpsService.from_file(str(tmp_path / "service.xml"))
    assert service.role_for("r-token") is Role.READONLY
    assert service.role_for("o-token") is Role.OPERATOR
    assert service.role_for("a-token") is Role.ADMIN
    assert service.role_for("wrong") is None
    assert service.role_for("") is None


def test_role_for_open_service(service):
    # No tokens configured: every caller is an admin (dev mode).
    assert service.role_for("anything") is Role.ADMIN


def test_book_writes_wake_subscribed_views(tmp_path):
    topo = tmp_path / "topology.xml"
    topo.write_text(TOPOLOGY_XML)
    views = from_xml(
        '<views>'
        '<view name="alarmcache">'
        '<adapter kind="alarm-book"/>'
        "<cache>memory</cache>"
        '<trigger kind="on-write"/>'
        "</view>"
        "</views>", strip_space=True)
    cfg = ServiceConfig(base_dir=str(tmp_path), clock_virtual=True,
                        storage_dir=str(tmp_path / "var"),
                        outbox_dir=str(tmp_path / "outbox"),
                        topology_file=str(topo), views_doc=views)
    service = GridOpsService(cfg)
    service.ingest_alarms(alarm_feed(alarm_record(failure_time=4)))
    # The cached window refreshed because the book told it to.
    snap = service.engine.peek_snapshot("alarmcache")
    assert snap is not None
    assert len(snap.content.child_elements()) == 1
