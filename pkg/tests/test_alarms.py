"""Alarm book: ingest, workflow transitions, masking, quiet periods."""

import random

import pytest

from gridops.alarms import (
    TRANSITIONS, AlarmAction, AlarmBook, AlarmStatus, SYSTEM_ACTOR,
    UNASSIGNED_SITE,
)
from gridops.clock import VirtualClock
from gridops.errors import (
    AlarmNotFound, AlarmNotLinkable, CrossSiteMask, IllegalTransition,
    MaskCycle, MasterNotFound,
)
from gridops.topology import CertificationStatus, Node, Site, SiteRegistry
from conftest import alarm_feed, alarm_record
from support import assert_alarm_invariants, drive_alarm_forest


def forest_registry():
    sites = [Site(f"S{i}", "", "", CertificationStatus.CERTIFIED, ())
             for i in (1, 2, 3)]
    nodes = [Node("n1.s1", "CE", "S1"), Node("n2.s1", "SE", "S1"),
             Node("n3.s2", "CE", "S2"), Node("n4.s2", "GW", "S2"),
             Node("n5.s3", "CE", "S3")]
    return SiteRegistry(sites, nodes)


@pytest.fixture
def book(clock):
    return AlarmBook(forest_registry(), clock=clock, quiet_period=3600.0)


def open_alarm(book, sensor="temp", node="n1.s1", failure_time=100):
    report = book.ingest(alarm_feed(alarm_record(sensor=sensor, node=node,
                                                 failure_time=failure_time)))
    assert not report.malformed
    return report.new_ids[0]


# -- ingest ------------------------------------------------------------------------


def test_ingest_opens_alarms_with_resolved_sites(book):
    report = book.ingest(alarm_feed(
        alarm_record(node="n1.s1", failure_time=100),
        alarm_record(node="n3.s2", failure_time=110, sensor="disk"),
        alarm_record(node="unknown.example", failure_time=120, sensor="net"),
    ))
    assert len(report.new_ids) == 3 and report.duplicates == 0
    first = book.get(report.new_ids[0])
    assert first.status is AlarmStatus.NEW
    assert first.site == "S1"
    assert first.history[0].action == "OPEN"
    assert book.get(report.new_ids[1]).site == "S2"
    assert book.get(report.new_ids[2]).site == UNASSIGNED_SITE


def test_ingest_dedups_on_the_exact_key(book):
    record = alarm_record(node="n1.s1", failure_time=100)
    assert len(book.ingest(alarm_feed(record)).new_ids) == 1
    again = book.ingest(alarm_feed(record))
    assert again.new_ids == [] and again.duplicates == 1
    # The same fault at a new failure time is a distinct alarm.
    later = book.ingest(alarm_feed(alarm_record(node="n1.s1",
                                                failure_time=200)))
    assert len(later.new_ids) == 1


def test_ingest_reports_malformed_records(book):
    bad_fields = alarm_record()
    del bad_fields.attributes["sensor"]
    bad_time = alarm_record(failure_time=300)
    bad_time.attributes["failure-time"] = "soon"
    report = book.ingest(alarm_feed(bad_fields, alarm_record(), bad_time))
    assert report.new_ids and len(report.malformed) == 2
    indexes = [index for index, _ in report.malformed]
    assert indexes == [0, 2]
    assert "not a number" in report.malformed[1][1]


def test_recurrence_restarts_the_quiet_timer(book, clock):
    alarm_id = open_alarm(book, failure_time=100)
    book.apply(alarm_id, "SET_OFF", actor="op")
    clock.advance(3000)
    report = book.ingest(alarm_feed(alarm_record(node="n1.s1",
                                                 failure_time=400)))
    assert report.new_ids == [] and report.duplicates == 1
    assert book.get(alarm_id).off_since == clock.now()
    # The restarted timer keeps it open past the original deadline.
    clock.advance(3000)
    assert book.expire_off_alarms() == []
    clock.advance(700)
    assert book.expire_off_alarms() == [alarm_id]


# -- transitions -------------------------------------------------------------------


def put_in_status(book, status):
    alarm_id = open_alarm(book, sensor=f"s-{status.value}",
                          failure_time=random.randint(1000, 10**6))
    if status is AlarmStatus.ASSIGNED:
        book.apply(alarm_id, "ASSIGN", actor="op")
    elif status is AlarmStatus.MASKED:
        master = open_alarm(book, sensor=f"m-{status.value}",
                            failure_time=random.randint(1000, 10**6))
        book.apply(alarm_id, "MASK", actor="op", master=master)
    elif status is AlarmStatus.OFF:
        book.apply(alarm_id, "SET_OFF", actor="op")
    elif status is AlarmStatus.CLOSED:
        book.apply(alarm_id, "ASSIGN", actor="op")
        book.apply(alarm_id, "CLOSE", actor="op")
    return alarm_id


@pytest.mark.parametrize("status", list(AlarmStatus))
@pytest.mark.parametrize("action", list(AlarmAction))
def test_every_status_action_pair_follows_the_table(book, status, action):
    random.seed(f"{status}-{action}")
    alarm_id = put_in_status(book, status)
    master = open_alarm(book, sensor="master", failure_time=77)
    target = TRANSITIONS.get((status, action))
    if target is None:
        with pytest.raises(IllegalTransition):
            book.apply(alarm_id, action, actor="op", master=master)
        assert book.get(alarm_id).status is status
    else:
        book.apply(alarm_id, action, actor="op", master=master)
        assert book.get(alarm_id).status is target


def test_action_names_accept_hyphens_and_case(book):
    alarm_id = open_alarm(book)
    book.apply(alarm_id, "set-off", actor="op")
    assert book.get(alarm_id).status is AlarmStatus.OFF
    with pytest.raises(IllegalTransition, match="unknown action"):
        book.apply(alarm_id, "explode", actor="op")


def test_unknown_alarm(book):
    with pytest.raises(AlarmNotFound):
        book.apply("A-999999", "ASSIGN", actor="op")


def test_assign_records_assignee_and_audit(book, clock):
    alarm_id = open_alarm(book)
    clock.advance(5)
    book.apply(alarm_id, "ASSIGN", actor="alice", assignee="bob", note="yours")
    alarm = book.get(alarm_id)
    assert alarm.assignee == "bob"
    assert alarm.updated_at == clock.now()
    last = alarm.history[-1]
    assert (last.action, last.actor, last.from_status, last.to_status,
            last.note) == ("ASSIGN", "alice", "NEW", "ASSIGNED", "yours")


def test_assignee_defaults_to_actor(book):
    alarm_id = open_alarm(book)
    book.apply(alarm_id, "ASSIGN", actor="carol")
    assert book.get(alarm_id).assignee == "carol"


# -- masking -----------------------------------------------------------------------


def test_mask_requires_a_live_same_site_master(book):
    alarm_id = open_alarm(book, node="n1.s1", failure_time=100)
    with pytest.raises(MasterNotFound):
        book.apply(alarm_id, "MASK", actor="op")
    with pytest.raises(MasterNotFound):
        book.apply(alarm_id, "MASK", actor="op", master="A-404404")
    with pytest.raises(MaskCycle):
        book.apply(alarm_id, "MASK", actor="op", master=alarm_id)
    other_site = open_alarm(book, node="n3.s2", failure_time=110)
    with pytest.raises(CrossSiteMask):
        book.apply(alarm_id, "MASK", actor="op", master=other_site)
    closed = put_in_status(book, AlarmStatus.CLOSED)
    with pytest.raises(IllegalTransition, match="master alarm is closed"):
        book.apply(alarm_id, "MASK", actor="op", master=closed)


def test_mask_chain_cycles_are_rejected(book):
    a = open_alarm(book, sensor="a", failure_time=1)
    b = open_alarm(book, sensor="b", failure_time=2)
    c = open_alarm(book, sensor="c", failure_time=3)
    book.apply(a, "MASK", actor="op", master=b)
    book.apply(b, "MASK", actor="op", master=c)
    with pytest.raises(MaskCycle):
        book.apply(c, "MASK", actor="op", master=a)


def test_closing_a_master_cascades_unmask(book):
    master = open_alarm(book, sensor="root", failure_time=10)
    slaves = [open_alarm(book, sensor=f"s{i}", failure_time=20 + i)
              for i in range(3)]
    for slave in slaves:
        book.apply(slave, "MASK", actor="op", master=master)
    book.apply(master, "ASSIGN", actor="op")
    book.apply(master, "CLOSE", actor="op")
    for slave in slaves:
        alarm = book.get(slave)
        assert alarm.status is AlarmStatus.NEW
        assert alarm.masked_by == ""
        last = alarm.history[-1]
        assert last.action == "UNMASK" and last.actor == SYSTEM_ACTOR
        assert f"master {master}" in last.note


def test_unmask_by_hand_returns_to_new(book):
    master = open_alarm(book, sensor="root", failure_time=10)
    slave = open_alarm(book, sensor="s", failure_time=20)
    book.apply(slave, "MASK", actor="op", master=master)
    book.apply(slave, "UNMASK", actor="op")
    assert book.get(slave).status is AlarmStatus.NEW
    assert book.get(slave).masked_by == ""


# -- quiet period ------------------------------------------------------------------


def test_off_alarms_close_after_the_quiet_period(book, clock):
    alarm_id = open_alarm(book)
    book.apply(alarm_id, "SET_OFF", actor="op")
    clock.advance(3600)
    assert book.expire_off_alarms() == []       # boundary: not yet elapsed
    clock.advance(1)
    assert book.expire_off_alarms() == [alarm_id]
    alarm = book.get(alarm_id)
    assert alarm.status is AlarmStatus.CLOSED
    assert alarm.history[-1].actor == SYSTEM_ACTOR


def test_expiring_master_unmasks_its_slaves(book, clock):
    master = open_alarm(book, sensor="root", failure_time=10)
    slave = open_alarm(book, sensor="s", failure_time=20)
    book.apply(slave, "MASK", actor="op", master=master)
    book.apply(master, "SET_OFF", actor="op")
    clock.advance(3601)
    assert book.expire_off_alarms() == [master]
    assert book.get(slave).status is AlarmStatus.NEW


# -- listing and linking ------------------------------------------------------------


def populate_listing(book):
    ids = {}
    ids["new_late"] = open_alarm(book, sensor="a", failure_time=300)
    ids["new_early"] = open_alarm(book, sensor="b", failure_time=100)
    ids["assigned"] = open_alarm(book, sensor="c", failure_time=200)
    book.apply(ids["assigned"], "ASSIGN", actor="op")
    ids["masked"] = open_alarm(book, sensor="d", failure_time=400)
    book.apply(ids["masked"], "MASK", actor="op", master=ids["new_late"])
    ids["off"] = open_alarm(book, sensor="e", failure_time=500)
    book.apply(ids["off"], "SET_OFF", actor="op")
    ids["closed"] = open_alarm(book, sensor="f", failure_time=600)
    book.apply(ids["closed"], "ASSIGN", actor="op")
    book.apply(ids["closed"], "CLOSE", actor="op")
    ids["other_site"] = open_alarm(book, sensor="g", node="n3.s2",
                                   failure_time=700)
    return ids


def test_list_alarms_defaults_and_ordering(book):
    ids = populate_listing(book)
    listed = [a.id for a in book.list_alarms()]
    # Newest failure first; NEW and ASSIGNED only.
    assert listed == [ids["other_site"], ids["new_late"], ids["assigned"],
                      ids["new_early"]]
    with_masked = [a.id for a in book.list_alarms(include_masked=True)]
    assert ids["masked"] in with_masked


def test_list_alarms_filters(book):
    ids = populate_listing(book)
    assert [a.id for a in book.list_alarms(site="S2")] == [ids["other_site"]]
    off_only = book.list_alarms(statuses="off")
    assert [a.id for a in off_only] == [ids["off"]]
    enum_filter = book.list_alarms(statuses=[AlarmStatus.CLOSED])
    assert [a.id for a in enum_filter] == [ids["closed"]]


def test_list_alarms_orders_ties_by_id(book):
    first = open_alarm(book, sensor="x", failure_time=100)
    second = open_alarm(book, sensor="y", failure_time=100)
    assert [a.id for a in book.list_alarms()] == sorted([first, second])


def test_count_open_excludes_closed_only(book):
    populate_listing(book)
    assert book.count_open() == 6
    assert book.count_open(site="S1") == 5


def test_link_ticket_assigns_new_alarms(book):
    alarm_id = open_alarm(book)
    book.link_ticket(alarm_id, "T-000001", actor="alice")
    alarm = book.get(alarm_id)
    assert alarm.ticket_id == "T-000001"
    assert alarm.status is AlarmStatus.ASSIGNED
    assert alarm.history[-1].action == "ASSIGN"
    assert "T-000001" in alarm.history[-1].note


def test_link_ticket_keeps_assigned_status(book):
    alarm_id = open_alarm(book)
    book.apply(alarm_id, "ASSIGN", actor="bob")
    book.link_ticket(alarm_id, "T-000002")
    alarm = book.get(alarm_id)
    assert alarm.status is AlarmStatus.ASSIGNED and alarm.assignee == "bob"


def test_link_ticket_rejections(book):
    masked = put_in_status(book, AlarmStatus.MASKED)
    with pytest.raises(AlarmNotLinkable):
        book.link_ticket(masked, "T-1")
    linked = open_alarm(book, sensor="fresh", failure_time=999)
    book.link_ticket(linked, "T-2")
    with pytest.raises(AlarmNotLinkable, match="already linked"):
        book.link_ticket(linked, "T-3")


# -- export -------------------------------------------------------------------------


def test_export_document_carries_workflow_attributes(book):
    ids = populate_listing(book)
    doc = book.export_document()
    by_id = {el.get("id"): el for el in doc.child_elements("alarm")}
    assert len(by_id) == 7              # export shows every status
    assert by_id[ids["closed"]].get("status") == "CLOSED"
    assert by_id[ids["masked"]].get("masked-by") == ids["new_late"]
    assert by_id[ids["assigned"]].get("assignee") == "op"
    assert by_id[ids["new_early"]].find("message").text() == "probe failed"


def test_history_document_lists_audit_entries(book):
    alarm_id = open_alarm(book)
    book.apply(alarm_id, "ASSIGN", actor="alice")
    doc = book.history_document(alarm_id)
    assert doc.get("alarm") == alarm_id
    actions = [e.get("action") for e in doc.child_elements("entry")]
    assert actions == ["OPEN", "ASSIGN"]


# -- property: the workflow forest stays consistent -----------------------------------


def test_random_workflow_forest_keeps_invariants():
    rng = random.Random(90125)
    clock = VirtualClock(start=1000.0)
    book = AlarmBook(forest_registry(), clock=clock, quiet_period=1800.0)
    attempted, rejected = drive_alarm_forest(book, clock, rng, ops=300)
    assert attempted == 300
    assert 0 < rejected < attempted     # the pool mixes legal and illegal ops
    assert_alarm_invariants(book)
