"""Alarm lifecycle: ingest, status workflow, masking, quiet periods.

The status graph is deliberately small. Every transition is an explicit
(status, action) pair; anything else is ILLEGAL_TRANSITION:

    NEW      --ASSIGN-->  ASSIGNED  --CLOSE-->  CLOSED
    NEW      --MASK---->  MASKED    --UNMASK--> NEW
    NEW      --SET_OFF->  OFF       --CLOSE-->  CLOSED

Masking ties an alarm to a master alarm on the same site; closing the
master unmasks its slaves. OFF alarms close on their own once they stay
quiet for a full quiet period; a recurrence of the same sensor/test/node
restarts that timer.
"""

import logging
import threading
from dataclasses import dataclass, field
from enum import Enum

from .clock import SystemClock
from .document import ViewNode
from .errors import (
    AlarmNotFound, AlarmNotLinkable, CrossSiteMask, IllegalTransition,
    MaskCycle, MasterNotFound,
)

log = logging.getLogger(__name__)

UNASSIGNED_SITE = "_unassigned"
SYSTEM_ACTOR = "_system"
DEFAULT_QUIET_PERIOD = 24 * 3600.0


class AlarmStatus(Enum):
    NEW = "NEW"
    ASSIGNED = "ASSIGNED"
    MASKED = "MASKED"
    OFF = "OFF"
    CLOSED = "CLOSED"


class AlarmAction(Enum):
    ASSIGN = "ASSIGN"
    MASK = "MASK"
    SET_OFF = "SET_OFF"
    CLOSE = "CLOSE"
    UNMASK = "UNMASK"


# The complete transition table; nothing outside it is legal.
TRANSITIONS = {
    (AlarmStatus.NEW, AlarmAction.ASSIGN): AlarmStatus.ASSIGNED,
    (AlarmStatus.NEW, AlarmAction.MASK): AlarmStatus.MASKED,
    (AlarmStatus.NEW, AlarmAction.SET_OFF): AlarmStatus.OFF,
    (AlarmStatus.ASSIGNED, AlarmAction.CLOSE): AlarmStatus.CLOSED,
    (AlarmStatus.MASKED, AlarmAction.UNMASK): AlarmStatus.NEW,
    (AlarmStatus.OFF, AlarmAction.CLOSE): AlarmStatus.CLOSED,
}


@dataclass
class AuditRecord:
    time: float
    action: str
    actor: str
    from_status: str
    to_status: str
    note: str = ""


@dataclass
class Alarm:
    id: str
    sensor: str
    test: str
    node: str
    site: str
    failure_time: float
    message: str = ""
    status: AlarmStatus = AlarmStatus.NEW
    assignee: str = ""
    masked_by: str = ""               # id of the masking master alarm
    ticket_id: str = ""
    created_at: float = 0.0
    updated_at: float = 0.0
    off_since: float = 0.0
    history: list = field(default_factory=list)

    def key(self):
        return (self.sensor, self.test, self.node, self.failure_time)


@dataclass
class IngestReport:
    new_ids: list = field(default_factory=list)
    duplicates: int = 0
    malformed: list = field(default_factory=list)   # (index, reason)


class AlarmBook:
    """All alarms plus the workflow rules that move them around."""

    def __init__(self, registry=None, *, clock=None,
                 quiet_period=DEFAULT_QUIET_PERIOD):
        self.registry = registry
        self.clock = clock or SystemClock()
        self.quiet_period = quiet_period
        self._lock = threading.RLock()
        self._alarms = {}
        self._by_key = {}
        self._off_index = {}            # (sensor, test, node) -> OFF alarm id
        self._counter = 0

    # -- ingest -----------------------------------------------------------

    def ingest(self, doc: ViewNode, actor="ingest") -> IngestReport:
        """Take an <alarms> document from a monitoring feed.

        Dedup key is (sensor, test, node, failure_time). A record matching
        an existing alarm exactly is a duplicate. A record matching an OFF
        alarm's sensor/test/node at a later failure time is a recurrence:
        it restarts the quiet timer instead of opening a second alarm.
        """
        report = IngestReport()
        with self._lock:
            for index, el in enumerate(doc.child_elements("alarm")):
                sensor = el.get("sensor", "").strip()
                test = el.get("test", "").strip()
                node = el.get("node", "").strip()
                raw_time = el.get("failure-time", "")
                if not (sensor and test and node):
                    report.malformed.append(
                        (index, "sensor, test and node are required"))
                    continue
                try:
                    failure_time = float(raw_time)
                except ValueError:
                    report.malformed.append(
                        (index, f"failure-time '{raw_time}' is not a number"))
                    continue
                key = (sensor, test, node, failure_time)
                if key in self._by_key:
                    report.duplicates += 1
                    continue
                recurring = self._recurring_off(sensor, test, node)
                if recurring is not None:
                    recurring.off_since = self.clock.now()
                    recurring.updated_at = self.clock.now()
                    report.duplicates += 1
                    continue
                alarm = self._open(sensor, test, node, failure_time,
                                   el.get("message", ""), actor)
                report.new_ids.append(alarm.id)
        return report

    def _recurring_off(self, sensor, test, node):
        alarm_id = self._off_index.get((sensor, test, node))
        return self._alarms[alarm_id] if alarm_id else None

    def _open(self, sensor, test, node, failure_time, message, actor):
        self._counter += 1
        now = self.clock.now()
        site = None
        if self.registry is not None:
            site = self.registry.resolve_node(node)
        alarm = Alarm(
            id="A-%06d" % self._counter,
            sensor=sensor, test=test, node=node,
            site=site or UNASSIGNED_SITE,
            failure_time=failure_time, message=message,
            created_at=now, updated_at=now,
        )
        alarm.history.append(AuditRecord(now, "OPEN", actor, "", "NEW"))
        self._alarms[alarm.id] = alarm
        self._by_key[alarm.key()] = alarm.id
        return alarm

    # -- workflow -----------------------------------------------------------

    def get(self, alarm_id) -> Alarm:
        alarm = self._alarms.get(alarm_id)
        if alarm is None:
            raise AlarmNotFound(f"no alarm '{alarm_id}'", alarm=alarm_id)
        return alarm

    def apply(self, alarm_id, action, actor, *, assignee="", master="",
              note="") -> Alarm:
        """Apply one workflow action, enforcing the transition table."""
        if isinstance(action, str):
            try:
                action = AlarmAction[action.upper().replace("-", "_")]
            except KeyError:
                raise IllegalTransition(f"unknown action '{action}'",
                                        alarm=alarm_id)
        with self._lock:
            alarm = self.get(alarm_id)
            target = TRANSITIONS.get((alarm.status, action))
            if target is None:
                raise IllegalTransition(
                    f"{action.value} is not allowed from {alarm.status.value}",
                    alarm=alarm_id, status=alarm.status.value,
                    action=action.value)
            if action == AlarmAction.MASK:
                self._check_mask(alarm, master)
                alarm.masked_by = master
            if action == AlarmAction.ASSIGN:
                alarm.assignee = assignee or actor
            if action == AlarmAction.UNMASK:
                alarm.masked_by = ""
            if action == AlarmAction.SET_OFF:
                alarm.off_since = self.clock.now()
            self._move(alarm, target, action.value, actor, note)
            if target == AlarmStatus.CLOSED:
                self._unmask_slaves(alarm.id)
            return alarm

    def _check_mask(self, alarm, master_id):
        if not master_id:
            raise MasterNotFound("MASK requires a master alarm",
                                 alarm=alarm.id)
        master = self._alarms.get(master_id)
        if master is None:
            raise MasterNotFound(f"no master alarm '{master_id}'",
                                 alarm=alarm.id, master=master_id)
        if master.id == alarm.id:
            raise MaskCycle("an alarm cannot mask itself", alarm=alarm.id)
        if master.site != alarm.site:
            raise CrossSiteMask(
                f"master is on '{master.site}', alarm on '{alarm.site}'",
                alarm=alarm.id, master=master_id)
        if master.status == AlarmStatus.CLOSED:
            raise IllegalTransition("master alarm is closed",
                                    alarm=alarm.id, master=master_id)
        current = master
        while current.masked_by:
            if current.masked_by == alarm.id:
                raise MaskCycle(
                    f"masking under '{master_id}' would close a loop",
                    alarm=alarm.id, master=master_id)
            current = self._alarms.get(current.masked_by)
            if current is None:
                break

    def _unmask_slaves(self, master_id):
        for other in self._alarms.values():
            if other.status == AlarmStatus.MASKED and other.masked_by == master_id:
                other.masked_by = ""
                self._move(other, AlarmStatus.NEW, AlarmAction.UNMASK.value,
                           SYSTEM_ACTOR, f"master {master_id} closed")

    def _move(self, alarm, target, action, actor, note=""):
        record = AuditRecord(self.clock.now(), action, actor,
                             alarm.status.value, target.value, note)
        triple = (alarm.sensor, alarm.test, alarm.node)
        if alarm.status == AlarmStatus.OFF and target != AlarmStatus.OFF:
            self._off_index.pop(triple, None)
        if target == AlarmStatus.OFF:
            self._off_index[triple] = alarm.id
        alarm.status = target
        alarm.updated_at = record.time
        alarm.history.append(record)

    def expire_off_alarms(self) -> list:
        """Close OFF alarms whose quiet period fully elapsed."""
        closed = []
        with self._lock:
            now = self.clock.now()
            for alarm in self._alarms.values():
                if alarm.status != AlarmStatus.OFF:
                    continue
                if now - alarm.off_since > self.quiet_period:
                    self._move(alarm, AlarmStatus.CLOSED,
                               AlarmAction.CLOSE.value, SYSTEM_ACTOR,
                               "quiet period elapsed")
                    self._unmask_slaves(alarm.id)
                    closed.append(alarm.id)
        return closed

    def check_linkable(self, alarm_id) -> Alarm:
        alarm = self.get(alarm_id)
        if alarm.status not in (AlarmStatus.NEW, AlarmStatus.ASSIGNED):
            raise AlarmNotLinkable(
                f"tickets attach only to NEW or ASSIGNED alarms, "
                f"not {alarm.status.value}", alarm=alarm_id)
        if alarm.ticket_id:
            raise AlarmNotLinkable(f"already linked to {alarm.ticket_id}",
                                   alarm=alarm_id)
        return alarm

    def link_ticket(self, alarm_id, ticket_id, actor=SYSTEM_ACTOR):
        """Attach a ticket; a NEW alarm becomes ASSIGNED alongside."""
        with self._lock:
            alarm = self.check_linkable(alarm_id)
            alarm.ticket_id = ticket_id
            if alarm.status == AlarmStatus.NEW:
                alarm.assignee = alarm.assignee or actor
                self._move(alarm, AlarmStatus.ASSIGNED,
                           AlarmAction.ASSIGN.value, actor,
                           f"linked to {ticket_id}")
            else:
                alarm.updated_at = self.clock.now()
            return alarm

    # -- listing / export -----------------------------------------------------

    def list_alarms(self, site=None, statuses=None, *,
                    include_masked=False) -> list:
        """Active alarms, newest failure first.

        Without an explicit status filter only NEW and ASSIGNED show;
        include_masked adds MASKED. Pass statuses to override entirely.
        """
        if statuses is None:
            wanted = {AlarmStatus.NEW, AlarmStatus.ASSIGNED}
            if include_masked:
                wanted.add(AlarmStatus.MASKED)
        else:
            if isinstance(statuses, (str, AlarmStatus)):
                statuses = [statuses]
            wanted = {AlarmStatus[s.upper()] if isinstance(s, str) else s
                      for s in statuses}
        with self._lock:
            found = [a for a in self._alarms.values()
                     if (site is None or a.site == site)
                     and a.status in wanted]
        return sorted(found, key=lambda a: (-a.failure_time, a.id))

    def count_open(self, site=None) -> int:
        statuses = set(AlarmStatus) - {AlarmStatus.CLOSED}
        return len(self.list_alarms(site=site, statuses=statuses))

    def export_document(self, site=None, statuses=None) -> ViewNode:
        if statuses is None:
            statuses = set(AlarmStatus)     # feeds carry everything
        doc = ViewNode("alarms")
        for alarm in self.list_alarms(site=site, statuses=statuses):
            doc.append(alarm_element(alarm))
        return doc

    def history_document(self, alarm_id) -> ViewNode:
        alarm = self.get(alarm_id)
        doc = ViewNode("history", attributes={"alarm": alarm.id})
        for record in alarm.history:
            doc.append(ViewNode("entry", attributes={
                "time": f"{record.time:.3f}",
                "action": record.action,
                "actor": record.actor,
                "from": record.from_status,
                "to": record.to_status,
                **({"note": record.note} if record.note else {}),
            }))
        return doc


def alarm_element(alarm: Alarm) -> ViewNode:
    attrs = {
        "id": alarm.id,
        "sensor": alarm.sensor,
        "test": alarm.test,
        "node": alarm.node,
        "site": alarm.site,
        "failure-time": f"{alarm.failure_time:.0f}",
        "status": alarm.status.value,
    }
    if alarm.assignee:
        attrs["assignee"] = alarm.assignee
    if alarm.masked_by:
        attrs["masked-by"] = alarm.masked_by
    if alarm.ticket_id:
        attrs["ticket"] = alarm.ticket_id
    el = ViewNode("alarm", attributes=attrs)
    if alarm.message:
        message = ViewNode("message")
        message.append(alarm.message)
        el.append(message)
    return el
