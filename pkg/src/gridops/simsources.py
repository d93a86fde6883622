"""Deterministic fixtures and the scripted scenario driver.

Generators are seeded, so the same inputs give byte-identical documents.
A scenario runs a service on a virtual clock through timed steps:

    <scenario name="morning-shift">
      <at time="60">
        <refresh view="dbView"/>
        <ingest-alarms file="feed.xml"/>
      </at>
      <at time="120">
        <alarm-action id="A-000001" action="ASSIGN" actor="kim"/>
        <expect view="dbView" state="FRESH"/>
      </at>
      <until time="600"/>
    </scenario>
"""

import logging
import os
import random

from .document import ViewNode, from_xml
from .errors import ScriptInvalid

log = logging.getLogger(__name__)

TESTS = ("job-submit", "file-transfer", "service-ping", "storage-check",
         "certificate-expiry")
NODE_TYPES = ("CE", "SE", "GW")
REGIONS = ("north", "south", "east", "west")


def generate_topology(n_sites: int, seed: int = 0) -> ViewNode:
    """A plausible multi-site topology, 1 to 4 nodes per site.

    Same (n_sites, seed) always serializes to the same bytes.
    """
    rng = random.Random(seed)
    doc = ViewNode("topology")
    sites = ViewNode("sites")
    nodes = ViewNode("nodes")
    for index in range(1, n_sites + 1):
        name = "SITE-%03d" % index
        host = name.lower()
        sites.append(ViewNode("site", attributes={
            "name": name,
            "region": rng.choice(REGIONS),
            "contact": f"ops@{host}.example",
            "status": "certified",
        }))
        for node_index in range(1, rng.randint(1, 4) + 1):
            kind = rng.choice(NODE_TYPES)
            nodes.append(ViewNode("node", attributes={
                "hostname": f"{kind.lower()}{node_index}.{host}.example",
                "type": kind,
                "site": name,
            }))
    doc.append(sites)
    doc.append(nodes)
    return doc


def generate_alarm_feed(registry, count: int, seed: int = 0,
                        start_time: float = 0.0) -> ViewNode:
    """An <alarms> feed referencing real nodes from the registry."""
    rng = random.Random(seed)
    hostnames = []
    for site_name in registry.site_names():
        hostnames.extend(n.hostname for n in registry.nodes_of(site_name))
    if not hostnames:
        raise ScriptInvalid("the topology has no nodes to alarm on")
    doc = ViewNode("alarms")
    for index in range(count):
        node = rng.choice(hostnames)
        test = rng.choice(TESTS)
        alarm = ViewNode("alarm", attributes={
            "sensor": "sensor-%02d" % rng.randint(1, 20),
            "test": test,
            "node": node,
            "failure-time": str(int(start_time + index * 7)),
            "message": f"{test} failed on {node}",
        })
        doc.append(alarm)
    return doc


def parse_scenario(doc: ViewNode):
    """Validate scenario structure; returns [(time, [step elements])]."""
    if doc.label != "scenario":
        raise ScriptInvalid(f"expected <scenario>, got <{doc.label}>")
    steps = []
    last = float("-inf")
    for child in doc.child_elements():
        if child.label == "at":
            when = _time_attr(child)
            if when < last:
                raise ScriptInvalid(
                    f"scenario times must not decrease (saw {when} after {last})")
            last = when
            for action in child.child_elements():
                if action.label not in _ACTIONS and action.label != "expect":
                    raise ScriptInvalid(f"unknown action <{action.label}>")
            steps.append((when, list(child.child_elements())))
        elif child.label == "until":
            when = _time_attr(child)
            if when < last:
                raise ScriptInvalid("'until' must not rewind the clock")
            last = when
            steps.append((when, []))
        else:
            raise ScriptInvalid(f"unexpected <{child.label}> in scenario")
    return steps


def _time_attr(el):
    raw = el.get("time", "")
    try:
        return float(raw)
    except ValueError:
        raise ScriptInvalid(f"<{el.label}> needs a numeric time, got '{raw}'")


def run_scenario(service, doc: ViewNode) -> list:
    """Drive the service through the scenario; returns the run log."""
    if not getattr(service.clock, "virtual", False):
        raise ScriptInvalid("scenarios need a service on a virtual clock")
    steps = parse_scenario(doc)
    lines = []
    service.engine.drain_events()
    for when, actions in steps:
        if when > service.clock.now():
            service.clock.advance_to(when)
        plan, closed = service.tick()
        if plan:
            lines.append("t=%d tick refreshed %s" % (when, ",".join(plan)))
        if closed:
            lines.append("t=%d tick auto-closed %s" % (when, ",".join(closed)))
        for action in actions:
            lines.append("t=%d %s" % (when, _run_action(service, action)))
        for event in service.engine.drain_events():
            if event.kind in ("RETRYING", "REFRESH_FAILED", "REFRESH_IGNORED"):
                lines.append("t=%d %s %s %s"
                             % (when, event.kind, event.view, event.detail))
    return lines


def _act_refresh(service, el):
    view = el.get("view", "")
    result = service.engine.refresh_view(view, raise_errors=False)
    return f"refresh {view} -> {result.outcome.value} v{result.version}"


def _act_notify(service, el):
    topic = el.get("topic", "")
    plan = service.engine.notify_event(topic)
    return f"notify {topic} -> {','.join(plan) or 'nothing'}"


def _act_write(service, el):
    view = el.get("view", "")
    plan = service.engine.notify_write(view)
    return f"write {view} -> {','.join(plan) or 'nothing'}"


def _act_ingest(service, el):
    path = el.get("file", "")
    if path:
        full = path if os.path.isabs(path) else \
            os.path.join(service.config.base_dir, path)
        with open(full, encoding="utf-8") as handle:
            feed = from_xml(handle.read(), strip_space=True)
    else:
        feed = el.find("alarms")
        if feed is None:
            raise ScriptInvalid("<ingest-alarms> needs a file or inline <alarms>")
    report = service.ingest_alarms(feed, actor="scenario")
    return ("ingest-alarms -> new=%d duplicates=%d malformed=%d"
            % (len(report.new_ids), report.duplicates, len(report.malformed)))


def _act_generate_alarms(service, el):
    count = int(el.get("count", "1"))
    seed = int(el.get("seed", "0"))
    feed = generate_alarm_feed(service.sites, count, seed=seed,
                               start_time=service.clock.now())
    report = service.ingest_alarms(feed, actor="scenario")
    return "%s -> new=%d" % (el.label, len(report.new_ids))


def _scripted_source(service, el):
    key = el.get("source", "")
    source = service.registry.scripts.get(key)
    if source is None:
        raise ScriptInvalid(f"no scripted source named '{key}'")
    return key, source


def _act_stop_source(service, el):
    key, source = _scripted_source(service, el)
    source.stopped = True
    return f"stop-source {key}"


def _act_resume_source(service, el):
    key, source = _scripted_source(service, el)
    source.stopped = False
    return f"resume-source {key}"


def _act_alarm_action(service, el):
    alarm = service.alarm_action(
        el.get("id", ""), el.get("action", ""), el.get("actor", "scenario"),
        assignee=el.get("assignee", ""), master=el.get("master", ""),
        note=el.get("note", ""))
    return f"alarm-action {alarm.id} -> {alarm.status.value}"


def _act_create_ticket(service, el):
    result = service.create_ticket(
        el.get("subject", ""), el.get("site", ""),
        impacted_node=el.get("node", ""),
        from_alarm=el.get("alarm", ""), author=el.get("author", "scenario"))
    return f"create-ticket -> {result.ticket_id}"


def _act_ticket_update(service, el):
    ticket = service.update_ticket(el.get("id", ""), el.get("field", ""),
                                   el.get("value", ""),
                                   author=el.get("author", "scenario"))
    return f"ticket-update {ticket.id}.{el.get('field', '')}"


def _act_escalate(service, el):
    step = service.escalate_ticket(el.get("id", ""))
    return f"escalate {el.get('id', '')} -> step {step}"


def _act_comment(service, el):
    service.comment_ticket(el.get("id", ""), el.get("author", "scenario"),
                           el.get("text", ""))
    return f"comment {el.get('id', '')}"


def _act_close_ticket(service, el):
    ticket = service.close_ticket(el.get("id", ""),
                                  author=el.get("author", "scenario"))
    return f"close-ticket {ticket.id}"


def _act_sync(service, el):
    report = service.sync_tickets()
    return "sync-tickets -> applied=%d parked=%d" % (report.applied,
                                                     len(report.parked))


_ACTIONS = {
    "refresh": _act_refresh,
    "notify": _act_notify,
    "write": _act_write,
    "ingest-alarms": _act_ingest,
    "generate-alarms": _act_generate_alarms,
    "inject-failure": _act_generate_alarms,
    "stop-source": _act_stop_source,
    "resume-source": _act_resume_source,
    "alarm-action": _act_alarm_action,
    "create-ticket": _act_create_ticket,
    "ticket-update": _act_ticket_update,
    "escalate": _act_escalate,
    "comment": _act_comment,
    "close-ticket": _act_close_ticket,
    "sync-tickets": _act_sync,
}


def _run_action(service, el):
    if el.label == "expect":
        return _check_expect(service, el)
    handler = _ACTIONS.get(el.label)
    if handler is None:
        raise ScriptInvalid(f"unknown action <{el.label}>")
    try:
        return handler(service, el)
    except ScriptInvalid:
        raise
    except Exception as exc:
        return f"{el.label} !! {exc}"


def _check_expect(service, el):
    view = el.get("view", "")
    runtime = service.engine.runtime(view)
    problems = []
    want_state = el.get("state")
    if want_state and runtime.state.value != want_state:
        problems.append(f"state={runtime.state.value} wanted {want_state}")
    want_version = el.get("version")
    if want_version is not None:
        snap = service.engine._exposed.get(view)
        have = snap.version if snap else 0
        if str(have) != want_version:
            problems.append(f"version={have} wanted {want_version}")
    if problems:
        return f"expect {view} FAIL: " + "; ".join(problems)
    return f"expect {view} PASS"
