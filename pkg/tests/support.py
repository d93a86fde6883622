"""Shared test helpers: random builders and independent oracles.

The oracles recompute expected results from first principles (brute-force
scans, explicit rule matching, order-free folds) so tests never check the
package against its own code paths.
"""

from dataclasses import dataclass

from gridops.adapters import AdapterRegistry, ScriptedSource
from gridops.clock import VirtualClock
from gridops.config import (
    CacheType, SyncGroup, TriggerKind, TriggerRule, ViewConfig,
    make_adapter_spec,
)
from gridops.document import ViewNode
from gridops.engine import ViewEngine

# -- random documents ---------------------------------------------------------------

# Small label pool so random queries hit repeated siblings; text includes
# characters the serializers must escape.
LABELS = ("alpha", "beta", "gamma", "delta", "item")
ATTR_KEYS = ("id", "kind", "site", "level")
TEXT_POOL = ("plain", "a<b", "x&y", 'say "hi"', "it's", "  padded  ", "7")
# Attribute values stay free of newlines/tabs: XML parsers normalize those.
ATTR_POOL = ("one", "two", "3", "a&b", "q<r", "it's")


def random_document(rng, max_depth=4, max_children=4):
    """A canonical random tree: no empty text, no adjacent text children."""
    return _random_node(rng, max_depth, max_children)


def _random_node(rng, depth, max_children):
    node = ViewNode(rng.choice(LABELS))
    for key in rng.sample(ATTR_KEYS, rng.randint(0, 2)):
        node.attributes[key] = rng.choice(ATTR_POOL)
    if depth <= 0:
        if rng.random() < 0.6:
            node.append(rng.choice(TEXT_POOL))
        return node
    last_was_text = False
    for _ in range(rng.randint(0, max_children)):
        if rng.random() < 0.25 and not last_was_text:
            node.append(rng.choice(TEXT_POOL))
            last_was_text = True
        else:
            node.append(_random_node(rng, depth - rng.randint(1, 2), max_children))
            last_was_text = False
    return node


# -- path queries: structured form, renderer, brute-force oracle ---------------------


@dataclass(frozen=True)
class QueryStep:
    name: str
    predicate: tuple = None  # ("attr"|"child", key, value) or None


def render_query(steps, select_text=False) -> str:
    if not steps:
        return "/"
    parts = []
    for step in steps:
        parts.append("/" + step.name)
        if step.predicate is not None:
            kind, key, value = step.predicate
            prefix = "@" if kind == "attr" else ""
            parts.append(f"[{prefix}{key}='{value}']")
    if select_text:
        parts.append("/text()")
    return "".join(parts)


def _step_matches(node, step):
    if node.label != step.name:
        return False
    if step.predicate is None:
        return True
    kind, key, value = step.predicate
    if kind == "attr":
        return node.attributes.get(key) == value
    return any(c.text() == value for c in node.child_elements(key))


def scan_query(root, steps, select_text=False) -> ViewNode:
    """Evaluate the structured query by brute-force scanning the tree."""
    result = ViewNode("result")
    if not steps:
        result.append(root.copy())
        return result
    matched = [root] if _step_matches(root, steps[0]) else []
    for step in steps[1:]:
        matched = [child for node in matched
                   for child in node.child_elements()
                   if _step_matches(child, step)]
    for node in matched:
        if select_text:
            for child in node.children:
                if isinstance(child, str):
                    result.append(child)
        else:
            result.append(node.copy())
    return result


def random_query(rng, doc):
    """A structured query biased toward paths that exist in `doc`.

    Returns (steps, select_text). Values avoid quote characters, which the
    query grammar cannot carry inside a predicate literal.
    """
    steps = []
    node = doc
    length = rng.randint(1, 4)
    for position in range(length):
        if position == 0:
            candidates = [node]
        else:
            candidates = node.child_elements() if node is not None else []
        if candidates and rng.random() < 0.85:
            node = rng.choice(candidates)
            name = node.label
        else:
            node = None
            name = rng.choice(LABELS)
        steps.append(QueryStep(name, _random_predicate(rng, node)))
    return steps, rng.random() < 0.3


def _random_predicate(rng, node):
    if rng.random() < 0.5:
        return None
    use_real = node is not None and rng.random() < 0.7
    if rng.random() < 0.5:
        quotable = ([k for k, v in node.attributes.items() if "'" not in v]
                    if node is not None else [])
        if use_real and quotable:
            key = rng.choice(sorted(quotable))
            return ("attr", key, node.attributes[key])
        return ("attr", rng.choice(ATTR_KEYS), rng.choice(("one", "two")))
    if use_real:
        texted = [c for c in node.child_elements() if c.text()
                  and "'" not in c.text()]
        if texted:
            child = rng.choice(texted)
            return ("child", child.label, child.text())
    return ("child", rng.choice(LABELS), rng.choice(("plain", "7")))


# -- trigger plans: independent matcher + closure + ordering -------------------------


def oracle_trigger_plan(configs, kind, *, view="", topic="", now=0):
    """Expected refresh plan for an event, recomputed from the rules.

    configs: iterable of ViewConfig. Mirrors the documented semantics:
    direct matches plus the transitive dependent closure over declared
    dependency-updated edges, dependency-ordered with name tiebreak. A
    CACHE_UPDATED event plans only the closure, never the updated view.
    """
    by_name = {cfg.name: cfg for cfg in configs}
    edges = {}
    for cfg in by_name.values():
        for rule in cfg.triggers:
            if rule.kind == TriggerKind.DEPENDENCY_UPDATED and rule.dependency:
                edges.setdefault(rule.dependency, set()).add(cfg.name)

    def closure(seeds):
        out, frontier = set(), list(seeds)
        while frontier:
            for child in edges.get(frontier.pop(), ()):
                if child not in out and child not in seeds:
                    out.add(child)
                    frontier.append(child)
        return out

    if kind == "CACHE_UPDATED":
        plan = closure({view})
    else:
        direct = {cfg.name for cfg in by_name.values()
                  if any(_rule_fires(r, kind, cfg.name, view, topic, now)
                         for r in cfg.triggers)}
        plan = direct | closure(direct)

    ordered = []
    remaining = set(plan)
    while remaining:
        ready = sorted(n for n in remaining
                       if not (set(by_name[n].effective_dependencies())
                               & remaining))
        ordered.append(ready[0])
        remaining.discard(ready[0])
    return ordered


def _rule_fires(rule, kind, name, view, topic, now):
    if kind == "TIME":
        if rule.kind == TriggerKind.TIME_PERIODIC:
            return rule.period > 0 and int(now) % int(rule.period) == 0
        if rule.kind == TriggerKind.TIME_CRON_LIKE:
            every, offset = int(rule.period), int(rule.offset)
            return (every > 0 and now >= offset
                    and (int(now) - offset) % every == 0)
        return False
    if kind == "NOTIFICATION":
        return rule.kind == TriggerKind.NOTIFICATION_EVENT and rule.topic == topic
    if kind == "WRITE":
        return rule.kind == TriggerKind.ON_WRITE and name == view
    if kind == "CACHE_EXPIRED":
        return rule.kind == TriggerKind.CACHE_EXPIRED and name == view
    return False


def random_dag_configs(rng, max_views=12):
    """A random valid configuration: a dependency DAG with trigger rules.

    Edges only point from later names to earlier ones, so the result is
    acyclic by construction. Every view uses a memory cache (required for
    dependency-updated sources) and a scripted adapter keyed by view name.
    """
    count = rng.randint(2, max_views)
    names = [f"v{i:02d}" for i in range(count)]
    configs = []
    for i, name in enumerate(names):
        deps = tuple(rng.sample(names[:i], rng.randint(0, min(2, i))))
        triggers = [TriggerRule(TriggerKind.DEPENDENCY_UPDATED, dependency=d)
                    for d in deps if rng.random() < 0.8]
        roll = rng.random()
        if roll < 0.3:
            triggers.append(TriggerRule(TriggerKind.TIME_PERIODIC,
                                        period=rng.choice((5, 10, 30, 60))))
        elif roll < 0.5:
            triggers.append(TriggerRule(TriggerKind.TIME_CRON_LIKE,
                                        period=rng.choice((10, 60)),
                                        offset=rng.choice((0, 3, 7))))
        elif roll < 0.7:
            triggers.append(TriggerRule(TriggerKind.NOTIFICATION_EVENT,
                                        topic=rng.choice(("feed", "ops", "dev"))))
        if rng.random() < 0.3:
            triggers.append(TriggerRule(TriggerKind.ON_WRITE))
        if rng.random() < 0.3:
            triggers.append(TriggerRule(TriggerKind.CACHE_EXPIRED))
        configs.append(ViewConfig(
            name=name,
            adapter=make_adapter_spec("scripted", key=name),
            cache=CacheType.MEMORY,
            dependencies=deps,
            triggers=tuple(triggers)))
    return configs


# -- tickets: order-free replica-state oracle -----------------------------------------

_RANK = {"OPS": 0, "CENTRAL": 1}


def oracle_ticket_state(events):
    """Fold a bag of change events into the converged ticket state.

    The fold is order-independent: last-writer-wins by (time, store rank,
    seq) for the mutable fields, max for the escalation step, set union for
    comments. This is the state every store must reach once it has seen
    every event, whatever the delivery order.
    """
    writes = []  # (stamp, field, value)
    escalation = 0
    comments = set()
    for ev in events:
        stamp = (ev.time, _RANK[ev.store], ev.seq)
        if ev.kind == "CREATE":
            data = dict(ev.payload)
            writes.append((stamp, "subject", data.get("subject", "")))
            writes.append((stamp, "status", "OPEN"))
            writes.append((stamp, "impacted_node", data.get("impacted_node", "")))
        elif ev.kind == "SET":
            writes.append((stamp, ev.field, ev.new))
        elif ev.kind == "ESCALATE":
            escalation = max(escalation, int(ev.new))
        elif ev.kind == "COMMENT":
            comments.add((ev.store, ev.seq, ev.author, ev.new))
    state = {"subject": "", "status": "", "impacted_node": ""}
    best = {}
    for stamp, field, value in writes:
        if field in state and stamp > best.get(field, (float("-inf"), -1, -1)):
            best[field] = stamp
            state[field] = value
    state["escalation_step"] = escalation
    state["comments"] = frozenset(comments)
    return state


def ticket_fingerprint(ticket):
    """The convergence-relevant slice of a stored ticket."""
    return {
        "subject": ticket.subject,
        "status": ticket.status,
        "impacted_node": ticket.impacted_node,
        "escalation_step": ticket.escalation_step,
        "comments": frozenset((c.origin_store, c.origin_seq, c.author, c.text)
                              for c in ticket.comments),
    }


# -- alarm workflow property harness ---------------------------------------------------


def assert_alarm_invariants(book):
    """Structural facts that must hold after every workflow operation."""
    alarms = book._alarms
    for alarm in alarms.values():
        masked = alarm.status.value == "MASKED"
        assert bool(alarm.masked_by) == masked, \
            f"{alarm.id}: masked_by={alarm.masked_by!r} status={alarm.status}"
        if masked:
            master = alarms.get(alarm.masked_by)
            assert master is not None, f"{alarm.id} masks under a ghost"
            assert master.site == alarm.site, f"{alarm.id} masked across sites"
            assert master.status.value != "CLOSED", \
                f"{alarm.id} still masked under closed {master.id}"
        # Follow the masking chain; it must terminate without looping.
        seen, current = {alarm.id}, alarm
        while current.masked_by:
            assert current.masked_by not in seen, f"mask cycle at {alarm.id}"
            seen.add(current.masked_by)
            current = alarms.get(current.masked_by)
            if current is None:
                break
    keys = [a.key() for a in alarms.values()]
    assert len(keys) == len(set(keys)), "duplicate (sensor,test,node,time)"
    for triple, alarm_id in book._off_index.items():
        alarm = alarms[alarm_id]
        assert alarm.status.value == "OFF"
        assert (alarm.sensor, alarm.test, alarm.node) == triple


def drive_alarm_forest(book, clock, rng, ops):
    """Apply `ops` random workflow operations, checking invariants after each.

    Illegal operations are allowed to raise; the book must stay consistent
    either way. Returns (attempted, rejected).
    """
    from gridops.errors import GridOpsError

    nodes = ("n1.s1", "n2.s1", "n3.s2", "n4.s2", "n5.s3")
    actions = ("ASSIGN", "MASK", "SET_OFF", "CLOSE", "UNMASK")
    rejected = 0
    counter = 0
    for _ in range(ops):
        roll = rng.random()
        try:
            if roll < 0.3 or not book._alarms:
                counter += 1
                record = ViewNode("alarm", attributes={
                    "sensor": rng.choice(("temp", "disk", "net")),
                    "test": rng.choice(("ping", "load")),
                    "node": rng.choice(nodes),
                    "failure-time": str(rng.randint(1, 50) * 10),
                })
                book.ingest(ViewNode("alarms", children=[record]))
            elif roll < 0.85:
                alarm_id = rng.choice(sorted(book._alarms))
                action = rng.choice(actions)
                master = rng.choice(sorted(book._alarms))
                book.apply(alarm_id, action, actor="prop", master=master)
            elif roll < 0.92:
                alarm_id = rng.choice(sorted(book._alarms))
                book.link_ticket(alarm_id, f"T-{counter:04d}")
                counter += 1
            else:
                clock.advance(rng.choice((60.0, book.quiet_period / 2,
                                          book.quiet_period + 1)))
                book.expire_off_alarms()
        except GridOpsError:
            rejected += 1
        assert_alarm_invariants(book)
    return ops, rejected


# -- engine scaffolding ---------------------------------------------------------------


def scripted_view(name, **overrides):
    """A ViewConfig backed by a scripted source registered under `name`."""
    overrides.setdefault("adapter", make_adapter_spec("scripted", key=name))
    overrides.setdefault("cache", CacheType.MEMORY)
    return ViewConfig(name=name, **overrides)


def payload(label, **attrs):
    return ViewNode(label, attributes={k: str(v) for k, v in attrs.items()})


def build_engine(configs, scripts, *, sync_groups=(), clock=None, cache_dir=None,
                 schemas=None):
    """Engine over scripted sources.

    scripts: name -> ScriptedSource | list of payload nodes (each becomes
    one step, last repeats).
    """
    registry = AdapterRegistry()
    sources = {}
    for name, steps in scripts.items():
        if isinstance(steps, ScriptedSource):
            source = steps
        else:
            source = ScriptedSource()
            for step in steps:
                source.add(payload=step)
        registry.add_script(name, source)
        sources[name] = source
    groups = tuple(g if isinstance(g, SyncGroup)
                   else SyncGroup(name=g[0], members=tuple(g[1]))
                   for g in sync_groups)
    engine = ViewEngine(configs, groups, clock=clock or VirtualClock(),
                        registry=registry, cache_dir=cache_dir, schemas=schemas)
    engine.test_sources = sources
    return engine
