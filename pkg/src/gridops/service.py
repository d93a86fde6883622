"""Service assembly: one XML config wires clock, topology, books and views.

    <service>
      <storage dir="var"/>
      <clock virtual="true" start="1000000"/>
      <topology file="topology.xml"/>      (or generate="250" seed="7")
      <tokens>
        <token value="ro-token" role="readonly"/>
        <token value="op-token" role="operator"/>
        <token value="admin-token" role="admin"/>
      </tokens>
      <alarms quiet-period="86400" source-view="alarmFeed"/>
      <tickets backend="dual" outbox="outbox"/>
      <schemas><schema name="rows" file="rows.schema.xml"/></schemas>
      <views file="views.xml"/>            (or an inline <views> element)
    </service>

With no <tokens> section the HTTP API runs open (every caller is admin);
that mode exists for local scenarios, not production.

The service adds three book-backed views on top of the configured ones
(unless the names are taken): `alarms`, `tickets` and `topology`. They are
cacheless, so they always reflect the books' current state. Mutations to a
book also raise a write notification for every view backed by it, which
lets a configuration attach on-write triggers to cached boards.
"""

import logging
import os
from dataclasses import dataclass, field
from enum import IntEnum

from .adapters import AdapterRegistry
from .alarms import DEFAULT_QUIET_PERIOD, SYSTEM_ACTOR, AlarmBook
from .clock import SystemClock, VirtualClock
from .config import (
    CacheType, ViewConfig, make_adapter_spec, parse_views, parse_views_text,
)
from .document import ViewNode, from_xml
from .engine import ViewEngine
from .errors import ConfigInvalid, GridOpsError, ViewNotFound
from .schema import load_schema
from .tickets import TicketBridge
from .topology import (
    SiteRegistry, load_topology_file, parse_topology,
    site_summary as assemble_site_summary,
)

log = logging.getLogger(__name__)

ALARM_BOOK = "alarm-book"
TICKET_BOOK = "ticket-book"
TOPOLOGY_SOURCE = "topology-source"


class Role(IntEnum):
    READONLY = 0
    OPERATOR = 1
    ADMIN = 2


@dataclass
class ServiceConfig:
    base_dir: str = "."
    storage_dir: str = "var"
    clock_virtual: bool = False
    clock_start: float = 0.0
    topology_file: str = ""
    topology_generate: int = 0
    topology_seed: int = 0
    tokens: dict = field(default_factory=dict)      # token -> Role
    quiet_period: float = DEFAULT_QUIET_PERIOD
    alarm_source_view: str = ""
    ticket_backend: str = "dual"
    outbox_dir: str = "outbox"
    schemas: dict = field(default_factory=dict)     # name -> path
    views_file: str = ""
    views_doc: ViewNode = None

    def resolve(self, path):
        if not path or os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)


def parse_service_config(doc: ViewNode, base_dir=".") -> ServiceConfig:
    if doc.label != "service":
        raise ConfigInvalid(f"expected <service>, got <{doc.label}>")
    cfg = ServiceConfig(base_dir=base_dir)
    storage = doc.find("storage")
    if storage is not None:
        cfg.storage_dir = storage.get("dir", cfg.storage_dir)
    clock = doc.find("clock")
    if clock is not None:
        cfg.clock_virtual = clock.get("virtual", "false").lower() == "true"
        cfg.clock_start = float(clock.get("start", "0"))
    topology = doc.find("topology")
    if topology is not None:
        cfg.topology_file = topology.get("file", "")
        cfg.topology_generate = int(topology.get("generate", "0"))
        cfg.topology_seed = int(topology.get("seed", "0"))
    tokens = doc.find("tokens")
    if tokens is not None:
        for token in tokens.child_elements("token"):
            value = token.get("value", "")
            role_name = token.get("role", "readonly").upper()
            if not value:
                raise ConfigInvalid("<token> requires a value")
            try:
                cfg.tokens[value] = Role[role_name]
            except KeyError:
                raise ConfigInvalid(f"unknown role '{role_name}'")
    alarms = doc.find("alarms")
    if alarms is not None:
        cfg.quiet_period = float(alarms.get("quiet-period",
                                            str(DEFAULT_QUIET_PERIOD)))
        cfg.alarm_source_view = alarms.get("source-view", "")
    tickets = doc.find("tickets")
    if tickets is not None:
        cfg.ticket_backend = tickets.get("backend", "dual")
        cfg.outbox_dir = tickets.get("outbox", cfg.outbox_dir)
    schemas = doc.find("schemas")
    if schemas is not None:
        for schema in schemas.child_elements("schema"):
            cfg.schemas[schema.get("name", "")] = schema.get("file", "")
    views = doc.find("views")
    if views is not None:
        views_file = views.get("file", "")
        if views_file:
            cfg.views_file = views_file
        elif views.children:
            cfg.views_doc = views
    return cfg


def load_service_config(path: str) -> ServiceConfig:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = from_xml(handle.read(), strip_space=True)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read service config: {exc}")
    except ConfigInvalid:
        raise
    except Exception as exc:
        raise ConfigInvalid(f"service config is not well-formed XML: {exc}")
    return parse_service_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))


class _BookAdapter:
    """Bridges a book export into the adapter interface."""

    def __init__(self, produce, site=None, status=None):
        self.produce = produce
        self.site = site
        self.status = status

    def fetch(self, ctx):
        return self.produce(self.site, self.status)


class GridOpsService:
    """Everything the API and CLI need, wired together."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.clock = (VirtualClock(start=config.clock_start)
                      if config.clock_virtual else SystemClock())
        self.sites = self._load_topology(config)
        storage = config.resolve(config.storage_dir)
        os.makedirs(storage, exist_ok=True)
        self.alarms = AlarmBook(self.sites, clock=self.clock,
                                quiet_period=config.quiet_period)
        outbox = config.resolve(config.outbox_dir) if config.outbox_dir else None
        self.tickets = TicketBridge(self.sites, clock=self.clock,
                                    backend=config.ticket_backend,
                                    outbox_dir=outbox)
        self.registry = AdapterRegistry()
        self._register_book_adapters()
        schemas = {name: load_schema(config.resolve(path))
                   for name, path in config.schemas.items() if path}
        configs, groups = self._load_views(config)
        self.engine = ViewEngine(
            configs, groups, clock=self.clock, registry=self.registry,
            base_dir=config.base_dir,
            cache_dir=os.path.join(storage, "cache"), schemas=schemas)
        if config.alarm_source_view:
            self.engine.add_exposure_listener(self._on_exposure)

    @classmethod
    def from_file(cls, path):
        return cls(load_service_config(path))

    def _load_topology(self, config) -> SiteRegistry:
        if config.topology_generate:
            from .simsources import generate_topology
            doc = generate_topology(config.topology_generate,
                                    seed=config.topology_seed)
            return parse_topology(doc)
        if config.topology_file:
            return load_topology_file(config.resolve(config.topology_file))
        return SiteRegistry([])

    def _register_book_adapters(self):
        def alarm_factory(spec):
            return _BookAdapter(
                lambda site, status: self.alarms.export_document(site, status),
                spec.param("site"), spec.param("status"))

        def ticket_factory(spec):
            return _BookAdapter(
                lambda site, status: self.tickets.export_document(site, status),
                spec.param("site"), spec.param("status"))

        def topology_factory(spec):
            return _BookAdapter(lambda site, status: self.sites.to_document())

        self.registry.register(ALARM_BOOK, alarm_factory)
        self.registry.register(TICKET_BOOK, ticket_factory)
        self.registry.register(TOPOLOGY_SOURCE, topology_factory)

    def _load_views(self, config):
        if config.views_doc is not None:
            configs, groups = parse_views(config.views_doc)
        elif config.views_file:
            with open(config.resolve(config.views_file), encoding="utf-8") as handle:
                configs, groups = parse_views_text(handle.read())
        else:
            configs, groups = [], []
        return self.merge_auto_views(configs, groups)

    def merge_auto_views(self, configs, groups):
        """Append the book-backed views unless the configuration names them."""
        configs = list(configs)
        taken = {cfg.name for cfg in configs}
        for name, kind in (("alarms", ALARM_BOOK), ("tickets", TICKET_BOOK),
                           ("topology", TOPOLOGY_SOURCE)):
            if name not in taken:
                configs.append(ViewConfig(
                    name=name, adapter=make_adapter_spec(kind),
                    cache=CacheType.NONE))
        return configs, list(groups)

    # -- alarm operations, each followed by a book write notification --------

    def ingest_alarms(self, doc, actor="ingest"):
        report = self.alarms.ingest(doc, actor=actor)
        if report.new_ids:
            self._book_written(ALARM_BOOK)
        return report

    def alarm_action(self, alarm_id, action, actor, **kw):
        alarm = self.alarms.apply(alarm_id, action, actor, **kw)
        self._book_written(ALARM_BOOK)
        return alarm

    def _on_exposure(self, view_name, snapshot):
        if view_name == self.config.alarm_source_view:
            self.ingest_alarms(snapshot.content, actor="feed")

    # -- ticket operations ----------------------------------------------------

    def create_ticket(self, subject, site, impacted_node="", from_alarm="",
                      author=""):
        if from_alarm:
            self.alarms.check_linkable(from_alarm)
        result = self.tickets.create_ticket(
            subject, site, impacted_node=impacted_node, author=author,
            alarm_id=from_alarm)
        if from_alarm:
            self.alarms.link_ticket(from_alarm, result.ticket_id,
                                    actor=author or SYSTEM_ACTOR)
            self._book_written(ALARM_BOOK)
        self._book_written(TICKET_BOOK)
        return result

    def link_alarm(self, alarm_id, ticket_id, actor=""):
        self.tickets.get(ticket_id)     # unknown ticket: alarm untouched
        alarm = self.alarms.link_ticket(alarm_id, ticket_id,
                                        actor=actor or SYSTEM_ACTOR)
        self._book_written(ALARM_BOOK)
        return alarm

    def update_ticket(self, ticket_id, field_name, value, author=""):
        ticket = self.tickets.update(ticket_id, field_name, value, author=author)
        self._book_written(TICKET_BOOK)
        return ticket

    def escalate_ticket(self, ticket_id, author=""):
        step = self.tickets.escalate(ticket_id, author=author)
        self._book_written(TICKET_BOOK)
        return step

    def comment_ticket(self, ticket_id, author, text):
        comment = self.tickets.comment(ticket_id, author, text)
        self._book_written(TICKET_BOOK)
        return comment

    def close_ticket(self, ticket_id, author=""):
        ticket = self.tickets.close(ticket_id, author=author)
        self._book_written(TICKET_BOOK)
        return ticket

    def sync_tickets(self):
        report = self.tickets.sync()
        if report.applied:
            self._book_written(TICKET_BOOK)
        return report

    def _book_written(self, kind):
        for name in self.engine.view_names():
            runtime = self.engine.runtime(name)
            if runtime.config.adapter.kind == kind:
                self.engine.notify_write(name)

    # -- composite documents ------------------------------------------------------

    def sites_overview(self) -> ViewNode:
        now = self.clock.now()
        doc = ViewNode("sites", attributes={"generated-at": f"{now:.3f}"})
        for name in self.sites.site_names():
            site = self.sites.site(name)
            attrs = {"name": name}
            if site.region:
                attrs["region"] = site.region
            attrs.update({
                "status": site.certification_status.value.lower(),
                "nodes": str(len(self.sites.nodes_of(name))),
                "open-alarms": str(self.alarms.count_open(site=name)),
                "open-tickets": str(self.tickets.count_open(site=name)),
                "in-downtime": "true" if self.sites.in_downtime(name, now)
                               else "false",
            })
            doc.append(ViewNode("site", attributes=attrs))
        return doc

    def site_summary(self, name) -> ViewNode:
        """Synoptic per-site document assembled from the alarm and ticket
        views; a stale cached section keeps its own timestamp."""
        return assemble_site_summary(
            self.sites, name,
            self._section_snapshot("alarms"),
            self._section_snapshot("tickets"),
            self.clock.now())

    def _section_snapshot(self, view_name):
        try:
            return self.engine.get_snapshot(view_name)
        except ViewNotFound:
            return None
        except GridOpsError:
            # Outdated or failing: keep serving whatever the cache holds.
            return self.engine.peek_snapshot(view_name)

    def tick(self):
        """One scheduler beat: time triggers, ttl expiry, quiet periods."""
        plan = self.engine.tick()
        closed = self.alarms.expire_off_alarms()
        if closed:
            self._book_written(ALARM_BOOK)
        return plan, closed

    def role_for(self, token) -> Role:
        """No tokens configured means the service runs open."""
        if not self.config.tokens:
            return Role.ADMIN
        return self.config.tokens.get(token)
