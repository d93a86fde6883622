"""Site topology: the static registry every other record is regrouped by.

Normative XML shape, loadable as one document or as separate sections:

    <topology>
      <sites>
        <site name="SITE-A" region="north" contact="ops@site-a.example"
              status="certified">
          <downtime start="1000" end="2000" reason="maintenance"/>
        </site>
      </sites>
      <nodes>
        <node hostname="ce1.site-a.example" type="CE" site="SITE-A"/>
      </nodes>
    </topology>

A document rooted at <sites> alone is a registry without nodes.
"""

from dataclasses import dataclass
from enum import Enum

from .document import ViewNode, from_xml
from .errors import ContactMissing, SiteNotFound, TopologyMalformed


class CertificationStatus(Enum):
    CERTIFIED = "CERTIFIED"
    UNCERTIFIED = "UNCERTIFIED"
    SUSPENDED = "SUSPENDED"


@dataclass(frozen=True)
class Downtime:
    start: float
    end: float
    reason: str = ""


@dataclass(frozen=True)
class Site:
    name: str
    region: str = ""
    contact_email: str = ""
    certification_status: CertificationStatus = CertificationStatus.CERTIFIED
    scheduled_downtimes: tuple = ()


@dataclass(frozen=True)
class Node:
    hostname: str
    service_type: str
    site: str


class SiteRegistry:
    def __init__(self, sites, nodes=()):
        self._sites = {}
        self._nodes = {}
        self._site_nodes = {}
        for site in sites:
            if site.name in self._sites:
                raise TopologyMalformed("duplicate site", site=site.name)
            self._sites[site.name] = site
            self._site_nodes[site.name] = []
        for node in nodes:
            if node.hostname in self._nodes:
                raise TopologyMalformed(
                    f"node '{node.hostname}' declared twice", node=node.hostname)
            if node.site not in self._sites:
                raise TopologyMalformed(
                    f"node '{node.hostname}' references unknown site "
                    f"'{node.site}'", node=node.hostname)
            self._nodes[node.hostname] = node
            self._site_nodes[node.site].append(node)

    def __len__(self):
        return len(self._sites)

    def site_names(self):
        return sorted(self._sites)

    def site(self, name) -> Site:
        found = self._sites.get(name)
        if found is None:
            raise SiteNotFound(f"no site named '{name}'", site=name)
        return found

    def has_site(self, name) -> bool:
        return name in self._sites

    def nodes_of(self, site_name) -> list:
        self.site(site_name)
        return list(self._site_nodes[site_name])

    def resolve_node(self, hostname):
        """Site owning the node, or None when the hostname is unknown."""
        node = self._nodes.get(hostname)
        return node.site if node else None

    def contact_for(self, site_name) -> str:
        site = self.site(site_name)
        if not site.contact_email:
            raise ContactMissing(f"site '{site_name}' has no contact on file",
                                 site=site_name)
        return site.contact_email

    def in_downtime(self, site_name, now) -> bool:
        site = self.site(site_name)
        return any(w.start <= now < w.end for w in site.scheduled_downtimes)

    def to_document(self) -> ViewNode:
        doc = ViewNode("topology")
        sites = ViewNode("sites")
        for name in self.site_names():
            sites.append(site_element(self._sites[name]))
        doc.append(sites)
        nodes = ViewNode("nodes")
        for hostname in sorted(self._nodes):
            nodes.append(node_element(self._nodes[hostname]))
        doc.append(nodes)
        return doc

    def site_card(self, site_name) -> ViewNode:
        """Static record of one site plus its nodes, for summaries."""
        card = site_element(self.site(site_name))
        for node in self._site_nodes[site_name]:
            card.append(node_element(node))
        return card


def site_element(site: Site) -> ViewNode:
    attrs = {"name": site.name}
    if site.region:
        attrs["region"] = site.region
    attrs["contact"] = site.contact_email
    attrs["status"] = site.certification_status.value.lower()
    el = ViewNode("site", attributes=attrs)
    for window in site.scheduled_downtimes:
        wattrs = {"start": _fmt(window.start), "end": _fmt(window.end)}
        if window.reason:
            wattrs["reason"] = window.reason
        el.append(ViewNode("downtime", attributes=wattrs))
    return el


def node_element(node: Node) -> ViewNode:
    return ViewNode("node", attributes={
        "hostname": node.hostname, "type": node.service_type,
        "site": node.site})


def site_summary(registry: SiteRegistry, site_name, alarm_snap, ticket_snap,
                 now) -> ViewNode:
    """One synoptic document per site: static record, downtime flag, the
    site's open alarms and tickets.

    alarm_snap/ticket_snap carry .content and .generated_at; each section is
    stamped with its source's generated_at, so a stale cache shows as a
    stale section instead of vanishing. A missing input (None) yields an
    empty section marked unavailable.
    """
    registry.site(site_name)
    doc = ViewNode("site-summary", attributes={
        "site": site_name,
        "generated-at": f"{now:.3f}",
        "in-downtime": "true" if registry.in_downtime(site_name, now)
                       else "false",
    })
    doc.append(registry.site_card(site_name))
    doc.append(_summary_section("alarms", alarm_snap, site_name))
    doc.append(_summary_section("tickets", ticket_snap, site_name))
    return doc


def _summary_section(label, snap, site_name) -> ViewNode:
    if snap is None:
        return ViewNode(label, attributes={"count": "0",
                                           "unavailable": "true"})
    picked = [el for el in snap.content.child_elements()
              if el.get("site") == site_name and el.get("status") != "CLOSED"]
    section = ViewNode(label, attributes={
        "count": str(len(picked)),
        "generated-at": f"{snap.generated_at:.3f}"})
    for el in picked:
        section.append(el.copy())
    return section


def _fmt(value: float) -> str:
    return str(int(value)) if value == int(value) else str(value)


def parse_topology(doc: ViewNode, where="") -> SiteRegistry:
    """Build a registry from <topology>, or from a bare <sites> section."""
    if doc.label == "sites":
        return SiteRegistry(_parse_sites(doc, where or "/sites"))
    if doc.label != "topology":
        raise TopologyMalformed(
            f"expected <topology> or <sites>, got <{doc.label}>", path=where)
    sites, nodes = [], []
    for child in doc.child_elements():
        if child.label == "sites":
            sites.extend(_parse_sites(child, (where or "") + "/topology/sites"))
        elif child.label == "nodes":
            nodes.extend(_parse_nodes(child, (where or "") + "/topology/nodes"))
        else:
            raise TopologyMalformed(
                f"unexpected <{child.label}> under <topology>",
                path=f"{where}/topology/{child.label}")
    return SiteRegistry(sites, nodes)


def _parse_sites(section: ViewNode, where) -> list:
    sites = []
    for index, el in enumerate(section.child_elements(), start=1):
        path = f"{where}/site[{index}]"
        if el.label != "site":
            raise TopologyMalformed(f"unexpected <{el.label}>", path=path)
        name = el.get("name", "")
        if not name:
            raise TopologyMalformed("<site> requires a name", path=path)
        raw_status = el.get("status", "certified").upper()
        try:
            status = CertificationStatus[raw_status]
        except KeyError:
            raise TopologyMalformed(f"unknown status '{raw_status}'", path=path)
        downtimes = []
        for wel in el.child_elements("downtime"):
            start = _float_attr(wel, "start", path)
            end = _float_attr(wel, "end", path)
            if start >= end:
                raise TopologyMalformed("downtime start must precede end",
                                        path=path)
            downtimes.append(Downtime(start=start, end=end,
                                      reason=wel.get("reason", "")))
        sites.append(Site(
            name=name, region=el.get("region", ""),
            contact_email=el.get("contact", ""),
            certification_status=status,
            scheduled_downtimes=tuple(downtimes)))
    return sites


def _parse_nodes(section: ViewNode, where) -> list:
    nodes = []
    for index, el in enumerate(section.child_elements(), start=1):
        path = f"{where}/node[{index}]"
        if el.label != "node":
            raise TopologyMalformed(f"unexpected <{el.label}>", path=path)
        hostname = el.get("hostname", "")
        if not hostname:
            raise TopologyMalformed("<node> requires a hostname", path=path)
        site = el.get("site", "")
        if not site:
            raise TopologyMalformed(f"node '{hostname}' names no site",
                                    path=path)
        nodes.append(Node(hostname=hostname, service_type=el.get("type", ""),
                          site=site))
    return nodes


def _float_attr(el, attr, where):
    raw = el.get(attr)
    if raw is None:
        raise TopologyMalformed(f"<{el.label}> requires {attr}", path=where)
    try:
        return float(raw)
    except ValueError:
        raise TopologyMalformed(f"{attr} must be a number, got '{raw}'",
                                path=where)


def load_topology_file(path: str) -> SiteRegistry:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = from_xml(handle.read(), strip_space=True)
    except OSError as exc:
        raise TopologyMalformed(f"cannot read topology: {exc}", path=path)
    except Exception as exc:
        raise TopologyMalformed(f"not well-formed XML: {exc}", path=path)
    return parse_topology(doc, where=path)
