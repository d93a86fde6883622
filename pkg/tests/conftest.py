"""Fixtures shared across the test modules."""

import pytest

from gridops.clock import VirtualClock
from gridops.document import ViewNode, from_xml
from gridops.service import GridOpsService, ServiceConfig

TOPOLOGY_XML = """
<topology>
  <sites>
    <site name="ALFA" region="north" contact="ops@alfa.example" status="certified">
      <downtime start="1000" end="2000"/>
    </site>
    <site name="BRAVO" region="south" contact="ops@bravo.example" status="uncertified"/>
    <site name="CHARLIE" region="east" contact="" status="suspended"/>
  </sites>
  <nodes>
    <node hostname="ce1.alfa.example" type="CE" site="ALFA"/>
    <node hostname="se1.alfa.example" type="SE" site="ALFA"/>
    <node hostname="ce1.bravo.example" type="CE" site="BRAVO"/>
    <node hostname="gw1.charlie.example" type="GW" site="CHARLIE"/>
  </nodes>
</topology>
"""


def alarm_record(sensor="temp", test="ping", node="ce1.alfa.example",
                 failure_time=100, message="probe failed"):
    return ViewNode("alarm", attributes={
        "sensor": sensor, "test": test, "node": node,
        "failure-time": str(failure_time), "message": message,
    })


def alarm_feed(*records):
    doc = ViewNode("alarms")
    for record in records:
        doc.append(record)
    return doc


@pytest.fixture
def clock():
    return VirtualClock(start=100.0)


@pytest.fixture
def topology_doc():
    return from_xml(TOPOLOGY_XML, strip_space=True)


@pytest.fixture
def service(tmp_path):
    """A full virtual-clock service over the sample topology."""
    topo = tmp_path / "topology.xml"
    topo.write_text(TOPOLOGY_XML)
    cfg = ServiceConfig(
        base_dir=str(tmp_path),
        storage_dir=str(tmp_path / "var"),
        outbox_dir=str(tmp_path / "outbox"),
        clock_virtual=True,
        clock_start=100.0,
        topology_file=str(topo),
        tokens={},
    )
    return GridOpsService(cfg)
