"""Regional grid operations dashboard: cached data views over operational
sources, an alarm workflow, mirrored trouble tickets and an HTTP API."""

from .alarms import AlarmAction, AlarmBook, AlarmStatus
from .clock import SystemClock, VirtualClock
from .config import (
    CacheType, FallbackAction, FallbackRule, SyncGroup, TriggerKind,
    TriggerRule, ValidationMode, ViewConfig, make_adapter_spec, parse_views_text,
    validate_configuration,
)
from .document import ViewNode, from_json, from_xml, to_json, to_xml
from .engine import RefreshOutcome, ReloadReport, ViewEngine, ViewState
from .errors import GridOpsError
from .pathquery import parse as parse_query
from .service import GridOpsService, Role, ServiceConfig
from .tickets import TicketBridge
from .topology import SiteRegistry, load_topology_file

__version__ = "1.0.0"

__all__ = [
    "AlarmAction", "AlarmBook", "AlarmStatus", "CacheType", "FallbackAction",
    "FallbackRule", "GridOpsError", "GridOpsService", "RefreshOutcome",
    "ReloadReport", "Role", "ServiceConfig", "SiteRegistry", "SyncGroup",
    "SystemClock",
    "TicketBridge", "TriggerKind", "TriggerRule", "ValidationMode",
    "ViewConfig", "ViewEngine", "ViewNode", "ViewState", "VirtualClock",
    "from_json", "from_xml", "load_topology_file", "make_adapter_spec",
    "parse_query", "parse_views_text", "to_json", "to_xml",
    "validate_configuration",
]
