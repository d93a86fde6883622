"""Data view configuration: types, invariant validation, and the XML format.

The XML view configuration is the normative external interface; element
names are `view`, `adapter`, `cache`, `dependency`, `trigger`, `fallback`,
`ttl`, `timeout`, `sync-group` and `validation`:

    <views>
      <view name="dbView">
        <adapter kind="table-source"><param name="path" value="db.tsv"/></adapter>
        <cache>disk</cache>
        <ttl>300</ttl>
        <timeout>10</timeout>
        <trigger kind="time-periodic" period="60"/>
        <fallback error="source-unreachable" action="ignore"/>
        <sync-group>core</sync-group>
        <validation mode="well-formed"/>
      </view>
      <view name="derivedView">
        <adapter kind="view-transform">
          <param name="source" value="dbView"/>
          <param name="query" value="/rows/row[@status='down']"/>
        </adapter>
        <cache>memory</cache>
        <dependency>dbView</dependency>
        <trigger kind="dependency-updated" dependency="dbView"/>
        <sync-group>core</sync-group>
      </view>
    </views>
"""

import hashlib
from dataclasses import dataclass, field
from enum import Enum

from .document import ViewNode, from_xml
from .errors import ConfigInvalid, CycleDetected, ErrorClass


class CacheType(Enum):
    MEMORY = "MEMORY"
    DISK = "DISK"
    NONE = "NONE"


class TriggerKind(Enum):
    TIME_PERIODIC = "TIME_PERIODIC"
    TIME_CRON_LIKE = "TIME_CRON_LIKE"
    NOTIFICATION_EVENT = "NOTIFICATION_EVENT"
    ON_READ = "ON_READ"
    ON_WRITE = "ON_WRITE"
    CACHE_EXPIRED = "CACHE_EXPIRED"
    DEPENDENCY_UPDATED = "DEPENDENCY_UPDATED"


class FallbackAction(Enum):
    IGNORE = "IGNORE"
    RAISE = "RAISE"
    RETRY = "RETRY"


class ValidationMode(Enum):
    SCHEMA = "SCHEMA"
    WELL_FORMED = "WELL_FORMED"
    NONE = "NONE"


# Built-in adapter kinds; the registry accepts additional ones (plug-ins).
LOCAL_FILE = "local-file"
HTTP_FETCH = "http-fetch"
TABLE_SOURCE = "table-source"
VIEW_TRANSFORM = "view-transform"
SITE_SPLIT = "site-split"
INTROSPECTION = "introspection"
SCRIPTED_TEST = "scripted"

# Reserved engine-owned view served alongside every configuration.
INTROSPECTION_VIEW = "_introspection"

DEFAULT_RETRY_LIMIT = 3
DEFAULT_RETRY_DELAY = 5.0


@dataclass(frozen=True)
class AdapterSpec:
    kind: str
    params: tuple = ()  # sorted (name, value) pairs; see make_adapter_spec

    def param(self, name, default=None):
        for key, value in self.params:
            if key == name:
                return value
        return default


def make_adapter_spec(kind: str, **params) -> AdapterSpec:
    return AdapterSpec(kind=kind, params=tuple(sorted(params.items())))


@dataclass(frozen=True)
class TriggerRule:
    kind: TriggerKind
    period: float = 0.0     # TIME_PERIODIC / TIME_CRON_LIKE ("every")
    offset: float = 0.0     # TIME_CRON_LIKE
    topic: str = ""         # NOTIFICATION_EVENT
    dependency: str = ""    # DEPENDENCY_UPDATED


@dataclass(frozen=True)
class FallbackRule:
    error_class: ErrorClass
    action: FallbackAction
    retry_limit: int = DEFAULT_RETRY_LIMIT
    retry_delay: float = DEFAULT_RETRY_DELAY


@dataclass(frozen=True)
class ViewConfig:
    name: str
    adapter: AdapterSpec
    cache: CacheType = CacheType.MEMORY
    dependencies: tuple = ()
    triggers: tuple = ()
    fallbacks: tuple = ()
    ttl: float = 0.0                 # seconds; 0 means infinite
    ttl_explicit_infinite: bool = False
    update_timeout: float = 30.0
    sync_group: str = ""
    validation: ValidationMode = ValidationMode.WELL_FORMED
    schema_ref: str = ""

    def effective_dependencies(self) -> tuple:
        """Declared dependencies plus the implicit transform/split source."""
        deps = list(self.dependencies)
        if self.adapter.kind in (VIEW_TRANSFORM, SITE_SPLIT):
            source = self.adapter.param("source")
            if source and source not in deps:
                deps.append(source)
        return tuple(deps)

    def ttl_is_infinite(self) -> bool:
        return self.ttl <= 0

    def digest(self) -> str:
        raw = repr((self.name, self.adapter, self.cache.value, self.dependencies,
                    self.triggers, self.fallbacks, self.ttl,
                    self.ttl_explicit_infinite, self.update_timeout,
                    self.sync_group, self.validation.value, self.schema_ref))
        return hashlib.sha1(raw.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class SyncGroup:
    name: str
    members: tuple = ()


def validate_configuration(configs, sync_groups=()):
    """Check every configuration invariant; first violation wins.

    Raises ConfigInvalid (or CycleDetected, its subclass, listing the cycle).
    """
    by_name = {}
    for cfg in configs:
        if not cfg.name:
            raise ConfigInvalid("view name must be non-empty")
        if cfg.name.startswith("_"):
            raise ConfigInvalid("view names starting with '_' are reserved",
                                view=cfg.name)
        if cfg.name in by_name:
            raise ConfigInvalid("duplicate view name", view=cfg.name)
        by_name[cfg.name] = cfg

    for cfg in configs:
        for dep in cfg.effective_dependencies():
            if dep not in by_name:
                raise ConfigInvalid(f"unknown dependency '{dep}'", view=cfg.name)

    cycle = _find_cycle(by_name)
    if cycle:
        raise CycleDetected("dependency cycle: " + " -> ".join(cycle),
                            cycle=cycle)

    for cfg in configs:
        deps = set(cfg.effective_dependencies())
        seen_classes = set()
        has_retry = False
        for rule in cfg.triggers:
            if rule.kind == TriggerKind.DEPENDENCY_UPDATED:
                if rule.dependency not in deps:
                    raise ConfigInvalid(
                        f"dependency-updated trigger names '{rule.dependency}' "
                        "which is not a dependency", view=cfg.name)
                if by_name[rule.dependency].cache == CacheType.NONE:
                    raise ConfigInvalid(
                        f"'{rule.dependency}' has no cache and cannot emit "
                        "cache-update events", view=cfg.name)
            if rule.kind in (TriggerKind.TIME_PERIODIC, TriggerKind.TIME_CRON_LIKE):
                if rule.period <= 0:
                    raise ConfigInvalid("time trigger period must be > 0",
                                        view=cfg.name)
            if rule.kind == TriggerKind.NOTIFICATION_EVENT and not rule.topic:
                raise ConfigInvalid("notification trigger requires a topic",
                                    view=cfg.name)
        for rule in cfg.fallbacks:
            if rule.error_class in seen_classes:
                raise ConfigInvalid(
                    f"duplicate fallback for {rule.error_class.value}",
                    view=cfg.name)
            seen_classes.add(rule.error_class)
            if rule.action == FallbackAction.RETRY:
                has_retry = True
                if rule.retry_limit < 1:
                    raise ConfigInvalid("retry_limit must be >= 1", view=cfg.name)
        if (cfg.cache != CacheType.NONE and cfg.ttl_is_infinite()
                and has_retry and not cfg.ttl_explicit_infinite):
            raise ConfigInvalid(
                "a cached view with a retry fallback must either set a ttl or "
                "mark it explicitly infinite", view=cfg.name)
        if cfg.validation == ValidationMode.SCHEMA and not cfg.schema_ref:
            raise ConfigInvalid("schema validation requires a schema reference",
                                view=cfg.name)

    group_of = {}
    for group in sync_groups:
        for member in group.members:
            if member not in by_name:
                raise ConfigInvalid(f"sync group member '{member}' is not a view",
                                    group=group.name)
            if member in group_of:
                raise ConfigInvalid(
                    f"view '{member}' belongs to both sync groups "
                    f"'{group_of[member]}' and '{group.name}'")
            group_of[member] = group.name
    return by_name


def _find_cycle(by_name):
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in by_name}
    stack = []

    def visit(name):
        color[name] = GREY
        stack.append(name)
        for dep in by_name[name].effective_dependencies():
            if color[dep] == GREY:
                return stack[stack.index(dep):] + [dep]
            if color[dep] == WHITE:
                found = visit(dep)
                if found:
                    return found
        stack.pop()
        color[name] = BLACK
        return None

    for name in sorted(by_name):
        if color[name] == WHITE:
            found = visit(name)
            if found:
                return found
    return None


def groups_from_configs(configs) -> list:
    """Assemble SyncGroups from the per-view sync_group fields."""
    members = {}
    for cfg in configs:
        if cfg.sync_group:
            members.setdefault(cfg.sync_group, []).append(cfg.name)
    return [SyncGroup(name=name, members=tuple(views))
            for name, views in sorted(members.items())]


# --- XML parsing ------------------------------------------------------------

_TRIGGER_KINDS = {
    "time-periodic": TriggerKind.TIME_PERIODIC,
    "time-cron": TriggerKind.TIME_CRON_LIKE,
    "notification": TriggerKind.NOTIFICATION_EVENT,
    "on-read": TriggerKind.ON_READ,
    "on-write": TriggerKind.ON_WRITE,
    "cache-expired": TriggerKind.CACHE_EXPIRED,
    "dependency-updated": TriggerKind.DEPENDENCY_UPDATED,
}

_ERROR_CLASSES = {
    "source-unreachable": ErrorClass.SOURCE_UNREACHABLE,
    "source-malformed": ErrorClass.SOURCE_MALFORMED,
    "validation-failed": ErrorClass.VALIDATION_FAILED,
    "timeout": ErrorClass.TIMEOUT,
    "any": ErrorClass.ANY,
}


def parse_views(node: ViewNode):
    """Parse a <views> element into ([ViewConfig], [SyncGroup])."""
    if node.label != "views":
        raise ConfigInvalid(f"expected <views>, got <{node.label}>")
    configs = [_parse_view(child) for child in node.child_elements("view")]
    return configs, groups_from_configs(configs)


def parse_views_text(text: str):
    try:
        node = from_xml(text, strip_space=True)
    except Exception as exc:
        raise ConfigInvalid(f"configuration is not well-formed XML: {exc}")
    return parse_views(node)


def _parse_view(view: ViewNode) -> ViewConfig:
    name = view.get("name", "")
    if not name:
        raise ConfigInvalid("<view> requires a name attribute")

    adapter_el = view.find("adapter")
    if adapter_el is None:
        raise ConfigInvalid("view has no <adapter>", view=name)
    params = {}
    for param in adapter_el.child_elements("param"):
        params[param.get("name", "")] = param.get("value", "")
    adapter = make_adapter_spec(adapter_el.get("kind", ""), **params)
    if not adapter.kind:
        raise ConfigInvalid("<adapter> requires a kind", view=name)

    cache_el = view.find("cache")
    cache_name = cache_el.text().strip().upper() if cache_el is not None else "MEMORY"
    try:
        cache = CacheType[cache_name]
    except KeyError:
        raise ConfigInvalid(f"unknown cache type '{cache_name}'", view=name)

    ttl, ttl_infinite = 0.0, False
    ttl_el = view.find("ttl")
    if ttl_el is not None:
        raw = ttl_el.text().strip()
        if raw.lower() == "infinite":
            ttl_infinite = True
        else:
            ttl = _parse_number(raw, "ttl", name)

    timeout = 30.0
    timeout_el = view.find("timeout")
    if timeout_el is not None:
        timeout = _parse_number(timeout_el.text().strip(), "timeout", name)

    triggers = [_parse_trigger(el, name) for el in view.child_elements("trigger")]
    fallbacks = [_parse_fallback(el, name) for el in view.child_elements("fallback")]
    dependencies = [el.text().strip() for el in view.child_elements("dependency")]

    group_el = view.find("sync-group")
    sync_group = group_el.text().strip() if group_el is not None else ""

    validation, schema_ref = ValidationMode.WELL_FORMED, ""
    val_el = view.find("validation")
    if val_el is not None:
        mode_name = val_el.get("mode", "well-formed").replace("-", "_").upper()
        try:
            validation = ValidationMode[mode_name]
        except KeyError:
            raise ConfigInvalid(f"unknown validation mode '{mode_name}'", view=name)
        schema_ref = val_el.get("schema", "")

    return ViewConfig(
        name=name, adapter=adapter, cache=cache,
        dependencies=tuple(dependencies), triggers=tuple(triggers),
        fallbacks=tuple(fallbacks), ttl=ttl, ttl_explicit_infinite=ttl_infinite,
        update_timeout=timeout, sync_group=sync_group,
        validation=validation, schema_ref=schema_ref,
    )


def _parse_number(raw, what, view):
    try:
        value = float(raw)
    except ValueError:
        raise ConfigInvalid(f"{what} must be a number, got '{raw}'", view=view)
    if value < 0:
        raise ConfigInvalid(f"{what} must be >= 0", view=view)
    return value


def _parse_trigger(el: ViewNode, view: str) -> TriggerRule:
    kind_name = el.get("kind", "")
    kind = _TRIGGER_KINDS.get(kind_name)
    if kind is None:
        raise ConfigInvalid(f"unknown trigger kind '{kind_name}'", view=view)
    return TriggerRule(
        kind=kind,
        period=float(el.get("period", el.get("every", "0") or "0")),
        offset=float(el.get("offset", "0")),
        topic=el.get("topic", ""),
        dependency=el.get("dependency", ""),
    )


def _parse_fallback(el: ViewNode, view: str) -> FallbackRule:
    error_name = el.get("error", "")
    error_class = _ERROR_CLASSES.get(error_name)
    if error_class is None:
        raise ConfigInvalid(f"unknown fallback error class '{error_name}'", view=view)
    action_name = el.get("action", "").upper()
    try:
        action = FallbackAction[action_name]
    except KeyError:
        raise ConfigInvalid(f"unknown fallback action '{action_name}'", view=view)
    return FallbackRule(
        error_class=error_class,
        action=action,
        retry_limit=int(el.get("retry-limit", str(DEFAULT_RETRY_LIMIT))),
        retry_delay=float(el.get("retry-delay", str(DEFAULT_RETRY_DELAY))),
    )
