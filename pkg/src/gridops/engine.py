"""The data-view engine: cached views, triggers, fallbacks and sync groups.

Exposure model. Every served snapshot lives in one immutable dict mapping
view name to Snapshot. Commits build a new dict and swap it with a single
reference assignment, so readers never lock and never observe a sync group
half-committed: a group commit replaces all member entries in one swap.

Refresh model. A refresh first *stages* a snapshot. For an ungrouped view
staging and exposure are the same step. For a grouped view the snapshot is
parked until every member of the group has staged, then the whole group is
exposed at once. Dependents chain off staging, so a group whose members
feed each other can still fill up and commit.
"""

import heapq
import logging
import os
import re
import threading
from collections import deque
from dataclasses import dataclass
from enum import Enum

from .adapters import AdapterContext, AdapterRegistry
from .clock import SystemClock
from .config import (
    INTROSPECTION_VIEW, CacheType, FallbackAction, FallbackRule, TriggerKind,
    ValidationMode, ViewConfig, validate_configuration,
)
from .document import ViewNode, from_xml, to_xml
from .errors import (
    AdapterFailure, ContentOutdated, ErrorClass, RefreshTimeout,
    SourceMalformed, ValidationFailed, ViewEmpty, ViewNotFound, ViewSuspended,
)
from .pathquery import evaluate, parse
from .schema import check_well_formed

log = logging.getLogger(__name__)

EVENT_LOG_LIMIT = 1000


class ViewState(Enum):
    EMPTY = "EMPTY"
    FRESH = "FRESH"
    STALE = "STALE"
    SUSPENDED = "SUSPENDED"
    FAILED = "FAILED"


class RefreshOutcome(Enum):
    EXPOSED = "EXPOSED"
    STAGED = "STAGED"
    IGNORED = "IGNORED"
    FAILED = "FAILED"


@dataclass(frozen=True)
class Snapshot:
    content: ViewNode
    version: int
    generated_at: float


@dataclass
class RefreshResult:
    view: str
    outcome: RefreshOutcome
    version: int = 0
    error: Exception = None


@dataclass
class EngineEvent:
    time: float
    kind: str
    view: str = ""
    detail: str = ""


@dataclass
class ReloadReport:
    suspended: list
    unchanged: list
    added: list
    removed: list


class _ViewRuntime:
    def __init__(self, config: ViewConfig, adapter):
        self.config = config
        self.adapter = adapter
        self.state = ViewState.EMPTY
        self.staged = None              # Snapshot parked for a group commit
        self.version_counter = 0
        self.consecutive_failures = 0
        self.invocations = 0
        self.last_error = None
        self.refreshing = False


class ViewEngine:
    """Owns view runtimes; all mutation goes through one engine lock.

    Readers (get_view/query_view on cached views) stay lock-free: they only
    dereference the current exposure dict.
    """

    def __init__(self, configs, sync_groups=(), *, clock=None, registry=None,
                 base_dir=".", cache_dir=None, schemas=None):
        self.clock = clock or SystemClock()
        self.registry = registry or AdapterRegistry()
        self.base_dir = base_dir
        self.cache_dir = cache_dir
        self.schemas = dict(schemas or {})
        self._lock = threading.RLock()
        self._exposed = {}              # name -> Snapshot; swapped, never mutated
        self._runtimes = {}
        self._groups = {}               # group name -> tuple of member names
        self._group_of = {}             # view name -> group name
        self._events = deque(maxlen=EVENT_LOG_LIMIT)
        self._exposure_listeners = []
        self._last_tick = int(self.clock.now())
        if self.cache_dir:
            os.makedirs(self.cache_dir, exist_ok=True)
        self._install(configs, sync_groups)

    # -- configuration -------------------------------------------------------

    def _install(self, configs, sync_groups):
        by_name = validate_configuration(configs, sync_groups)
        self._groups = {g.name: tuple(g.members) for g in sync_groups}
        self._group_of = {m: g.name for g in sync_groups for m in g.members}
        exposed = {}
        for name, cfg in by_name.items():
            runtime = _ViewRuntime(cfg, self.registry.create(cfg.adapter))
            snapshot = self._load_disk_snapshot(cfg) if cfg.cache == CacheType.DISK else None
            if snapshot is not None:
                runtime.state = ViewState.FRESH
                runtime.version_counter = snapshot.version
                exposed[name] = snapshot
            self._runtimes[name] = runtime
        self._exposed = exposed

    def reload_configuration(self, configs, sync_groups=()) -> ReloadReport:
        """Hot reload: only changed views and their dependents are suspended.

        Unchanged views keep their state, content and version history. A
        config that fails validation raises before anything is touched, so
        the running configuration stays fully active.
        """
        with self._lock:
            by_name = validate_configuration(configs, sync_groups)
            old_runtimes = self._runtimes
            added = {n for n in by_name if n not in old_runtimes}
            removed = sorted(n for n in old_runtimes if n not in by_name)
            changed = {name for name, cfg in by_name.items()
                       if name not in added
                       and old_runtimes[name].config.digest() != cfg.digest()}
            suspended = self._with_dependents(changed, by_name) - added

            runtimes = {}
            exposed = {}
            for name, cfg in by_name.items():
                old = old_runtimes.get(name)
                if name in suspended:
                    runtime = _ViewRuntime(cfg, self.registry.create(cfg.adapter))
                    runtime.version_counter = old.version_counter
                    runtime.state = ViewState.SUSPENDED
                elif name in added:
                    runtime = _ViewRuntime(cfg, self.registry.create(cfg.adapter))
                else:
                    runtime = old
                    if name in self._exposed:
                        exposed[name] = self._exposed[name]
                runtimes[name] = runtime
            self._groups = {g.name: tuple(g.members) for g in sync_groups}
            self._group_of = {m: g.name for g in sync_groups for m in g.members}
            self._runtimes = runtimes
            self._exposed = exposed
            report = ReloadReport(
                suspended=sorted(suspended),
                unchanged=sorted(set(by_name) - suspended - added),
                added=sorted(added),
                removed=removed,
            )
            self._emit("CONFIG_RELOADED",
                       detail=f"suspended={','.join(report.suspended)}")
            return report

    def _with_dependents(self, seeds, by_name):
        """Seeds plus every view that transitively depends on one of them."""
        dependents = {}
        for name, cfg in by_name.items():
            for dep in cfg.effective_dependencies():
                dependents.setdefault(dep, []).append(name)
        closure = set(seeds)
        frontier = list(seeds)
        while frontier:
            current = frontier.pop()
            for child in dependents.get(current, ()):
                if child not in closure:
                    closure.add(child)
                    frontier.append(child)
        return closure

    # -- introspection ---------------------------------------------------------

    def view_names(self):
        return sorted(self._runtimes)

    def runtime(self, name) -> _ViewRuntime:
        runtime = self._runtimes.get(name)
        if runtime is None:
            raise ViewNotFound(f"no view named '{name}'", view=name)
        return runtime

    def invocations(self, name) -> int:
        return self.runtime(name).invocations

    def introspect(self) -> ViewNode:
        """State of every view, served as the reserved `_introspection` view.

        The introspection view lists itself too, always FRESH and uncached.
        """
        doc = ViewNode("views")
        exposed = self._exposed
        for name in self.view_names():
            runtime = self._runtimes[name]
            snap = exposed.get(name)
            attrs = {
                "name": name,
                "digest": runtime.config.digest(),
                "status": runtime.state.value,
                "cache": runtime.config.cache.value,
                "content-version": str(snap.version if snap else 0),
                "consecutive-failures": str(runtime.consecutive_failures),
                "invocations": str(runtime.invocations),
            }
            if snap:
                attrs["generated-at"] = f"{snap.generated_at:.3f}"
            if runtime.config.sync_group:
                attrs["sync-group"] = runtime.config.sync_group
            if runtime.staged is not None:
                attrs["staged-version"] = str(runtime.staged.version)
            doc.append(ViewNode("view", attributes=attrs))
        doc.append(ViewNode("view", attributes={
            "name": INTROSPECTION_VIEW, "status": ViewState.FRESH.value,
            "cache": CacheType.NONE.value, "content-version": "0",
            "consecutive-failures": "0",
        }))
        return doc

    def add_exposure_listener(self, callback):
        """callback(view_name, Snapshot) after each exposure commit."""
        self._exposure_listeners.append(callback)

    def drain_events(self):
        with self._lock:
            events = list(self._events)
            self._events.clear()
            return events

    def _emit(self, kind, view="", detail=""):
        self._events.append(EngineEvent(self.clock.now(), kind, view, detail))

    # -- reading ---------------------------------------------------------------

    def get_snapshot(self, name) -> Snapshot:
        """Resolve a servable snapshot or raise the precise read error.

        An on-read trigger fires after the snapshot is taken: the caller
        gets the content as it stood, the refresh lands for the next read.
        """
        if name == INTROSPECTION_VIEW:
            return Snapshot(self.introspect(), 0, self.clock.now())
        runtime = self.runtime(name)
        try:
            return self._resolve_snapshot(name, runtime)
        finally:
            if runtime.state != ViewState.SUSPENDED and any(
                    t.kind == TriggerKind.ON_READ
                    for t in runtime.config.triggers):
                self.refresh_view(name, reason="on-read", raise_errors=False)

    def _resolve_snapshot(self, name, runtime) -> Snapshot:
        if runtime.state == ViewState.SUSPENDED:
            raise ViewSuspended(f"view '{name}' is suspended pending refresh",
                                view=name)
        if runtime.config.cache == CacheType.NONE:
            content = self._generate_uncached(runtime)
            return Snapshot(content, runtime.version_counter, self.clock.now())
        snap = self._exposed.get(name)
        if snap is None:
            raise ViewEmpty(f"view '{name}' has no content yet", view=name)
        if self.is_outdated(name, snap=snap):
            raise ContentOutdated(
                f"view '{name}' content exceeded its ttl", view=name,
                generated_at=snap.generated_at)
        return snap

    def get_view(self, name) -> ViewNode:
        return self.get_snapshot(name).content

    def peek_snapshot(self, name):
        """Exposed snapshot whatever its age, or None. Never refreshes.

        Summaries use this to keep serving cached sections while a primary
        source is down.
        """
        self.runtime(name)
        return self._exposed.get(name)

    def get_snapshots(self, names) -> dict:
        """One consistent capture: every entry comes from the same exposure
        swap, so sync-group members are never mixed across versions."""
        exposed = self._exposed
        return {name: exposed.get(name) for name in names}

    def query_view(self, name, query) -> ViewNode:
        compiled = parse(query) if isinstance(query, str) else query
        return evaluate(self.get_view(name), compiled)

    def is_outdated(self, name, *, snap=None, now=None) -> bool:
        """Strictly past ttl; content exactly at the ttl boundary still serves."""
        runtime = self.runtime(name)
        if runtime.config.ttl_is_infinite():
            return False
        snap = snap if snap is not None else self._exposed.get(name)
        if snap is None:
            return False
        now = self.clock.now() if now is None else now
        return (now - snap.generated_at) > runtime.config.ttl

    def check_ttl(self, name) -> str:
        return "OUTDATED" if self.is_outdated(name) else "SERVABLE"

    def _generate_uncached(self, runtime):
        """A cacheless view runs its adapter on every read, never on refresh."""
        try:
            content = self._invoke_adapter(runtime)
        except Exception as exc:
            runtime.consecutive_failures += 1
            runtime.last_error = exc
            raise
        runtime.consecutive_failures = 0
        runtime.state = ViewState.FRESH
        runtime.version_counter += 1
        return content

    # -- refreshing --------------------------------------------------------------

    def refresh_view(self, name, *, reason="manual", raise_errors=True):
        """Refresh one view and cascade through its dependents.

        Returns the RefreshResult for the named view. With raise_errors a
        RAISE-fallback failure propagates to the caller; cascade failures in
        dependents never do, they land in the event log.
        """
        with self._lock:
            runtime = self.runtime(name)
            plan = [name] + self._dependent_closure([name])
            results = self._execute_plan(plan, reason)
            result = results[name]
            if raise_errors and result.outcome == RefreshOutcome.FAILED \
                    and result.error is not None:
                raise result.error
            return result

    def expose_sync_group(self, group_name):
        """Refresh every member of a group, then commit them together."""
        with self._lock:
            members = self._groups.get(group_name)
            if not members:
                raise ViewNotFound(f"no sync group named '{group_name}'",
                                   group=group_name)
            plan = self._order_subset(set(members))
            extra = self._dependent_closure(plan)
            results = self._execute_plan(plan + [v for v in extra if v not in plan],
                                         reason=f"group:{group_name}")
            return {name: results[name] for name in members}

    def _execute_plan(self, plan, reason):
        """Run refreshes in dependency order with success gating.

        A dependent only runs if everything it depends on inside the plan
        staged or exposed during this cascade.
        """
        results = {}
        advanced = set()
        for view in plan:
            runtime = self._runtimes.get(view)
            if runtime is None:
                continue
            gates = [d for d in runtime.config.effective_dependencies()
                     if d in results]
            if any(results[d].outcome not in (RefreshOutcome.EXPOSED,
                                              RefreshOutcome.STAGED)
                   for d in gates):
                results[view] = RefreshResult(view, RefreshOutcome.IGNORED)
                self._emit("REFRESH_IGNORED", view, "dependency did not update")
                continue
            results[view] = self._refresh_single(runtime, reason)
            if results[view].outcome in (RefreshOutcome.EXPOSED,
                                         RefreshOutcome.STAGED):
                advanced.add(view)
        self._commit_ready_groups()
        for view in plan:
            result = results.get(view)
            if result and result.outcome == RefreshOutcome.STAGED \
                    and self._runtimes[view].staged is None:
                snap = self._exposed.get(view)
                results[view] = RefreshResult(view, RefreshOutcome.EXPOSED,
                                              snap.version if snap else 0)
        return results

    def _refresh_single(self, runtime, reason) -> RefreshResult:
        cfg = runtime.config
        name = cfg.name
        if cfg.cache == CacheType.NONE:
            # Purity: uncached views regenerate per read, a refresh is a no-op.
            self._emit("REFRESH_IGNORED", name, "no cache to update")
            return RefreshResult(name, RefreshOutcome.IGNORED)
        if runtime.refreshing:
            self._emit("REFRESH_IGNORED", name, "refresh already in progress")
            return RefreshResult(name, RefreshOutcome.IGNORED)
        runtime.refreshing = True
        try:
            return self._refresh_with_fallback(runtime, reason)
        finally:
            runtime.refreshing = False

    def _refresh_with_fallback(self, runtime, reason) -> RefreshResult:
        cfg = runtime.config
        name = cfg.name
        attempt = 0
        while True:
            try:
                content = self._invoke_adapter(runtime)
                self._validate(cfg, content)
            except Exception as exc:
                runtime.consecutive_failures += 1
                rule = self._fallback_for(cfg, exc)
                if rule.action == FallbackAction.RETRY and attempt < rule.retry_limit:
                    attempt += 1
                    self._emit("RETRYING", name, f"attempt={attempt} error={exc}")
                    if rule.retry_delay > 0:
                        self.clock.sleep(rule.retry_delay)
                    continue
                if rule.action == FallbackAction.IGNORE:
                    runtime.last_error = exc
                    self._emit("REFRESH_IGNORED", name, str(exc))
                    return RefreshResult(name, RefreshOutcome.IGNORED, error=exc)
                runtime.state = ViewState.FAILED
                runtime.last_error = exc
                self._emit("REFRESH_FAILED", name, str(exc))
                return RefreshResult(name, RefreshOutcome.FAILED, error=exc)
            return self._stage(runtime, content)

    def _fallback_for(self, cfg, exc) -> FallbackRule:
        error_class = self._classify(exc)
        catch_all = None
        for rule in cfg.fallbacks:
            if rule.error_class == error_class:
                return rule
            if rule.error_class == ErrorClass.ANY:
                catch_all = rule
        return catch_all or FallbackRule(ErrorClass.ANY, FallbackAction.RAISE)

    @staticmethod
    def _classify(exc) -> ErrorClass:
        if isinstance(exc, AdapterFailure):
            return exc.error_class
        return ErrorClass.SOURCE_UNREACHABLE

    def _stage(self, runtime, content) -> RefreshResult:
        cfg = runtime.config
        name = cfg.name
        runtime.consecutive_failures = 0
        runtime.last_error = None
        runtime.version_counter += 1
        snap = Snapshot(content, runtime.version_counter, self.clock.now())
        if self._group_of.get(name):
            runtime.staged = snap
            self._emit("REFRESH_STAGED", name, f"version={snap.version}")
            return RefreshResult(name, RefreshOutcome.STAGED, snap.version)
        self._expose({name: snap})
        return RefreshResult(name, RefreshOutcome.EXPOSED, snap.version)

    def _commit_ready_groups(self):
        for group, members in self._groups.items():
            staged = {m: self._runtimes[m].staged for m in members
                      if m in self._runtimes}
            if staged and all(s is not None for s in staged.values()):
                self._expose(staged)
                for member in members:
                    self._runtimes[member].staged = None
                self._emit("GROUP_COMMITTED", detail=f"group={group}")

    def _expose(self, snapshots):
        """Single-swap commit; the only place the exposure dict is replaced."""
        exposed = dict(self._exposed)
        exposed.update(snapshots)
        self._exposed = exposed
        for name, snap in snapshots.items():
            runtime = self._runtimes[name]
            runtime.state = ViewState.FRESH
            if runtime.config.cache == CacheType.DISK:
                self._write_disk_snapshot(runtime.config, snap)
            self._emit("CACHE_UPDATED", name, f"version={snap.version}")
        for name, snap in snapshots.items():
            for listener in self._exposure_listeners:
                try:
                    listener(name, snap)
                except Exception:
                    log.exception("exposure listener failed for %s", name)

    def _invoke_adapter(self, runtime):
        """Run the adapter under the view's update timeout.

        Under a virtual clock the adapter runs inline and any scripted delay
        advances virtual time; the elapsed virtual time is checked after the
        fact. Under the system clock the adapter runs on a worker thread that
        gets abandoned once the budget is spent.
        """
        runtime.invocations += 1
        timeout = runtime.config.update_timeout
        ctx = AdapterContext(self.clock, base_dir=self.base_dir,
                             read_source=self._read_for_adapter)
        if getattr(self.clock, "virtual", False) or timeout <= 0:
            started = self.clock.now()
            content = runtime.adapter.fetch(ctx)
            elapsed = self.clock.now() - started
            if timeout > 0 and elapsed > timeout:
                raise RefreshTimeout(
                    f"update took {elapsed:.1f}s, budget {timeout:.1f}s",
                    view=runtime.config.name)
        else:
            box = []
            worker = threading.Thread(
                target=lambda: box.append(self._call_fetch(runtime, ctx)),
                daemon=True)
            worker.start()
            worker.join(timeout)
            if worker.is_alive():
                raise RefreshTimeout(
                    f"update exceeded {timeout:.1f}s budget",
                    view=runtime.config.name)
            ok, value = box[0]
            if not ok:
                raise value
            content = value
        if not isinstance(content, ViewNode):
            raise SourceMalformed("adapter did not produce a document tree",
                                  view=runtime.config.name)
        return content

    @staticmethod
    def _call_fetch(runtime, ctx):
        try:
            return True, runtime.adapter.fetch(ctx)
        except Exception as exc:
            return False, exc

    def _read_for_adapter(self, name) -> ViewNode:
        """Transforms see staged content first so cascades are consistent."""
        runtime = self.runtime(name)
        if runtime.staged is not None:
            return runtime.staged.content
        if runtime.config.cache == CacheType.NONE:
            return self._generate_uncached(runtime)
        snap = self._exposed.get(name)
        if snap is None:
            raise ViewEmpty(f"source view '{name}' has no content", view=name)
        return snap.content

    def _validate(self, cfg, content):
        if cfg.validation == ValidationMode.NONE:
            return
        check_well_formed(content)
        if cfg.validation == ValidationMode.SCHEMA:
            schema = self.schemas.get(cfg.schema_ref)
            if schema is None:
                raise ValidationFailed(
                    f"no schema registered under '{cfg.schema_ref}'",
                    view=cfg.name)
            schema.validate(content)

    # -- triggers ------------------------------------------------------------------

    def evaluate_triggers(self, kind, *, view="", topic="", now=None):
        """Views to refresh for an event: direct matches plus the transitive
        dependent closure, in dependency order (name breaks ties)."""
        now = self.clock.now() if now is None else now
        if kind == "CACHE_UPDATED" and view:
            # The chain follows declared dependency-updated triggers; the
            # updated view itself is not refreshed again by its own event.
            return self._dependent_closure([view])
        direct = set()
        for name, runtime in self._runtimes.items():
            for rule in runtime.config.triggers:
                if self._trigger_matches(rule, kind, name, view, topic, now):
                    direct.add(name)
                    break
        closure = direct | set(self._dependent_closure(sorted(direct)))
        return self._order_subset(closure)

    def _trigger_matches(self, rule, kind, name, view, topic, now):
        if kind == "TIME" and rule.kind == TriggerKind.TIME_PERIODIC:
            return rule.period > 0 and int(now) % int(rule.period) == 0
        if kind == "TIME" and rule.kind == TriggerKind.TIME_CRON_LIKE:
            every, offset = int(rule.period), int(rule.offset)
            return every > 0 and now >= offset and (int(now) - offset) % every == 0
        if kind == "NOTIFICATION" and rule.kind == TriggerKind.NOTIFICATION_EVENT:
            return rule.topic == topic
        if kind == "WRITE" and rule.kind == TriggerKind.ON_WRITE:
            return name == view
        if kind == "CACHE_EXPIRED" and rule.kind == TriggerKind.CACHE_EXPIRED:
            return name == view
        if kind == "CACHE_UPDATED" and rule.kind == TriggerKind.DEPENDENCY_UPDATED:
            return rule.dependency == view
        return False

    def _dependent_closure(self, seeds):
        """Transitive dependents of the seeds, following declared
        dependency-updated triggers, in dependency order."""
        edges = {}
        for name, runtime in self._runtimes.items():
            for rule in runtime.config.triggers:
                if rule.kind == TriggerKind.DEPENDENCY_UPDATED and rule.dependency:
                    edges.setdefault(rule.dependency, []).append(name)
        closure = []
        seen = set(seeds)
        frontier = list(seeds)
        while frontier:
            current = frontier.pop(0)
            for child in sorted(edges.get(current, ())):
                if child not in seen:
                    seen.add(child)
                    closure.append(child)
                    frontier.append(child)
        return self._order_subset(set(closure))

    def _order_subset(self, names):
        """Kahn's ordering over the dependency edges inside `names`."""
        names = set(names)
        indegree = {n: 0 for n in names}
        children = {n: [] for n in names}
        for name in names:
            for dep in self._runtimes[name].config.effective_dependencies():
                if dep in names:
                    indegree[name] += 1
                    children[dep].append(name)
        ready = sorted(n for n, d in indegree.items() if d == 0)
        heapq.heapify(ready)
        ordered = []
        while ready:
            current = heapq.heappop(ready)
            ordered.append(current)
            for child in children[current]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    heapq.heappush(ready, child)
        return ordered

    def notify_event(self, topic):
        """External notification: refresh every view subscribed to the topic."""
        with self._lock:
            plan = self.evaluate_triggers("NOTIFICATION", topic=topic)
            self._execute_plan(plan, reason=f"event:{topic}")
            return plan

    def notify_write(self, name):
        """A write landed on a view's backing store."""
        with self._lock:
            plan = self.evaluate_triggers("WRITE", view=name)
            self._execute_plan(plan, reason=f"write:{name}")
            return plan

    def tick(self):
        """Advance the scheduler to the clock's current time.

        Fires time triggers for every whole second crossed since the last
        tick (coalesced: one refresh per view per tick), marks expired
        content stale and fires cache-expired triggers.
        """
        with self._lock:
            now = int(self.clock.now())
            last = self._last_tick
            if now <= last:
                return []
            self._last_tick = now
            fired = set()
            for name, runtime in self._runtimes.items():
                for rule in runtime.config.triggers:
                    if self._fires_in_window(rule, last, now):
                        fired.add(name)
                        break
            expired = self._expire_ttls(now)
            seeds = fired | expired
            plan = self._order_subset(
                seeds | set(self._dependent_closure(sorted(seeds))))
            if plan:
                self._execute_plan(plan, reason="tick")
            return plan

    @staticmethod
    def _fires_in_window(rule, last, now):
        """True if the rule matches any integer second in (last, now]."""
        if rule.kind == TriggerKind.TIME_PERIODIC:
            period = int(rule.period)
            return period > 0 and (now // period) * period > last
        if rule.kind == TriggerKind.TIME_CRON_LIKE:
            every, offset = int(rule.period), int(rule.offset)
            if every <= 0 or now < offset:
                return False
            latest = offset + ((now - offset) // every) * every
            return latest > last
        return False

    def _expire_ttls(self, now):
        """Mark stale content, fire cache-expired triggers for it."""
        expired = set()
        for name, runtime in self._runtimes.items():
            if runtime.state != ViewState.FRESH:
                continue
            if self.is_outdated(name, now=now):
                runtime.state = ViewState.STALE
                self._emit("TTL_EXPIRED", name)
                if any(t.kind == TriggerKind.CACHE_EXPIRED
                       for t in runtime.config.triggers):
                    expired.add(name)
        return expired

    # -- disk cache ---------------------------------------------------------------

    def _disk_path(self, name, version):
        return os.path.join(self.cache_dir, f"{name}.v{version}.xml")

    def _write_disk_snapshot(self, cfg, snap):
        if not self.cache_dir:
            return
        path = self._disk_path(cfg.name, snap.version)
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(to_xml(snap.content, declaration=True))
        os.replace(tmp, path)
        os.utime(path, (snap.generated_at, snap.generated_at))
        self._prune_disk(cfg.name, snap.version)

    def _prune_disk(self, name, newest):
        # Only the just-exposed version stays on disk.
        pattern = re.compile(re.escape(name) + r"\.v(\d+)\.xml$")
        for entry in os.listdir(self.cache_dir):
            match = pattern.fullmatch(entry)
            if match and int(match.group(1)) != newest:
                try:
                    os.remove(os.path.join(self.cache_dir, entry))
                except OSError:
                    pass

    def _load_disk_snapshot(self, cfg):
        if not self.cache_dir:
            return None
        pattern = re.compile(re.escape(cfg.name) + r"\.v(\d+)\.xml$")
        newest, version = None, 0
        for entry in os.listdir(self.cache_dir):
            match = pattern.fullmatch(entry)
            if match and int(match.group(1)) > version:
                version = int(match.group(1))
                newest = os.path.join(self.cache_dir, entry)
        if newest is None:
            return None
        try:
            with open(newest, encoding="utf-8") as handle:
                content = from_xml(handle.read())
            return Snapshot(content, version, os.path.getmtime(newest))
        except Exception as exc:
            log.warning("discarding unreadable cache file %s: %s", newest, exc)
            return None
