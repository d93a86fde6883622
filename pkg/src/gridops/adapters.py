"""Source adapters: they fetch raw content and shape it into a ViewNode.

The registry maps an adapter kind to a factory. Built-in kinds cover local
files, HTTP endpoints, tab-delimited tables, transforms over other views,
per-site splitting and scripted test sources; plug-ins may register more.
"""

import logging
import os
from dataclasses import dataclass, field

from .config import (
    HTTP_FETCH, INTROSPECTION, LOCAL_FILE, SCRIPTED_TEST, SITE_SPLIT,
    TABLE_SOURCE, VIEW_TRANSFORM, AdapterSpec,
)
from .document import ViewNode, from_xml
from .errors import (
    AdapterFailure, ConfigInvalid, ErrorClass, SourceMalformed,
    SourceUnreachable,
)
from .pathquery import evaluate, parse

log = logging.getLogger(__name__)

HTTP_BUDGET = 10.0


class AdapterContext:
    """What an adapter may touch while fetching: other views and the clock.

    read_source resolves staged content first so that a transform running
    inside a refresh cascade sees the generation it is part of.
    """

    def __init__(self, clock, base_dir=".", read_source=None):
        self.clock = clock
        self.base_dir = base_dir
        self._read_source = read_source

    def read_source(self, name: str) -> ViewNode:
        if self._read_source is None:
            raise SourceUnreachable(f"no source resolver for '{name}'")
        return self._read_source(name)

    def resolve(self, path: str) -> str:
        if os.path.isabs(path):
            return path
        return os.path.join(self.base_dir, path)


class LocalFileAdapter:
    def __init__(self, spec: AdapterSpec):
        self.path = spec.param("path", "")
        self.format = spec.param("format", "xml")
        if not self.path:
            raise ConfigInvalid("local-file adapter requires a path param")

    def fetch(self, ctx: AdapterContext) -> ViewNode:
        path = ctx.resolve(self.path)
        try:
            with open(path, encoding="utf-8") as handle:
                raw = handle.read()
        except OSError as exc:
            raise SourceUnreachable(f"cannot read {path}: {exc}")
        if self.format == "text":
            doc = ViewNode("content")
            doc.append(raw)
            return doc
        try:
            return from_xml(raw)
        except Exception as exc:
            raise SourceMalformed(f"{path} is not well-formed XML: {exc}")


class HttpFetchAdapter:
    def __init__(self, spec: AdapterSpec):
        self.url = spec.param("url", "")
        self.format = spec.param("format", "xml")
        if not self.url:
            raise ConfigInvalid("http-fetch adapter requires a url param")

    def fetch(self, ctx: AdapterContext) -> ViewNode:
        import requests

        try:
            response = requests.get(self.url, timeout=HTTP_BUDGET)
        except requests.RequestException as exc:
            raise SourceUnreachable(f"GET {self.url} failed: {exc}")
        if response.status_code // 100 != 2:
            raise SourceUnreachable(
                f"GET {self.url} returned {response.status_code}")
        if self.format == "text":
            doc = ViewNode("content")
            doc.append(response.text)
            return doc
        try:
            return from_xml(response.text)
        except Exception as exc:
            raise SourceMalformed(f"{self.url} body is not well-formed XML: {exc}")


class TableSourceAdapter:
    """Tab-delimited file with a header row, shaped as <rows><row .../></rows>."""

    def __init__(self, spec: AdapterSpec):
        self.path = spec.param("path", "")
        if not self.path:
            raise ConfigInvalid("table-source adapter requires a path param")

    def fetch(self, ctx: AdapterContext) -> ViewNode:
        path = ctx.resolve(self.path)
        try:
            with open(path, encoding="utf-8") as handle:
                lines = [line.rstrip("\n") for line in handle]
        except OSError as exc:
            raise SourceUnreachable(f"cannot read {path}: {exc}")
        lines = [line for line in lines if line]
        if not lines:
            return ViewNode("rows")
        header = lines[0].split("\t")
        doc = ViewNode("rows")
        for number, line in enumerate(lines[1:], start=2):
            cells = line.split("\t")
            if len(cells) != len(header):
                raise SourceMalformed(
                    f"{path}:{number}: expected {len(header)} columns, "
                    f"got {len(cells)}")
            row = ViewNode("row", attributes=dict(zip(header, cells)))
            doc.append(row)
        return doc


class ViewTransformAdapter:
    """Evaluates a path query against another view's content."""

    def __init__(self, spec: AdapterSpec):
        self.source = spec.param("source", "")
        query = spec.param("query", "/")
        if not self.source:
            raise ConfigInvalid("view-transform adapter requires a source param")
        self.query = parse(query)

    def fetch(self, ctx: AdapterContext) -> ViewNode:
        return evaluate(ctx.read_source(self.source), self.query)


class SiteSplitAdapter:
    """Regroups a source view's records into one section per site.

    Records whose site cannot be determined land in `_unassigned`.
    """

    def __init__(self, spec: AdapterSpec):
        self.source = spec.param("source", "")
        self.site_key = spec.param("site-key", "site")
        if not self.source:
            raise ConfigInvalid("site-split adapter requires a source param")

    def fetch(self, ctx: AdapterContext) -> ViewNode:
        source = ctx.read_source(self.source)
        grouped = split_by_site(source, self.site_key)
        doc = ViewNode("sites")
        for site, records in grouped.items():
            section = ViewNode("site", attributes={"name": site})
            for record in records:
                section.append(record.copy())
            doc.append(section)
        return doc


def split_by_site(source: ViewNode, site_key: str) -> dict:
    """Group the direct children of `source` by site, `_unassigned` last."""
    grouped = {}
    unassigned = []
    for record in source.child_elements():
        site = record.get(site_key)
        if site is None:
            key_el = record.find(site_key)
            site = key_el.text().strip() if key_el is not None else ""
        if site:
            grouped.setdefault(site, []).append(record)
        else:
            unassigned.append(record)
    ordered = dict(sorted(grouped.items()))
    if unassigned:
        ordered["_unassigned"] = unassigned
    return ordered


@dataclass
class ScriptStep:
    payload: object = None          # ViewNode, or callable returning one
    error: object = None            # exception instance to raise
    delay: float = 0.0              # seconds consumed via ctx.clock.sleep


class ScriptedSource:
    """Deterministic test source: replays a list of steps, repeating the last.

    A stopped source refuses every fetch until resumed, without consuming
    its script.
    """

    def __init__(self, steps=(), repeat_last=True):
        self.steps = list(steps)
        self.repeat_last = repeat_last
        self.cursor = 0
        self.invocations = 0
        self.stopped = False

    def add(self, payload=None, error=None, delay=0.0):
        self.steps.append(ScriptStep(payload=payload, error=error, delay=delay))
        return self

    def next_step(self) -> ScriptStep:
        if not self.steps:
            raise SourceUnreachable("scripted source has no steps")
        if self.cursor >= len(self.steps):
            if not self.repeat_last:
                raise SourceUnreachable("scripted source is exhausted")
            return self.steps[-1]
        step = self.steps[self.cursor]
        self.cursor += 1
        return step


class ScriptedAdapter:
    def __init__(self, source: ScriptedSource):
        self.source = source

    def fetch(self, ctx: AdapterContext) -> ViewNode:
        self.source.invocations += 1
        if self.source.stopped:
            raise SourceUnreachable("scripted source is stopped")
        step = self.source.next_step()
        if step.delay:
            ctx.clock.sleep(step.delay)
        if step.error is not None:
            raise step.error
        payload = step.payload
        if callable(payload):
            payload = payload()
        if payload is None:
            raise SourceUnreachable("scripted step has no payload")
        return payload.copy()


class AdapterRegistry:
    """kind -> factory(spec) -> adapter with fetch(ctx)."""

    def __init__(self):
        self._factories = {}
        self.scripts = {}
        self.register(LOCAL_FILE, LocalFileAdapter)
        self.register(HTTP_FETCH, HttpFetchAdapter)
        self.register(TABLE_SOURCE, TableSourceAdapter)
        self.register(VIEW_TRANSFORM, ViewTransformAdapter)
        self.register(SITE_SPLIT, SiteSplitAdapter)
        self.register(SCRIPTED_TEST, self._make_scripted)

    def register(self, kind: str, factory):
        self._factories[kind] = factory

    def add_script(self, key: str, source: ScriptedSource):
        self.scripts[key] = source
        return source

    def _make_scripted(self, spec: AdapterSpec):
        key = spec.param("key", "")
        if key not in self.scripts:
            raise ConfigInvalid(f"no scripted source registered under '{key}'")
        return ScriptedAdapter(self.scripts[key])

    def create(self, spec: AdapterSpec):
        factory = self._factories.get(spec.kind)
        if factory is None:
            raise ConfigInvalid(f"unknown adapter kind '{spec.kind}'")
        return factory(spec)
