"""Ordered labeled document trees and their XML / JSON serializations.

Every data view produces one of these trees and every path query consumes
one. Trees are kept canonical: no empty text children and no two adjacent
text children, which makes both serializations round-trip cleanly.
"""

import json
import xml.etree.ElementTree as ET
from xml.sax.saxutils import escape, quoteattr


class ViewNode:
    """One element: a label, attributes, and ordered children.

    Children are either ViewNode instances or plain strings (text).
    """

    __slots__ = ("label", "attributes", "children")

    def __init__(self, label, attributes=None, children=None):
        if not label or not isinstance(label, str):
            raise ValueError("node label must be a non-empty string")
        self.label = label
        self.attributes = dict(attributes) if attributes else {}
        self.children = []
        for child in children or ():
            self.append(child)

    def append(self, child):
        """Append a child, merging adjacent text and dropping empty text."""
        if isinstance(child, str):
            if not child:
                return self
            if self.children and isinstance(self.children[-1], str):
                self.children[-1] += child
                return self
        elif not isinstance(child, ViewNode):
            raise TypeError(f"child must be ViewNode or str, got {type(child)!r}")
        self.children.append(child)
        return self

    def child_elements(self, label=None):
        """Direct element children, optionally filtered by label."""
        return [c for c in self.children
                if isinstance(c, ViewNode) and (label is None or c.label == label)]

    def find(self, label):
        """First direct child element with the given label, or None."""
        for c in self.children:
            if isinstance(c, ViewNode) and c.label == label:
                return c
        return None

    def text(self) -> str:
        """Concatenation of the direct text children."""
        return "".join(c for c in self.children if isinstance(c, str))

    def get(self, attribute, default=None):
        return self.attributes.get(attribute, default)

    def copy(self) -> "ViewNode":
        node = ViewNode(self.label, self.attributes)
        node.children = [c.copy() if isinstance(c, ViewNode) else c
                         for c in self.children]
        return node

    def count_nodes(self) -> int:
        return 1 + sum(c.count_nodes() for c in self.children
                       if isinstance(c, ViewNode))

    def __eq__(self, other):
        if not isinstance(other, ViewNode):
            return NotImplemented
        return (self.label == other.label
                and self.attributes == other.attributes
                and self.children == other.children)

    def __hash__(self):
        return hash((self.label, tuple(sorted(self.attributes.items()))))

    def __repr__(self):
        return f"<ViewNode {self.label} attrs={len(self.attributes)} children={len(self.children)}>"


# A view document is a tree with exactly one root element.
ViewDocument = ViewNode


def to_xml(node: ViewNode, declaration: bool = False) -> str:
    """Serialize a tree to XML text. Deterministic: attribute order preserved."""
    parts = []
    if declaration:
        parts.append('<?xml version="1.0" encoding="UTF-8"?>\n')
    _write_xml(node, parts)
    return "".join(parts)


def _write_xml(node, parts):
    parts.append("<" + node.label)
    for key, value in node.attributes.items():
        parts.append(f" {key}={quoteattr(value)}")
    if not node.children:
        parts.append("/>")
        return
    parts.append(">")
    for child in node.children:
        if isinstance(child, str):
            parts.append(escape(child))
        else:
            _write_xml(child, parts)
    parts.append(f"</{node.label}>")


def from_xml(text: str, strip_space: bool = False) -> ViewNode:
    """Parse XML text into a tree.

    strip_space drops whitespace-only text (use for indented data files).
    Raises xml.etree.ElementTree.ParseError on malformed input; adapter code
    classifies that as SOURCE_MALFORMED.
    """
    return _from_element(ET.fromstring(text), strip_space)


def _from_element(element, strip_space):
    node = ViewNode(element.tag, dict(element.attrib))
    if element.text and (not strip_space or element.text.strip()):
        node.append(element.text)
    for child in element:
        node.append(_from_element(child, strip_space))
        if child.tail and (not strip_space or child.tail.strip()):
            node.append(child.tail)
    return node


def to_json_obj(node: ViewNode) -> dict:
    """Map a tree to the documented JSON form.

    element -> object; attributes as "@name" keys; text as "#text";
    repeated same-label children collapse into an array at the position of
    their first occurrence. The whole document is {root_label: body}.
    """
    return {node.label: _json_body(node)}


def _json_body(node):
    body = {}
    for key, value in node.attributes.items():
        body["@" + key] = value
    texts = [c for c in node.children if isinstance(c, str)]
    elements = [c for c in node.children if isinstance(c, ViewNode)]
    if texts:
        body["#text"] = "".join(texts)
    for child in elements:
        rendered = _json_body(child)
        if child.label in body:
            existing = body[child.label]
            if isinstance(existing, list):
                existing.append(rendered)
            else:
                body[child.label] = [existing, rendered]
        else:
            body[child.label] = rendered
    return body


def from_json_obj(obj: dict) -> ViewNode:
    """Inverse of to_json_obj over its image (sibling interleaving of
    distinct labels is normalized to key order)."""
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ValueError("document JSON must be a single-key object")
    (label, body), = obj.items()
    return _node_from_json(label, body)


def _node_from_json(label, body):
    if isinstance(body, str):
        return ViewNode(label, children=[body])
    if not isinstance(body, dict):
        raise ValueError(f"element body must be an object or string, got {type(body)!r}")
    node = ViewNode(label)
    for key, value in body.items():
        if key.startswith("@"):
            node.attributes[key[1:]] = value
        elif key == "#text":
            node.append(value)
        elif isinstance(value, list):
            for item in value:
                node.append(_node_from_json(key, item))
        else:
            node.append(_node_from_json(key, value))
    return node


def to_json(node: ViewNode, indent=None) -> str:
    return json.dumps(to_json_obj(node), indent=indent, ensure_ascii=False)


def from_json(text: str) -> ViewNode:
    return from_json_obj(json.loads(text))


def serialize(node: ViewNode, fmt: str) -> str:
    """Render a document in one of the two wire formats ("xml" or "json")."""
    fmt = fmt.lower()
    if fmt == "xml":
        return to_xml(node)
    if fmt == "json":
        return to_json(node)
    raise ValueError(f"unknown format {fmt!r}, expected xml or json")
