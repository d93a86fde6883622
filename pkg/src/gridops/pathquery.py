"""Path queries over view documents.

Grammar (absolute child paths with one optional predicate per step):

    query     := '/' | '/' step ( '/' step )* ( '/' 'text()' )?
    step      := name predicate?
    predicate := '[' '@' name '=' "'" value "'" ']'     attribute equality
               | '[' name '=' "'" value "'" ']'         child-element text equality
    name      := [A-Za-z_][A-Za-z0-9_.-]*
    value     := any characters except the single quote

'/' alone selects the whole document. The result of evaluation is always
wrapped under a fresh `result` root; matched subtrees are copied so the
source document is never shared or mutated.
"""

from dataclasses import dataclass

from .document import ViewNode
from .errors import QueryParseError

_NAME_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_NAME_CHARS = _NAME_START | set("0123456789.-")


@dataclass(frozen=True)
class Step:
    name: str
    # predicate: None, or ("attr", key, value), or ("child", label, value)
    predicate: tuple = None


@dataclass(frozen=True)
class PathQuery:
    steps: tuple
    select_text: bool = False
    source: str = "/"

    def __str__(self):
        return self.source


def parse(query: str) -> PathQuery:
    """Parse a query string; raises QueryParseError with the 0-based position
    of the first offending character."""
    if not isinstance(query, str) or not query:
        raise QueryParseError("empty query", 0)
    if query[0] != "/":
        raise QueryParseError("query must start with '/'", 0)
    if query == "/":
        return PathQuery(steps=(), source=query)

    steps = []
    select_text = False
    pos = 1
    while True:
        if pos >= len(query):
            raise QueryParseError("expected step after '/'", pos)
        if query.startswith("text()", pos):
            pos += len("text()")
            if pos != len(query):
                raise QueryParseError("text() must be the final step", pos)
            select_text = True
            break
        name, pos = _read_name(query, pos)
        predicate = None
        if pos < len(query) and query[pos] == "[":
            predicate, pos = _read_predicate(query, pos)
        steps.append(Step(name, predicate))
        if pos == len(query):
            break
        if query[pos] != "/":
            raise QueryParseError(f"unexpected character {query[pos]!r}", pos)
        pos += 1
    if select_text and not steps:
        raise QueryParseError("text() requires a preceding step", 1)
    return PathQuery(steps=tuple(steps), select_text=select_text, source=query)


def _read_name(query, pos):
    if pos >= len(query) or query[pos] not in _NAME_START:
        raise QueryParseError("expected a name", pos)
    start = pos
    while pos < len(query) and query[pos] in _NAME_CHARS:
        pos += 1
    return query[start:pos], pos


def _read_predicate(query, pos):
    pos += 1  # consume '['
    kind = "attr" if pos < len(query) and query[pos] == "@" else "child"
    if kind == "attr":
        pos += 1
    key, pos = _read_name(query, pos)
    if pos >= len(query) or query[pos] != "=":
        raise QueryParseError("expected '=' in predicate", pos)
    pos += 1
    if pos >= len(query) or query[pos] != "'":
        raise QueryParseError("predicate value must be single-quoted", pos)
    pos += 1
    end = query.find("'", pos)
    if end < 0:
        raise QueryParseError("unterminated predicate value", pos)
    value = query[pos:end]
    pos = end + 1
    if pos >= len(query) or query[pos] != "]":
        raise QueryParseError("expected ']' after predicate", pos)
    return (kind, key, value), pos + 1


def matches(node: ViewNode, step: Step) -> bool:
    if node.label != step.name:
        return False
    if step.predicate is None:
        return True
    kind, key, value = step.predicate
    if kind == "attr":
        return node.attributes.get(key) == value
    return any(child.text() == value for child in node.child_elements(key))


def evaluate(root: ViewNode, query) -> ViewNode:
    """Run a query against a document, returning matches under `result`."""
    if isinstance(query, str):
        query = parse(query)
    result = ViewNode("result")
    if not query.steps:
        result.append(root.copy())
        return result

    current = [root] if matches(root, query.steps[0]) else []
    for step in query.steps[1:]:
        current = [child
                   for node in current
                   for child in node.children
                   if isinstance(child, ViewNode) and matches(child, step)]
    if query.select_text:
        for node in current:
            for child in node.children:
                if isinstance(child, str):
                    result.append(child)
    else:
        for node in current:
            result.append(node.copy())
    return result
