"""Structural document validation.

SCHEMA mode uses a small declarative description (allowed labels, required
attributes, child cardinalities) instead of a full XML Schema processor:

    <structure root="sites">
      <element name="sites">
        <child name="site" min="0" max="unbounded"/>
        <text allowed="false"/>
      </element>
      <element name="site" open="false">
        <attribute name="name" required="true"/>
        <attribute name="region"/>
        <child name="downtime" min="0" max="unbounded"/>
      </element>
    </structure>

Elements without a rule are left unchecked. An element rule with
open="false" rejects child labels that are not declared.
"""

from dataclasses import dataclass, field

from .document import ViewNode, from_xml
from .errors import ConfigInvalid, ValidationFailed

UNBOUNDED = -1


@dataclass
class ChildRule:
    label: str
    min_count: int = 0
    max_count: int = UNBOUNDED


@dataclass
class ElementRule:
    label: str
    required_attributes: list = field(default_factory=list)
    declared_attributes: set = field(default_factory=set)
    children: dict = field(default_factory=dict)  # label -> ChildRule
    open_content: bool = True
    text_allowed: bool = True


@dataclass
class StructuralSchema:
    root: str
    elements: dict = field(default_factory=dict)  # label -> ElementRule

    def validate(self, document: ViewNode) -> None:
        """Raise ValidationFailed with the first offending node path."""
        if document.label != self.root:
            raise ValidationFailed(
                f"root element must be <{self.root}>, got <{document.label}>")
        self._validate_node(document, "/" + document.label)

    def _validate_node(self, node, path):
        rule = self.elements.get(node.label)
        if rule is not None:
            for attr in rule.required_attributes:
                if attr not in node.attributes:
                    raise ValidationFailed(
                        f"missing required attribute '{attr}' at {path}")
            if not rule.text_allowed and node.text().strip():
                raise ValidationFailed(f"text content not allowed at {path}")
            counts = {}
            for child in node.child_elements():
                counts[child.label] = counts.get(child.label, 0) + 1
                if not rule.open_content and child.label not in rule.children:
                    raise ValidationFailed(
                        f"unexpected element <{child.label}> at {path}")
            for child_rule in rule.children.values():
                seen = counts.get(child_rule.label, 0)
                if seen < child_rule.min_count:
                    raise ValidationFailed(
                        f"expected at least {child_rule.min_count} <{child_rule.label}> at {path}, found {seen}")
                if child_rule.max_count != UNBOUNDED and seen > child_rule.max_count:
                    raise ValidationFailed(
                        f"expected at most {child_rule.max_count} <{child_rule.label}> at {path}, found {seen}")
        for index, child in enumerate(node.child_elements()):
            self._validate_node(child, f"{path}/{child.label}[{index}]")


def parse_schema(document: ViewNode) -> StructuralSchema:
    if document.label != "structure":
        raise ConfigInvalid("schema file root must be <structure>")
    root = document.get("root")
    if not root:
        raise ConfigInvalid("<structure> requires a root attribute")
    schema = StructuralSchema(root=root)
    for element in document.child_elements("element"):
        name = element.get("name")
        if not name:
            raise ConfigInvalid("<element> requires a name attribute")
        rule = ElementRule(
            label=name,
            open_content=element.get("open", "true") != "false",
        )
        for attr in element.child_elements("attribute"):
            attr_name = attr.get("name")
            if not attr_name:
                raise ConfigInvalid(f"<attribute> under {name} requires a name")
            rule.declared_attributes.add(attr_name)
            if attr.get("required") == "true":
                rule.required_attributes.append(attr_name)
        for child in element.child_elements("child"):
            child_name = child.get("name")
            if not child_name:
                raise ConfigInvalid(f"<child> under {name} requires a name")
            max_raw = child.get("max", "unbounded")
            rule.children[child_name] = ChildRule(
                label=child_name,
                min_count=int(child.get("min", "0")),
                max_count=UNBOUNDED if max_raw == "unbounded" else int(max_raw),
            )
        text = element.find("text")
        if text is not None and text.get("allowed") == "false":
            rule.text_allowed = False
        schema.elements[name] = rule
    return schema


def load_schema(path: str) -> StructuralSchema:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_schema(from_xml(handle.read(), strip_space=True))


def check_well_formed(document) -> None:
    """Cheap tier below SCHEMA: the tree invariants every document must hold."""
    if not isinstance(document, ViewNode):
        raise ValidationFailed("adapter did not return a document tree")
    _check_node(document, "/" + getattr(document, "label", "?"))


def _check_node(node, path):
    if not node.label:
        raise ValidationFailed(f"empty label at {path}")
    for key, value in node.attributes.items():
        if not key or not isinstance(key, str) or not isinstance(value, str):
            raise ValidationFailed(f"bad attribute {key!r} at {path}")
    for child in node.children:
        if isinstance(child, ViewNode):
            _check_node(child, f"{path}/{child.label}")
        elif not isinstance(child, str):
            raise ValidationFailed(f"bad child node type at {path}")
