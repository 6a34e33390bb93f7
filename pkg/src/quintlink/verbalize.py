"""Deterministic rendering of quintuplets as short text snippets.

One template per quintuplet kind per run; placeholders are substituted
with entity names and nothing else is transformed, so rendering is
injective as long as entity names are distinct.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .kg import Entity, UnknownEntityError
from .quintuplets import Quintuplet, QuintupletKind

#: placeholder order (e1, e2, e3) per kind
_PLACEHOLDERS = {
    QuintupletKind.SUPPLIES_PRODUCT_TO: ("A", "P", "B"),
    QuintupletKind.WITH_CERT_HAS_PRODUCT: ("A", "C", "P"),
}

DEFAULT_SUPPLY_TEMPLATE = "Company {A} supplies {P} to company {B}"
DEFAULT_CERT_TEMPLATE = "Company {A} with certificate {C} has {P}"
#: documented alternate phrasing, selectable via the template.supply config key
ALT_SUPPLY_TEMPLATE = "Company {A} has {P} and supplies it to company {B}"


class TemplateError(ValueError):
    """Template does not fit the quintuplet kind."""


@dataclass(frozen=True)
class Template:
    kind: QuintupletKind
    pattern: str

    def __post_init__(self):
        for name in _PLACEHOLDERS[self.kind]:
            token = "{%s}" % name
            if self.pattern.count(token) != 1:
                raise TemplateError(
                    f"pattern must contain {token} exactly once for kind {self.kind.value}: "
                    f"{self.pattern!r}"
                )


def default_template(kind: QuintupletKind) -> Template:
    if kind is QuintupletKind.SUPPLIES_PRODUCT_TO:
        return Template(kind, DEFAULT_SUPPLY_TEMPLATE)
    return Template(kind, DEFAULT_CERT_TEMPLATE)


def verbalize(q: Quintuplet, entities: Mapping[str, Entity], template: Template) -> str:
    """Substitute entity names into the template for ``q``."""
    if template.kind is not q.kind:
        raise TemplateError(
            f"template for {template.kind.value} cannot render a {q.kind.value} quintuplet"
        )
    names = {}
    for placeholder, eid in zip(_PLACEHOLDERS[q.kind], (q.e1, q.e2, q.e3)):
        try:
            names[placeholder] = entities[eid].name
        except KeyError:
            raise UnknownEntityError(eid) from None
    return template.pattern.format(**names)
