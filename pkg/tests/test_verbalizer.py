import pytest

from quintlink.kg import Entity, EntityKind, UnknownEntityError
from quintlink.quintuplets import Quintuplet, QuintupletKind
from quintlink.verbalize import (
    ALT_SUPPLY_TEMPLATE,
    Template,
    TemplateError,
    default_template,
    verbalize,
)

SUPPLY = QuintupletKind.SUPPLIES_PRODUCT_TO
CERT = QuintupletKind.WITH_CERT_HAS_PRODUCT

ENTITIES = {
    "c0": Entity("c0", EntityKind.COMPANY, "Acme", "US"),
    "c1": Entity("c1", EntityKind.COMPANY, "Orion Motors", "US"),
    "p0": Entity("p0", EntityKind.PRODUCT, "Fuel Tank"),
    "t0": Entity("t0", EntityKind.CERTIFICATE, "ISO9001"),
}


def test_default_supply_sentence():
    q = Quintuplet(SUPPLY, "c0", "p0", "c1")
    assert verbalize(q, ENTITIES, default_template(SUPPLY)) == \
        "Company Acme supplies Fuel Tank to company Orion Motors"


def test_default_cert_sentence():
    q = Quintuplet(CERT, "c0", "t0", "p0")
    assert verbalize(q, ENTITIES, default_template(CERT)) == \
        "Company Acme with certificate ISO9001 has Fuel Tank"


def test_alternate_template():
    q = Quintuplet(SUPPLY, "c0", "p0", "c1")
    text = verbalize(q, ENTITIES, Template(SUPPLY, ALT_SUPPLY_TEMPLATE))
    assert text == "Company Acme has Fuel Tank and supplies it to company Orion Motors"


def test_deterministic():
    q = Quintuplet(SUPPLY, "c0", "p0", "c1")
    template = default_template(SUPPLY)
    assert verbalize(q, ENTITIES, template).encode() == \
        verbalize(q, ENTITIES, template).encode()


def test_kind_mismatch():
    q = Quintuplet(CERT, "c0", "t0", "p0")
    with pytest.raises(TemplateError):
        verbalize(q, ENTITIES, default_template(SUPPLY))


def test_unknown_entity():
    q = Quintuplet(SUPPLY, "c0", "p0", "c9")
    with pytest.raises(UnknownEntityError):
        verbalize(q, ENTITIES, default_template(SUPPLY))


def test_pattern_must_use_each_placeholder_once():
    with pytest.raises(TemplateError):
        Template(SUPPLY, "Company {A} supplies {P}")
    with pytest.raises(TemplateError):
        Template(SUPPLY, "{A} {A} supplies {P} to {B}")


def test_names_appear_verbatim():
    q = Quintuplet(SUPPLY, "c0", "p0", "c1")
    text = verbalize(q, ENTITIES, default_template(SUPPLY))
    for eid in ("c0", "p0", "c1"):
        assert ENTITIES[eid].name in text


def test_injective_over_distinct_names():
    quintuplets = [
        Quintuplet(SUPPLY, "c0", "p0", "c1"),
        Quintuplet(SUPPLY, "c1", "p0", "c0"),
    ]
    template = default_template(SUPPLY)
    rendered = {verbalize(q, ENTITIES, template) for q in quintuplets}
    assert len(rendered) == len(quintuplets)
