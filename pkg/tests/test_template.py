"""Service-template parsing, serialization and round-trip stability."""

import pytest
import yaml
from hypothesis import given, strategies as st

from toskose.model import NodeKind, RelKind
from toskose.template import (
    TemplateSyntaxError,
    UnknownNodeType,
    UnresolvedTarget,
    parse_service_template,
    serialize_service_template,
)


class TestParsing:
    def test_thinking_node_kinds(self, thinking_template_text):
        t = parse_service_template(thinking_template_text)
        kinds = {name: node.kind for name, node in t.nodes.items()}
        assert kinds == {
            "maven": NodeKind.CONTAINER,
            "node": NodeKind.CONTAINER,
            "mongodb": NodeKind.CONTAINER,
            "dbvolume": NodeKind.VOLUME,
            "api": NodeKind.SOFTWARE,
            "gui": NodeKind.SOFTWARE,
            "logsniffer": NodeKind.SOFTWARE,
        }

    def test_derived_type_inherits_base_kind(self, thinking_template_text):
        t = parse_service_template(thinking_template_text)
        assert t.nodes["api"].type_name == "thinking.nodes.API"
        assert t.nodes["api"].kind is NodeKind.SOFTWARE

    def test_thinking_relationships(self, thinking_template_text):
        t = parse_service_template(thinking_template_text)
        triples = {(r.kind, r.source, r.target) for r in t.relationships}
        assert (RelKind.HOSTED_ON, "api", "maven") in triples
        assert (RelKind.HOSTED_ON, "logsniffer", "maven") in triples
        assert (RelKind.HOSTED_ON, "gui", "node") in triples
        assert (RelKind.CONNECTS_TO, "api", "mongodb") in triples
        assert (RelKind.DEPENDS_ON, "gui", "api") in triples
        assert (RelKind.ATTACHES_TO, "mongodb", "dbvolume") in triples

    def test_attachment_location(self, thinking_template_text):
        t = parse_service_template(thinking_template_text)
        (att,) = t.outgoing("mongodb", RelKind.ATTACHES_TO)
        assert att.location == "/data/db"

    def test_image_artifact_kind(self, thinking_template_text):
        t = parse_service_template(thinking_template_text)
        (artifact,) = t.nodes["mongodb"].artifacts
        assert artifact.kind == "image"
        assert artifact.path == "mongo:3.4"

    def test_interface_inputs_and_operations(self, thinking_template_text):
        t = parse_service_template(thinking_template_text)
        iface = t.nodes["api"].interface
        assert list(iface.operations) == [
            "create", "configure", "start", "stop", "delete", "push_default",
        ]
        assert iface.inputs["dbport"] == 27017
        assert iface.operations["create"].implementation.path == "scripts/api/install.sh"

    def test_template_name_from_metadata(self, thinking_template_text):
        assert parse_service_template(thinking_template_text).name == "thinking"


class TestErrors:
    def test_invalid_yaml(self):
        with pytest.raises(TemplateSyntaxError):
            parse_service_template("a: [unclosed")

    def test_unknown_node_type(self):
        doc = yaml.safe_dump({
            "topology_template": {"node_templates": {"x": {"type": "acme.nodes.Widget"}}}
        })
        with pytest.raises(UnknownNodeType):
            parse_service_template(doc)

    def test_unresolved_target(self):
        doc = yaml.safe_dump({
            "topology_template": {"node_templates": {
                "s": {"type": "tosker.nodes.Software", "requirements": [{"host": "ghost"}]},
            }}
        })
        with pytest.raises(UnresolvedTarget):
            parse_service_template(doc)

    def test_node_without_type(self):
        doc = yaml.safe_dump({"topology_template": {"node_templates": {"x": {}}}})
        with pytest.raises(TemplateSyntaxError):
            parse_service_template(doc)

    def test_empty_document_parses(self):
        t = parse_service_template("")
        assert t.nodes == {}


_name = st.from_regex(r"[a-z][a-z0-9]{0,8}", fullmatch=True)


@st.composite
def templates(draw):
    """Random small templates: containers plus software hosted on them."""
    containers = draw(st.lists(_name, min_size=1, max_size=3, unique=True))
    software = draw(
        st.lists(_name.filter(lambda n: n not in containers), min_size=0, max_size=3, unique=True)
    )
    node_templates = {}
    for c in containers:
        node_templates[c] = {"type": "tosker.nodes.Container"}
    for s in software:
        host = draw(st.sampled_from(containers))
        node_templates[s] = {
            "type": "tosker.nodes.Software",
            "requirements": [{"host": host}],
            "interfaces": {"Standard": {"start": {"implementation": f"{s}/start.sh"}}},
        }
    return yaml.safe_dump({"topology_template": {"node_templates": node_templates}})


@given(templates())
def test_round_trip_is_fixpoint(document):
    first = parse_service_template(document)
    serialized = serialize_service_template(first)
    second = parse_service_template(serialized)
    assert first.nodes.keys() == second.nodes.keys()
    for name in first.nodes:
        a, b = first.nodes[name], second.nodes[name]
        assert (a.kind, a.properties, a.interface) == (b.kind, b.properties, b.interface)
    assert {(r.kind, r.source, r.target, r.location) for r in first.relationships} == {
        (r.kind, r.source, r.target, r.location) for r in second.relationships
    }
    # a second round trip changes nothing
    assert serialize_service_template(second) == serialized


def test_thinking_round_trip(thinking_template_text):
    first = parse_service_template(thinking_template_text)
    second = parse_service_template(serialize_service_template(first))
    assert first.nodes.keys() == second.nodes.keys()
    assert first.nodes["api"].interface == second.nodes["api"].interface
    assert len(first.relationships) == len(second.relationships)
