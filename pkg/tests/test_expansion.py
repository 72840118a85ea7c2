"""Node expansion and whole-KB generation against mock providers."""
from __future__ import annotations

import pytest

from conftest import make_kb
from weaver.engine import Engine
from weaver.errors import ExpansionError, GenerationError
from weaver.expansion import (
    default_relations_for,
    expand_node,
    generate_kb,
    suggest_tests,
)
from weaver.kb import ExpansionConfig
from weaver.lm import (
    MockEmbeddingProvider,
    MockGenerationProvider,
    MockScoringProvider,
    RetryPolicy,
    ScriptedGenerationProvider,
)
from weaver.prompts import render_list_prompt
from weaver.recommend import Recommender, RecommenderConfig

NO_WAIT = RetryPolicy(base_delay=0.0, jitter=0.0)


def fixture_lm(kb, node, mapping, n=10):
    """Mock whose scripted replies are keyed by (relation, node) prompts."""
    fixtures = {render_list_prompt(node, rel, n): reply
                for rel, reply in mapping.items()}
    return MockGenerationProvider(fixtures=fixtures)


def test_expand_creates_children_with_llm_provenance():
    kb = make_kb()
    lm = fixture_lm(kb, kb.root, {"TypeOf": '["a", "b", "c"]'}, n=3)
    created = expand_node(kb, kb.root, ["TypeOf"], 3, lm)
    assert [c.concept.label for c in created] == ["a", "b", "c"]
    for child in created:
        assert child.parent is kb.root
        assert child.depth == 1
        assert child.relation == "TypeOf"
        assert child.provenance.startswith("llm(mock-gen-v1,")
        assert len(child.provenance.split(",")[1].rstrip(")")) == 12


def test_expand_skips_existing_norms_anywhere():
    kb = make_kb()
    branch = kb.add_child(kb.root, "branch", "TypeOf", "user-created")
    kb.add_child(branch, "shared idea", "TypeOf", "user-created")
    lm = fixture_lm(kb, kb.root, {"Causes": '["Shared Idea", "fresh"]'}, n=2)
    created = expand_node(kb, kb.root, ["Causes"], 2, lm)
    assert [c.concept.label for c in created] == ["fresh"]


def test_expand_overlap_owned_by_first_relation_in_catalog_order():
    kb = make_kb()
    lm = fixture_lm(kb, kb.root, {
        "TypeOf": '["overlap", "one"]',
        "Causes": '["overlap", "two"]',
    }, n=2)
    created = expand_node(kb, kb.root, ["Causes", "TypeOf"], 2, lm)
    overlap = kb.index["overlap"]
    assert overlap.relation == "TypeOf"
    assert {c.concept.label for c in created} == {"overlap", "one", "two"}


def test_expand_is_idempotent_under_identical_replies():
    kb = make_kb()
    lm = MockGenerationProvider()
    first = expand_node(kb, kb.root, ["TypeOf"], 5, lm)
    assert len(first) == 5
    second = expand_node(kb, kb.root, ["TypeOf"], 5, lm)
    assert second == []


def test_expand_truncates_at_budget():
    kb = make_kb(max_kb_size=4)
    lm = MockGenerationProvider()
    created = expand_node(kb, kb.root, ["TypeOf", "Causes"], 10, lm)
    assert kb.size == 4
    assert len(created) == 3


def test_expand_skips_failing_relation_but_keeps_rest():
    kb = make_kb()
    good = render_list_prompt(kb.root, "Causes", 2)

    class Flaky(MockGenerationProvider):
        def _invoke_generate(self, prompt, params):
            if prompt != good:
                raise RuntimeError("backend rejected this one")
            return '["kept"]'

    created = expand_node(kb, kb.root, ["TypeOf", "Causes"], 2,
                          Flaky(retry=NO_WAIT))
    assert [c.concept.label for c in created] == ["kept"]


def test_expand_raises_when_every_relation_fails():
    kb = make_kb()
    lm = ScriptedGenerationProvider([], retry=NO_WAIT)
    with pytest.raises(ExpansionError):
        expand_node(kb, kb.root, ["TypeOf", "Causes"], 2, lm)


def test_expand_unknown_relation_rejected():
    from weaver.errors import CatalogError

    kb = make_kb()
    with pytest.raises(CatalogError):
        expand_node(kb, kb.root, ["NotARelation"], 2, MockGenerationProvider())


def test_parallel_expansion_matches_serial_tree():
    serial = make_kb()
    expand_node(serial, serial.root, None, 10, MockGenerationProvider())
    parallel = make_kb()
    expand_node(parallel, parallel.root, None, 10, MockGenerationProvider(),
                parallelism=8)
    assert parallel.to_json_bytes() == serial.to_json_bytes()


def test_default_relations_depend_on_depth(small_kb):
    assert default_relations_for(small_kb.root) == \
        small_kb.catalog.names()
    child = small_kb.index["hate speech"]
    assert default_relations_for(child) == \
        list(small_kb.config.relations_layer2)


def test_generate_kb_two_layers_and_budget(engine):
    kb = generate_kb("online toxicity", config=engine.expansion, lm=engine.lm,
                     recommender=engine.recommender)
    depths = {n.depth for n in kb.nodes_preorder()}
    assert depths == {0, 1, 2}
    assert kb.size <= engine.expansion.max_kb_size
    assert kb.audit() == []


def test_generate_kb_single_layer_config():
    engine = Engine.mock()
    config = ExpansionConfig(initial_layers=1)
    kb = generate_kb("online toxicity", config=config, lm=engine.lm,
                     recommender=engine.recommender)
    assert {n.depth for n in kb.nodes_preorder()} == {0, 1}


def test_generate_kb_empty_first_layer_is_an_error():
    engine = Engine.mock()
    lm = ScriptedGenerationProvider(['[]'] * 26, retry=NO_WAIT)
    with pytest.raises(GenerationError):
        generate_kb("seed", lm=lm, recommender=engine.recommender)


def test_generate_kb_deterministic_bytes(engine):
    one = generate_kb("online toxicity", config=engine.expansion,
                      lm=engine.lm, recommender=engine.recommender)
    two = generate_kb("online toxicity", config=engine.expansion,
                      lm=engine.lm, recommender=engine.recommender)
    assert one.to_json_bytes() == two.to_json_bytes()


def test_suggest_tests_returns_parsed_list(engine):
    kb = make_kb()
    child = kb.add_child(kb.root, "misinformation", "MannerOf",
                         "user-created")
    tests = suggest_tests(kb, child, engine.lm, m=5)
    assert len(tests) == 5
    assert all(isinstance(t, str) and t for t in tests)


def test_suggest_tests_rejects_nonpositive_m(engine):
    kb = make_kb()
    with pytest.raises(ValueError):
        suggest_tests(kb, kb.root, engine.lm, m=0)
