from __future__ import annotations

import io
import json
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings

from conftest import DATA, seeds
from digraphical.cli import VERBS, build_parser, emit_dot, run
from digraphical.digraph import graph_from_json, graph_to_json, linear
from digraphical.fuzz import random_graph
from digraphical.kleisli import kleisli_from_json
from digraphical.stacky import ghypergraph_from_json
from digraphical.symmetry import are_isomorphic


def call(*argv) -> tuple[int, object]:
    out = io.StringIO()
    code = run([str(a) for a in argv], out)
    text = out.getvalue()
    try:
        return code, json.loads(text)
    except json.JSONDecodeError:
        return code, text


def data(name: str) -> str:
    return str(DATA / name)


# ---------------------------------------------------------------- exit codes


def test_unknown_verb_is_usage_error():
    assert call("frobnicate", data("l2.json"))[0] == 2


def test_missing_file_is_usage_error(tmp_path):
    assert call("validate", tmp_path / "nope.json")[0] == 2


def test_missing_bound_is_usage_error():
    assert call("bar", data("d2.json"))[0] == 2
    assert call("enumerate", "--in", 1, "--out", 1)[0] == 2


def test_malformed_json_reports_position():
    code, payload = call("validate", data("broken.json"))
    assert code == 1
    assert (payload["error"], payload["line"], payload["column"]) == ("parse", 2, 24)


def test_every_verb_has_help():
    for verb in VERBS:
        with pytest.raises(SystemExit) as info:
            build_parser().parse_args([verb, "--help"])
        assert info.value.code == 0


# ---------------------------------------------------------------- graph verbs


def test_validate_graph():
    code, payload = call("validate", data("diamond.json"))
    assert code == 0 and payload == {"valid": True, "kind": "graph", "nodes": 4, "edges": 6}


def test_validate_reports_s_injectivity():
    code, payload = call("validate", data("bad_s.json"))
    assert code == 1 and not payload["valid"]
    assert any(v["kind"] == "SInjectivityViolation" for v in payload["violations"])


def test_validate_as_hypergraph():
    code, payload = call("validate", "--hypergraph", data("bad_s.json"))
    assert code == 0 and payload["kind"] == "hypergraph" and not payload["is_graph"]


def test_check_properties():
    assert call("check", data("diamond.json"))[1] == {
        "connected": True, "acyclic": True, "loopfree": True, "closed": False}
    assert call("check", "--acyclic", data("loop.json"))[1] == {"acyclic": False}


def test_hom_counts():
    code, payload = call("hom", "--etale", data("c11.json"), data("l2.json"))
    assert code == 0 and payload["count"] == 2 and payload["kind"] == "etale"


def test_corolla_covers_the_loop_once():
    code, payload = call("hom", "--etale", data("c11.json"), data("w1.json"))
    assert code == 0 and payload["count"] == 1


def test_check_selected_properties():
    assert call("check", "--connected", "--acyclic", data("l2.json")) == (0, {"connected": True, "acyclic": True})


def test_aut_of_theta():
    assert call("aut", data("d2.json"))[1]["order"] == 2


def test_core_of_chain():
    code, payload = call("core", data("l2.json"))
    core = graph_from_json(payload["core"])
    assert core.n_edges == 1 and payload["counit_edges"] == ["e1"]


def test_residue():
    assert call("residue", data("l2.json"))[1] == {"biarity": [1, 1], "imports": ["e0"], "exports": ["e2"]}


def test_glue_closes_chain_to_loop():
    code, payload = call("glue", data("l2.json"), "--pair", "e2", "e0")
    g = graph_from_json(payload["graph"])
    assert code == 0 and g.is_closed() and g.n_nodes == 2


def test_glue_two_files_gives_hypergraph():
    code, payload = call("glue", data("c11.json"), data("c11.json"), "--pair", "o", "o")
    assert code == 0 and payload["is_graph"] is False


def test_elements_rebuild():
    payload = call("elements", data("diamond.json"))[1]
    # four nodes plus six edges; one arrow per flag, five on each side
    assert len(payload["objects"]) == 10 and len(payload["arrows"]) == 10
    assert payload["colimit_certificate_matches"]


def test_complement_and_convexity():
    payload = call("complement", data("diamond.json"), "--nodes", "top")[1]
    assert graph_from_json(payload["complement"]).n_nodes == 3
    assert call("convex", data("diamond.json"), "--nodes", "top,left")[1]["convex"] is True
    assert call("convex", data("diamond.json"), "--nodes", "top,left,bottom")[1]["convex"] is False
    assert call("convex", data("diamond.json"), "--nodes", "top,bottom")[0] == 1


def test_enumerate_chains():
    code, payload = call("enumerate", "--in", 1, "--out", 1, "--max-nodes", 3)
    assert code == 0 and payload["count"] == 4
    assert all(row["aut_order"] == 1 for row in payload["graphs"])


def test_enumerate_with_arities():
    payload = call("enumerate", "--arities", "0:2,2:0", "--in", 0, "--out", 0, "--max-nodes", 2)[1]
    assert [row["aut_order"] for row in payload["graphs"]] == [2]


def test_free_properad_counts():
    code, payload = call("free-properad", data("one_op.json"), "--in", 1, "--out", 1, "--max-nodes", 4)
    assert code == 0 and payload["count"] == 5


def test_substitute_chain_into_chain():
    code, payload = call("substitute", data("l2.json"), "--node", "v0", "--graph", data("l2.json"))
    assert code == 0
    assert are_isomorphic(graph_from_json(payload["graph"]), linear(3))


def test_factorize_and_compose():
    code, payload = call("factorize", data("refine_c11_l2.json"))
    assert code == 0 and are_isomorphic(graph_from_json(payload["middle"]), linear(2))
    kleisli_from_json(payload["refinement"])
    code, payload = call("compose", data("refine_c11_l2.json"), data("free_l2.json"))
    assert code == 0
    assert kleisli_from_json(payload).codomain.n_nodes == 2
    assert call("compose", data("free_l2.json"), data("refine_c11_l2.json"))[0] == 1


def test_bar_and_emitted_hypergraph(tmp_path):
    target = tmp_path / "bar.json"
    code, payload = call("bar", data("d2.json"), "--max-nodes", 4, "--emit-ghyp", target)
    assert code == 0 and len(payload["nodes"]) == 12
    assert sorted(n["deck_order"] for n in payload["nodes"])[-1] == 2
    x = ghypergraph_from_json(json.loads(target.read_text()))
    assert x.N.n_objects == 12


def test_verify_bar_passes_on_theta():
    code, payload = call("verify-bar", data("d2.json"), "--in", 0, "--out", 0, "--max-nodes", 4)
    assert code == 0 and payload["result"] == "PASS"
    assert sorted(r["mapping_order"] for r in payload["components"]) == [1, 2]


# ---------------------------------------------------------------- DOT


def test_dot_is_stable_and_complete():
    first = call("dot", data("diamond.json"))[1]
    assert first == call("dot", data("diamond.json"))[1]
    assert first.startswith("digraph")
    for name in ("top", "left", "right", "bottom"):
        assert f'"{name}"' in first


def test_dot_marks_ports_and_units():
    text = emit_dot(graph_from_json({"edges": ["u"], "nodes": []}))
    assert '"u.in"' in text and '"u.out"' in text


# ---------------------------------------------------------------- round trips


@given(seed=seeds)
@settings(max_examples=25)
def test_validate_accepts_serialized_graphs(tmp_path_factory, seed):
    g = random_graph(random.Random(seed), 4)
    path = tmp_path_factory.mktemp("g") / "g.json"
    path.write_text(json.dumps(graph_to_json(g)))
    code, payload = call("validate", path)
    assert code == 0 and payload["nodes"] == g.n_nodes and payload["edges"] == g.n_edges


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "digraphical.cli", "aut", data("d2.json")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["order"] == 2
