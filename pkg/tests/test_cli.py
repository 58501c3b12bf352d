"""End-to-end tests for the command line front end.

Commands run in-process through cli.run() so that a whole corpus sweep
stays cheap; stdout is captured and parsed back as JSON.
"""

import json
from pathlib import Path

from cartankit.cli import GeometrySpec, load_spec, run, schema_errors

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

CORPUS_FILES = sorted(p.name for p in CORPUS.glob("*.json"))


def invoke(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def write_doc(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def minimal_poisson(extra=None):
    doc = {
        "spec_version": 1,
        "chart": {"coords": ["x", "y"], "box": [[-1, 1], [-1, 1]]},
        "poisson": [["0", "1"], ["-1", "0"]],
    }
    if extra:
        doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# schema and parsing
# ---------------------------------------------------------------------------


def test_corpus_passes_schema():
    assert len(CORPUS_FILES) == 9
    for name in CORPUS_FILES:
        doc = json.loads((CORPUS / name).read_text())
        assert schema_errors(doc) == [], name


def test_corpus_round_trips_exactly():
    for name in CORPUS_FILES:
        s1 = load_spec(CORPUS / name)
        s2 = GeometrySpec(s1.serialize())
        assert s1 == s2, name
        assert s1.serialize() == s2.serialize(), name


def test_schema_error_carries_pointer_path(capsys, tmp_path):
    doc = {"spec_version": 1, "chart": {"coords": ["x"], "box": [[0]]}}
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2
    assert rep["status"] == "error"
    assert rep["errors"][0]["path"] == "/chart/box/0"


def test_unknown_top_level_field_rejected(capsys, tmp_path):
    doc = minimal_poisson({"metric_tensor": [["1"]]})
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2


def test_bad_expression_reports_its_location(capsys, tmp_path):
    doc = minimal_poisson()
    doc["poisson"][0][1] = "x +* y"
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2
    assert rep["errors"][0]["path"].startswith("/poisson")


def test_action_fields_require_algebra(capsys, tmp_path):
    doc = {
        "spec_version": 1,
        "chart": {"coords": ["x"], "box": [[-1, 1]]},
        "action_fields": [["1"]],
    }
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2
    assert "lie_algebra" in rep["errors"][0]["message"]


def test_h_frame_requires_metric(capsys, tmp_path):
    doc = minimal_poisson({"h_frame": [[["0", "1"], ["-1", "0"]]]})
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2


def test_empty_file_is_an_input_error(capsys, tmp_path):
    doc = {"spec_version": 1, "chart": {"coords": ["x"], "box": [[-1, 1]]}}
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2
    assert "no geometric object" in rep["errors"][0]["message"]


def test_unreadable_file(capsys):
    code, rep = invoke(capsys, "validate", "/nonexistent/thing.json")
    assert code == 2 and rep["status"] == "error"


def test_guard_strings_survive_round_trip():
    s = load_spec(CORPUS / "sphere.json")
    assert s.chart.guards
    doc = s.serialize()
    assert doc["chart"]["guards"] == ["sin(theta)"]


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def test_validate_whole_corpus(capsys):
    for name in CORPUS_FILES:
        code, rep = invoke(capsys, "validate", str(CORPUS / name))
        assert code == 0, name
        assert rep["status"] == "pass"
        assert rep["checks"], name


def test_validate_reports_axiom_names(capsys):
    code, rep = invoke(capsys, "validate", str(CORPUS / "so3_action.json"))
    names = [c["name"] for c in rep["checks"]]
    assert "lie_algebra_axioms" in names
    assert "jacobi" in names and "leibniz" in names


def test_validate_flags_broken_jacobi(capsys, tmp_path):
    bad = [[[0, 0, 0]] * 3 for _ in range(3)]
    structure = [
        [[0, 0, 0], [0, 0, 1], [0, 0, -1]],
        [[0, 0, -1], [0, 0, 0], [1, 0, 0]],
        [[0, 0, 1], [-1, 0, 0], [0, 0, 0]],
    ]
    doc = {
        "spec_version": 1,
        "chart": {"coords": ["x", "y", "z"], "box": [[-1, 1], [-1, 1], [-1, 1]]},
        "algebroid": {
            "rank": 3,
            "anchor": [["0"] * 3, ["0"] * 3, ["0"] * 3],
            "structure": structure,
        },
    }
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 1
    assert rep["status"] == "fail"
    failing = [c for c in rep["checks"] if c["status"] == "fail"]
    assert failing and failing[0]["name"] == "jacobi"


def test_validate_degenerate_metric_fails_not_errors(capsys, tmp_path):
    doc = {
        "spec_version": 1,
        "chart": {"coords": ["x", "y"], "box": [[-1, 1], [-1, 1]]},
        "metric": [["1", "0"], ["0", "0"]],
    }
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 1
    names = {c["name"]: c["status"] for c in rep["checks"]}
    assert names["metric_nondegenerate"] == "fail"


# ---------------------------------------------------------------------------
# check pipelines
# ---------------------------------------------------------------------------


def test_check_sphere_riemann_passes(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "sphere.json"), "--pipeline", "riemann"
    )
    assert code == 0
    verdict = rep["checks"][0]
    assert verdict["status"] == "pass"
    assert any("homogeneous" in n for n in verdict["notes"])
    child_names = [c["name"] for c in verdict["children"]]
    assert child_names == [
        "metric_compatibility",
        "h_invariance",
        "curvature_parallel",
        "lift_curvature_identity",
    ]


def test_check_ellipsoid_riemann_fails_with_witness(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "ellipsoid.json"), "--pipeline", "riemann"
    )
    assert code == 1
    verdict = rep["checks"][0]
    assert verdict["status"] == "fail"
    bad = [c for c in verdict["children"] if c["name"] == "curvature_parallel"]
    assert bad[0]["status"] == "fail"
    assert len(bad[0]["witness"]) == 2


def test_check_theorem_a_on_action(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "so3_action.json"), "--pipeline", "theorem-a"
    )
    assert code == 0
    assert rep["checks"][0]["status"] == "locally_symmetric"


def test_check_transitive_rejects_intransitive_input(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "so3_action.json"), "--pipeline", "transitive"
    )
    assert code == 2
    assert "not transitive" in rep["errors"][0]["message"]


def test_check_transitive_symplectic(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "symplectic_r2.json"), "--pipeline", "transitive"
    )
    assert code == 0


def test_check_poisson_so3_dual(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "so3_dual_poisson.json"), "--pipeline", "poisson"
    )
    assert code == 0
    child_names = [c["name"] for c in rep["checks"][0]["children"]]
    assert child_names == [
        "torsion_free",
        "lemma_sx",
        "flat",
        "nabla_pi_parallel",
        "p2_identity",
    ]


def test_check_foliation_cartan_fails_in_agreement(capsys):
    code, rep = invoke(
        capsys, "check", str(CORPUS / "foliation_r3.json"), "--pipeline", "cartan"
    )
    assert code == 1
    children = {c["name"]: c["status"] for c in rep["checks"][0]["children"]}
    assert children == {
        "bracket_compatibility": "fail",
        "jet_splitting": "fail",
    }


def test_check_geometry_dispatches_by_object(capsys):
    for name, expect in (
        ("sphere.json", "riemann"),
        ("so3_dual_poisson.json", "poisson"),
        ("affine_group_parallelism.json", "geometry"),
        ("so3_action.json", "theorem-a"),
    ):
        code, rep = invoke(capsys, "check", str(CORPUS / name))
        assert code == 0, name
        assert rep["pipeline"] == "geometry"


def test_check_affine_geometry_is_locally_symmetric(capsys):
    code, rep = invoke(capsys, "check", str(CORPUS / "affine_group_parallelism.json"))
    assert code == 0
    verdict = rep["checks"][0]
    assert verdict["status"] == "locally_symmetric"
    assert any("model algebra" in n for n in verdict.get("notes", []))


def test_check_non_jacobi_poisson_is_a_verdict_failure(capsys, tmp_path):
    doc = {
        "spec_version": 1,
        "chart": {"coords": ["x", "y", "z"], "box": [[-1, 1], [-1, 1], [-1, 1]]},
        "poisson": [["0", "x", "0"], ["-x", "0", "y"], ["0", "-y", "0"]],
    }
    code, rep = invoke(
        capsys, "check", write_doc(tmp_path, doc), "--pipeline", "poisson"
    )
    assert code == 1
    assert rep["status"] == "fail"
    assert rep["checks"][0]["name"] == "poisson_algebroid"
    assert "Jacobi" in rep["checks"][0]["detail"]


def test_check_riemann_needs_a_metric(capsys, tmp_path):
    code, rep = invoke(
        capsys,
        "check",
        write_doc(tmp_path, minimal_poisson()),
        "--pipeline",
        "riemann",
    )
    assert code == 2
    assert rep["errors"][0]["path"] == "/metric"


def test_ambiguous_connections_rejected(capsys, tmp_path):
    zero = [[["0", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
    doc = minimal_poisson(
        {
            "connections": {
                "one": {"target": "tm", "gamma": zero},
                "two": {"target": "tm", "gamma": zero},
            }
        }
    )
    code, rep = invoke(
        capsys, "check", write_doc(tmp_path, doc), "--pipeline", "poisson"
    )
    assert code == 2
    assert "ambiguous" in rep["errors"][0]["message"]


def test_named_tm_connection_feeds_cotangent_pair(capsys, tmp_path):
    zero = [[["0", "0"], ["0", "0"]], [["0", "0"], ["0", "0"]]]
    doc = minimal_poisson(
        {"connections": {"levi": {"target": "tm", "gamma": zero}}}
    )
    code, rep = invoke(
        capsys, "check", write_doc(tmp_path, doc), "--pipeline", "poisson"
    )
    assert code == 0


def test_connection_shape_must_fit_chart(capsys, tmp_path):
    doc = minimal_poisson(
        {"connections": {"bad": {"target": "tm", "gamma": [[["0"]]]}}}
    )
    code, rep = invoke(capsys, "validate", write_doc(tmp_path, doc))
    assert code == 2
    assert "/connections/bad/gamma" == rep["errors"][0]["path"]


# ---------------------------------------------------------------------------
# holonomy and identities
# ---------------------------------------------------------------------------


def test_holonomy_sphere(capsys):
    code, rep = invoke(
        capsys,
        "holonomy",
        str(CORPUS / "sphere.json"),
        "--point", "1.2", "0.5",
        "--plane", "0", "1",
        "--side", "0.01",
    )
    assert code == 0
    check = rep["checks"][0]
    assert check["name"] == "holonomy_consistency"
    assert check["value"] <= check["third_order_bound"]
    assert len(check["log_holonomy"]) == 2


def test_holonomy_bad_plane_is_input_error(capsys):
    code, rep = invoke(
        capsys,
        "holonomy",
        str(CORPUS / "sphere.json"),
        "--point", "1.2", "0.5",
        "--plane", "0", "7",
        "--side", "0.01",
    )
    assert code == 2


def test_holonomy_needs_transport_connection(capsys, tmp_path):
    code, rep = invoke(
        capsys,
        "holonomy",
        write_doc(tmp_path, minimal_poisson()),
        "--point", "0", "0",
        "--plane", "0", "1",
        "--side", "0.01",
    )
    assert code == 2
    assert "transport" in rep["errors"][0]["message"]


def test_identities_so3(capsys):
    code, rep = invoke(capsys, "identities", str(CORPUS / "so3_action.json"))
    assert code == 0
    names = [c["name"] for c in rep["checks"][0]["children"]]
    assert "route_agreement" in names and "cartan" in names


# ---------------------------------------------------------------------------
# report mechanics
# ---------------------------------------------------------------------------


def test_reports_are_byte_identical_for_fixed_seed(capsys):
    run(["check", str(CORPUS / "sphere.json"), "--pipeline", "riemann", "--seed", "0"])
    first = capsys.readouterr().out
    run(["check", str(CORPUS / "sphere.json"), "--pipeline", "riemann", "--seed", "0"])
    second = capsys.readouterr().out
    assert first == second


def test_pretty_and_compact_agree(capsys):
    _, compact = invoke(capsys, "validate", str(CORPUS / "euclid.json"))
    _, pretty = invoke(capsys, "validate", str(CORPUS / "euclid.json"), "--pretty")
    assert compact == pretty


def test_timings_flag_adds_elapsed(capsys):
    _, rep = invoke(capsys, "validate", str(CORPUS / "euclid.json"), "--timings")
    assert rep["elapsed_ms"] > 0
    _, rep = invoke(capsys, "validate", str(CORPUS / "euclid.json"))
    assert "elapsed_ms" not in rep


def test_seed_flag_overrides_file_seed(capsys):
    _, rep = invoke(capsys, "validate", str(CORPUS / "euclid.json"), "--seed", "7")
    assert rep["seed"] == 7
    _, rep = invoke(capsys, "validate", str(CORPUS / "euclid.json"))
    assert rep["seed"] == 0


def test_report_carries_tool_and_name(capsys):
    _, rep = invoke(capsys, "check", str(CORPUS / "hyperbolic.json"))
    assert rep["tool"].startswith("cartankit ")
    assert rep["name"] == "hyperbolic"
    assert rep["input"].endswith("hyperbolic.json")


def test_console_script_is_installed():
    import shutil

    assert shutil.which("cartankit")
