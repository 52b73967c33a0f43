"""End-to-end runs of the command line through main()."""

import json

import pytest

import kernels
from config import EXIT_OK, EXIT_UNDETERMINED, EXIT_UNHEALTHY, EXIT_USAGE
from main import main


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_solve_writes_csv(write_doc, disc_document, capsys):
    code, out = run(["solve", "--config", write_doc(disc_document), "--workers", "1"], capsys)
    assert code == EXIT_OK
    lines = out.out.splitlines()
    metadata = json.loads(lines[0][2:])
    assert metadata["command"] == "solve"
    assert metadata["seed"] == 7 and metadata["walks"] == 400
    assert lines[1] == "x,mean,stderr,n,censored_fraction"
    assert lines[2].startswith("0.3 0.0,1.0,0.0,400,")


def test_output_is_identical_across_worker_counts(write_doc, disc_document, tmp_path, capsys):
    disc_document["walks"] = 5000
    config = write_doc(disc_document)
    outputs = []
    for workers in ("1", "3"):
        path = tmp_path / f"out-{workers}.json"
        assert main(["exit-time", "--config", config, "--workers", workers, "--json", "--out", str(path)]) == EXIT_OK
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]


def test_seed_flag_overrides_the_document(write_doc, disc_document, capsys):
    config = write_doc(disc_document)
    _, first = run(["exit-time", "--config", config, "--json", "--workers", "1"], capsys)
    _, second = run(["exit-time", "--config", config, "--json", "--workers", "1", "--seed", "8"], capsys)
    assert json.loads(first.out)["metadata"]["seed"] == 7
    assert json.loads(second.out)["metadata"]["seed"] == 8
    assert json.loads(first.out)["results"] != json.loads(second.out)["results"]


def test_points_outside_the_domain_are_usage_errors(write_doc, disc_document, capsys):
    disc_document["points"] = [[0.3, 0.0], [1.5, 0.0]]
    code, out = run(["solve", "--config", write_doc(disc_document)], capsys)
    assert code == EXIT_USAGE
    assert "points[1]" in out.err
    assert out.out == ""


def test_bad_domain_node_is_reported_by_path(write_doc, disc_document, capsys):
    disc_document["domain"] = {"kind": "union", "children": [
        {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
        {"kind": "ball", "center": [1.0, 0.0], "radius": -1.0},
    ]}
    code, out = run(["solve", "--config", write_doc(disc_document)], capsys)
    assert code == EXIT_USAGE
    assert "domain.children[1]" in out.err


def test_missing_config_is_a_usage_error(capsys):
    code, out = run(["solve"], capsys)
    assert code == EXIT_USAGE


def test_unknown_command_is_a_usage_error(capsys):
    assert main(["teleport"]) == EXIT_USAGE


def test_pkernel_needs_separated_targets(write_doc, disc_document, capsys):
    disc_document["targets"] = [[1.0, 0.0]]
    code, out = run(["pkernel", "--config", write_doc(disc_document)], capsys)
    assert code == EXIT_USAGE
    assert "targets[0]" in out.err


def test_green_on_unbounded_domain_is_rejected(write_doc, disc_document, capsys):
    disc_document["domain"] = {"kind": "halfspace", "normal": [0.0, 1.0], "offset": 0.0}
    disc_document["points"] = [[0.0, 1.0]]
    disc_document["poles"] = [[0.0, 2.0]]
    code, _ = run(["green", "--config", write_doc(disc_document)], capsys)
    assert code == EXIT_USAGE


def test_martin_json(write_doc, disc_document, capsys):
    disc_document.update({"x": [0.5, 0.0], "x0": [0.0, 0.0], "y": [1.0, 0.0], "walks": 50,
                          "martin": {"radii": [0.1, 0.05]}})
    code, out = run(["martin", "--config", write_doc(disc_document), "--json", "--workers", "1"], capsys)
    assert code == EXIT_OK
    body = json.loads(out.out)
    assert len(body["levels"]) == 2
    assert body["stable"] is True


def test_classify_thorn_apex(write_doc, capsys):
    document = {
        "params": {"d": 2, "alpha": 1.0},
        "domain": {"kind": "thorn", "gamma": 2.0},
        "classify": {"target": [0.0, 0.0]},
    }
    code, out = run(["classify", "--config", write_doc(document)], capsys)
    assert code == EXIT_OK
    body = json.loads(out.out)
    assert body["verdict"] == "inaccessible"
    assert body["I_f"] == pytest.approx(0.5)


def test_classify_exit_code_for_undetermined(write_doc, monkeypatch, capsys):
    from analysis import UNDETERMINED, Classification
    import handlers.classify_handler as classify_handler

    monkeypatch.setattr(classify_handler, "classify_boundary_point",
                        lambda *args, **kwargs: Classification(UNDETERMINED, {}, (1.0, 0.0)))
    document = {
        "params": {"d": 2, "alpha": 1.0},
        "domain": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0},
        "classify": {"target": [1.0, 0.0]},
    }
    code, _ = run(["classify", "--config", write_doc(document)], capsys)
    assert code == EXIT_UNDETERMINED


def test_kelvin_audit_passes(write_doc, capsys):
    document = {
        "params": {"d": 2, "alpha": 1.0},
        "domain": {"kind": "ball", "center": [3.0, 0.0], "radius": 1.0},
        "audit": {"pairs": 20},
    }
    code, out = run(["audit", "kelvin-green", "--config", write_doc(document)], capsys)
    assert code == EXIT_OK
    metadata = json.loads(out.out.splitlines()[0][2:])
    assert metadata["passed"] is True


def test_unknown_audit_is_a_usage_error(write_doc, disc_document, capsys):
    code, out = run(["audit", "nonsense", "--config", write_doc(disc_document)], capsys)
    assert code == EXIT_USAGE
    assert "kelvin-green" in out.err


def test_quick_selftest_passes(capsys):
    code, out = run(["selftest", "--quick"], capsys)
    assert code == EXIT_OK, out.out
    assert "poisson-normalization" in out.out
    assert "FAIL" not in out.out


def test_selftest_catches_a_wrong_poisson_constant(monkeypatch, capsys):
    original = kernels.poisson_const
    monkeypatch.setattr(kernels, "poisson_const", lambda p: 1.01 * original(p))
    code, out = run(["selftest", "--quick"], capsys)
    assert code == EXIT_UNHEALTHY
    assert "FAIL" in out.out


@pytest.mark.statistical
@pytest.mark.slow
def test_full_selftest_passes(capsys):
    code, out = run(["selftest"], capsys)
    assert code == EXIT_OK, out.out


@pytest.mark.statistical
def test_solve_reproduces_the_far_exit_probability(write_doc, disc_document, capsys):
    disc_document.update({
        "walks": 20_000,
        "points": [[0.0, 0.0]],
        "payoff": {"kind": "indicator", "region": {
            "kind": "difference", "left": {"kind": "space", "dim": 2},
            "right": {"kind": "ball", "center": [0.0, 0.0], "radius": 2.0}}},
    })
    code, out = run(["solve", "--config", write_doc(disc_document), "--json", "--workers", "1"], capsys)
    assert code == EXIT_OK
    result = json.loads(out.out)["results"][0]
    assert abs(result["mean"] - 1.0 / 3.0) <= 4.0 * result["stderr"]
