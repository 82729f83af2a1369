import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from wordensemble.cli import main
from wordensemble.embedding_io import EmbeddingModel, load_model, save_model
from wordensemble.evaluation import (
    load_analogies,
    load_synonyms,
    run_analogy_test,
    run_synonym_test,
)

VOLATILE = ("started_at", "duration_s")


def stable_manifest(path):
    data = json.loads(path.read_text())
    for k in VOLATILE:
        data.pop(k)
    return data


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = main(["synth", "--out-dir", str(out), "--vocab-size", "400", "--dim", "12",
                 "--n-models", "4", "--noise-sigma", "0.3", "--seed", "3",
                 "--n-synonyms", "20", "--pairs-per-relation", "8", "--n-analogies", "40"])
    assert code == 0
    return out


def inputs_of(d):
    return sorted(str(p) for p in d.glob("model_*.vec"))


def test_synth_outputs(synth_dir):
    names = {p.name for p in synth_dir.iterdir()}
    assert {"ground_truth.vec", "synonyms.tsv", "analogies.tsv", "manifest.json",
            "model_01.vec", "model_04.vec"} <= names
    man = json.loads((synth_dir / "manifest.json").read_text())
    assert man["command"] == "synth"
    assert man["config"]["spec"]["seed"] == 3
    assert man["config"]["seeds"]["models"][1] == [3, 1, 1]
    assert "model_02.vec" in man["outputs"]


def test_synth_reproducible(tmp_path, synth_dir):
    args = ["synth", "--vocab-size", "400", "--dim", "12", "--n-models", "4", "--noise-sigma", "0.3",
            "--seed", "3", "--n-synonyms", "20", "--pairs-per-relation", "8", "--n-analogies", "40"]
    assert main(args + ["--out-dir", str(tmp_path)]) == 0
    for name in ("model_01.vec", "synonyms.tsv", "analogies.tsv"):
        assert (tmp_path / name).read_bytes() == (synth_dir / name).read_bytes()
    assert stable_manifest(tmp_path / "manifest.json") == stable_manifest(synth_dir / "manifest.json")


def test_combine_identical_files(tmp_path):
    rng = np.random.default_rng(0)
    m = EmbeddingModel(tuple(f"w{i}" for i in range(20)), rng.standard_normal((20, 3)))
    a, b = tmp_path / "a.vec", tmp_path / "b.vec"
    save_model(m, a)
    save_model(m, b)
    out = tmp_path / "c.vec"
    assert main(["combine", str(a), str(b), "--method", "sopp", "--out", str(out)]) == 0
    np.testing.assert_allclose(load_model(out).matrix, m.matrix, atol=1e-6)
    man = json.loads((tmp_path / "c.vec.manifest.json").read_text())
    assert man["config"]["converged"] is True
    assert man["inputs"][0]["digest"].startswith("sha256:")
    assert (tmp_path / "c_projections" / "projections.json").exists()


@pytest.mark.parametrize("extra", [["--threshold", "0"], ["--threshold", "-1"], ["--max-iters", "0"]])
def test_combine_bad_config_is_usage_error(tmp_path, synth_dir, extra):
    code = main(["combine", *inputs_of(synth_dir), "--out", str(tmp_path / "x.vec"), *extra])
    assert code == 5


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["combine"])
    assert info.value.code == 5
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 5


def test_combine_unreadable_input(tmp_path):
    code = main(["combine", str(tmp_path / "nope1.vec"), str(tmp_path / "nope2.vec"),
                 "--out", str(tmp_path / "o.vec")])
    assert code == 2
    bad = tmp_path / "bad.vec"
    bad.write_text("2 2\na 1 2\n")
    assert main(["combine", str(bad), str(bad), "--out", str(tmp_path / "o.vec")]) == 2


def test_combine_solver_failure(tmp_path):
    words = tuple(f"w{i}" for i in range(6))
    x = np.arange(6.0)
    good = EmbeddingModel(words, np.column_stack([x, x ** 2]))
    bad = EmbeddingModel(words, np.column_stack([x, 2 * x]))
    save_model(good, tmp_path / "g.vec")
    save_model(bad, tmp_path / "b.vec")
    code = main(["combine", str(tmp_path / "g.vec"), str(tmp_path / "b.vec"),
                 "--method", "sols", "--out", str(tmp_path / "o.vec")])
    assert code == 4


def test_combine_non_convergence_still_writes(tmp_path, synth_dir):
    out = tmp_path / "c.vec"
    code = main(["combine", *inputs_of(synth_dir), "--method", "sols", "--max-iters", "2",
                 "--out", str(out), "--residuals-csv", str(tmp_path / "r.csv")])
    assert code == 3
    assert out.exists()
    assert (tmp_path / "r.csv").read_text().splitlines()[0] == "iteration,residual"
    assert json.loads((tmp_path / "c.vec.manifest.json").read_text())["config"]["converged"] is False


def test_combine_defaults_few_iterations(tmp_path, synth_dir):
    out = tmp_path / "c.vec"
    assert main(["combine", *inputs_of(synth_dir), "--out", str(out)]) == 0
    man = json.loads((tmp_path / "c.vec.manifest.json").read_text())
    assert man["config"]["iterations"] <= 10


def test_eval_matches_library(synth_dir, capsys, tmp_path):
    model = synth_dir / "model_01.vec"
    code = main(["eval", str(model), "--synonyms", str(synth_dir / "synonyms.tsv"),
                 "--analogies", str(synth_dir / "analogies.tsv"), "--report-csv", str(tmp_path / "r.csv")])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    m = load_model(model)
    syn = run_synonym_test(m, load_synonyms(synth_dir / "synonyms.tsv"))
    ana = run_analogy_test(m, load_analogies(synth_dir / "analogies.tsv"))
    cells = out[2].split()
    assert cells[:4] == ["model_01", f"{syn.mean_rank:.2f}", f"{ana.hit_at_1:.3f}", f"{ana.hit_at_10:.3f}"]
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(syn.items) + len(ana.items)
    assert (tmp_path / "r.csv.manifest.json").exists()


def test_eval_many_models(synth_dir, capsys):
    args = ["eval", "--analogies", str(synth_dir / "analogies.tsv")]
    for p in inputs_of(synth_dir) + [str(synth_dir / "ground_truth.vec")]:
        args += ["--model", p]
    assert main(args) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 + 5
    assert out[-1].split()[0] == "ground_truth"
    assert out[-1].split()[2] == "1.000"


def test_eval_requires_dataset(synth_dir):
    assert main(["eval", str(synth_dir / "model_01.vec")]) == 5


def run_pipeline(d, synth_dir, seed=11):
    out = d / "combined.vec"
    assert main(["combine", *inputs_of(synth_dir), "--method", "sopp", "--out", str(out),
                 "--residuals-csv", str(d / "res.csv")]) == 0
    code = main(["analyze", str(out), "--inputs", *inputs_of(synth_dir),
                 "--projections", str(d / "combined_projections"), "--pairs", "300",
                 "--seed", str(seed), "--scatter-csv", str(d / "scatter.csv"),
                 "--pairs-csv", str(d / "pairs.csv")])
    assert code == 0


def test_analyze_outputs(tmp_path, synth_dir):
    run_pipeline(tmp_path, synth_dir)
    with open(tmp_path / "pairs.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 300
    for r in rows:
        assert float(r["sim_min"]) <= float(r["sim_mean"]) <= float(r["sim_max"])
    scatter = (tmp_path / "scatter.csv").read_text().splitlines()
    assert len(scatter) - 1 == 400


def test_pipeline_byte_identical(tmp_path, synth_dir):
    first, second = tmp_path / "1", tmp_path / "2"
    for d in (first, second):
        d.mkdir()
    run_pipeline(first, synth_dir)
    snapshot = {p.name: p.read_bytes() for p in first.iterdir() if p.is_file()}
    manifests = {p.name: stable_manifest(p) for p in first.glob("*.manifest.json")}
    run_pipeline(first, synth_dir)  # rerun in place: same paths, same bytes
    for name, data in snapshot.items():
        if name.endswith(".manifest.json"):
            assert stable_manifest(first / name) == manifests[name]
        else:
            assert (first / name).read_bytes() == data, name
    run_pipeline(second, synth_dir)
    for name in ("combined.vec", "res.csv", "scatter.csv", "pairs.csv"):
        assert (second / name).read_bytes() == snapshot[name]


def test_analyze_shape_errors(tmp_path, synth_dir):
    run_pipeline(tmp_path, synth_dir)
    code = main(["analyze", str(tmp_path / "combined.vec"), "--inputs", *inputs_of(synth_dir)[:2],
                 "--projections", str(tmp_path / "combined_projections"),
                 "--scatter-csv", str(tmp_path / "s2.csv")])
    assert code == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wordensemble", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "wordensemble" in proc.stdout
