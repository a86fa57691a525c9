import filecmp
import os
import subprocess
import sys

import pytest

from hetprop.cli import main


def _files(d):
    out = []
    for root, _, names in os.walk(d):
        out += [os.path.relpath(os.path.join(root, n), d) for n in names]
    return sorted(out)


@pytest.fixture(scope="module")
def ingested(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    src, art = base / "six", base / "art"
    assert main(["generate", "--n1", "8", "--n2", "6", "--n3", "7", "--homo-density", "0.4",
                 "--hetero-density", "0.3", "--blocks", "2", "--seed", "1", "--out", str(src)]) == 0
    assert main(["ingest", "--input-dir", str(src), "--out", str(art)]) == 0
    return base, src, art


def test_ingest_artifacts(ingested):
    _, _, art = ingested
    assert set(os.listdir(art)) >= {"graph.tsv", "registry.tsv", "network.npz", "validation.tsv"}


def test_ingest_bad_association_exit_2(tmp_path, ingested):
    _, src, _ = ingested
    bad = tmp_path / "bad"
    bad.mkdir()
    for f in os.listdir(src):
        (bad / f).write_text((src / f).read_text())
    lines = (bad / "drug_target.tsv").read_text().splitlines()
    cells = lines[1].split("\t")
    cells[1] = "0.5"
    lines[1] = "\t".join(cells)
    (bad / "drug_target.tsv").write_text("\n".join(lines) + "\n")
    assert main(["ingest", "--input-dir", str(bad), "--out", str(tmp_path / "o")]) == 2


def test_ingest_missing_file_exit_3(tmp_path):
    assert main(["ingest", "--input-dir", str(tmp_path / "nowhere"), "--out", str(tmp_path / "o")]) == 3


def test_run_parallelism_identical_and_idempotent(tmp_path, ingested):
    _, _, art = ingested
    outs = []
    for par in ("1", "4", "1"):
        out = tmp_path / f"run{len(outs)}"
        assert main(["run", "--input", str(art), "--parallelism", par, "--sigma", "1e-3",
                     "--out", str(out)]) == 0
        outs.append(out)
    files = [f for f in _files(outs[0]) if f != "summary.tsv"]
    assert "raw.tsv" in files and "predictions/drug_target.tsv" in files
    for other in outs[1:]:
        match, mismatch, errors = filecmp.cmpfiles(outs[0], other, files, shallow=False)
        assert not mismatch and not errors


def _supersteps(out):
    head, row = (out / "summary.tsv").read_text().splitlines()
    return int(dict(zip(head.split("\t"), row.split("\t")))["supersteps"])


def test_sigma_trend(tmp_path, ingested):
    _, _, art = ingested
    steps = {}
    for s in ("0.2", "0.002"):
        assert main(["run", "--input", str(art), "--sigma", s, "--out", str(tmp_path / s)]) == 0
        steps[s] = _supersteps(tmp_path / s)
    assert steps["0.002"] >= steps["0.2"]


def test_cap_exit_4(tmp_path, ingested, capsys):
    _, _, art = ingested
    assert main(["run", "--input", str(art), "--max-supersteps", "1", "--out", str(tmp_path)]) == 4
    assert "seed 1" in capsys.readouterr().err


def test_invalid_params_exit_2(tmp_path, ingested):
    _, _, art = ingested
    assert main(["run", "--input", str(art), "--alpha", "1.5", "--out", str(tmp_path)]) == 2
    assert main(["run", "--input", str(art), "--partitions", "1", "--parallelism", "2",
                 "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["run", "--input", str(art), "--algo", "dhlp9", "--out", str(tmp_path)])
    assert exc.value.code == 2


def test_topk_eval_experiment(tmp_path, ingested):
    _, _, art = ingested
    run = tmp_path / "run"
    assert main(["run", "--input", str(art), "--out", str(run)]) == 0
    top = tmp_path / "top.tsv"
    assert main(["topk", "--input", str(art), "--run", str(run), "--entity", "dr0000",
                 "--concept", "target", "--k", "5", "--out", str(top)]) == 0
    lines = top.read_text().splitlines()
    assert lines[0] == "rank\tcandidate\tscore\tknown" and len(lines) == 6
    assert main(["topk", "--input", str(art), "--run", str(run), "--entity", "nobody",
                 "--concept", "target"]) == 2
    cv = tmp_path / "cv.tsv"
    assert main(["eval", "--input", str(art), "--k", "3", "--sigma", "0.1", "--out", str(cv)]) == 0
    rows = cv.read_text().splitlines()
    assert len(rows) == 1 + 3 * 3 + 3
    rm = tmp_path / "rm.tsv"
    assert main(["experiment", "--input", str(art), "--entity", "dr0000", "--top", "5",
                 "--out", str(rm)]) == 0
    assert main(["experiment", "--input", str(tmp_path / "none"), "--entity", "dr0000",
                 "--out", str(rm)]) == 3


def test_bench_table(tmp_path):
    out = tmp_path / "bench.tsv"
    assert main(["bench", "--edges", "2000", "--density", "0.2", "--parallelism", "1", "2",
                 "--supersteps", "5", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "edges\tvertices\tbackend\tparallelism\tsupersteps\twall_time\tspeedup"
    assert len(lines) == 1 + 2 * 2


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "hetprop.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "ingest" in r.stdout
