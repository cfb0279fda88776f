import csv
import json
import subprocess
import sys

import pytest

from adaradar.bitstream import read_arf
from adaradar.cli import main
from adaradar.tensor import read_rdt, read_rdt_sequence


@pytest.fixture
def scene(tmp_path):
    path = tmp_path / "scene.rdt"
    assert main(["gen", "--seed", "3", "--dims", "2", "64", "64", "-o", str(path),
                 "--truth", str(tmp_path / "truth.csv")]) == 0
    return path


def test_gen_explicit_targets(tmp_path):
    out = tmp_path / "s.rdt"
    assert main(["gen", "--targets", "10,12,50;40,40,30,0.5", "--noise", "0", "--dims", "1", "64", "64",
                 "-o", str(out)]) == 0
    x = read_rdt(out)
    assert x.shape == (2, 64, 64) and x.power()[10, 12] == x.power().max()


def test_gen_sequence(tmp_path):
    out = tmp_path / "s.rdtseq"
    assert main(["gen", "--frames", "5", "-o", str(out)]) == 0
    assert len(read_rdt_sequence(out)) == 5


def test_encode_decode_report(tmp_path, scene, capsys):
    arf, rec, rep = tmp_path / "f.arf", tmp_path / "r.rdt", tmp_path / "rep.json"
    assert main(["encode", "-i", str(scene), "-r", "12.5", "-s", "4", "-M", "64", "-o", str(arf)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["kept_per_block"] == 327
    assert read_arf(arf).s == 4
    assert main(["decode", "-i", str(arf), "-o", str(rec)]) == 0
    assert main(["report", "-a", str(scene), "-b", str(rec), "--frame", str(arf), "-o", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert data["value_bpp"] == pytest.approx(4 * 327 / 4096)


def test_detect_writes_proposals(tmp_path, scene):
    out = tmp_path / "p.csv"
    assert main(["detect", "-i", str(scene), "--floor", "4", "--nms", "5", "-o", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert rows and float(rows[0]["confidence"]) >= float(rows[-1]["confidence"])


def test_adapt_with_plot(tmp_path):
    seq = tmp_path / "s.rdtseq"
    main(["gen", "--frames", "8", "--dims", "2", "64", "64", "--amplitude", "25", "40", "-o", str(seq)])
    trace, fig = tmp_path / "t.csv", tmp_path / "t.svg"
    assert main(["adapt", "-i", str(seq), "--objective", "eqS5", "--lambda", "1.0", "--floor", "4",
                 "-o", str(trace), "--plot", str(fig)]) == 0
    rows = list(csv.DictReader(open(trace)))
    assert len(rows) == 8 and list(rows[0]) == ["t", "r", "value_bpp", "p", "p_minus", "g_hat", "grad_J",
                                                 "skipped"]
    assert fig.read_text().startswith("<?xml")


def test_adapt_objective_names(tmp_path, capsys):
    seq = tmp_path / "s.rdtseq"
    main(["gen", "--frames", "2", "-o", str(seq)])
    for name in ("penalized", "constraint_aware", "eqS5"):
        assert main(["adapt", "-i", str(seq), "--objective", name, "-o", str(tmp_path / "t.csv")]) == 0
    with pytest.raises(SystemExit):
        main(["adapt", "-i", str(seq), "--objective", "greedy", "-o", str(tmp_path / "t.csv")])


@pytest.mark.parametrize("kind", ["iv", "cfar"])
def test_baselines(tmp_path, scene, kind, capsys):
    out = tmp_path / "b.rdt"
    assert main(["baseline", kind, "-i", str(scene), "-o", str(out)]) == 0
    assert "value_bpp" in json.loads(capsys.readouterr().out)
    assert read_rdt(out).shape == read_rdt(scene).shape


def test_sweep_and_plot(tmp_path):
    cfg = tmp_path / "sw.json"
    cfg.write_text(json.dumps({"codecs": ["spectral"], "r": [1, 4], "s": [8], "M": [32],
                               "generator": {"dims": [1, 64, 64], "n_targets": 2, "noise_sigma": 1.0}}))
    out = tmp_path / "res"
    assert main(["sweep", "-c", str(cfg), "-o", str(out)]) == 0
    assert (out / "table.csv").exists() and (out / "rate_snr.svg").exists()
    assert main(["plot", "-i", str(out / "table.csv"), "--kind", "rate_rae", "-o", str(tmp_path / "f.svg")]) == 0


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.arf"
    bad.write_bytes(b"NOPE" + bytes(40))
    assert main(["decode", "-i", str(bad), "-o", str(tmp_path / "x.rdt")]) == 1
    assert "bad magic" in capsys.readouterr().err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "adaradar", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("adaradar")
