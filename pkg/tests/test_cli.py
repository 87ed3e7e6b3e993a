import subprocess
import sys
from importlib import resources

import pytest

from superflow.cli import main
from superflow.flows import read_flow_stream


def hyp_file(name):
    return str(resources.files("superflow").joinpath("hypotheses", name))


@pytest.fixture
def scan_csv(tmp_path, capsys):
    path = tmp_path / "scan.csv"
    assert main(["generate", "scan", "--seed", "1", "-o", str(path)]) == 0
    noise = tmp_path / "noise.csv"
    assert main(["generate", "noise", "--count", "10", "--seed", "2", "--no-header", "-o", str(noise)]) == 0
    path.write_text(path.read_text() + noise.read_text())
    capsys.readouterr()
    return path


def test_check_monitorable(capsys):
    assert main(["check", hyp_file("scan256.sf")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "monitorable: yes; qualifications: distinct(dstip) >= 256"
    assert "time-spread" in out


def test_check_refused(capsys):
    assert main(["check", hyp_file("nested.sf")]) == 2
    assert "refused: top-level existential quantifier" in capsys.readouterr().out


def test_check_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.sf"
    bad.write_text("forall f in F: bytes(f) >;")
    assert main(["check", str(bad)]) == 1
    assert "line 1, column" in capsys.readouterr().err


def test_decompose_and_report(scan_csv, tmp_path, capsys):
    out = tmp_path / "d.txt"
    assert main(["decompose", str(scan_csv), "--builtin", "scan", "-o", str(out), "--report-format", "kv"]) == 0
    assert "reduction=0.9586" in capsys.readouterr().err
    lines = out.read_text().splitlines()
    assert lines[0].startswith("SF 0 scan 256 0,1,2,")
    assert lines[1] == "REST 10 " + ",".join(str(i) for i in range(256, 266))
    assert main(["report", str(scan_csv), str(out), "--report-format", "kv"]) == 0
    kv = capsys.readouterr().out
    assert "superflow_bytes=32\n" in kv and "residual_bytes=320\n" in kv


def test_decompose_is_deterministic(scan_csv, tmp_path, capsys):
    outputs = []
    for i in range(2):
        assert main(["decompose", str(scan_csv), "--hypothesis", hyp_file("scan256.sf"), "--report", "-"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]


def test_shard_by_source_matches_serial(scan_csv, capsys):
    assert main(["decompose", str(scan_csv), "--builtin", "scan", "--report", str(scan_csv) + ".r"]) == 0
    serial = capsys.readouterr().out
    assert main(["decompose", str(scan_csv), "--builtin", "scan", "--shard-by", "srcip",
                 "--report", str(scan_csv) + ".r"]) == 0
    assert capsys.readouterr().out == serial


def test_shard_refused_for_chat(scan_csv, capsys):
    assert main(["decompose", str(scan_csv), "--builtin", "chat", "--shard-by", "srcip"]) == 2


def test_unmonitorable_needs_oracle(tmp_path, capsys):
    flows = tmp_path / "few.csv"
    flows.write_text("1.1.1.1,2.2.2.2,1,2,6,0,0,0,40,1\n1.1.1.1,2.2.2.3,1,2,6,0,0,0,90,1\n")
    assert main(["decompose", str(flows), "--hypothesis", hyp_file("nested.sf")]) == 2
    assert "not efficiently monitorable" in capsys.readouterr().err
    # the strict comparison also ranges over g = f, so no nonempty set qualifies
    assert main(["decompose", str(flows), "--hypothesis", hyp_file("nested.sf"), "--oracle"]) == 0
    assert capsys.readouterr().out == "REST 2 0,1\n"
    largest = tmp_path / "largest.sf"
    largest.write_text("exists f in F: forall g in F: bytes(g) <= bytes(f);")
    assert main(["decompose", str(flows), "--hypothesis", str(largest), "--oracle"]) == 0
    assert capsys.readouterr().out == "SF 0 largest 2 0,1\nREST 0 -\n"


def test_oracle_size_limit(scan_csv, capsys):
    assert main(["decompose", str(scan_csv), "--builtin", "scan", "--oracle"]) == 1


def test_input_errors(tmp_path, capsys):
    assert main(["decompose", str(tmp_path / "missing.csv"), "--builtin", "scan"]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("1.1.1.1,2.2.2.2,1,2,6,0,0,0,40\n")
    assert main(["decompose", str(bad), "--builtin", "scan"]) == 1
    assert "line 1" in capsys.readouterr().err
    assert main(["decompose", str(bad), "--builtin", "scan", "--prefix", "nonsense"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["decompose", str(bad), "--policy", "random"])
    assert exc.value.code == 1


def test_encode_round_trip(scan_csv, tmp_path):
    compact = tmp_path / "scan.bin"
    assert main(["encode", str(scan_csv), "-o", str(compact)]) == 0
    assert compact.stat().st_size == 266 * 32
    back = tmp_path / "back.csv"
    assert main(["encode", str(compact), "--format", "compact", "--to", "csv", "-o", str(back)]) == 0
    with open(back, "rb") as fh:
        assert len(list(read_flow_stream(fh))) == 266


def test_threshold_from_command_line(tmp_path, capsys):
    partial = tmp_path / "partial.csv"
    assert main(["generate", "scan", "--hits", "0-223", "-o", str(partial)]) == 0
    assert main(["decompose", str(partial), "--builtin", "scan", "--report-format", "kv"]) == 0
    assert capsys.readouterr().out == "REST 224 " + ",".join(map(str, range(224))) + "\n"
    assert main(["decompose", str(partial), "--builtin", "scan", "-c", "224", "--report-format", "kv"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("SF 0 scan 224 ")
    assert "superflow_bytes=64" in captured.err


def test_pipeline_through_stdin():
    gen = subprocess.run([sys.executable, "-m", "superflow.cli", "generate", "web", "--sites", "5", "--seed", "3"],
                         capture_output=True, check=True)
    run = subprocess.run([sys.executable, "-m", "superflow.cli", "decompose", "-", "--builtin", "web",
                          "--mode", "per-destination", "--report", "-", "--report-format", "kv"],
                         input=gen.stdout, capture_output=True)
    assert run.returncode == 0, run.stderr
    out = run.stdout.decode()
    assert "original_bytes=160\n" in out and "superflow_bytes=96\n" in out
