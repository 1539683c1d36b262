import csv
import json
import math

import numpy as np
import pytest

from qsampling import boson as bs
from qsampling import iqp
from qsampling.cli import run
from qsampling.matrices import matrix_to_dict


@pytest.fixture
def cli(tmp_path, capsys):
    """Run a command, writing to ``tmp_path/<out>``; returns (code, text, stderr)."""

    def call(*argv, out=None):
        args = list(argv)
        if out:
            args += ["--out", str(tmp_path / out)]
        code = run([str(a) for a in args])
        captured = capsys.readouterr()
        text = (tmp_path / out).read_text() if out and code == 0 else captured.out
        return code, text, captured.err

    call.path = tmp_path
    return call


def csv_rows(text):
    return list(csv.DictReader(line for line in text.splitlines() if not line.startswith("#")))


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


class TestPerm:
    def test_two_by_two(self, cli):
        m = write_json(cli.path / "a.json", matrix_to_dict(np.array([[1, 2], [3, 4]])))
        code, text, _ = cli("perm", "compute", "--matrix", m)
        doc = json.loads(text)
        assert code == 0 and doc["re"] == 10 and doc["im"] == 0
        assert doc["meta"]["inputs"]["matrix"].startswith("sha256:")

    def test_missing_file(self, cli):
        code, _, err = cli("perm", "compute", "--matrix", cli.path / "nope.json")
        assert code == 1 and json.loads(err)["error"] == "io"

    def test_non_square(self, cli):
        m = write_json(cli.path / "a.json", matrix_to_dict(np.ones((2, 3))))
        code, _, err = cli("perm", "compute", "--matrix", m)
        assert code == 1 and json.loads(err)["error"] == "invalid-dimension"


class TestUsage:
    def test_unknown_subcommand(self, cli):
        with pytest.raises(SystemExit) as exc:
            run(["boson", "frobnicate"])
        assert exc.value.code == 2

    def test_unknown_flag(self, cli):
        with pytest.raises(SystemExit) as exc:
            run(["iqp", "random", "--family", "1", "--n", "3", "--seed", "1", "--bogus"])
        assert exc.value.code == 2


class TestBoson:
    def test_instance_dist_455_rows(self, cli):
        code, _, _ = cli("boson", "instance", "--m", 13, "--n", 3, "--haar-seed", 5, out="inst.json")
        assert code == 0
        code, text, _ = cli("boson", "dist", "--instance", cli.path / "inst.json", out="dist.csv")
        rows = csv_rows(text)
        assert code == 0 and len(rows) == 455
        assert sum(max(int(x) for x in r["event"].split("-")) <= 1 for r in rows) == 286
        assert math.isclose(sum(float(r["probability"]) for r in rows), 1, abs_tol=1e-9)
        assert text.startswith("# tool=qsampling")

    def test_distinguishable_dist(self, cli):
        cli("boson", "instance", "--m", 4, "--n", 2, "--haar-seed", 1, out="inst.json")
        _, text, _ = cli("boson", "dist", "--instance", cli.path / "inst.json", "--distinguishable")
        inst = bs.haar_instance(4, 2, 1)
        ref = bs.distinguishable_distribution(inst).probabilities
        assert "# model=distinguishable" in text
        np.testing.assert_array_equal([float(r["probability"]) for r in csv_rows(text)], ref)

    def test_network_instance(self, cli):
        net = write_json(cli.path / "net.json", matrix_to_dict(np.array([[1, 1], [1, -1]]) / math.sqrt(2)))
        code, text, _ = cli("boson", "instance", "--m", 2, "--n", 2, "--network", net)
        assert code == 0 and json.loads(text)["meta"]["inputs"]["network"].startswith("sha256:")
        code, _, err = cli("boson", "instance", "--m", 3, "--n", 2, "--network", net)
        assert code == 1 and "modes" in json.loads(err)["message"]

    def test_scattershot_instance(self, cli):
        code, text, _ = cli("boson", "instance", "--m", 5, "--n", 2, "--haar-seed", 3, "--scattershot")
        assert code == 0 and sum(json.loads(text)["input"]) == 2

    def test_sample_validate_round_trip(self, cli):
        cli("boson", "instance", "--m", 9, "--n", 3, "--haar-seed", 2, out="inst.json")
        code, text, err = cli("boson", "sample", "--instance", cli.path / "inst.json",
                              "--count", 200, "--seed", 4, out="s.jsonl")
        lines = text.splitlines()
        assert code == 0 and len(lines) == 201
        assert json.loads(lines[0])["header"] is True
        assert json.loads(err)["acceptance_rate"] == 1.0
        for test, verdict in (("uniform", "boson"), ("distinguishable", "indistinguishable")):
            code, text, _ = cli("boson", "validate", "--instance", cli.path / "inst.json",
                                "--samples", cli.path / "s.jsonl", "--test", test)
            doc = json.loads(text)
            assert code == 0 and doc["verdict"] == verdict and doc["samples"] == 200 and doc["seed"] == 4

    def test_lossless_acceptance(self, cli):
        cli("boson", "instance", "--m", 5, "--n", 3, "--haar-seed", 2, out="inst.json")
        code, text, err = cli("boson", "sample", "--instance", cli.path / "inst.json",
                              "--count", 50, "--seed", 1, "--loss", 1.0)
        assert code == 0 and json.loads(err)["acceptance_rate"] == 1.0
        assert json.loads(text.splitlines()[0])["acceptance_rate"] == 1.0

    def test_validate_rejects_foreign_event(self, cli):
        cli("boson", "instance", "--m", 3, "--n", 2, "--haar-seed", 2, out="inst.json")
        (cli.path / "bad.jsonl").write_text("[1, 1, 0]\n[3, 0, 0]\n")
        code, _, err = cli("boson", "validate", "--instance", cli.path / "inst.json",
                           "--samples", cli.path / "bad.jsonl", "--test", "uniform")
        assert code == 1 and "record 1" in json.loads(err)["message"]

    def test_birthday(self, cli):
        code, text, _ = cli("boson", "birthday", "--n", 3, "--modes", "9,25,49", "--count", 5000, "--seed", 1)
        rows = csv_rows(text)
        fr = [float(r["collision_fraction"]) for r in rows]
        assert code == 0 and [int(r["m"]) for r in rows] == [9, 25, 49]
        assert fr[0] > fr[1] > fr[2]

    def test_perturb_sweep(self, cli):
        cli("boson", "instance", "--m", 6, "--n", 2, "--haar-seed", 2, out="inst.json")
        code, text, _ = cli("boson", "perturb-sweep", "--instance", cli.path / "inst.json",
                            "--sigmas", "0,0.001,0.1", "--seed", 3)
        rows = csv_rows(text)
        assert code == 0 and float(rows[0]["tvd"]) == 0
        assert all(float(r["tvd_sum"]) == pytest.approx(2 * float(r["tvd"])) for r in rows)

    def test_bad_loss(self, cli):
        cli("boson", "instance", "--m", 3, "--n", 1, "--haar-seed", 2, out="inst.json")
        code, _, err = cli("boson", "sample", "--instance", cli.path / "inst.json",
                           "--count", 5, "--seed", 1, "--loss", 2)
        assert code == 1 and json.loads(err)["error"] == "invalid-parameter"


class TestIQP:
    def test_random_dist_prob(self, cli):
        code, text, _ = cli("iqp", "random", "--family", 1, "--n", 4, "--seed", 7, out="c.json")
        doc = json.loads(text)
        assert code == 0 and doc["family"] == "family1" and doc["meta"]["seed"] == 7
        assert iqp.IQPCircuit.from_dict(doc).phase == iqp.random_family1(4, 7).phase
        _, text, _ = cli("iqp", "dist", "--circuit", cli.path / "c.json")
        rows = csv_rows(text)
        assert [r["event"] for r in rows][:3] == ["0000", "0001", "0010"]
        _, prob, _ = cli("iqp", "prob", "--circuit", cli.path / "c.json", "--x", "0010")
        assert json.loads(prob)["probability"] == pytest.approx(float(rows[2]["probability"]), abs=1e-12)

    def test_sparse_budget(self, cli):
        _, text, _ = cli("iqp", "random", "--family", "sparse", "--n", 8, "--seed", 1, "--budget", 24)
        assert sum(len(t["qubits"]) == 2 for t in json.loads(text)["terms"]) == 24

    def test_bad_bitstring(self, cli):
        cli("iqp", "random", "--family", 2, "--n", 3, "--seed", 1, out="c.json")
        code, _, err = cli("iqp", "prob", "--circuit", cli.path / "c.json", "--x", "01")
        assert code == 1 and json.loads(err)["error"]

    def test_sample_depolarize(self, cli):
        cli("iqp", "random", "--family", 1, "--n", 3, "--seed", 1, out="c.json")
        code, text, _ = cli("iqp", "sample", "--circuit", cli.path / "c.json", "--count", 10,
                            "--seed", 2, "--depolarize", 0.1)
        lines = text.splitlines()
        assert code == 0 and json.loads(lines[0])["depolarize"] == 0.1
        assert all(len(json.loads(x)) == 3 for x in lines[1:])

    def test_anticonc(self, cli):
        code, text, _ = cli("iqp", "anticonc", "--family", 1, "--n", 8, "--trials", 20, "--alpha", 1, "--seed", 0)
        doc = json.loads(text)
        assert code == 0 and abs(doc["fraction"] - math.exp(-1)) < 0.1 and doc["ks"] < 0.1

    def test_anticonc_guards(self, cli):
        code, _, _ = cli("iqp", "anticonc", "--family", 1, "--n", 4, "--trials", 0, "--alpha", 1, "--seed", 0)
        assert code == 1
        code, _, err = cli("iqp", "anticonc", "--family", 1, "--n", 17, "--trials", 1, "--alpha", 1, "--seed", 0)
        assert code == 1 and json.loads(err)["type"] == "SizeError"

    def test_gadget_check(self, cli):
        code, text, _ = cli("iqp", "gadget-check", "--n", 4, "--seed", 1)
        doc = json.loads(text)
        assert code == 0 and doc["fidelity"] >= 1 - 1e-10 and doc["gadgets"] == 3


class TestDeterminism:
    COMMANDS = [
        ("iqp", "random", "--family", "2", "--n", "5", "--seed", "3"),
        ("iqp", "anticonc", "--family", "sparse", "--n", "6", "--trials", "5", "--alpha", "1", "--seed", "2"),
        ("boson", "birthday", "--n", "2", "--modes", "4,9", "--count", "100", "--seed", "8"),
    ]

    @pytest.mark.parametrize("argv", COMMANDS)
    def test_byte_identical(self, cli, argv):
        _, first, _ = cli(*argv, out="a")
        _, second, _ = cli(*argv, out="b")
        assert first == second and first

    def test_sample_files_identical(self, cli):
        cli("boson", "instance", "--m", 5, "--n", 2, "--haar-seed", 2, out="inst.json")
        args = ("boson", "sample", "--instance", cli.path / "inst.json", "--count", 30, "--seed", 5, "--loss", 0.7)
        _, a, _ = cli(*args, out="a.jsonl")
        _, b, _ = cli(*args, out="b.jsonl")
        assert a == b

    def test_threads_flag_does_not_change_output(self, cli, monkeypatch):
        monkeypatch.setenv("QSAMPLING_THREADS", "1")
        cli("boson", "instance", "--m", 12, "--n", 3, "--haar-seed", 2, out="inst.json")
        _, a, _ = cli("boson", "dist", "--instance", cli.path / "inst.json")
        _, b, _ = cli("--threads", 3, "boson", "dist", "--instance", cli.path / "inst.json")
        assert a == b

    def test_no_stray_temp_files(self, cli):
        cli("iqp", "random", "--family", "1", "--n", 3, "--seed", 1, out="c.json")
        assert sorted(p.name for p in cli.path.iterdir()) == ["c.json"]
