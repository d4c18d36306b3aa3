import csv
import json
import math

import pytest

from sqrng.attacks import honest_attack, honest_collective_attack, sample_random_attack
from sqrng.cli import main
from sqrng.extract import read_bits_file
from sqrng.protocol import Transcript
from sqrng.rate import entropy_bound


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def transcripts(tmp_path, capsys):
    paths = {}
    for name, q in (("clean", 0.0), ("noisy", 0.5)):
        p = tmp_path / f"{name}.json"
        code, _ = run(["simulate", "--rounds", 4000, "--tests", 400, "--q", q, "--seed", 1, "--out", p], capsys)
        assert code == 0
        paths[name] = p
    return paths


class TestSimulate:
    def test_summary_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "t.json"
        code, cap = run(["simulate", "--rounds", 1000, "--tests", 100, "--q", 0.05, "--seed", 3, "--out", out], capsys)
        assert code == 0 and "P[+|acc]" in cap.out and "raw bits = 900" in cap.out
        man = json.loads((tmp_path / "t.json.manifest.json").read_text())
        assert man["command"] == "simulate" and man["seed"] == 3 and str(out) in man["outputs"]

    def test_invalid(self, capsys):
        code, cap = run(["simulate", "--rounds", 10, "--tests", 11], capsys)
        assert code == 2 and "error" in cap.err

    def test_workers(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(["simulate", "--rounds", 200000, "--tests", 10, "--seed", 2, "--out", a], capsys)
        run(["simulate", "--rounds", 200000, "--tests", 10, "--seed", 2, "--workers", 3, "--out", b], capsys)
        assert a.read_bytes() == b.read_bytes()


class TestRate:
    def test_depolarization(self, capsys):
        code, cap = run(["rate", "--q", 0.1], capsys)
        assert code == 0 and "bound = 0.531004" in cap.out

    def test_independent(self, capsys):
        code, cap = run(["rate", "--q", 0.1, "--mode", "independent"], capsys)
        assert "bound = 0.319923" in cap.out

    def test_full_noise_aborts(self, capsys):
        code, cap = run(["rate", "--q", 0.5], capsys)
        assert code == 1 and "abort = true" in cap.out

    def test_stats_file(self, tmp_path, capsys):
        stats = {"p_ac": {"0,+": 0.25, "0,-": 0.25, "1,+": 0.25, "1,-": 0.25}, "p_plus_acc": 1.0, "p_minus_acc": 0.0}
        out = tmp_path / "r.json"
        code, _ = run(["rate", "--stats", dump(tmp_path / "s.json", stats), "--out", out], capsys)
        assert code == 0 and json.loads(out.read_text())["bound"] == pytest.approx(1.0)

    def test_inconsistent_stats(self, tmp_path, capsys):
        stats = {"p_ac": {"0,+": 0.5, "0,-": 0.5, "1,+": 0.0, "1,-": 0.0}, "p_plus_acc": 0.0, "p_minus_acc": 1.0}
        code, _ = run(["rate", "--stats", dump(tmp_path / "s.json", stats)], capsys)
        assert code == 2

    def test_malformed_stats(self, tmp_path, capsys):
        (tmp_path / "s.json").write_text("{not json")
        assert run(["rate", "--stats", tmp_path / "s.json"], capsys)[0] == 2
        assert run(["rate", "--stats", dump(tmp_path / "k.json", {"p_ac": {}})], capsys)[0] == 2

    def test_attack_file(self, tmp_path, capsys):
        path = dump(tmp_path / "a.json", honest_collective_attack().to_dict())
        code, cap = run(["rate", "--attack-file", path], capsys)
        assert code == 0 and "exact S(A|CE) = 1.000000" in cap.out

    def test_no_source(self, capsys):
        assert run(["rate"], capsys)[0] == 2


class TestCurve:
    def test_both_modes(self, tmp_path, capsys):
        code, _ = run(["curve", "--steps", 101, "--out", tmp_path / "c.csv"], capsys)
        assert code == 0
        dep = list(csv.DictReader(open(tmp_path / "c_dependent.csv")))
        ind = list(csv.DictReader(open(tmp_path / "c_independent.csv")))
        assert len(dep) == len(ind) == 101
        assert float(dep[0]["rate"]) == 1.0 and float(dep[-1]["rate"]) == 0.0
        assert all(float(d["rate"]) >= float(i["rate"]) for d, i in zip(dep, ind))

    def test_single_mode(self, tmp_path, capsys):
        code, _ = run(["curve", "--mode", "dependent", "--steps", 3, "--out", tmp_path / "c.csv"], capsys)
        rows = (tmp_path / "c.csv").read_text().splitlines()
        assert code == 0 and rows[0] == "Q,Q_FR,rate" and len(rows) == 4

    @pytest.mark.parametrize("extra", [["--steps", 1], ["--q-max", 0.7]])
    def test_bad_grid(self, tmp_path, capsys, extra):
        assert run(["curve", "--out", tmp_path / "c.csv", *extra], capsys)[0] == 2


class TestVerifyReduction:
    def test_defaults(self, capsys):
        code, cap = run(["verify-reduction"], capsys)
        assert code == 0 and "checked 100" in cap.out and "failures = 0" in cap.out

    def test_honest_file(self, tmp_path, capsys):
        path = dump(tmp_path / "h.json", honest_attack(2).to_dict())
        code, cap = run(["verify-reduction", "--attack-file", path, "--theta", "01"], capsys)
        assert code == 0 and "accept=0.500000000000" in cap.out

    def test_every_schedule(self, tmp_path, capsys, rng):
        path = dump(tmp_path / "a.json", {"attacks": [sample_random_attack(2, 2, rng).to_dict()]})
        code, cap = run(["verify-reduction", "--attack-file", path], capsys)
        assert code == 0 and "checked 4" in cap.out

    def test_corrupted_file(self, tmp_path, capsys, rng):
        d = sample_random_attack(2, 2, rng).to_dict()
        d["F"] = {k: [[2 * x, 2 * y] for x, y in v] for k, v in d["F"].items()}
        assert run(["verify-reduction", "--attack-file", dump(tmp_path / "bad.json", d)], capsys)[0] == 2

    def test_theta_length(self, tmp_path, capsys):
        path = dump(tmp_path / "h.json", honest_attack(2).to_dict())
        assert run(["verify-reduction", "--attack-file", path, "--theta", "011"], capsys)[0] == 2

    def test_verification_failure_code(self, tmp_path, capsys, monkeypatch):
        import sqrng.cli as cli
        from sqrng.attacks import ReductionReport

        monkeypatch.setattr(cli, "verify_reduction", lambda a, t, tol: ReductionReport(0.3, 0.5, 0.9, False, tol))
        assert run(["verify-reduction", "--attacks", 2], capsys)[0] == 3


class TestExtract:
    def test_noiseless(self, tmp_path, transcripts, capsys):
        out = tmp_path / "o.txt"
        code, cap = run(["extract", "--transcript", transcripts["clean"], "--margin", 0.05, "--out", out], capsys)
        assert code == 0
        tr = Transcript.from_dict(json.loads(transcripts["clean"].read_text()))
        bound = entropy_bound(tr.stats).bound
        assert read_bits_file(out).size == math.floor(tr.raw.size * (bound - 0.05)) > 0

    def test_full_noise(self, tmp_path, transcripts, capsys):
        code, cap = run(["extract", "--transcript", transcripts["noisy"], "--out", tmp_path / "o.txt"], capsys)
        assert code == 1 and "noise-too-high" in cap.out and not (tmp_path / "o.txt").exists()

    def test_repeatable(self, tmp_path, transcripts, capsys):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        run(["extract", "--transcript", transcripts["clean"], "--seed", 5, "--out", a], capsys)
        run(["extract", "--transcript", transcripts["clean"], "--seed", 5, "--out", b], capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_seed_file(self, tmp_path, transcripts, capsys):
        seed = tmp_path / "seed.txt"
        seed.write_text("ell=8000\n" + "a5" * 1000 + "\n")
        code, _ = run(["extract", "--transcript", transcripts["clean"], "--hash-seed", seed, "--out", tmp_path / "o.txt"], capsys)
        assert code == 0
        seed.write_text("ell=8\nf\n")
        assert run(["extract", "--transcript", transcripts["clean"], "--hash-seed", seed, "--out", tmp_path / "o.txt"], capsys)[0] == 2

    def test_malformed(self, tmp_path, capsys):
        path = dump(tmp_path / "t.json", {"config": {}})
        assert run(["extract", "--transcript", path, "--out", tmp_path / "o.txt"], capsys)[0] == 2
        assert run(["extract", "--transcript", tmp_path / "missing.json", "--out", tmp_path / "o.txt"], capsys)[0] == 2


class TestReplay:
    @pytest.mark.parametrize(
        "argv",
        [
            ["simulate", "--rounds", 3000, "--tests", 300, "--q", 0.05, "--seed", 4],
            ["rate", "--q", 0.2],
            ["verify-reduction", "--attacks", 10, "--seed", 2],
            ["curve", "--mode", "independent", "--steps", 11],
        ],
    )
    def test_reproduces(self, tmp_path, capsys, argv):
        out = tmp_path / "out.dat"
        code, _ = run([*argv, "--out", out], capsys)
        first = out.read_bytes()
        out.unlink()
        code2, cap = run(["replay", f"{out}.manifest.json", "--check"], capsys)
        assert code2 == code and out.read_bytes() == first and "reproduced" in cap.out

    def test_detects_tampering(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        run(["rate", "--q", 0.1, "--out", out], capsys)
        man = tmp_path / "r.json.manifest.json"
        data = json.loads(man.read_text())
        data["outputs"][str(out)] = "0" * 64
        man.write_text(json.dumps(data))
        assert run(["replay", man, "--check"], capsys)[0] == 3

    def test_bad_manifest(self, tmp_path, capsys):
        assert run(["replay", dump(tmp_path / "m.json", {"params": {}})], capsys)[0] == 2


def test_missing_subcommand(capsys):
    with pytest.raises(SystemExit):
        main([])
