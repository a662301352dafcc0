import csv
import json
import subprocess
import sys

import pytest

from rpvab.cli import main
from rpvab.config import dump_study, load_study, study_from_preset


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_state(path, variants, **engine):
    lines = ["[engine]"] + [f"{k} = {v}" for k, v in engine.items()]
    for name, fields in variants.items():
        lines.append(f"[variant {name}]")
        lines += [f"{k} = {v}" for k, v in fields.items()]
    path.write_text("\n".join(lines) + "\n")
    return path


def variant(visitors, conversions, mean, sd):
    # aggregates of `conversions` transactions with the given mean and population sd
    return {
        "visitors": visitors,
        "conversions": conversions,
        "value_count": conversions,
        "value_sum": conversions * mean,
        "value_sum_sq": conversions * (sd**2 + mean**2),
    }


class TestRunStudy:
    def test_preset_writes_records_and_aggregate(self, tmp_path, capsys):
        code, out, _ = run(capsys, "--seed", 42, "run-study", "--preset", "revenue-trap",
                           "--n-runs", 10, "--samples", 2000, "--output", tmp_path)
        assert code == 0
        with open(tmp_path / "revenue-trap" / "records.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 20
        assert {r["method"] for r in rows} == {"bayesian", "peeking"}
        assert out.count("Scenario revenue-trap") == 1
        agg = (tmp_path / "revenue-trap" / "aggregate.csv").read_text().splitlines()
        assert agg[0].split(",")[0] == "metric"
        meta = json.loads((tmp_path / "metadata.json").read_text())
        assert meta["base_seed"] == 42 and meta["jobs"] == 1
        assert meta["config_echo"] == (tmp_path / "config_echo.ini").read_text()

    def test_missing_config_names_path(self, tmp_path, capsys):
        missing = tmp_path / "nope.ini"
        code, _, err = run(capsys, "run-study", "--config", missing, "--output", tmp_path)
        assert code != 0
        assert str(missing) in err

    def test_byte_identical_across_repeats_and_jobs(self, tmp_path, capsys):
        common = ["run-study", "--preset", "clear-winner", "--n-runs", 6, "--samples", 1000,
                  "--max-days", 25, "--seed", 11]
        outputs = []
        for tag, jobs in (("a", 1), ("b", 1), ("c", 2)):
            assert run(capsys, *common, "--jobs", jobs, "--output", tmp_path / tag)[0] == 0
            outputs.append((tmp_path / tag / "clear-winner" / "records.csv").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_seed_changes_records(self, tmp_path, capsys):
        common = ["run-study", "--preset", "futility", "--n-runs", 3, "--samples", 500, "--max-days", 10]
        run(capsys, *common, "--seed", 1, "--output", tmp_path / "s1")
        run(capsys, *common, "--seed", 2, "--output", tmp_path / "s2")
        a = (tmp_path / "s1" / "futility" / "records.csv").read_text()
        b = (tmp_path / "s2" / "futility" / "records.csv").read_text()
        assert a != b

    def test_config_echo_round_trip(self, tmp_path, capsys):
        cfg = tmp_path / "study.ini"
        cfg.write_text(
            "[engine]\nseed = 9\nn_runs = 2\nsamples = 500\nepsilon = 0.02\n"
            "[scenario trap]\npreset = revenue-trap\nmax_days = 8\nB.true_aov = 91.5\n"
            "B.conv_prior_beta = 30\n"
            "[scenario winner]\npreset = clear-winner\nmax_days = 6\n"
        )
        assert run(capsys, "run-study", "--config", cfg, "--output", tmp_path / "out")[0] == 0
        echo = tmp_path / "out" / "config_echo.ini"
        first, again = load_study(cfg), load_study(echo)
        assert again == first
        assert dump_study(again) == echo.read_text()
        assert first.scenarios[0].variants[1].true_aov == 91.5
        assert first.scenario_priors["trap"][1][0].beta == 30

    def test_preset_echo_round_trip(self, tmp_path):
        study = study_from_preset("clear-winner", {"n_runs": 4, "seed": 5})
        path = tmp_path / "echo.ini"
        path.write_text(dump_study(study))
        assert load_study(path) == study

    @pytest.mark.parametrize("body, needle", [
        ("[engine]\nepsilon = abc\n[scenario s]\npreset = futility\n", "epsilon"),
        ("[engine]\n[scenario s]\nvariants = A, B\nA.true_conv_rate = 0.03\n", "A.true_aov"),
        ("[engine]\n[scenario s]\npreset = futility\ncontrol = Z\n", "control"),
        ("[engine]\nbogus = 1\n[scenario s]\npreset = futility\n", "bogus"),
        ("[engine]\n", "no [scenario"),
    ])
    def test_bad_config_reports_key(self, tmp_path, capsys, body, needle):
        cfg = tmp_path / "bad.ini"
        cfg.write_text(body)
        code, _, err = run(capsys, "run-study", "--config", cfg, "--output", tmp_path)
        assert code == 2 and needle in err


class TestEvaluate:
    def test_identical_data_is_balanced(self, tmp_path, capsys):
        v = variant(20_000, 600, 100.0, 40.0)
        path = write_state(tmp_path / "s.ini", {"A": v, "B": v, "C": v}, samples=20000)
        code, out, _ = run(capsys, "evaluate", path)
        assert code == 0
        verdict = out.strip().splitlines()[-1]
        assert verdict in ("verdict: Continue", "verdict: StopFutility")
        pbbs = [float(line.split()[-2]) for line in out.splitlines()[2:5]]
        assert pbbs == pytest.approx([1 / 3] * 3, abs=0.02)

    def test_dominant_control_stops_for_futility(self, tmp_path, capsys):
        path = write_state(tmp_path / "s.ini", {
            "A": variant(1_000_000, 60_000, 100.0, 40.0),
            "B": variant(1_000_000, 30_000, 100.0, 40.0),
        })
        code, out, _ = run(capsys, "evaluate", path)
        assert code == 0 and out.strip().endswith("verdict: StopFutility")

    def test_dominant_challenger_named(self, tmp_path, capsys):
        path = write_state(tmp_path / "s.ini", {
            "ctl": variant(1_000_000, 30_000, 100.0, 40.0),
            "new": variant(1_000_000, 60_000, 100.0, 40.0),
        })
        _, out, _ = run(capsys, "evaluate", path)
        assert out.strip().endswith("verdict: StopWinner(new)")

    def test_conversions_exceed_visitors(self, tmp_path, capsys):
        path = write_state(tmp_path / "s.ini", {
            "A": variant(1000, 30, 100.0, 40.0),
            "B": variant(1000, 1200, 100.0, 40.0),
        })
        code, _, err = run(capsys, "evaluate", path)
        assert code == 2 and "[variant B]" in err and "exceed" in err

    def test_seed_reproducible_and_writes_output(self, tmp_path, capsys):
        path = write_state(tmp_path / "s.ini", {
            "A": variant(5000, 150, 100.0, 40.0),
            "B": variant(5000, 160, 90.0, 35.0),
        }, samples=3000)
        _, a, _ = run(capsys, "evaluate", path, "--seed", 3, "--output", tmp_path / "o")
        _, b, _ = run(capsys, "--seed", 3, "evaluate", path)
        assert a == b == (tmp_path / "o" / "evaluation.txt").read_text()


class TestPpc:
    @pytest.fixture
    def files(self, tmp_path):
        values = [80.0, 120.0, 95.5, 101.0, 60.0]
        n, s, ss = len(values), sum(values), sum(v * v for v in values)
        state = write_state(tmp_path / "s.ini", {"A": {
            "visitors": 200, "conversions": n, "value_count": n, "value_sum": s, "value_sum_sq": ss,
        }})
        tx = tmp_path / "tx.txt"
        tx.write_text("# order values\n" + "\n".join(map(str, values)) + "\n")
        return state, tx

    def test_single_replicate(self, files, capsys):
        code, out, _ = run(capsys, "ppc", *files, "--replicates", 1, "--statistic", "max")
        assert code == 0
        p = float(out.strip().splitlines()[-1].split(":")[1])
        assert p in (0.0, 1.0)

    def test_unknown_statistic_lists_names(self, files, capsys):
        code, _, err = run(capsys, "ppc", *files, "--statistic", "median")
        assert code == 2
        assert "mean, variance, max, zero_fraction" in err

    def test_malformed_transactions_line_number(self, files, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("80.0\n120.0\n9x5\n")
        code, _, err = run(capsys, "ppc", files[0], bad)
        assert code == 2 and f"{bad}:3" in err

    def test_inconsistent_transactions(self, files, tmp_path, capsys):
        other = tmp_path / "other.txt"
        other.write_text("1\n2\n")
        code, _, err = run(capsys, "ppc", files[0], other)
        assert code == 2 and "transactions" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rpvab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert all(cmd in res.stdout for cmd in ("run-study", "evaluate", "ppc"))
