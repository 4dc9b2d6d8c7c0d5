import csv
import json

import pytest

from conftest import FIXTURE_TRACE
from tagtrace.cli import run


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def comments(text):
    return {line.split(" ", 2)[1]: json.loads(line.split(" ", 2)[2])
            for line in text.splitlines() if line.startswith("# ")}


def table(text):
    return list(csv.reader(line for line in text.splitlines() if not line.startswith("#")))


@pytest.fixture
def small_trace(tmp_path):
    p = tmp_path / "small.tsv"
    p.write_text(
        "# user item tag ts\n"
        "u1\ti1\tt1\t100\n"
        "u1\ti2\tt2\t200\n"
        "u2\ti1\tt1\t300\n"
        "u3\ti3\tno-tag\t400\n"
    )
    return p


class TestErrors:
    def test_missing_file(self, capsys):
        code, out, err = call(capsys, "stats", "missing.tsv")
        assert code == 1 and out == ""
        assert err.strip() == "error: cannot open missing.tsv"
        assert len(err.strip().splitlines()) == 1

    @pytest.mark.parametrize("argv", [
        ["nosuch"],
        [],
        ["sweep", "x.tsv", "--kind", "users"],
        ["graph", "x.tsv", "--threshold", "1.2"],
        ["urn", "--init", "1,0"],
        ["generate", "--hoerl", "1,2"],
        ["--threads", "0", "urn"],
    ])
    def test_bad_arguments(self, capsys, argv):
        code, _, err = call(capsys, *argv)
        assert code == 1 and err.startswith("error:")

    def test_malformed_trace(self, capsys, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("u1\ti1\tt1\t100\nu1\ti1\n")
        code, _, err = call(capsys, "stats", p)
        assert code == 1 and "line 2" in err
        code, out, err = call(capsys, "stats", p, "--lenient")
        assert code == 0 and "warning" in err

    def test_empty_trace_is_input_error(self, capsys, tmp_path):
        p = tmp_path / "empty.tsv"
        p.write_text("")
        assert call(capsys, "entropy", p)[0] == 1


class TestSubcommands:
    def test_stats(self, capsys, small_trace):
        code, out, _ = call(capsys, "stats", small_trace, "--metric", "library", "--correlate", "assignments,vocabulary")
        assert code == 0
        meta = comments(out)
        assert meta["meta"]["subcommand"] == "stats" and meta["summary"]["num_users"] == 3
        assert meta["correlation"]["n"] == 3
        assert table(out) == [["rank", "value"], ["1", "2"], ["2", "1"], ["3", "1"]]

    def test_stats_fit(self, capsys, tmp_path):
        fit_path = tmp_path / "fit.json"
        code, out, _ = call(capsys, "stats", FIXTURE_TRACE, "--fit-hoerl", "--fit-output", fit_path)
        assert code == 0
        fit = json.loads(fit_path.read_text())["fit"]
        assert fit == comments(out)["fit"] and fit["n_points"] == 200

    def test_sweep_default_ladder(self, capsys):
        code, out, _ = call(capsys, "sweep", FIXTURE_TRACE)
        rows = table(out)
        assert code == 0 and rows[0][0] == "threshold"
        assert [r[0] for r in rows[1:]] == [str(k / 100) for k in range(1, 100)]

    def test_graph(self, capsys, small_trace):
        code, out, _ = call(capsys, "graph", small_trace, "--threshold", "0.4")
        assert code == 0
        assert [line for line in out.splitlines() if not line.startswith("#")] == ["u1\tu2\t0.5"]

    def test_clean_with_report(self, capsys, tmp_path, small_trace):
        rep_path = tmp_path / "report.json"
        code, out, _ = call(capsys, "clean", small_trace, "--report", rep_path)
        assert code == 0
        report = json.loads(rep_path.read_text())["report"]
        assert report["users_removed_reserved"] == 1 and report["assignments_removed"] == 1
        body = [line for line in out.splitlines() if not line.startswith("#")]
        assert body == ["u1\ti1\tt1\t100", "u1\ti2\tt2\t200", "u2\ti1\tt1\t300"]

    def test_entropy(self, capsys, small_trace):
        code, out, _ = call(capsys, "entropy", small_trace, "--interval", 100)
        assert code == 0
        assert comments(out)["total"]["num_items"] == 3
        assert [r[0] for r in table(out)[1:]] == ["200", "300", "400"]

    def test_neigh_entropy_all_modes(self, capsys):
        code, out, _ = call(capsys, "neigh-entropy", FIXTURE_TRACE, "--threshold", "0.05,0.1", "--trials", 2, "--seed", 3)
        assert code == 0
        rows = table(out)[1:]
        assert len(rows) == 8 and {r[1] for r in rows} == {"interest_graph", "largest_component_total",
                                                           "random_component", "random_graph"}

    def test_predict_json(self, capsys, tmp_path):
        out_path = tmp_path / "p.json"
        code, _, _ = call(capsys, "predict", FIXTURE_TRACE, "--granularity", 86400, "-o", out_path)
        doc = json.loads(out_path.read_text())
        assert code == 0 and doc["meta"]["config"]["granularity"] == 86400
        assert 0 <= doc["report"]["hit_ratio"] <= 1
        assert doc["report"]["threshold"] == "0.01"

    def test_predict_directed(self, capsys):
        code, out, _ = call(capsys, "predict", FIXTURE_TRACE, "--directed", "--granularity", 86400)
        assert code == 0 and json.loads(out)["report"]["kind"] == "directed_user_item"
        assert call(capsys, "predict", FIXTURE_TRACE, "--directed", "--kind", "user_tag")[0] == 1

    def test_generate_matches_fixture(self, capsys):
        code, out, _ = call(capsys, "generate", "--users", 200, "--copy-prob", 0.5, "--seed", 42)
        assert code == 0
        body = [line for line in out.splitlines() if not line.startswith("#")]
        frozen = [line for line in FIXTURE_TRACE.read_text().splitlines() if not line.startswith("#")]
        assert body == frozen

    def test_urn_records_chosen_seed(self, capsys):
        code, out, _ = call(capsys, "urn", "--steps", 50, "--window", 10, "--tol", 1)
        meta = comments(out)
        assert code == 0 and isinstance(meta["meta"]["config"]["seed"], int)
        assert sum(meta["final_counts"]) == 52 and meta["converged"] is not None
        seed = meta["meta"]["config"]["seed"]
        again = call(capsys, "urn", "--steps", 50, "--window", 10, "--tol", 1, "--seed", seed)[1]
        assert table(again) == table(out)

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["--version"])
        assert exc.value.code == 0
