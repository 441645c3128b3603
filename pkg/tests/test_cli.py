import json
import subprocess
import sys

import pytest

from latmet import cli


def run_cli(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "latmet.cli", *args],
        capture_output=True, text=True, cwd=cwd,
    )


class TestConfig:
    def test_dotted_parsing(self):
        cfg = cli.parse_dotted_config(
            """
            lattice.width = 4   # comment
            model.U = 1
            model.delta1 = 9/10
            run.betaGrid = [1, 2.5]
            analysis.srw.Mlist = [16]
            output.directory = "somewhere"
            """
        )
        assert cfg["lattice"]["width"] == 4
        assert cfg["model"]["delta1"] == "9/10"
        assert cfg["run"]["betaGrid"] == [1, 2.5]
        assert cfg["analysis"]["srw"]["Mlist"] == [16]
        assert cfg["output"]["directory"] == "somewhere"

    def test_bad_line_raises(self):
        with pytest.raises(ValueError):
            cli.parse_dotted_config("no equals sign here")

    def test_beta_grid_must_increase(self, tmp_path):
        rc = cli.main(["landscape", "--preset", "preset-4x3",
                       "--beta", "4,2", "--out", str(tmp_path)])
        assert rc == cli.EXIT_USAGE

    def test_unknown_preset(self, tmp_path):
        rc = cli.main(["landscape", "--preset", "nope", "--out", str(tmp_path)])
        assert rc == cli.EXIT_USAGE

    def test_hash_ignores_output_location(self):
        a = json.loads(json.dumps(cli.DEFAULT_CONFIG))
        b = json.loads(json.dumps(cli.DEFAULT_CONFIG))
        b["output"]["directory"] = "elsewhere"
        assert cli.config_hash(a) == cli.config_hash(b)


class TestRefusal:
    def test_enumeration_refusal(self, tmp_path):
        cfgfile = tmp_path / "big.cfg"
        cfgfile.write_text("lattice.width = 7\nlattice.height = 3\n")
        rc = cli.main(["landscape", "--config", str(cfgfile), "--out", str(tmp_path)])
        assert rc == cli.EXIT_USAGE


class TestPipeline:
    @pytest.fixture(scope="class")
    def outdir(self, tmp_path_factory):
        out = tmp_path_factory.mktemp("cli")
        cfg = out / "run.cfg"
        cfg.write_text("run.runCount = 60\n")
        base = ["--preset", "preset-4x3", "--config", str(cfg),
                "--beta", "2,3", "--out", str(out)]
        assert cli.main(["landscape", *base]) == 0
        assert cli.main(["capacity", *base]) == 0
        return out, base

    def test_landscape_schema(self, outdir):
        out, _ = outdir
        payload = json.loads((out / "landscape.json").read_text())
        for key in ("gammaStar", "vStar", "nStar", "wells", "gate", "hypotheses", "configHash"):
            assert key in payload
        assert payload["gammaStar"] == {"exact": "12/5", "value": 2.4}
        assert payload["gate"]["entranceSet"]

    def test_capacity_schema(self, outdir):
        out, _ = outdir
        payload = json.loads((out / "capacity.json").read_text())
        assert payload["theta"] > 0 and payload["kValue"] == pytest.approx(1 / payload["theta"])
        assert payload["apriori"]["allOk"]
        assert (out / "hstar.csv").read_text().startswith("code,hstar")

    def test_simulate_and_report(self, outdir):
        out, base = outdir
        assert cli.main(["simulate", *base]) == 0
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "seed,hittingTime,gateEntranceCode,excursionCount"
        assert len(trace) == 61
        assert cli.main(["srw", *base]) == 0
        assert cli.main(["report", *base]) == 0
        rep = json.loads((out / "report.json").read_text())
        assert rep["missingSections"] == []
        assert rep["landscape"]["configHash"] == rep["configHash"]

    def test_verify_exit_code_reflects_verdict(self, tmp_path):
        # hypotheses fail on the 4x3 preset -> exit 1, but verify.json exists
        rc = cli.main(["verify", "--preset", "preset-4x3", "--beta", "2,3",
                       "--out", str(tmp_path)])
        assert rc == cli.EXIT_CHECK_FAILED
        payload = json.loads((tmp_path / "verify.json").read_text())
        assert payload["hypotheses"]["h2"]["passed"] is True
        assert payload["hypotheses"]["allPass"] is False

    def test_mixed_hash_refused(self, outdir):
        out, _ = outdir
        rc = cli.main(["report", "--preset", "preset-4x3", "--beta", "2,4",
                       "--out", str(out)])
        assert rc == cli.EXIT_USAGE


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        r = run_cli(["verify", "--help"], cwd=tmp_path)
        assert r.returncode == 0
        assert "verify" in r.stdout
