import json

import numpy as np
import pytest
from click.testing import CliRunner

from mmimo.channel import gen_iid_channel, save_measured_channels
from mmimo.cli import main
from mmimo.config import parse_config
from mmimo.errors import ConfigError
from mmimo.experiments import emit_tables, run
from mmimo.numerics import Seed


def write_config(path, body):
    path.write_text(body)
    return str(path)


class TestParseConfig:
    def test_minimal_svd_spread_defaults(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = svd-spread\n")
        config = parse_config(path)
        assert config.params["m_list"] == [4, 32, 128]
        assert config.params["k"] == 4
        assert config.seed == 0
        assert config.trials == 2000

    def test_paper_scale_trials(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = svd-spread\n")
        config = parse_config(path, paper_scale=True)
        assert config.trials == 10_000

    def test_unknown_experiment(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = warp-drive\n")
        with pytest.raises(ConfigError, match="warp-drive"):
            parse_config(path)

    def test_duplicate_key_named(self, tmp_path):
        body = "[experiment]\nexperiment = svd-spread\n\n[svd-spread]\nk = 4\nk = 5\n"
        path = write_config(tmp_path / "c.ini", body)
        with pytest.raises(ConfigError, match="duplicate key 'svd-spread.k'"):
            parse_config(path)

    def test_unknown_key_path(self, tmp_path):
        body = "[experiment]\nexperiment = svd-spread\n\n[svd-spread]\nm_lists = 4\n"
        path = write_config(tmp_path / "c.ini", body)
        with pytest.raises(ConfigError, match="svd-spread.m_lists"):
            parse_config(path)

    def test_type_mismatch_names_key(self, tmp_path):
        body = "[experiment]\nexperiment = svd-spread\n\n[svd-spread]\nk = four\n"
        path = write_config(tmp_path / "c.ini", body)
        with pytest.raises(ConfigError, match="svd-spread.k"):
            parse_config(path)

    def test_wrong_section_rejected(self, tmp_path):
        body = "[experiment]\nexperiment = svd-spread\n\n[rural-broadband]\nm = 64\n"
        path = write_config(tmp_path / "c.ini", body)
        with pytest.raises(ConfigError, match="rural-broadband"):
            parse_config(path)

    def test_channels_only_for_supported(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = focusing-map\n")
        with pytest.raises(ConfigError, match="measured channels"):
            parse_config(path, channels_path="whatever.cfcsv")

    def test_overrides_apply(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = svd-spread\nseed = 3\ntrials = 10\n",
        )
        config = parse_config(path, seed=11, trials=99, output_dir="elsewhere")
        assert (config.seed, config.trials, config.output_dir) == (11, 99, "elsewhere")


class TestRunAndEmit:
    def test_svd_spread_header_contract(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = svd-spread\ntrials = 5\n\n[svd-spread]\nm_list = 4\n",
        )
        result = run(parse_config(path, output_dir=str(tmp_path / "out")))
        files = emit_tables(result, str(tmp_path / "out"))
        spread = next(f for f in files if f.endswith("spread.csv"))
        first = open(spread).readline().strip()
        assert first == "M,K,trial,spread_db"

    def test_focusing_map_header_contract(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = focusing-map\ntrials = 2\n\n"
            "[focusing-map]\nm = 4\nn_scatterers = 25\ngrid_points = 5\nscheme = mrt\n",
        )
        result = run(parse_config(path, output_dir=str(tmp_path / "out")))
        files = emit_tables(result, str(tmp_path / "out"))
        table = next(f for f in files if "focusing_map_mrt" in f)
        assert open(table).readline().strip() == "x_lambda,y_lambda,avg_power_db"

    def test_summary_provenance(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = svd-spread\ntrials = 5\nseed = 9\n\n[svd-spread]\nm_list = 4\n",
        )
        result = run(parse_config(path, output_dir=str(tmp_path / "out")))
        emit_tables(result, str(tmp_path / "out"))
        payload = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert payload["seed"] == 9
        assert "config_hash" in payload
        assert payload["resolved_config"]["params"]["k"] == 4

    def test_config_closure(self, tmp_path):
        # Every schema default appears in the emitted resolved config.
        from mmimo.config import SCHEMAS

        for name, schema in SCHEMAS.items():
            path = write_config(tmp_path / f"{name}.ini", f"[experiment]\nexperiment = {name}\n")
            config = parse_config(path)
            assert set(config.resolved()["params"]) == set(schema)

    def test_mrt_sumrate_ceiling_in_summary(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = mrt-sumrate\ntrials = 5\n\n[mrt-sumrate]\nm_list = 4,8\n",
        )
        result = run(parse_config(path))
        assert result.summary["interference_free_ceiling_bps_hz"] == pytest.approx(
            4 * np.log2(11.0)
        )

    def test_measured_channels_flow(self, tmp_path):
        stack = np.stack([gen_iid_channel(Seed(1).child(f), 8, 3) for f in range(5)])
        channels = tmp_path / "set.cfcsv"
        save_measured_channels(stack, channels)
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = svd-spread\n")
        result = run(parse_config(path, channels_path=str(channels)))
        assert len(result.tables["spread"].rows) == 5
        assert result.tables["spread"].rows[0][0] == 8

        path2 = write_config(tmp_path / "c2.ini", "[experiment]\nexperiment = mrt-sumrate\n")
        result2 = run(parse_config(path2, channels_path=str(channels)))
        assert len(result2.tables["sumrate"].rows) == 5


class TestCliProcess:
    def test_validate_ok(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = svd-spread\n")
        runner = CliRunner()
        outcome = runner.invoke(main, ["validate", "--config", path])
        assert outcome.exit_code == 0
        assert json.loads(outcome.output)["experiment"] == "svd-spread"

    def test_config_error_exit_code_2(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = nope\n")
        runner = CliRunner()
        outcome = runner.invoke(main, ["run", "--config", path])
        assert outcome.exit_code == 2

    def test_missing_file_exit_code_2(self):
        runner = CliRunner()
        outcome = runner.invoke(main, ["run", "--config", "/nonexistent/x.ini"])
        assert outcome.exit_code == 2

    def test_pinned_scenario_violation_exit_code_2(self, tmp_path):
        # Pinned rural scenario rejects overrides without the explicit flag.
        body = (
            "[experiment]\nexperiment = rural-broadband\ntrials = 2\n\n"
            "[rural-broadband]\nm = 16\n"
        )
        path = write_config(tmp_path / "c.ini", body)
        runner = CliRunner()
        outcome = runner.invoke(main, ["run", "--config", path, "--out", str(tmp_path / "o")])
        assert outcome.exit_code == 2

    def test_runtime_error_exit_code_3(self, tmp_path):
        # Valid config, malformed measured-channel file: domain error at run time.
        bad = tmp_path / "bad.cfcsv"
        bad.write_text("2,1,1\n1.0,0.0\n")
        path = write_config(tmp_path / "c.ini", "[experiment]\nexperiment = svd-spread\n")
        runner = CliRunner()
        outcome = runner.invoke(
            main,
            ["run", "--config", path, "--channels", str(bad), "--out", str(tmp_path / "o")],
        )
        assert outcome.exit_code == 3

    def test_run_emits_files(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = svd-spread\ntrials = 4\n\n[svd-spread]\nm_list = 4\n",
        )
        runner = CliRunner()
        out = tmp_path / "out"
        outcome = runner.invoke(main, ["run", "--config", path, "--out", str(out)])
        assert outcome.exit_code == 0
        assert (out / "spread.csv").exists()
        assert (out / "summary.json").exists()

    def test_rerun_byte_identical_across_workers(self, tmp_path):
        path = write_config(
            tmp_path / "c.ini",
            "[experiment]\nexperiment = svd-spread\ntrials = 20\nseed = 7\n\n[svd-spread]\nm_list = 4,8\n",
        )
        runner = CliRunner()
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert runner.invoke(main, ["run", "--config", path, "--out", str(out1)]).exit_code == 0
        assert (
            runner.invoke(
                main, ["run", "--config", path, "--out", str(out2), "--workers", "4"]
            ).exit_code
            == 0
        )
        assert (out1 / "spread.csv").read_bytes() == (out2 / "spread.csv").read_bytes()
