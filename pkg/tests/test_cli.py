import math
import os
import xml.etree.ElementTree as ET

import pytest

from cdmaica import cli, output
from cdmaica.config import DEFAULTS, ConfigError, parse_config, parse_text
from cdmaica.harness import ExperimentPlan, PointRecord, SerReport, run_plan

SVG = "{http://www.w3.org/2000/svg}"

SMALL = """\
# tiny grid for tests
users = 2
first_code = 2
symbols = 320
snr_db = -5, 0   # two points
noise = awgn
algorithms = jade, fastica
runs_per_point = 2
"""


def record(snr, alg, detector, ser, noise="awgn", m=2000):
    return PointRecord(noise=noise, symbols=m, snr_db=snr, users=30, detector=detector,
                       algorithm=alg, mean_ser=ser, ser_stderr=0.0 if ser == ser else math.nan,
                       runs=4, scored_runs=4, failed_runs=0, mean_iterations=3.0,
                       wallclock_s=0.1)


def full_report(noise=("awgn", "pink"), ms=(2000, 5000, 10000)):
    recs = []
    for nz in noise:
        for m in ms:
            for snr in (-10.0, -5.0, 0.0):
                recs.append(record(snr, "none", "sud", 0.05 / (1 - snr), nz, m))
                for alg in ("comon", "jade", "fastica"):
                    recs.append(record(snr, alg, "ica", 0.04 / (1 - snr), nz, m))
                    recs.append(record(snr, alg, "sudica", 0.03 / (1 - snr), nz, m))
    return SerReport(recs)


class TestConfig:
    def test_empty_is_paper_default(self, tmp_path):
        p = tmp_path / "empty.cfg"
        p.write_text("")
        plan = parse_config(p)
        assert isinstance(plan, ExperimentPlan)
        assert plan.runs_per_point == 100
        assert len(plan.scenarios) == 54
        sc = plan.scenarios[0]
        assert (sc.users, sc.chips) == (30, 31)
        assert {s.symbols for s in plan.scenarios} == {2000, 5000, 10000}
        assert {s.snr_db for s in plan.scenarios} == {-10.0, -5.0, 0.0}
        assert {s.noise for s in plan.scenarios} == {"awgn", "pink"}
        assert {s.algorithm.algorithm for s in plan.scenarios} == {"comon", "jade", "fastica"}

    def test_zero_runs_is_semantic_error(self):
        with pytest.raises(ConfigError, match="runs_per_point"):
            parse_text("runs_per_point = 0").plan()

    def test_snr_override(self):
        plan = parse_text("snr_db = 3", overrides=["snr_db=-10,-5,0"]).plan()
        assert sorted({s.snr_db for s in plan.scenarios}) == [-10.0, -5.0, 0.0]

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigError) as info:
            parse_text("users = 3\nspeed = 9\n")
        assert info.value.line == 2 and info.value.key == "speed"
        assert "line 2" in str(info.value)

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_text("users 3")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_text("users = 3\nusers = 4")

    @pytest.mark.parametrize("text", ["users = many", "users = 3, 4", "noise = brown",
                                      "algorithms = jade, jade", "snr_db = ", "contrast = exp",
                                      "users = 31", "detectors = mmse"])
    def test_bad_values(self, text):
        with pytest.raises(ConfigError):
            parse_text(text).plan()

    def test_comments_and_blank_lines(self):
        plan = parse_text(SMALL).plan()
        assert plan.runs_per_point == 2 and len(plan.scenarios) == 4

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "nope.cfg")

    def test_defaults_cover_every_key(self):
        assert parse_text("").values == DEFAULTS


class TestCsv:
    def test_six_files_for_paper_grid(self, tmp_path):
        paths = output.write_csv(full_report(), tmp_path)
        names = sorted(os.path.basename(p) for p in paths)
        assert names == sorted(f"ser_{n}_M{m}.csv" for n in ("awgn", "pink") for m in (2000, 5000, 10000))

    def test_schema_and_order(self, tmp_path):
        output.write_csv(full_report(), tmp_path)
        lines = (tmp_path / "ser_awgn_M5000.csv").read_text().splitlines()
        assert lines[0] == ",".join(output.CSV_HEADER)
        rows = [ln.split(",") for ln in lines[1:]]
        assert len(rows) == 3 * 7
        keys = [(float(r[0]), r[1], r[2]) for r in rows]
        assert keys == sorted(keys)
        assert {r[1] for r in rows if r[2] == "sud"} == {"none"}

    def test_full_precision(self, tmp_path):
        rep = SerReport([record(0.0, "none", "sud", 1 / 3)])
        output.write_csv(rep, tmp_path)
        back = output.read_csv_dir(tmp_path)[("awgn", 2000)]
        assert back[0]["mean_ser"] == 1 / 3

    def test_byte_identical_rewrite(self, tmp_path):
        rep = full_report()
        output.write_csv(rep, tmp_path / "a")
        output.write_csv(rep, tmp_path / "b")
        for name in os.listdir(tmp_path / "a"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_empty_report(self, tmp_path):
        with pytest.raises(ValueError):
            output.write_csv(SerReport([]), tmp_path)

    def test_unwritable_directory_names_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            output.write_csv(full_report(), blocker)


def parse_svg(text):
    return ET.fromstring(text)


class TestSvg:
    def test_seven_series(self, tmp_path):
        output.render_plot(full_report(noise=("awgn",), ms=(2000,)), tmp_path)
        root = parse_svg((tmp_path / "ser_awgn_M2000.svg").read_text())
        assert len(root.findall(f"{SVG}polyline")) == 7
        labels = {t.text for t in root.findall(f"{SVG}text")}
        assert {"SUD", "ICA (jade)", "SUD-ICA (comon)"} <= labels

    def test_zero_ser_marker_at_floor(self):
        rows = output._rows_by_panel(SerReport([record(-5.0, "none", "sud", 0.1),
                                                record(0.0, "none", "sud", 0.0)]))[("awgn", 2000)]
        root = parse_svg(output.svg_text(rows, "t"))
        tri = root.findall(f"{SVG}path")
        assert len(tri) == 1 and tri[0].get("fill") == "#ffffff"
        assert len(root.findall(f"{SVG}circle")) == 1

    def test_single_point_series_has_no_line(self):
        rows = output._rows_by_panel(SerReport([record(-5.0, "none", "sud", 0.1)]))[("awgn", 2000)]
        root = parse_svg(output.svg_text(rows, "t"))
        assert root.findall(f"{SVG}polyline") == []
        assert len(root.findall(f"{SVG}circle")) == 1

    def test_nan_points_skipped(self):
        recs = [record(s, "jade", "ica", v) for s, v in [(-5.0, math.nan), (0.0, 0.01), (5.0, 0.001)]]
        rows = output._rows_by_panel(SerReport(recs))[("awgn", 2000)]
        root = parse_svg(output.svg_text(rows, "t"))
        assert len(root.findall(f"{SVG}circle")) == 2

    def test_log_scale(self):
        recs = [record(s, "none", "sud", v) for s, v in [(-10.0, 1e-1), (-5.0, 1e-2), (0.0, 1e-3)]]
        rows = output._rows_by_panel(SerReport(recs))[("awgn", 2000)]
        ys = [float(c.get("cy")) for c in parse_svg(output.svg_text(rows, "t")).findall(f"{SVG}circle")]
        # equal decades map to equal pixel steps
        assert ys[1] - ys[0] == pytest.approx(ys[2] - ys[1], abs=0.02)

    def test_plot_reproduces_from_csv(self, tmp_path):
        rep = full_report()
        output.write_csv(rep, tmp_path / "run")
        output.render_plot(rep, tmp_path / "run")
        output.render_panels(output.read_csv_dir(tmp_path / "run"), tmp_path / "replot")
        for name in os.listdir(tmp_path / "replot"):
            assert (tmp_path / "replot" / name).read_bytes() == (tmp_path / "run" / name).read_bytes()


class TestCommandLine:
    def test_run_writes_outputs(self, tmp_path, capsys):
        cfg = tmp_path / "small.cfg"
        cfg.write_text(SMALL)
        out = tmp_path / "out"
        assert cli.main(["run", str(cfg), "--out", str(out)]) == cli.EXIT_OK
        assert sorted(os.listdir(out)) == ["ser_awgn_M320.csv", "ser_awgn_M320.svg"]
        rows = (out / "ser_awgn_M320.csv").read_text().splitlines()
        assert len(rows) == 1 + 2 * (1 + 2 * 2)

    def test_run_deterministic_across_threads(self, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text(SMALL)
        cli.main(["run", str(cfg), "--out", str(tmp_path / "a")])
        cli.main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "2"])
        for name in os.listdir(tmp_path / "a"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_set_override(self, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text(SMALL)
        out = tmp_path / "o"
        cli.main(["run", str(cfg), "--out", str(out), "--set", "snr_db=3", "--set", "algorithms=jade"])
        rows = (out / "ser_awgn_M320.csv").read_text().splitlines()[1:]
        assert {r.split(",")[0] for r in rows} == {"3.0"}
        assert {r.split(",")[1] for r in rows} == {"none", "jade"}

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("users = 3\nbogus = 1\n")
        assert cli.main(["run", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
        assert "line 2" in capsys.readouterr().err
        assert not any(p.suffix == ".csv" for p in tmp_path.iterdir())

    def test_bad_override_exit_code(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(SMALL)
        assert cli.main(["run", str(cfg), "--set", "bogus=1"]) == cli.EXIT_CONFIG
        assert cli.main(["run", str(cfg), "--threads", "0"]) == cli.EXIT_CONFIG

    def test_runtime_error_exit_code(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(SMALL)
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        assert cli.main(["run", str(cfg), "--out", str(blocker)]) == cli.EXIT_RUNTIME
        assert cli.EXIT_RUNTIME not in (cli.EXIT_OK, cli.EXIT_CONFIG)

    def test_codes(self, tmp_path, capsys):
        assert cli.main(["codes"]) == cli.EXIT_OK
        stdout = capsys.readouterr().out.splitlines()
        assert len(stdout) == 33 and len(stdout[0].split()) == 31
        target = tmp_path / "codes.txt"
        cli.main(["codes", "--out", str(target)])
        assert target.read_text().splitlines() == stdout

    def test_plot(self, tmp_path):
        rep = full_report(noise=("pink",), ms=(5000,))
        output.write_csv(rep, tmp_path)
        output.render_plot(rep, tmp_path / "ref")
        assert cli.main(["plot", str(tmp_path), "--out", str(tmp_path / "svg")]) == cli.EXIT_OK
        assert (tmp_path / "svg" / "ser_pink_M5000.svg").read_bytes() == \
               (tmp_path / "ref" / "ser_pink_M5000.svg").read_bytes()

    def test_plot_empty_dir(self, tmp_path):
        assert cli.main(["plot", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_real_run_reproduces_via_plot(self, tmp_path):
        plan = parse_text(SMALL).plan()
        rep = run_plan(plan)
        output.write_csv(rep, tmp_path / "r")
        output.render_plot(rep, tmp_path / "r")
        cli.main(["plot", str(tmp_path / "r"), "--out", str(tmp_path / "p")])
        assert (tmp_path / "p" / "ser_awgn_M320.svg").read_bytes() == \
               (tmp_path / "r" / "ser_awgn_M320.svg").read_bytes()
