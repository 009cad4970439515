import numpy as np
import pytest

from navfuse.cli import main


def run(args):
    return main([str(a) for a in args])


def simulate_into(tmp_path, extra=()):
    out = tmp_path / "sim"
    code = run(
        ["simulate", "--profile", "circular", "--duration", "20", "--seed", "42",
         "--out", out, *extra]
    )
    assert code == 0
    return out


class TestSimulateCommand:
    def test_writes_all_artifacts(self, tmp_path):
        out = simulate_into(tmp_path)
        for name in ("truth.csv", "imu.csv", "gnss.csv", "manifest"):
            assert (out / name).is_file()
        imu_lines = (out / "imu.csv").read_text().splitlines()
        assert imu_lines[0] == "t,wx,wy,wz,ax,ay,az"
        assert len(imu_lines) == 1 + 2000
        gnss_lines = (out / "gnss.csv").read_text().splitlines()
        assert gnss_lines[0] == "t,lat_deg,lon_deg,alt_m"
        assert len(gnss_lines) == 1 + 20

    def test_deterministic_outputs(self, tmp_path):
        a = simulate_into(tmp_path / "a")
        b = simulate_into(tmp_path / "b")
        for name in ("truth.csv", "imu.csv", "gnss.csv", "manifest"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_zero_duration_is_usage_error(self, tmp_path, capsys):
        code = run(["simulate", "--profile", "circular", "--duration", "0",
                    "--seed", "1", "--out", tmp_path / "x"])
        assert code == 2

    def test_seed_required(self, tmp_path):
        code = run(["simulate", "--profile", "circular", "--duration", "5",
                    "--out", tmp_path / "x"])
        assert code == 2

    def test_manifest_echoes_config(self, tmp_path):
        out = simulate_into(tmp_path, extra=["--gnss-sigma", "7.5"])
        manifest = dict(
            line.split("=", 1) for line in (out / "manifest").read_text().splitlines()
        )
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == "42"
        assert float(manifest["gnss_sigma"]) == 7.5
        assert float(manifest["origin_lat_deg"]) == 49.0


class TestFuseCommand:
    def test_end_to_end_with_truth(self, tmp_path):
        sim = simulate_into(tmp_path)
        out = tmp_path / "fused"
        code = run(["fuse", "--imu", sim / "imu.csv", "--gnss", sim / "gnss.csv",
                    "--truth", sim / "truth.csv", "--out", out])
        assert code == 0
        for name in ("estimate.csv", "errors.csv", "rmse.csv", "track.csv", "manifest"):
            assert (out / name).is_file()
        rmse_lines = (out / "rmse.csv").read_text().splitlines()
        assert rmse_lines[0] == "method,rmse_x,rmse_y,rmse_z"
        methods = [line.split(",")[0] for line in rmse_lines[1:]]
        assert methods == ["GNSS", "GNSS-IMU"]
        est_lines = (out / "estimate.csv").read_text().splitlines()
        assert len(est_lines) == 1 + 2000

    def test_outage_flag_keeps_output_continuous(self, tmp_path):
        sim = simulate_into(tmp_path)
        out = tmp_path / "fused"
        code = run(["fuse", "--imu", sim / "imu.csv", "--gnss", sim / "gnss.csv",
                    "--gnss-outage", "5:10", "--out", out])
        assert code == 0
        est_lines = (out / "estimate.csv").read_text().splitlines()
        assert len(est_lines) == 1 + 2000
        times = [float(line.split(",")[0]) for line in est_lines[1:]]
        assert any(5.0 <= t < 10.0 for t in times)

    def test_missing_input_names_path(self, tmp_path, capsys):
        code = run(["fuse", "--imu", tmp_path / "absent.csv",
                    "--gnss", tmp_path / "also_absent.csv", "--out", tmp_path / "o"])
        assert code == 1
        assert "absent.csv" in capsys.readouterr().err

    def test_requires_input_choice(self, tmp_path):
        code = run(["fuse", "--out", tmp_path / "o"])
        assert code == 2

    def test_kitti_input(self, tmp_path, kitti_drive):
        out = tmp_path / "fused"
        code = run(["fuse", "--kitti", kitti_drive, "--out", out])
        assert code == 0
        est_lines = (out / "estimate.csv").read_text().splitlines()
        assert len(est_lines) == 1 + 3

    def test_config_file_and_flag_precedence(self, tmp_path):
        sim = simulate_into(tmp_path)
        config = tmp_path / "run.cfg"
        config.write_text("gnss_sigma=5.0\nalpha=0.9\n")
        out_file_only = tmp_path / "f1"
        run(["fuse", "--imu", sim / "imu.csv", "--gnss", sim / "gnss.csv",
             "--config", config, "--out", out_file_only])
        manifest = dict(
            line.split("=", 1)
            for line in (out_file_only / "manifest").read_text().splitlines()
        )
        assert float(manifest["gnss_sigma"]) == 5.0
        assert float(manifest["alpha"]) == 0.9

        out_flag = tmp_path / "f2"
        run(["fuse", "--imu", sim / "imu.csv", "--gnss", sim / "gnss.csv",
             "--config", config, "--gnss-sigma", "6.5", "--out", out_flag])
        manifest = dict(
            line.split("=", 1) for line in (out_flag / "manifest").read_text().splitlines()
        )
        assert float(manifest["gnss_sigma"]) == 6.5
        assert float(manifest["alpha"]) == 0.9

    def test_manifest_records_origin(self, tmp_path):
        sim = simulate_into(tmp_path)
        out = tmp_path / "fused"
        run(["fuse", "--imu", sim / "imu.csv", "--gnss", sim / "gnss.csv", "--out", out])
        manifest = dict(
            line.split("=", 1) for line in (out / "manifest").read_text().splitlines()
        )
        assert abs(float(manifest["origin_lat_deg"]) - 49.0) < 0.01
        assert abs(float(manifest["origin_lon_deg"]) - 8.43) < 0.01


class TestKittiConvertCommand:
    def test_fixture_conversion(self, tmp_path, kitti_drive):
        out = tmp_path / "conv"
        code = run(["kitti-convert", "--kitti", kitti_drive, "--out", out])
        assert code == 0
        imu_lines = (out / "imu.csv").read_text().splitlines()
        assert len(imu_lines) == 1 + 3
        gnss_lines = (out / "gnss.csv").read_text().splitlines()
        assert len(gnss_lines) == 1 + 1
        row = gnss_lines[1].split(",")
        assert float(row[1]) == pytest.approx(49.0, abs=1e-12)
        assert float(row[2]) == pytest.approx(8.43, abs=1e-12)

    def test_missing_timestamps_is_data_error(self, tmp_path):
        (tmp_path / "drive" / "oxts" / "data").mkdir(parents=True)
        code = run(["kitti-convert", "--kitti", tmp_path / "drive", "--out", tmp_path / "o"])
        assert code == 1

    def test_round_trip_through_fuse(self, tmp_path, kitti_drive):
        conv = tmp_path / "conv"
        run(["kitti-convert", "--kitti", kitti_drive, "--out", conv])
        out = tmp_path / "fused"
        code = run(["fuse", "--imu", conv / "imu.csv", "--gnss", conv / "gnss.csv",
                    "--out", out])
        assert code == 0


class TestParser:
    def test_version_flag(self):
        assert run(["--version"]) == 0

    def test_unknown_command(self):
        assert run(["frobnicate"]) == 2

    def test_bad_outage_format(self, tmp_path):
        sim = simulate_into(tmp_path)
        code = run(["fuse", "--imu", sim / "imu.csv", "--gnss", sim / "gnss.csv",
                    "--gnss-outage", "oops", "--out", tmp_path / "o"])
        assert code == 2
