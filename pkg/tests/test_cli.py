import json

import numpy as np
import pytest

from desmoke import cli
from desmoke.fixtures import FixtureSpec, make_clean_scene
from desmoke.imgio import encode_png_bytes, load_image, save_png


def _make_clean_dir(tmp_path, n=3, h=32, w=32, seed=0):
    clean_dir = tmp_path / "clean"
    clean_dir.mkdir()
    for i in range(n):
        img = make_clean_scene(FixtureSpec(seed=seed + i, height=h, width=w))
        save_png(img, clean_dir / f"view_{i:03d}.png")
    return clean_dir


class TestSynth:
    def test_writes_composites_and_sidecars(self, tmp_path):
        clean_dir = _make_clean_dir(tmp_path, n=3)
        out = tmp_path / "smoky"
        rc = cli.main(
            ["synth", "--input", str(clean_dir), "--output", str(out),
             "--t", "constant:0.6", "--airlight", "0.8,0.8,0.8"]
        )
        assert rc == 0
        assert len(list(out.glob("*.png"))) == 3
        assert len(list(out.glob("*.t.npy"))) == 3
        assert len(list(out.glob("*.airlight.json"))) == 3
        sidecar = json.loads((out / "view_000.airlight.json").read_text())
        assert sidecar["airlight"] == [0.8, 0.8, 0.8]
        assert sidecar["t_field"]["kind"] == "constant"

    def test_unit_transmission_matches_decode_encode_roundtrip(self, tmp_path):
        clean_dir = _make_clean_dir(tmp_path, n=1)
        out = tmp_path / "smoky"
        rc = cli.main(
            ["synth", "--input", str(clean_dir), "--output", str(out),
             "--t", "constant:1.0", "--airlight", "0.5,0.5,0.5"]
        )
        assert rc == 0
        roundtrip = encode_png_bytes(load_image(clean_dir / "view_000.png"))
        assert (out / "view_000.png").read_bytes() == roundtrip

    def test_out_of_range_t_is_usage_error(self, tmp_path, capsys):
        clean_dir = _make_clean_dir(tmp_path, n=1)
        rc = cli.main(
            ["synth", "--input", str(clean_dir), "--output", str(tmp_path / "o"),
             "--t", "constant:1.5", "--airlight", "0.8,0.8,0.8"]
        )
        assert rc == 2
        assert "outside" in capsys.readouterr().err

    def test_empty_input_dir_fails(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        rc = cli.main(
            ["synth", "--input", str(empty), "--output", str(tmp_path / "o"),
             "--t", "constant:0.5", "--airlight", "0.8,0.8,0.8"]
        )
        assert rc == 2
        assert "no input images" in capsys.readouterr().err


class TestDehaze:
    def test_default_parameters_logged(self, tmp_path, capsys):
        clean_dir = _make_clean_dir(tmp_path, n=1)
        rc = cli.main(["dehaze", "--input", str(clean_dir), "--output", str(tmp_path / "o")])
        assert rc == 0
        err = capsys.readouterr().err
        for token in ("omega=0.95", "patch=15", "radius=61", "epsilon=0.001", "t_min=0.1", "gamma=0.5"):
            assert token in err

    def test_airlight_override_reported(self, tmp_path):
        clean_dir = _make_clean_dir(tmp_path, n=1)
        out = tmp_path / "o"
        rc = cli.main(
            ["dehaze", "--input", str(clean_dir), "--output", str(out),
             "--airlight", "0.9,0.9,0.9", "--report"]
        )
        assert rc == 0
        report = json.loads((out / "view_000.report.json").read_text())
        assert report["airlight_overridden"] is True
        assert report["airlight"] == [0.9, 0.9, 0.9]

    def test_empty_input_dir_fails(self, tmp_path, capsys):
        empty = tmp_path / "none"
        empty.mkdir()
        rc = cli.main(["dehaze", "--input", str(empty), "--output", str(tmp_path / "o")])
        assert rc == 2
        assert "no input images" in capsys.readouterr().err

    def test_corrupt_file_isolated(self, tmp_path, capsys):
        clean_dir = _make_clean_dir(tmp_path, n=2)
        (clean_dir / "broken.png").write_bytes(b"not a png")
        out = tmp_path / "o"
        rc = cli.main(["dehaze", "--input", str(clean_dir), "--output", str(out)])
        assert rc == 1  # summary status reflects the failure
        assert len(list(out.glob("*.png"))) == 2  # healthy views still processed
        assert "broken" in capsys.readouterr().err


class TestHarmonize:
    def _setup_branches(self, tmp_path, n=2, drop_one=False):
        src = _make_clean_dir(tmp_path, n=n)
        donors = []
        for k in range(2):
            d = tmp_path / f"donor{k}"
            d.mkdir()
            for i in range(n):
                img = make_clean_scene(FixtureSpec(seed=50 + i, height=32, width=32))
                save_png(img, d / f"view_{i:03d}.png")
            donors.append(d)
        if drop_one:
            (donors[1] / f"view_{n-1:03d}.png").unlink()
        return src, donors

    def test_writes_jpegs(self, tmp_path):
        src, donors = self._setup_branches(tmp_path, n=2)
        out = tmp_path / "final"
        rc = cli.main(
            ["harmonize", "--source", str(src), "--donor", str(donors[0]),
             "--donor", str(donors[1]), "--output", str(out)]
        )
        assert rc == 0
        files = sorted(out.glob("*.jpg"))
        assert len(files) == 2
        assert files[0].read_bytes()[:2] == b"\xff\xd8"

    def test_missing_view_named(self, tmp_path, capsys):
        src, donors = self._setup_branches(tmp_path, n=2, drop_one=True)
        rc = cli.main(
            ["harmonize", "--source", str(src), "--donor", str(donors[0]),
             "--donor", str(donors[1]), "--output", str(tmp_path / "final")]
        )
        assert rc == 2
        assert "view_001" in capsys.readouterr().err

    def test_sigma_zero_changes_output(self, tmp_path):
        src, donors = self._setup_branches(tmp_path, n=1)
        args = ["harmonize", "--source", str(src), "--donor", str(donors[0]),
                "--donor", str(donors[1])]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert cli.main(args + ["--output", str(out_a)]) == 0
        assert cli.main(args + ["--output", str(out_b), "--sigma", "0"]) == 0
        assert (out_a / "view_000.jpg").read_bytes() != (out_b / "view_000.jpg").read_bytes()


class TestEval:
    def test_identical_dirs(self, tmp_path, capsys):
        clean_dir = _make_clean_dir(tmp_path, n=2)
        out_json = tmp_path / "eval.json"
        rc = cli.main(
            ["eval", "--result", str(clean_dir), "--reference", str(clean_dir),
             "--scene", "demo", "--output", str(out_json)]
        )
        assert rc == 0
        table = capsys.readouterr().out
        assert "inf" in table and "1.000" in table
        doc = json.loads(out_json.read_text())
        assert doc["scene"] == "demo"
        assert doc["average"]["psnr"] == "inf"

    def test_uniform_offset_closed_form(self, tmp_path, capsys):
        import math

        ref_dir = tmp_path / "ref"
        res_dir = tmp_path / "res"
        ref_dir.mkdir(), res_dir.mkdir()
        # a uniform 25-level offset survives 8-bit encoding exactly
        save_png(np.full((16, 16, 3), 64 / 255.0), ref_dir / "v.png")
        save_png(np.full((16, 16, 3), 89 / 255.0), res_dir / "v.png")
        rc = cli.main(["eval", "--result", str(res_dir), "--reference", str(ref_dir)])
        assert rc == 0
        expected = 10.0 * math.log10(1.0 / (25.0 / 255.0) ** 2)
        assert f"{expected:.3f}" in capsys.readouterr().out

    def test_unmatched_views_fail(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        save_png(np.zeros((16, 16, 3)), a / "v0.png")
        save_png(np.zeros((16, 16, 3)), b / "v0.png")
        save_png(np.zeros((16, 16, 3)), b / "v1.png")
        rc = cli.main(["eval", "--result", str(a), "--reference", str(b)])
        assert rc == 2
        assert "v1" in capsys.readouterr().err


class TestAggregate:
    def _write_scene(self, path, name, psnr_value):
        doc = {
            "scene": name,
            "views": [{"view_id": "v0", "psnr": psnr_value, "ssim": 0.5}],
        }
        path.write_text(json.dumps(doc))

    def test_two_scene_mean(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        self._write_scene(a, "sa", 10.0)
        self._write_scene(b, "sb", 20.0)
        out = tmp_path / "summary.json"
        rc = cli.main(["aggregate", str(a), str(b), "--method", "demo", "--output", str(out)])
        assert rc == 0
        assert "15.000" in capsys.readouterr().out
        doc = json.loads(out.read_text())
        assert doc["overall"]["psnr"] == 15.0

    def test_exclude_scene(self, tmp_path, capsys):
        paths = []
        for i, v in enumerate([10.0, 20.0, 30.0]):
            p = tmp_path / f"s{i}.json"
            self._write_scene(p, f"s{i}", v)
            paths.append(str(p))
        rc = cli.main(["aggregate", *paths, "--method", "demo", "--exclude", "s2"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "s2" not in out
        assert "15.000" in out


class TestFixturesCommand:
    def test_writes_tree(self, tmp_path):
        out = tmp_path / "fx"
        rc = cli.main(
            ["fixtures", "--output", str(out), "--views", "2", "--height", "24",
             "--width", "24", "--donors", "2", "--eval-scenes", "1"]
        )
        assert rc == 0
        assert len(list((out / "clean").glob("*.png"))) == 2
        assert len(list((out / "donor_warm").glob("*.png"))) == 2
        assert len(list((out / "donor_cool").glob("*.png"))) == 2
        assert (out / "eval" / "scene_00.json").exists()


class TestConfigPrecedence:
    def test_cli_beats_config_beats_default(self, tmp_path):
        src, donors = TestHarmonize()._setup_branches(tmp_path, n=1)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"sigma": 0.0}))
        base = ["harmonize", "--source", str(src), "--donor", str(donors[0]),
                "--donor", str(donors[1])]
        out_default = tmp_path / "z-default"
        out_config = tmp_path / "z-config"
        out_cli = tmp_path / "z-cli"
        assert cli.main(base + ["--output", str(out_default)]) == 0
        assert cli.main(base + ["--output", str(out_config), "--config", str(config)]) == 0
        assert cli.main(
            base + ["--output", str(out_cli), "--config", str(config), "--sigma", "0.35"]
        ) == 0
        default_bytes = (out_default / "view_000.jpg").read_bytes()
        config_bytes = (out_config / "view_000.jpg").read_bytes()
        cli_bytes = (out_cli / "view_000.jpg").read_bytes()
        assert config_bytes != default_bytes  # config sigma=0 applied
        assert cli_bytes == default_bytes  # CLI flag overrides config back to 0.35

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        clean_dir = _make_clean_dir(tmp_path, n=1)
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"sgima": 0.1}))
        rc = cli.main(
            ["dehaze", "--input", str(clean_dir), "--output", str(tmp_path / "o"),
             "--config", str(config)]
        )
        assert rc == 2
        assert "sgima" in capsys.readouterr().err


class TestWorkers:
    def test_parallel_matches_serial(self, tmp_path):
        clean_dir = _make_clean_dir(tmp_path, n=4)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        base = ["dehaze", "--input", str(clean_dir)]
        assert cli.main(base + ["--output", str(serial), "--workers", "1"]) == 0
        assert cli.main(base + ["--output", str(parallel), "--workers", "4"]) == 0
        for f in sorted(serial.glob("*.png")):
            assert f.read_bytes() == (parallel / f.name).read_bytes()

    def test_env_overrides_worker_flag(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.WORKERS_ENV, "2")
        clean_dir = _make_clean_dir(tmp_path, n=2)
        out = tmp_path / "o"
        rc = cli.main(["dehaze", "--input", str(clean_dir), "--output", str(out), "--workers", "1"])
        assert rc == 0
        assert len(list(out.glob("*.png"))) == 2

    def test_bad_env_value_is_usage_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv(cli.WORKERS_ENV, "many")
        clean_dir = _make_clean_dir(tmp_path, n=1)
        rc = cli.main(["dehaze", "--input", str(clean_dir), "--output", str(tmp_path / "o")])
        assert rc == 2
        assert cli.WORKERS_ENV in capsys.readouterr().err
