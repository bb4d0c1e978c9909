import json
import subprocess
import sys

import numpy as np
import pytest

from layerfields import __version__, procedural
from layerfields.cli import main
from layerfields.layering import Layer, LayerManifest, save_manifest
from layerfields.lattice import load_grid
from layerfields.mesh import save_obj


def run_cli(*argv):
    return main(list(argv))


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
    assert f"layerfields {__version__}" in capsys.readouterr().out


def test_requires_subcommand():
    with pytest.raises(SystemExit):
        run_cli()


def test_metrics_between_meshes_stdout(tmp_path, capsys):
    a = procedural.make_uv_sphere(0.30, n_lat=16, n_lon=32)
    b = procedural.make_uv_sphere(0.33, n_lat=16, n_lon=32)
    pa, pb = tmp_path / "a.obj", tmp_path / "b.obj"
    save_obj(a, pa)
    save_obj(b, pb)
    rc = run_cli("metrics", "--recon", str(pa), "--truth", str(pb), "--n", "5000")
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["chamfer_cm"] == pytest.approx(3.0, abs=0.1)
    assert doc["direction"] == "recon->truth"


def test_metrics_report_to_file(tmp_path):
    a = procedural.make_uv_sphere(0.30, n_lat=16, n_lon=32)
    pa = tmp_path / "a.obj"
    save_obj(a, pa)
    out = tmp_path / "report.json"
    rc = run_cli("metrics", "--recon", str(pa), "--truth", str(pa), "--n", "2000",
                 "--out", str(out))
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["chamfer_cm"] < 1e-9


def test_metrics_missing_inputs_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("metrics")
    assert exc.value.code == 2


def test_missing_mesh_file_fails_cleanly(tmp_path, capsys):
    rc = run_cli("sample-points", "--mesh", str(tmp_path / "nope.obj"),
                 "--out", str(tmp_path / "pts.npz"))
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_sample_points_counts_and_determinism(tmp_path, capsys):
    m = procedural.make_uv_sphere(0.3, n_lat=16, n_lon=32)
    p = tmp_path / "m.obj"
    save_obj(m, p)
    out1, out2 = tmp_path / "s1.npz", tmp_path / "s2.npz"
    assert run_cli("sample-points", "--mesh", str(p), "--n", "20480",
                   "--seed", "7", "--out", str(out1)) == 0
    assert run_cli("sample-points", "--mesh", str(p), "--n", "20480",
                   "--seed", "7", "--out", str(out2)) == 0
    d1, d2 = np.load(out1), np.load(out2)
    assert d1["surface_points"].shape == (20480, 3)
    assert d1["random_points"].shape == (1280, 3)
    assert np.array_equal(d1["surface_points"], d2["surface_points"])
    assert np.array_equal(d1["random_points"], d2["random_points"])


@pytest.fixture(scope="module")
def two_layer_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("two_layer")
    body = procedural.make_closed_cylinder(0.20, 0.9, n_seg=32, n_rings=8, name="body")
    shirt = procedural.make_open_cylinder(0.30, 0.6, n_seg=32, n_rings=8, name="shirt")
    save_obj(body, d / "body.obj")
    save_obj(shirt, d / "shirt.obj")
    manifest = LayerManifest((
        Layer(id=0, name="body", mesh_path="body.obj"),
        Layer(id=1, name="shirt", mesh_path="shirt.obj", covers=(0,)),
    ))
    save_manifest(manifest, d / "manifest.json", grid={"resolution": 32})
    return d


def test_pipeline_end_to_end(two_layer_dir, tmp_path):
    out = tmp_path / "out"
    rc = run_cli("pipeline", "--manifest", str(two_layer_dir / "manifest.json"),
                 "--out", str(out), "--res", "32")
    assert rc == 0
    for lid, name in ((0, "body"), (1, "shirt")):
        for kind in ("occupancy", "gif_arg", "gif", "sdf_pre", "sdf_post"):
            g = load_grid(out / f"layer{lid:02d}_{name}_{kind}")
            assert g.dims == (32, 32, 32)
        assert (out / f"layer{lid:02d}_{name}_closed.obj").exists()
        assert (out / f"layer{lid:02d}_{name}_trimmed.obj").exists()
    cov = json.loads((out / "covering_report.json").read_text())
    assert cov["after"]["violation_count"] == 0
    met = json.loads((out / "metrics.json").read_text())
    assert met["pairs"][0]["outer"] == 1 and met["pairs"][0]["inner"] == 0
    assert not (out / "PIPELINE.partial").exists()


def test_pipeline_single_stage_requires_prior_artifacts(two_layer_dir, tmp_path):
    out = tmp_path / "out"
    rc = run_cli("enforce", "--manifest", str(two_layer_dir / "manifest.json"),
                 "--out", str(out), "--res", "32")
    assert rc == 1  # sdf_pre grids are missing
    assert (out / "PIPELINE.partial").read_text().strip() == "enforce"


def test_pipeline_rejects_unknown_stage(two_layer_dir, tmp_path, capsys):
    rc = run_cli("pipeline", "--manifest", str(two_layer_dir / "manifest.json"),
                 "--out", str(tmp_path / "out"), "--stages", "fields,bogus")
    assert rc == 1
    assert "bogus" in capsys.readouterr().err


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "layerfields.cli", "--version"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "layerfields" in proc.stdout
