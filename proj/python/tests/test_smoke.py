import math

import numpy as np
import pytest

import pseudolidar as pl


def rig():
    return pl.CalibSet.from_rig(pl.Intrinsics(64.0, 64.0, 32.0, 16.0), 0.54)


def test_project_backproject_round_trip():
    k = pl.Intrinsics(700.0, 710.0, 600.0, 180.0)
    p = pl.backproject(123.5, 77.25, 14.0, k)
    u, v, z = pl.project(p, k)
    assert (u, v, z) == pytest.approx((123.5, 77.25, 14.0), abs=1e-9)


def test_calib_text_round_trip():
    calib = rig()
    again = pl.CalibSet.parse(calib.format())
    assert again.baseline == pytest.approx(0.54, abs=1e-12)
    assert again.intrinsics.fu == 64.0


def test_depth_to_cloud_and_back():
    calib = rig()
    depth = np.full((32, 64), np.nan)
    depth[20:24, 10:30] = 12.0
    cloud = pl.depth_to_cloud(depth, calib, postprocess=False)
    assert cloud.shape == (80, 4)
    rendered = pl.render_sparse_depth(cloud, calib, 32, 64)
    valid = ~np.isnan(depth)
    assert np.array_equal(valid, ~np.isnan(rendered))
    assert np.allclose(rendered[valid], 12.0, atol=1e-9)


def test_sparsify_keeps_configured_beams():
    cfg = pl.BeamConfig.default_four_beam()
    rng = np.random.default_rng(0)
    el = rng.uniform(-0.45, 0.05, 2000)
    az = rng.uniform(-3.1, 3.1, 2000)
    pts = np.stack([20 * np.cos(el) * np.cos(az), 20 * np.cos(el) * np.sin(az), 20 * np.sin(el), np.zeros(2000)], 1)
    kept = pl.sparsify(pts, cfg)
    assert 0 < len(kept) < len(pts)
    bins = {cfg.bin_of(math.atan2(z, math.hypot(x, y))) for x, y, z, _ in kept}
    assert bins <= set(cfg.kept_bins)
    assert np.array_equal(pl.sparsify(kept, cfg), kept)


def test_depth_metrics_constant_offset():
    gt = np.full((8, 8), 10.0)
    m = pl.depth_metrics(gt + 0.1, gt)
    assert m["count"] == 64
    assert m["rmse_mm"] == pytest.approx(100.0, abs=1e-9)
    assert m["mae_mm"] == pytest.approx(100.0, abs=1e-9)
    with pytest.raises(pl.DomainError):
        pl.depth_metrics(gt, np.full((8, 8), np.nan))


def test_box_iou():
    a = (1.0, 1.65, 12.0, 2.0, 1.0, 2.0, 0.0)
    b = (2.0, 1.65, 12.0, 2.0, 1.0, 2.0, 0.0)
    assert pl.bev_iou(a, b) == pytest.approx(1 / 3, abs=1e-12)
    assert pl.iou_3d(a, a) == pytest.approx(1.0, abs=1e-12)


def test_average_precision():
    gt = [
        "Car 0.00 0 0.30 500.0 150.0 600.0 220.0 1.60 1.70 4.00 0.00 1.65 10.00 0.30",
        "Car 0.00 0 -1.20 300.0 160.0 360.0 205.0 1.60 1.70 4.00 3.00 1.65 20.00 -1.20",
    ]
    hit = gt[0] + " 0.9"
    miss = "Car 0.00 0 0.00 100.0 160.0 140.0 200.0 1.60 1.70 4.00 -5.00 1.65 30.00 0.00 0.8"
    r = pl.average_precision([hit, miss], gt, difficulty="easy")
    assert (r["true_positives"], r["false_positives"], r["ground_truths"]) == (1, 1, 2)
    assert r["ap"] == pytest.approx(6 / 11)
    perfect = [g + " 0.5" for g in gt]
    assert pl.average_precision(perfect, gt, difficulty="easy")["ap"] == pytest.approx(1.0)


def test_network_forward_in_range():
    sample = pl.make_sample(5)
    assert sample["left_image"].shape == (32, 64, 3)
    arch = pl.Architecture()
    arch.base_channels, arch.feature_channels, arch.depth_count = 2, 4, 24
    params = pl.NetParams.initialize(arch, 0)
    depth = pl.predict_depth(sample, params)
    assert depth.shape == (32, 64)
    assert np.all((depth >= arch.depth_min) & (depth <= arch.depth_max))
    assert math.isfinite(pl.sample_loss(sample, params))


def test_checkpoint_round_trip(tmp_path):
    params = pl.NetParams.initialize(pl.Architecture(), 7)
    path = tmp_path / "net.ckpt"
    params.save(path)
    again = pl.NetParams.load(path)
    assert again.parameter_count() == params.parameter_count()
    assert again.architecture.to_json() == params.architecture.to_json()


def test_cli_in_process(tmp_path):
    code, out, _ = pl.run_cli(["--help"])
    assert code == 0 and "synth-gen" in out
    code, _, err = pl.run_cli(["eval-depth"])
    assert code == 2 and err.startswith("error: ")
    code, _, _ = pl.run_cli(["synth-gen", "--scenes", "2", "--seed", "1", "--out", str(tmp_path / "d")])
    assert code == 0
    sample = pl.load_sample(tmp_path / "d", 1)
    assert sample["gt_depth"].shape == (32, 64)
