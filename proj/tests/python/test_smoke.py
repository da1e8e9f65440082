import numpy as np
import pytest

dentocc = pytest.importorskip("dentocc")


def test_oracle_voxelize_and_extract():
    vox = dentocc.voxelize_tooth(3, 1, [32, 32, 32])
    assert vox.shape == (32, 32, 32)
    assert 0 < vox.sum() < vox.size
    assert dentocc.volumetric_iou(vox, vox) == 1.0

    verts, faces = dentocc.extract_mesh(vox.astype(float))
    assert verts.shape[1] == 3 and faces.shape[1] == 3
    assert dentocc.boundary_edge_count(verts, faces) == 0
    assert np.all(np.abs(verts) <= 0.5 + 1.0 / 32)


def test_sample_points_match_oracle():
    pts, labels = dentocc.sample_points(8, 2, 500, sample_seed=4)
    assert pts.dtype == np.float32 and pts.shape == (500, 3)
    inside = dentocc.tooth_contains(8, 2, pts.astype(np.float64))
    assert np.array_equal(inside, labels.astype(bool))


def test_patch_and_untrained_model():
    patch = dentocc.render_patch(30, 0)
    assert patch.shape == (64, 64)
    model = dentocc.Reconstructor("cx", seed=3)
    assert model.conditioning == "cx"
    pts = np.random.default_rng(0).uniform(-0.5, 0.5, (100, 3))
    p = model.predict(pts, 30, patch)
    # The head starts at zero, so every prediction is one half.
    np.testing.assert_allclose(p, 0.5)
    with pytest.raises(dentocc.DomainError):
        model.predict(pts, 30)
    with pytest.raises(ValueError):
        model.predict(pts, 40, patch)


def test_metrics_on_identical_clouds():
    rng = np.random.default_rng(1)
    p = rng.normal(size=(50, 3))
    n = p / np.linalg.norm(p, axis=1, keepdims=True)
    assert dentocc.chamfer_l1(p, n, p, n) == 0.0
    assert dentocc.normal_consistency(p, n, p, n) == pytest.approx(1.0)
    with pytest.raises(dentocc.DimensionError):
        dentocc.chamfer_l1(p[:, :2], n, p, n)


def test_save_load_and_cli(tmp_path):
    model = dentocc.Reconstructor("cbn", class_embedding=False, seed=1)
    path = tmp_path / "m.ocdt"
    model.save(str(path))
    back = dentocc.Reconstructor.load(str(path))
    assert back.conditioning == "cbn"
    assert back.parameter_count() == model.parameter_count()

    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(dentocc.CheckpointError):
        dentocc.Reconstructor.load(str(path))

    code, out, _ = dentocc.run_cli(["--help"])
    assert code == 0 and "synth" in out
    code, _, err = dentocc.run_cli(["synth"])
    assert code == 1 and err


def test_place_teeth_on_both_jaws():
    vox = dentocc.voxelize_tooth(1, 0, [24, 16, 16]).astype(float)
    v, f = dentocc.extract_mesh(vox)
    jv, jf = dentocc.place_teeth([(1, v, f), (16, v, f)], upper=True)
    assert jv.shape[0] == 2 * v.shape[0] and jf.shape[0] == 2 * f.shape[0]
    d0 = np.linalg.norm(v[0] - v[-1])
    assert np.linalg.norm(jv[0] - jv[v.shape[0] - 1]) == pytest.approx(d0, abs=1e-9)
    with pytest.raises(dentocc.DomainError):
        dentocc.place_teeth([(20, v, f)], upper=True)
