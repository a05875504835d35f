"""Smoke tests for the python module against scipy references."""

import math

import numpy as np
import pytest

dceseg = pytest.importorskip("dceseg")


def test_margin_constants():
    energy, delta_min = dceseg.min_margin(100, 11.0)
    assert energy == pytest.approx(97.3522185, rel=1e-8)
    assert delta_min == pytest.approx(0.98667228, rel=1e-8)
    assert dceseg.wrong_binding_bound(512 * 512, 100, 11.0) == pytest.approx(0.0036893, rel=1e-3)


def test_noncentral_cdf_against_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    for dof in (1, 2, 16):
        for lam in (0.0, 1.0, 10.0, 100.0):
            for x in (0.5, 5.0, 50.0, 150.0):
                ref = (
                    scipy_stats.chi2.cdf(x, dof)
                    if lam == 0.0
                    else scipy_stats.ncx2.cdf(x, dof, lam)
                )
                assert dceseg.noncentral_chisq_cdf(x, dof, lam) == pytest.approx(
                    ref, abs=1e-9
                )


def test_scheme_and_scale_stats():
    scheme = dceseg.build_scheme(10)
    assert scheme.max_level == 2
    assert scheme.blocks(2) == [(0, 2), (2, 5), (5, 7), (7, 10)]

    stats, dof = dceseg.scale_stats([1, 1, 1, 1, -1, -1, -1, -1])
    assert stats[0] == pytest.approx(0.0)
    assert stats[1] == pytest.approx(8.0)
    assert stats[2] == pytest.approx(0.0)
    assert list(dof) == [1, 1, 2]


def test_stabilize_and_baseline():
    data = np.full((4, 1, 1), 4.0)
    out = dceseg.stabilize(data, exponent=0.5)
    assert out[0, 0, 0] == pytest.approx(4.0)

    seq = np.array([1.0, 1.0, 3.0, 3.0, 7.0, 7.0]).reshape(6, 1, 1)
    enh = dceseg.remove_baseline(seq, n0=4)
    assert enh.shape == (2, 1, 1)
    assert enh[0, 0, 0] == pytest.approx(5.0 / math.sqrt(1.25))


def test_segment_noiseless_chessboard():
    spec = dceseg.chessboard_spec(side=20, n=64, seed=4)
    data, truth, times = spec.generate(noise=False)
    seg = dceseg.segment(data, delta=1.0, times=times)
    assert seg.final_count == 3
    assert dceseg.fm_index(seg.labels, truth) == pytest.approx(1.0)
    assert dceseg.weighted_fm(truth, seg.labels) == pytest.approx(1.0)
    assert np.all(dceseg.error_map(truth, seg.labels) == 0)


def test_segment_noisy_chessboard_and_trace():
    spec = dceseg.chessboard_spec(side=20, n=64, seed=11)
    data, truth, times = spec.generate()
    seg = dceseg.segment(data, delta=1.0, times=times)
    assert seg.final_count == 3
    assert dceseg.fm_index(seg.labels, truth) > 0.999

    trace = seg.trace
    assert len(trace["iteration"]) == 400 - seg.final_count
    # corrected dissimilarities are monotone within each phase
    for phase in ("local", "global"):
        sel = [i for i, ph in enumerate(trace["phase"]) if ph == phase]
        vals = trace["p_corrected"][sel]
        assert np.all(np.diff(vals) >= 0)
    # merges happen strictly below the control threshold
    assert np.all(trace["p_corrected"] < trace["control"])


def test_separations_and_phantom11():
    spec = dceseg.phantom11_spec(side=56, n=32, seed=2)
    seps = spec.separations()
    assert len(seps) == 55
    assert all(s["max_energy"] > 0 for s in seps)


def test_dces_roundtrip(tmp_path):
    spec = dceseg.chessboard_spec(side=10, n=16, seed=3)
    data, truth, times = spec.generate()
    path = str(tmp_path / "seq.dces")
    dceseg.write_dces(path, data, times)
    back, back_times = dceseg.read_dces(path)
    assert back_times == pytest.approx(times)
    assert np.allclose(back, data.astype(np.float32), atol=0)


def test_errors_raise_value_error():
    with pytest.raises(ValueError):
        dceseg.build_scheme(3)
    with pytest.raises(ValueError):
        dceseg.min_margin(4, 2.0)
    with pytest.raises(ValueError):
        dceseg.stabilize(np.full((4, 1, 1), -1.0), exponent=0.45)
