import math

import numpy as np
import pytest

import reloss


def test_ranks():
    assert reloss.hard_rank([3.0, 1.0, 2.0, 2.0]) == [4.0, 1.0, 2.5, 2.5]
    soft = reloss.soft_rank([0.5, -1.0, 2.0], steepness=1000.0)
    assert soft == pytest.approx([2.0, 1.0, 3.0], abs=1e-3)
    p = reloss.relaxed_permutation([0.3, -0.2, 1.1, 0.0])
    assert p.shape == (4, 4)
    np.testing.assert_allclose(p.sum(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_correlations():
    assert reloss.spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0, abs=1e-7)
    assert reloss.spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0, abs=1e-7)
    assert reloss.kendall_tau([1, 2, 3], [1, 3, 2]) == pytest.approx(1 / 3)
    assert -1.0 <= reloss.spearman_soft([1, 2, 3], [3, 1, 2]) <= 1.0


def test_accuracy_and_errors():
    assert reloss.accuracy([[0.9, 0.1], [0.2, 0.8]], [0, 0]) == 0.5
    with pytest.raises(reloss.Error):
        reloss.accuracy([[0.9, 0.3]], [0])


def test_lossnet_roundtrip(tmp_path):
    net = reloss.LossNet.classification(hidden=16, seed=3)
    assert net.widths == [1, 16, 16, 16, 1]
    assert net.parameter_count == 1 * 16 + 16 + 2 * (16 * 16 + 16) + 16 + 1
    path = tmp_path / "loss.reloss"
    net.save(path)
    again = reloss.LossNet.load(path)
    assert again == net
    value = again([[0.7, 0.3], [0.4, 0.6]], [0, 1])
    assert math.isfinite(value)


def test_gradcheck_passes():
    report = reloss.gradcheck(points=3)
    assert report
    for op, (err, tol) in report.items():
        assert err <= tol, op


def test_corr_eval_and_usage_error():
    rho, tau = reloss.corr_eval({"loss": "negated-metric", "samples": "50"})
    assert rho == pytest.approx(-1.0, abs=1e-7)
    assert tau < 0
    with pytest.raises(reloss.UsageError):
        reloss.corr_eval({"no_such_key": "1"})
