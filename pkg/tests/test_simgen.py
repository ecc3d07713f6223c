import json
import math

import numpy as np
import pytest

from lipsparse.simgen import (
    Example,
    ExperimentConfig,
    block_equicorrelated_cov,
    cholesky_factor,
    equicorrelated_cov,
    export_problem,
    gen_group_classification,
    gen_heteroscedastic_regression,
    gen_sparse_classification,
    generate,
    rng_streams,
    sample_mvn,
    toeplitz_cov,
)

SMALL = dict(n_val=50, n_test=50)


def test_labels_half_positive():
    pb = gen_sparse_classification(ExperimentConfig(n=101, p=20, k_star=3, **SMALL))
    assert np.sum(pb.train.y == 1) == 51
    assert np.all(pb.train.y[:51] == 1) and np.all(pb.train.y[51:] == -1)


def test_columns_standardized_in_every_set():
    pb = gen_sparse_classification(ExperimentConfig(n=30, p=10, k_star=3, **SMALL))
    for d in (pb.train, pb.validation, pb.test):
        np.testing.assert_allclose(d.X.col_norms, 1.0, atol=1e-12)


def test_class_mean_before_standardization():
    cfg = ExperimentConfig(n=4000, p=6, k_star=3, delta=0.5, standardize=False, **SMALL)
    pb = gen_sparse_classification(cfg)
    X, y = pb.train.X.values, pb.train.y
    mean_pos = X[y == 1].mean(axis=0)
    assert np.all(np.abs(mean_pos - [0.5, 0.5, 0.5, 0, 0, 0]) < 5 / math.sqrt(4000))
    mean_neg = X[y == -1].mean(axis=0)
    assert np.all(np.abs(mean_neg + [0.5, 0.5, 0.5, 0, 0, 0]) < 5 / math.sqrt(4000))


def test_equicorrelated_block_correlation():
    cfg = ExperimentConfig(n=20000, p=5, k_star=3, delta=0.0, rho=0.4, standardize=False, **SMALL)
    C = np.corrcoef(gen_sparse_classification(cfg).train.X.values.T)
    assert abs(C[0, 1] - 0.4) < 0.03 and abs(C[1, 2] - 0.4) < 0.03
    assert abs(C[0, 3]) < 0.03 and abs(C[3, 4]) < 0.03


def test_indistinguishable_classes_chance_accuracy():
    cfg = ExperimentConfig(n=10, p=4, k_star=2, delta=0.0, rho=0.0, n_val=10, n_test=10000)
    test = gen_sparse_classification(cfg).test
    pred = np.where(test.X.values @ np.array([1.0, 1.0, 0.0, 0.0]) >= 0, 1.0, -1.0)
    acc = np.mean(pred == test.y)
    assert abs(acc - 0.5) < 3 * math.sqrt(0.25 / 10000)


def test_group_problem_structure():
    cfg = ExperimentConfig(example="group_classification", n=20, p=12, g_star=3, s_star=2, **SMALL)
    pb = gen_group_classification(cfg)
    assert pb.train.groups.n_groups == 4 and pb.train.groups.equal_contiguous() == 3
    np.testing.assert_array_equal(pb.support, np.arange(6))
    assert np.all(pb.beta_true[:6] == cfg.delta) and np.all(pb.beta_true[6:] == 0)


def test_group_all_relevant():
    cfg = ExperimentConfig(example="group_classification", n=20, p=12, g_star=3, s_star=4, delta=0.2, **SMALL)
    assert np.all(gen_group_classification(cfg).beta_true == 0.2)


def test_group_correlations():
    cfg = ExperimentConfig(
        example="group_classification", n=20000, p=6, g_star=3, s_star=1, delta=0.0, rho=0.3,
        standardize=False, **SMALL,
    )
    C = np.corrcoef(gen_group_classification(cfg).train.X.values.T)
    assert abs(C[0, 2] - 0.3) < 0.03 and abs(C[3, 5] - 0.3) < 0.03
    assert abs(C[0, 3]) < 0.03 and abs(C[2, 4]) < 0.03


def test_group_indivisible_p():
    with pytest.raises(ValueError, match="divisible"):
        ExperimentConfig(example="group_classification", p=10, g_star=3)


def test_regression_noise_structure():
    cfg = ExperimentConfig(example="heteroscedastic_regression", n=101, p=30, k_star=4, snr=2.0, **SMALL)
    pb = gen_heteroscedastic_regression(cfg)
    eps = pb.train.y - pb.train.X.values @ pb.beta_true
    assert np.sum(np.abs(eps) < 1e-12) == 101 - 50


def test_regression_snr_consistency():
    cfg = ExperimentConfig(example="heteroscedastic_regression", n=4000, p=20, k_star=4, snr=2.0, **SMALL)
    pb = gen_heteroscedastic_regression(cfg)
    signal = pb.train.X.values @ pb.beta_true
    eps = pb.train.y - signal
    sigma2_hat = np.mean(eps[np.abs(eps) > 0] ** 2)
    assert abs(signal @ signal / sigma2_hat - 2.0) < 0.2


def test_regression_noiseless_limit():
    cfg = ExperimentConfig(example="heteroscedastic_regression", n=30, p=10, k_star=3, snr=math.inf, **SMALL)
    pb = gen_heteroscedastic_regression(cfg)
    assert pb.sigma == 0.0
    np.testing.assert_array_equal(pb.train.y, pb.train.X.values @ pb.beta_true)


def test_ar1_correlation():
    cfg = ExperimentConfig(
        example="heteroscedastic_regression", n=20000, p=4, k_star=1, rho=0.5, standardize=False, **SMALL
    )
    C = np.corrcoef(generate(cfg).train.X.values.T)
    assert abs(C[0, 1] - 0.5) < 0.03 and abs(C[0, 2] - 0.25) < 0.03 and abs(C[1, 3] - 0.25) < 0.03
    assert abs(np.var(generate(cfg).train.X.values[:, 0]) - 1.0) < 0.05


def test_per_sample_snr_scales_noise():
    base = ExperimentConfig(example="heteroscedastic_regression", n=50, p=10, k_star=3, **SMALL)
    a = gen_heteroscedastic_regression(base).sigma
    b = gen_heteroscedastic_regression(base.with_(snr_per_sample=True)).sigma
    assert b == pytest.approx(a / math.sqrt(50))


def test_determinism_and_stream_independence():
    cfg = ExperimentConfig(n=20, p=8, k_star=2, **SMALL)
    a, b = generate(cfg), generate(cfg)
    assert np.array_equal(a.train.X.values, b.train.X.values)
    assert np.array_equal(a.test.y, b.test.y)
    c = generate(cfg.with_(n_test=80))
    assert np.array_equal(a.train.X.values, c.train.X.values)
    assert not np.array_equal(a.train.X.values, generate(cfg.with_(seed=1)).train.X.values)


def test_rng_streams_distinct():
    r = rng_streams(ExperimentConfig(n=20, p=8, k_star=2))
    draws = [g.standard_normal(3) for g in r]
    assert not np.allclose(draws[0], draws[1])


def test_sample_mvn_zero_factor():
    mean = np.array([1.0, -2.0])
    np.testing.assert_array_equal(sample_mvn(mean, np.zeros((2, 2)), np.random.default_rng(0)), mean)


def test_sample_mvn_identity_covariance():
    Z = sample_mvn(np.zeros(3), np.eye(3), np.random.default_rng(1), size=50000)
    np.testing.assert_allclose(np.cov(Z.T), np.eye(3), atol=0.05)


def test_sample_mvn_correlated():
    Z = sample_mvn(np.zeros(2), cholesky_factor(equicorrelated_cov(2, 2, 0.5)), np.random.default_rng(2), size=50000)
    assert abs(np.corrcoef(Z.T)[0, 1] - 0.5) < 0.03


def test_covariance_factors_reproduce():
    for cov in (equicorrelated_cov(6, 4, 0.3), block_equicorrelated_cov(6, 3, 0.2), toeplitz_cov(5, 0.6)):
        L = cholesky_factor(cov)
        np.testing.assert_allclose(L @ L.T, cov, atol=1e-10)
    with pytest.raises(ValueError):
        cholesky_factor(equicorrelated_cov(3, 3, -0.6))


def test_rank_one_block_matches_cholesky_moments():
    # sqrt(rho) z0 + sqrt(1 - rho) z has the equicorrelated covariance
    cfg = ExperimentConfig(n=40000, p=3, k_star=3, delta=0.0, rho=0.6, standardize=False, **SMALL)
    emp = np.cov(gen_sparse_classification(cfg).train.X.values.T)
    np.testing.assert_allclose(emp, equicorrelated_cov(3, 3, 0.6), atol=0.03)


@pytest.mark.parametrize(
    "kwargs",
    [dict(rho=1.0), dict(rho=-0.1), dict(k_star=0), dict(p=5, k_star=6), dict(n=1),
     dict(example="heteroscedastic_regression", snr=0.0)],
)
def test_invalid_configs(kwargs):
    with pytest.raises(ValueError):
        ExperimentConfig(**kwargs)


def test_export_problem(tmp_path):
    pb = generate(ExperimentConfig(example="group_classification", n=10, p=6, g_star=3, s_star=1, **SMALL))
    out = export_problem(pb, tmp_path / "pb")
    meta = json.loads((out / "meta.json").read_text())
    assert meta["schema_version"] == 1 and meta["groups"] == [[0, 1, 2], [3, 4, 5]]
    assert meta["config"]["example"] == Example.GROUP_CLASSIFICATION.value
    rows = (out / "train.csv").read_text().strip().splitlines()
    assert len(rows) == 10 and len(rows[0].split(",")) == 7
