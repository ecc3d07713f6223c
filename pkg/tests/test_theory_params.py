import math

import mpmath as mp
import numpy as np
import pytest

from lipsparse.theory_params import (
    TheoryInputs,
    least_squares_eta,
    least_squares_level,
    lipschitz_eta,
    lipschitz_loss_level,
    predicted_rate,
    slope_weights,
)

mp.mp.dps = 40


def test_weight_at_j_equals_r():
    w = slope_weights(7, 7)
    assert w[6] == pytest.approx(math.sqrt(1 + math.log(2)), rel=1e-15)


def test_first_weight_high_precision():
    ref = mp.sqrt(mp.log(20 * mp.e))
    assert slope_weights(10, 10)[0] == pytest.approx(float(ref), rel=1e-14)
    assert float(ref) == pytest.approx(1.99892, abs=2e-5)


def test_weights_nonincreasing():
    w = slope_weights(50, 50)
    assert np.all(np.diff(w) <= 0)


def test_weights_bad_lengths():
    with pytest.raises(ValueError):
        slope_weights(0, 3)
    with pytest.raises(ValueError):
        slope_weights(3, 0)


def test_l1_level_high_precision():
    inp = TheoryInputs(n=100, p=1000, k_star=10, alpha=2, delta=0.1)
    ref = 12 * 2 * mp.sqrt(mp.log(20) / 100) * mp.sqrt(mp.log(2000 * mp.e / 10))
    assert lipschitz_loss_level("l1", inp) == pytest.approx(float(ref), rel=1e-13)


def test_l1_level_equals_slope_entry_at_kstar():
    inp = TheoryInputs(n=100, p=1000, k_star=10)
    assert lipschitz_loss_level("l1", inp) == pytest.approx(lipschitz_loss_level("slope", inp)[9], rel=1e-14)


def test_group_level_high_precision():
    inp = TheoryInputs(n=200, p=400, G=20, s_star=3, m_star=60, gamma=1.5, alpha=2.5, delta=0.05, L=0.7, M=1.3)
    eta = 12 * mp.mpf("2.5") * mp.mpf("0.7") * mp.mpf("1.3") * mp.sqrt(mp.log(40) / 200)
    ref = eta * mp.sqrt(mp.log(40 * mp.e / 3)) + mp.mpf("2.5") * mp.mpf("0.7") * mp.mpf("1.3") * mp.sqrt(
        mp.mpf("1.5") * 60 / (3 * 200)
    )
    assert lipschitz_loss_level("group", inp) == pytest.approx(float(ref), rel=1e-13)


def test_bilinear_in_lm():
    base = TheoryInputs(n=100, p=50, k_star=5, L=1.0, M=1.0)
    scaled = TheoryInputs(n=100, p=50, k_star=5, L=2.0, M=1.5)
    for kind in ("l1", "group"):
        assert lipschitz_loss_level(kind, scaled) == pytest.approx(3.0 * lipschitz_loss_level(kind, base))
    np.testing.assert_allclose(lipschitz_loss_level("slope", scaled), 3.0 * lipschitz_loss_level("slope", base))


def test_delta_to_one_finite():
    lvl = lipschitz_loss_level("l1", TheoryInputs(n=100, p=50, delta=0.999999))
    assert 0 < lvl < math.inf


def test_levels_monotone_in_n_and_delta():
    a = lipschitz_loss_level("l1", TheoryInputs(n=100, p=50, k_star=5, delta=0.1))
    assert lipschitz_loss_level("l1", TheoryInputs(n=200, p=50, k_star=5, delta=0.1)) < a
    assert lipschitz_loss_level("l1", TheoryInputs(n=100, p=50, k_star=5, delta=0.01)) > a


def test_least_squares_eta_is_twice_lipschitz_eta():
    inp = TheoryInputs(n=100, p=1000, k_star=10, L=1.0, M=0.8, sigma=0.8)
    assert least_squares_eta(inp) == pytest.approx(2 * lipschitz_eta(inp), rel=1e-15)


def test_least_squares_zero_sigma():
    inp = TheoryInputs(n=100, p=1000, k_star=10, sigma=0.0, G=10, s_star=2)
    assert least_squares_level("lasso", inp) == 0.0
    assert least_squares_level("group_lasso", inp) == 0.0


def test_least_squares_concrete():
    inp = TheoryInputs(n=100, p=1000, k_star=10, sigma=1.0, alpha=2, delta=0.1)
    ref = 24 * 2 * mp.sqrt(mp.log(20) / 100) * mp.sqrt(mp.log(2000 * mp.e / 10))
    assert least_squares_level("lasso", inp) == pytest.approx(float(ref), rel=1e-13)


def test_predicted_rates():
    assert predicted_rate("sparse", 100, 1000, 10) == pytest.approx(math.sqrt(10 * math.log(100) / 100))
    assert predicted_rate("sparse", 100, 10, 10) == 0.0
    assert predicted_rate("sparse", 400, 1000, 10) == pytest.approx(predicted_rate("sparse", 100, 1000, 10) / 2)
    assert predicted_rate("group", 100, G=10, s_star=2, m_star=20) == pytest.approx(
        math.sqrt((2 * math.log(5) + 20) / 100)
    )


@pytest.mark.parametrize(
    "kwargs",
    [dict(delta=1.0), dict(delta=0.0), dict(alpha=1.5), dict(gamma=0.5), dict(k_star=0), dict(k_star=60), dict(s_star=2)],
)
def test_invalid_inputs(kwargs):
    with pytest.raises(ValueError):
        TheoryInputs(n=100, p=50, **kwargs)


def test_unknown_kinds():
    inp = TheoryInputs(n=10, p=5)
    with pytest.raises(ValueError):
        lipschitz_loss_level("ridge", inp)
    with pytest.raises(ValueError):
        least_squares_level("slope", inp)
    with pytest.raises(ValueError):
        predicted_rate("dense", 10)
