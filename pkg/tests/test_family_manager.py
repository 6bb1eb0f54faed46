import math

import numpy as np
import pytest
from scipy import stats

from commons.numerics import integrate
from errors.input_errors import DomainError
from infrastructure.families.family_manager import DensityFamily, NormalLinearFamily
from infrastructure.families.objective_manager import (
    objective,
    objective_hessian,
    rp_loss_single,
    score,
    v_weight,
)
from models.RegressionModel import ModelData, Theta


def _families(design):
    return NormalLinearFamily(design), NormalLinearFamily(design, closed_form=False)


def _finite_difference(fn, vector, step=1e-6):
    gradient = np.empty(vector.size)
    for k in range(vector.size):
        upper, lower = vector.copy(), vector.copy()
        upper[k] += step
        lower[k] -= step
        gradient[k] = (fn(upper) - fn(lower)) / (2 * step)
    return gradient


def test_density_family_is_abstract():
    with pytest.raises(TypeError):
        DensityFamily(np.ones((3, 1)))


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0, 1.5])
@pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
def test_power_integral_closed_form_matches_quadrature(alpha, sigma):
    design = np.array([[1.0, 0.3], [1.0, -1.2]])
    closed, quadrature = _families(design)
    theta = Theta([0.4, 2.0], sigma)
    for i in range(2):
        assert closed.power_integral(i, theta, alpha + 1) == pytest.approx(
            quadrature.power_integral(i, theta, alpha + 1), rel=1e-8)


def test_power_integral_value():
    family = NormalLinearFamily(np.ones((2, 1)))
    expected = (2 * math.pi) ** -0.25 / math.sqrt(1.5)
    assert family.power_integral(0, Theta([0.0], 1.0), 1.5) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.5157, abs=1e-4)
    assert integrate(lambda y: stats.norm.pdf(y) ** 1.5) == pytest.approx(expected, rel=1e-10)


def test_power_integral_rejects_non_positive_exponent():
    family = NormalLinearFamily(np.ones((2, 1)), closed_form=False)
    with pytest.raises(DomainError):
        family.power_integral(0, Theta([0.0], 1.0), 0.0)


@pytest.mark.parametrize("alpha", [0.3, 1.0])
def test_score_integrals_closed_form_match_quadrature(alpha):
    design = np.array([[1.0, 0.7], [1.0, -0.4]])
    closed, quadrature = _families(design)
    theta = Theta([1.0, -0.5], 1.7)
    c = alpha + 1
    for i in range(2):
        np.testing.assert_allclose(closed.power_score_integral(i, theta, c),
                                   quadrature.power_score_integral(i, theta, c), atol=1e-9)
        np.testing.assert_allclose(closed.power_score_outer_integral(i, theta, c),
                                   quadrature.power_score_outer_integral(i, theta, c), rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(closed.power_score_jacobian_integral(i, theta, c),
                                   quadrature.power_score_jacobian_integral(i, theta, c), rtol=1e-8, atol=1e-10)


def test_score_is_gradient_of_log_density():
    family = NormalLinearFamily(np.array([[1.0, 2.0]]))
    theta = Theta([0.5, -0.3], 1.3)
    y = 1.1

    def log_density(vector):
        return float(family.log_density(0, y, Theta.from_vector(vector))[0])

    np.testing.assert_allclose(family.score(0, y, theta)[0], _finite_difference(log_density, theta.to_vector()),
                               rtol=1e-6, atol=1e-8)


def test_rp_loss_zero_residual():
    family = NormalLinearFamily(np.array([[1.0, 2.0], [1.0, 0.0]]))
    theta = Theta([1.0, 0.5], 2.0)
    assert rp_loss_single(family, 0, 2.0, theta, 0.0) == pytest.approx(0.5 * math.log(2 * math.pi * 4.0), rel=1e-12)


def test_rp_loss_with_alpha_matches_quadrature():
    closed, quadrature = _families(np.ones((2, 1)))
    theta = Theta([0.0], 1.0)
    expected = math.log(integrate(lambda y: stats.norm.pdf(y) ** 1.5)) / 1.5 + 0.5 * math.log(2 * math.pi)
    assert rp_loss_single(closed, 0, 0.0, theta, 0.5) == pytest.approx(expected, rel=1e-10)
    assert rp_loss_single(quadrature, 0, 0.0, theta, 0.5) == pytest.approx(expected, rel=1e-10)


def test_rp_loss_decreases_as_density_increases():
    family = NormalLinearFamily(np.ones((2, 1)))
    theta = Theta([0.0], 1.0)
    losses = [rp_loss_single(family, 0, y, theta, 0.5) for y in (3.0, 2.0, 1.0, 0.0)]
    assert losses == sorted(losses, reverse=True)


def test_rp_loss_infinite_when_density_vanishes():
    family = NormalLinearFamily(np.ones((2, 1)))
    with np.errstate(over="ignore"):
        assert rp_loss_single(family, 0, 1e200, Theta([0.0], 1.0), 0.5) == math.inf


def test_v_weight_values():
    family = NormalLinearFamily(np.ones((2, 1)))
    theta = Theta([0.0], 1.0)
    assert v_weight(family, 0, 0.0, theta, 1.0) == pytest.approx(math.pi ** -0.25, rel=1e-12)
    assert v_weight(family, 0, 0.0, theta, 1.0) == pytest.approx(0.7511, abs=1e-4)
    assert v_weight(family, 0, 60.0, theta, 1.0) < 1e-300


@pytest.mark.parametrize("alpha", [0.2, 0.5, 1.0, 2.0])
def test_v_weight_matches_rp_loss(alpha):
    closed, quadrature = _families(np.array([[1.0, 1.5], [1.0, -0.5]]))
    theta = Theta([0.3, 0.8], 0.7)
    for y in (-1.0, 0.2, 2.5):
        expected = math.exp(-alpha * rp_loss_single(closed, 1, y, theta, alpha))
        assert v_weight(closed, 1, y, theta, alpha) == pytest.approx(expected, rel=1e-10)
        assert v_weight(quadrature, 1, y, theta, alpha) == pytest.approx(expected, rel=1e-8)


def test_v_weight_scaling():
    family = NormalLinearFamily(np.ones((2, 1)))
    alpha, scale = 0.5, 2.0
    base = v_weight(family, 0, 0.8, Theta([0.0], 1.3), alpha)
    scaled = v_weight(family, 0, scale * 0.8, Theta([0.0], scale * 1.3), alpha)
    assert scaled == pytest.approx(base * scale ** (-alpha / (alpha + 1)), rel=1e-12)


def test_v_weight_needs_positive_alpha():
    with pytest.raises(DomainError):
        v_weight(NormalLinearFamily(np.ones((2, 1))), 0, 0.0, Theta([0.0], 1.0), 0.0)


def test_objective_identical_observations():
    design = np.ones((4, 1))
    data = ModelData(design, np.full(4, 2.0))
    family = NormalLinearFamily(design)
    theta = Theta([2.0], 1.5)
    assert objective(family, data, theta, 0.7) == pytest.approx(v_weight(family, 0, 2.0, theta, 0.7), rel=1e-12)


def test_objective_log_likelihood_branch(random_data):
    family = NormalLinearFamily(random_data.design)
    theta = Theta([0.8, 2.1], 1.2)
    rss = float(np.sum((random_data.response - random_data.design @ theta.beta) ** 2))
    expected = -0.5 * math.log(2 * math.pi * 1.44) - rss / (2 * random_data.n * 1.44)
    assert objective(family, random_data, theta, 0.0) == pytest.approx(expected, rel=1e-12)


def test_objective_matches_scalar_evaluation(make_data):
    data = make_data(5, n=5)
    closed, quadrature = _families(data.design)
    theta = Theta([1.1, 1.8], 0.9)
    alpha = 0.5
    weights = []
    for i in range(data.n):
        r = (data.response[i] - data.design[i] @ theta.beta) / theta.sigma
        density = math.exp(-0.5 * r * r) / (math.sqrt(2 * math.pi) * theta.sigma)
        mass = integrate(lambda y: stats.norm.pdf(y, data.design[i] @ theta.beta, theta.sigma) ** 1.5,
                         center=data.design[i] @ theta.beta, scale=theta.sigma)
        weights.append(density ** alpha / mass ** (alpha / (alpha + 1)))
    assert objective(closed, data, theta, alpha) == pytest.approx(np.mean(weights), rel=1e-10)
    assert objective(quadrature, data, theta, alpha) == pytest.approx(np.mean(weights), rel=1e-10)


def test_objective_rejects_mismatched_family(random_data):
    with pytest.raises(DomainError):
        objective(NormalLinearFamily(np.ones((3, 2))), random_data, Theta([0.0, 0.0], 1.0), 0.5)


def test_objective_permutation_invariance(random_data):
    order = np.random.default_rng(2).permutation(random_data.n)
    shuffled = ModelData(random_data.design[order], random_data.response[order])
    theta = Theta([1.0, 1.9], 1.1)
    for alpha in (0.0, 0.4):
        assert objective(NormalLinearFamily(shuffled.design), shuffled, theta, alpha) == pytest.approx(
            objective(NormalLinearFamily(random_data.design), random_data, theta, alpha), rel=1e-12)


def test_score_zero_at_ols(random_data):
    family = NormalLinearFamily(random_data.design)
    beta, *_ = np.linalg.lstsq(random_data.design, random_data.response, rcond=None)
    gradient = score(family, random_data, Theta(beta, 1.0), 0.0)
    np.testing.assert_allclose(gradient[:-1], 0.0, atol=1e-10)


def test_score_symmetric_residuals_cancel():
    design = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 0.0]])
    theta = Theta([0.5, 1.0], 1.0)
    data = ModelData(design, design @ theta.beta + np.array([0.8, -0.8, 0.0]))
    gradient = score(NormalLinearFamily(design), data, theta, 0.6)
    np.testing.assert_allclose(gradient[:-1], 0.0, atol=1e-14)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0])
def test_score_matches_finite_differences(make_data, alpha):
    rng = np.random.default_rng(29)
    data = make_data(6, n=6)
    family = NormalLinearFamily(data.design)
    for _ in range(20):
        theta = Theta(rng.normal(size=2) + [1.0, 2.0], math.exp(rng.uniform(-0.5, 0.5)))

        def value(vector):
            return objective(family, data, Theta.from_vector(vector), alpha)

        np.testing.assert_allclose(score(family, data, theta, alpha), _finite_difference(value, theta.to_vector()),
                                   rtol=1e-5, atol=1e-7)


def test_generic_score_matches_closed_form(random_data):
    closed, quadrature = _families(random_data.design)
    theta = Theta([0.9, 2.2], 1.1)
    np.testing.assert_allclose(score(quadrature, random_data, theta, 0.4), score(closed, random_data, theta, 0.4),
                               rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("alpha", [0.0, 0.5])
def test_hessian_matches_finite_differences(random_data, alpha):
    family = NormalLinearFamily(random_data.design)
    theta = Theta([0.9, 2.2], 1.1)
    numeric = np.column_stack([
        _finite_difference(lambda vector, k=k: score(family, random_data, Theta.from_vector(vector), alpha)[k],
                           theta.to_vector())
        for k in range(3)
    ])
    closed = objective_hessian(family, random_data, theta, alpha)
    np.testing.assert_allclose(closed, closed.T, atol=1e-14)
    np.testing.assert_allclose(closed, numeric, rtol=1e-5, atol=1e-7)
    generic = objective_hessian(NormalLinearFamily(random_data.design, closed_form=False), random_data, theta, alpha)
    np.testing.assert_allclose(generic, closed, rtol=1e-4, atol=1e-6)


def test_small_alpha_limit(random_data):
    family = NormalLinearFamily(random_data.design)
    theta = Theta([0.7, 1.6], 1.4)
    alpha = 1e-8
    limit_value = objective(family, random_data, theta, 0.0)
    limit_score = score(family, random_data, theta, 0.0)
    assert (objective(family, random_data, theta, alpha) - 1) / alpha == pytest.approx(limit_value, abs=1e-5)
    np.testing.assert_allclose(score(family, random_data, theta, alpha) / alpha, limit_score, atol=1e-5)
