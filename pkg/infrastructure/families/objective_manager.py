import math

import numpy as np
from loguru import logger

from commons.utils import check_alpha
from errors.input_errors import DomainError
from infrastructure.families.family_manager import DensityFamily, NormalLinearFamily
from models.RegressionModel import ModelData, Theta

# relative step of the central differences used for families without a closed form Hessian
HESSIAN_STEP = 1e-5


def _check_data(family: DensityFamily, data: ModelData):
    if family.n != data.n:
        raise DomainError(f"family built on {family.n} rows but data has {data.n}", source="objective()")


def _closed_form(family: DensityFamily) -> bool:
    return isinstance(family, NormalLinearFamily) and family.has_closed_form


def rp_loss_single(family: DensityFamily, i: int, y: float, theta: Theta, alpha: float) -> float:
    """
    Per observation RP loss, θ-free constant dropped.

    α > 0: (1/(α+1))·log ∫f_i^{α+1} − log f_i(y, θ). α = 0: −log f_i(y, θ).
    A zero density gives an infinite loss, which is logged.
    """
    alpha = check_alpha(alpha, source="rp_loss_single()")
    log_f = float(family.log_density(i, y, theta)[0])
    if not math.isfinite(log_f):
        logger.warning(f"rp_loss_single() - f_{i}({y}) = 0, loss is infinite")
        return math.inf
    if alpha == 0:
        return -log_f
    return math.log(family.power_integral(i, theta, alpha + 1)) / (alpha + 1) - log_f


def v_weight(family: DensityFamily, i: int, y: float, theta: Theta, alpha: float) -> float:
    """V_i(y, θ) = f_i(y, θ)^α / (∫f_i^{α+1})^{α/(α+1)} = exp(−α·rp_loss_single)."""
    alpha = check_alpha(alpha, strictly_positive=True, source="v_weight()")
    if _closed_form(family):
        r = family._residual(i, y, theta)[0]
        return float(NormalLinearFamily.v_weights(r, theta.sigma, alpha))
    return math.exp(-alpha * rp_loss_single(family, i, y, theta, alpha))


def objective(family: DensityFamily, data: ModelData, theta: Theta, alpha: float) -> float:
    """
    H_n^α(θ): the mean of the V_i weights for α > 0, the mean log density for α = 0.

    The minimum RP estimator maximises this function.
    """
    alpha = check_alpha(alpha, source="objective()")
    _check_data(family, data)
    if _closed_form(family):
        return family.log_sigma_terms(data.response, theta, alpha)[0]
    if alpha == 0:
        return float(np.mean([family.log_density(i, data.response[i], theta)[0] for i in range(data.n)]))
    return float(np.mean([v_weight(family, i, data.response[i], theta, alpha) for i in range(data.n)]))


def score(family: DensityFamily, data: ModelData, theta: Theta, alpha: float) -> np.ndarray:
    """
    Gradient of the objective with respect to (β, σ).

    For α > 0 each observation contributes α·V_i·(u_i(Y_i) − ∫f_i^{α+1}u_i / ∫f_i^{α+1}).
    """
    alpha = check_alpha(alpha, source="score()")
    _check_data(family, data)
    if _closed_form(family):
        gradient = family.log_sigma_terms(data.response, theta, alpha)[1]
        gradient[-1] /= theta.sigma
        return gradient
    total = np.zeros(family.dim)
    for i in range(data.n):
        u = family.score(i, data.response[i], theta)[0]
        if alpha == 0:
            total += u
            continue
        centre = family.power_score_integral(i, theta, alpha + 1) / family.power_integral(i, theta, alpha + 1)
        total += alpha * v_weight(family, i, data.response[i], theta, alpha) * (u - centre)
    return total / data.n


def objective_hessian(family: DensityFamily, data: ModelData, theta: Theta, alpha: float) -> np.ndarray:
    """
    Hessian of the objective with respect to (β, σ).

    Closed form for the normal family; central differences of `score` otherwise.
    """
    alpha = check_alpha(alpha, source="objective_hessian()")
    _check_data(family, data)
    if _closed_form(family):
        _, gradient, hessian = family.log_sigma_terms(data.response, theta, alpha)
        sigma = theta.sigma
        hessian[:-1, -1] /= sigma
        hessian[-1, :-1] /= sigma
        hessian[-1, -1] = (hessian[-1, -1] - gradient[-1]) / sigma ** 2
        return hessian
    vector = theta.to_vector()
    hessian = np.empty((vector.size, vector.size))
    for k in range(vector.size):
        step = HESSIAN_STEP * max(1.0, abs(vector[k]))
        upper, lower = vector.copy(), vector.copy()
        upper[k] += step
        lower[k] -= step
        hessian[:, k] = (score(family, data, Theta.from_vector(upper), alpha)
                         - score(family, data, Theta.from_vector(lower), alpha)) / (2 * step)
    return (hessian + hessian.T) / 2
