import math

import numpy as np
from scipy.optimize import minimize_scalar

from commons.numerics import solve_spd
from commons.utils import check_alpha
from errors.input_errors import DomainError
from infrastructure.estimation.estimation_manager import ASYMPTOTIC, covariance_mlrm
from infrastructure.families.family_manager import DensityFamily
from models.InferenceModel import LinearHypothesis
from models.RegressionModel import ModelData, Theta
from models.RobustnessModel import IFReport, IFRequest

UNBOUNDED = math.inf
# standardised residual range searched by the numeric sup
RESIDUAL_RANGE = 20.0
GOLDEN_TOLERANCE = 1e-10


def _m_matrix(family: DensityFamily, theta: Theta, alpha: float) -> np.ndarray:
    """M_{n,α}(θ) = (1/n)Σ(A_i − A*_i)/(∫f_i^{α+1})² in the model case g_i = f_i."""
    c = alpha + 1
    total = np.zeros((family.dim, family.dim))
    for i in range(family.n):
        mass = family.power_integral(i, theta, c)
        mean = family.power_score_integral(i, theta, c)
        outer = family.power_score_outer_integral(i, theta, c)
        jacobian = family.power_score_jacobian_integral(i, theta, c)
        a = ((1 + alpha) * outer + jacobian) * mass - (1 + alpha) * np.outer(mean, mean)
        a_star = (alpha * outer + jacobian) * mass - alpha * np.outer(mean, mean)
        total += (a - a_star) / mass ** 2
    return total / family.n


def _general_d(family: DensityFamily, i: int, t: float, theta: Theta, alpha: float) -> np.ndarray:
    """−ℓ_i(t)/(∫f_i^{α+1})² with ℓ_i(t) = f_i^α(t)(∫f_i^{α+1}u_i − u_i(t)∫f_i^{α+1})."""
    c = alpha + 1
    mass = family.power_integral(i, theta, c)
    mean = family.power_score_integral(i, theta, c)
    density_power = math.exp(alpha * float(family.log_density(i, t, theta)[0]))
    ell = density_power * (mean - family.score(i, t, theta)[0] * mass)
    return -ell / mass ** 2


def if_general(family: DensityFamily, data: ModelData, req: IFRequest) -> IFReport:
    """
    First order influence function of the minimum RP functional through the family's
    integral contract. Contamination in all directions sums the per direction terms.

    Raises:
        DecompositionError: M_{n,α} is singular.
    """
    alpha = check_alpha(req.alpha, source="if_general()")
    if family.n != data.n:
        raise DomainError(f"family built on {family.n} rows but data has {data.n}", source="if_general()")
    directions = req.directions(data.n)
    m_matrix = _m_matrix(family, req.theta, alpha)
    first_order = [
        solve_spd(m_matrix, sum(_general_d(family, i, t, req.theta, alpha) for i in directions))
        for t in req.contamination_points
    ]
    return IFReport(req.contamination_points, first_order)


def mlrm_d_vector(x, theta: Theta, alpha: float, t: float) -> np.ndarray:
    """
    Estimating function contribution of a contamination at t in a direction with covariates x:
    D(β) = −(1/σ)e·r·x and D(σ) = −(1/σ)e·(r² − 1/(α+1)), e = exp(−αr²/2), r = (t − xᵀβ)/σ.
    """
    x = np.asarray(x, dtype=float)
    r = (t - x @ theta.beta) / theta.sigma
    weight = math.exp(-0.5 * alpha * r ** 2)
    return -weight / theta.sigma * np.append(r * x, r ** 2 - 1 / (alpha + 1))


def _sum_d(data: ModelData, req: IFRequest, t: float) -> np.ndarray:
    return sum(mlrm_d_vector(data.design[i], req.theta, req.alpha, t) for i in req.directions(data.n))


def if_mlrm_closed(data: ModelData, req: IFRequest) -> IFReport:
    """First order IF of the normal linear model in closed form, IF = −Ψ_n⁻¹D with Ψ_n positive definite."""
    alpha = check_alpha(req.alpha, source="if_mlrm_closed()")
    psi = covariance_mlrm(data, req.theta, alpha, ASYMPTOTIC).psi_n
    first_order = [-solve_spd(psi, _sum_d(data, req, t)) for t in req.contamination_points]
    return IFReport(req.contamination_points, first_order)


def if2_wald(data: ModelData, req: IFRequest, hyp: LinearHypothesis = None, sigma_n=None, psi_n=None) -> IFReport:
    """
    Second order IF of the Wald-type functionals at the null.

    Simple null: 2Dᵀ[Ψ⁻¹Σ⁻¹Ψ⁻¹]D. Composite null (hyp given): 2(Ψ⁻¹D)ᵀM[MᵀΣM]⁻¹Mᵀ(Ψ⁻¹D).
    Σ_n and Ψ_n default to the normal linear model's at req.theta.
    """
    alpha = check_alpha(req.alpha, source="if2_wald()")
    if sigma_n is None or psi_n is None:
        triple = covariance_mlrm(data, req.theta, alpha, ASYMPTOTIC)
        sigma_n = triple.sigma_n if sigma_n is None else sigma_n
        psi_n = triple.psi_n if psi_n is None else psi_n
    sigma_n, psi_n = np.asarray(sigma_n, dtype=float), np.asarray(psi_n, dtype=float)
    psi_inverse = solve_spd(psi_n, np.eye(psi_n.shape[0]))
    kernel = psi_inverse @ solve_spd(sigma_n, psi_inverse)
    first_order, simple, composite = [], [], []
    for t in req.contamination_points:
        d = _sum_d(data, req, t)
        influence = -psi_inverse @ d
        first_order.append(influence)
        simple.append(max(2 * float(d @ kernel @ d), 0.0))
        if hyp is not None:
            projected = hyp.m_matrix.T @ influence
            inner = hyp.m_matrix.T @ sigma_n @ hyp.m_matrix
            composite.append(max(2 * float(projected @ solve_spd(inner, projected)), 0.0))
    return IFReport(req.contamination_points, first_order, simple, composite if hyp is not None else None)


def second_order_from_first(report: IFReport, sigma_n, hyp: LinearHypothesis = None) -> list[float]:
    """2·IFᵀΣ⁻¹IF (or its projection on M) from first order values."""
    sigma_n = np.asarray(sigma_n, dtype=float)
    if hyp is None:
        return [2 * float(value @ solve_spd(sigma_n, value)) for value in report.first_order]
    inner = hyp.m_matrix.T @ sigma_n @ hyp.m_matrix
    return [2 * float((hyp.m_matrix.T @ value) @ solve_spd(inner, hyp.m_matrix.T @ value))
            for value in report.first_order]


def _beta_factor(alpha: float) -> float:
    return (alpha + 1) ** 1.5 / math.sqrt(alpha) * math.exp(-0.5)


def _sigma_factor(alpha: float) -> float:
    # larger of the two local maxima of |IF(σ)|: r² = 1/(α+1) + 2/α and r = 0
    return max((alpha + 1) ** 2.5 / alpha * math.exp(-(3 * alpha + 2) / (2 * (alpha + 1))), (alpha + 1) ** 1.5 / 2)


def gross_error_sensitivity(data: ModelData, i0: int, theta: Theta, alpha: float) -> tuple[float, float]:
    """
    Closed form gross error sensitivities (γ*(β), γ*(σ)) for contamination of observation i0 (1-based).

    γ*(β) = σ(α+1)^{3/2}α^{-1/2}e^{-1/2}‖S⁻¹x_{i0}‖ with S = (1/n)XᵀX. Both are UNBOUNDED at α = 0.
    """
    alpha = check_alpha(alpha, source="gross_error_sensitivity()")
    if not 1 <= i0 <= data.n:
        raise DomainError(f"direction {i0} outside 1..{data.n}", source="gross_error_sensitivity()")
    if alpha == 0:
        return UNBOUNDED, UNBOUNDED
    leverage = float(np.linalg.norm(solve_spd(data.design_moment(), data.design[i0 - 1])))
    return theta.sigma * _beta_factor(alpha) * leverage, theta.sigma * _sigma_factor(alpha)


def _golden_sup(fn, low: float, peak: float, high: float) -> float:
    """Maximum of a function unimodal on [low, high] with interior mode near peak."""
    if peak >= high:
        return fn(high)
    result = minimize_scalar(lambda r: -fn(r), bracket=(low, peak, high), method="golden",
                             tol=GOLDEN_TOLERANCE)
    return -float(result.fun)


def gross_error_numeric(data: ModelData, i0: int, theta: Theta, alpha: float) -> tuple[float, float]:
    """Sup of ‖IF(β)‖ and |IF(σ)| over t = x_{i0}ᵀβ + rσ, |r| ≤ 20, by golden section search."""
    alpha = check_alpha(alpha, strictly_positive=True, source="gross_error_numeric()")
    centre = float(data.design[i0 - 1] @ theta.beta)

    def influence(r: float) -> np.ndarray:
        req = IFRequest(i0, [centre + r * theta.sigma], theta, alpha)
        return if_mlrm_closed(data, req).first_order[0]

    def beta_norm(r: float) -> float:
        return float(np.linalg.norm(influence(r)[:-1]))

    def sigma_abs(r: float) -> float:
        return abs(float(influence(r)[-1]))

    c = 1 / (alpha + 1)
    gamma_beta = _golden_sup(beta_norm, 0.0, 1 / math.sqrt(alpha), RESIDUAL_RANGE)
    gamma_sigma = max(sigma_abs(0.0), _golden_sup(sigma_abs, math.sqrt(c), math.sqrt(c + 2 / alpha), RESIDUAL_RANGE))
    return gamma_beta, gamma_sigma


def gross_error_optima() -> tuple[float, float]:
    """α minimising γ*(β) and γ*(σ), by golden section search."""
    beta = minimize_scalar(_beta_factor, bracket=(0.1, 0.5, 2.0), method="golden", tol=GOLDEN_TOLERANCE)
    sigma = minimize_scalar(_sigma_factor, bracket=(0.1, 0.8, 2.0), method="golden", tol=GOLDEN_TOLERANCE)
    return float(beta.x), float(sigma.x)


def are(alpha: float) -> tuple[float, float]:
    """Asymptotic relative efficiencies of β̂_α and σ̂_α with respect to the MLE."""
    a = check_alpha(alpha, source="are()")
    are_beta = (2 * a + 1) ** 1.5 / (a + 1) ** 3
    are_sigma = 2 * (2 * a + 1) ** 2.5 / ((a + 1) ** 3 * (3 * a ** 2 + 4 * a + 2))
    return are_beta, are_sigma
