import math
from typing import Callable

import numpy as np
from loguru import logger

from commons.numerics import chisq_quantile, noncentral_chisq_sf, normal_cdf, normal_quantile, solve_spd
from commons.utils import as_vector, check_alpha, check_level
from errors.input_errors import DomainError, HypothesisError
from errors.numerical_errors import DegenerateDirectionError
from infrastructure.estimation.estimation_manager import ASYMPTOTIC, sigma_n_matrix
from models.FitModel import FitResult
from models.InferenceModel import LinearHypothesis, PowerReport, WaldOutcome
from models.RegressionModel import Theta

DEFAULT_LEVELS = (0.01, 0.05, 0.10)
# sample sizes above this are reported as unbounded
MAX_SAMPLE_SIZE = 1e9
UNBOUNDED = math.inf

SigmaProvider = Callable[[np.ndarray], np.ndarray]


def mlrm_sigma_provider(design_moment, alpha: float, convention: str = ASYMPTOTIC) -> SigmaProvider:
    """Σ(θ) of the normal linear model for a fixed (1/n)XᵀX, as a function of the θ vector."""
    alpha = check_alpha(alpha, source="mlrm_sigma_provider()")

    def provider(theta) -> np.ndarray:
        return sigma_n_matrix(design_moment, Theta.from_vector(as_vector(theta)).sigma, alpha, convention).sigma_n

    return provider


def wald_outcome(statistic: float, df: int, levels=DEFAULT_LEVELS) -> WaldOutcome:
    """p-value and decisions of a statistic referred to the central χ²_df."""
    statistic = max(float(statistic), 0.0)
    return WaldOutcome(
        statistic=statistic,
        df=df,
        p_value=noncentral_chisq_sf(statistic, df, 0.0),
        reject_at={level: statistic > chisq_quantile(df, level) for level in levels},
    )


def wald_statistic(difference, sigma, n: int) -> float:
    """n·dᵀΣ⁻¹d."""
    difference = np.atleast_1d(np.asarray(difference, dtype=float))
    return float(n * difference @ solve_spd(np.atleast_2d(sigma), difference))


def wald_simple(fit: FitResult, theta0, n: int = None, sigma_provider: SigmaProvider = None,
                levels=DEFAULT_LEVELS) -> WaldOutcome:
    """
    Simple null H₀: θ = θ⁰ with W = n(θ̂ − θ⁰)ᵀΣ⁻¹(θ⁰)(θ̂ − θ⁰), referred to χ² with dim θ degrees of freedom.

    Args:
        fit (FitResult): The fitted model.
        theta0 (Theta | array): Null value.
        n (int): Sample size, the fit's by default.
        sigma_provider (SigmaProvider): Σ as a function of θ; the normal linear model's by default.
        levels (tuple[float]): Levels reported in reject_at.
    """
    n = fit.n if n is None else n
    theta0 = as_vector(theta0)
    provider = sigma_provider if sigma_provider is not None else mlrm_sigma_provider(
        fit.design_moment, fit.alpha, fit.convention)
    statistic = wald_statistic(fit.theta_hat.to_vector() - theta0, provider(theta0), n)
    return wald_outcome(statistic, theta0.size, levels)


def composite_statistic(theta_hat, hyp: LinearHypothesis, sigma, n: int) -> float:
    """n(Mᵀθ̂ − m)ᵀ[MᵀΣM]⁻¹(Mᵀθ̂ − m)."""
    theta_hat = as_vector(theta_hat)
    if hyp.m_matrix.shape[0] != theta_hat.size:
        raise HypothesisError(f"M has {hyp.m_matrix.shape[0]} rows but θ has {theta_hat.size} coordinates",
                              source="composite_statistic()")
    inner = hyp.m_matrix.T @ np.atleast_2d(sigma) @ hyp.m_matrix
    return wald_statistic(hyp.m_matrix.T @ theta_hat - hyp.m_vector, inner, n)


def wald_composite(fit: FitResult, hyp: LinearHypothesis, n: int = None, sigma=None,
                   levels=DEFAULT_LEVELS) -> WaldOutcome:
    """Composite null H₀: Mᵀθ = m with Σ evaluated at θ̂ (the fit's Σ_n unless given)."""
    n = fit.n if n is None else n
    sigma = fit.sigma_n if sigma is None else sigma
    return wald_outcome(composite_statistic(fit.theta_hat, hyp, sigma, n), hyp.rank, levels)


def restricted_theta(theta_hat, hyp: LinearHypothesis) -> np.ndarray:
    """
    Projection of θ̂ onto {θ: Mᵀθ = m}, θ̂ − M(MᵀM)⁻¹(Mᵀθ̂ − m).
    For coordinate restrictions this substitutes the null values and keeps the free coordinates.
    """
    theta_hat = as_vector(theta_hat)
    if hyp.m_matrix.shape[0] != theta_hat.size:
        raise HypothesisError(f"M has {hyp.m_matrix.shape[0]} rows but θ has {theta_hat.size} coordinates",
                              source="restricted_theta()")
    gap = hyp.m_matrix.T @ theta_hat - hyp.m_vector
    return theta_hat - hyp.m_matrix @ solve_spd(hyp.m_matrix.T @ hyp.m_matrix, gap)


def wald_composite_at_null(fit: FitResult, hyp: LinearHypothesis, n: int = None,
                           sigma_provider: SigmaProvider = None, levels=DEFAULT_LEVELS) -> WaldOutcome:
    """
    Composite null H₀: Mᵀθ = m with Σ evaluated at the null-restricted point θ̃ = restricted_theta(θ̂).

    Falls back to the fit's Σ_n when θ̃ leaves the parameter space (σ̃ <= 0).

    Args:
        fit (FitResult): The fitted model.
        hyp (LinearHypothesis): The restriction.
        n (int): Sample size, the fit's by default.
        sigma_provider (SigmaProvider): Σ as a function of θ; the normal linear model's by default.
        levels (tuple[float]): Levels reported in reject_at.
    """
    n = fit.n if n is None else n
    theta_null = restricted_theta(fit.theta_hat.to_vector(), hyp)
    if theta_null[-1] <= 0:
        logger.warning(f"wald_composite_at_null() - restricted σ={theta_null[-1]:.4g} is not positive, "
                       f"using Σ at θ̂ for {hyp.label}")
        sigma = fit.sigma_n
    else:
        provider = sigma_provider if sigma_provider is not None else mlrm_sigma_provider(
            fit.design_moment, fit.alpha, fit.convention)
        sigma = provider(theta_null)
    return wald_outcome(composite_statistic(fit.theta_hat, hyp, sigma, n), hyp.rank, levels)


def _power_terms(theta_star, theta0, sigma_provider: SigmaProvider) -> tuple[float, float, int]:
    theta_star, theta0 = as_vector(theta_star), as_vector(theta0)
    difference = theta_star - theta0
    sigma_null = np.atleast_2d(sigma_provider(theta0))
    weighted = solve_spd(sigma_null, difference)
    ell = float(difference @ weighted)
    variance = 4 * float(weighted @ np.atleast_2d(sigma_provider(theta_star)) @ weighted)
    return ell, math.sqrt(max(variance, 0.0)), difference.size


def approx_power(theta_star, theta0, alpha: float, n: int, level: float,
                 sigma_provider: SigmaProvider) -> PowerReport:
    """
    Normal approximation 1 − Φ((√n/σ_W)(χ²_{df,ν}/n − ℓ(θ*))) of the simple test's power at θ*.

    Raises:
        DegenerateDirectionError: σ_W = 0 although θ* ≠ θ⁰.
    """
    check_alpha(alpha, source="approx_power()")
    level = check_level(level, source="approx_power()")
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}", source="approx_power()")
    if np.array_equal(as_vector(theta_star), as_vector(theta0)):
        return PowerReport(0.0, 0.0, level, n)
    ell, sigma_w, df = _power_terms(theta_star, theta0, sigma_provider)
    if sigma_w == 0:
        raise DegenerateDirectionError("σ_W vanishes along θ* − θ⁰", source="approx_power()")
    argument = math.sqrt(n) / sigma_w * (chisq_quantile(df, level) / n - ell)
    return PowerReport(ell, sigma_w, 1 - normal_cdf(argument), n)


def required_sample_size(theta_star, theta0, alpha: float, target_power: float, level: float,
                         sigma_provider: SigmaProvider):
    """
    Smallest n reaching target_power by the normal approximation:
    ⌈(A + B + √(A(A + 2B)))/(2ℓ²)⌉ with A = σ_W²(Φ⁻¹(1 − π*))² and B = 2ℓχ²_{df,ν}.

    Returns:
        An int >= 1, or UNBOUNDED when the answer exceeds 1e9.
    Raises:
        DegenerateDirectionError: ℓ(θ*) = 0.
    """
    check_alpha(alpha, source="required_sample_size()")
    level = check_level(level, source="required_sample_size()")
    if not 0 < target_power < 1:
        raise DomainError(f"target power must lie in (0, 1), got {target_power}", source="required_sample_size()")
    ell, sigma_w, df = _power_terms(theta_star, theta0, sigma_provider)
    if ell == 0:
        raise DegenerateDirectionError("ℓ(θ*) = 0, there is no effect to detect", source="required_sample_size()")
    a = sigma_w ** 2 * normal_quantile(1 - target_power) ** 2
    b = 2 * ell * chisq_quantile(df, level)
    n = (a + b + math.sqrt(a * (a + 2 * b))) / (2 * ell ** 2)
    if not n <= MAX_SAMPLE_SIZE:
        return UNBOUNDED
    return max(1, math.ceil(n))


def contiguous_power(hyp: LinearHypothesis, d, alpha: float, level: float, sigma_n) -> float:
    """
    Asymptotic power under θ⁰ + n^{-1/2}d: the χ²_r(δ) tail beyond χ²_{r,ν}, δ = d*ᵀ[MᵀΣM]⁻¹d*, d* = Mᵀd.
    """
    check_alpha(alpha, source="contiguous_power()")
    level = check_level(level, source="contiguous_power()")
    shift = hyp.m_matrix.T @ as_vector(d)
    delta = float(shift @ solve_spd(hyp.m_matrix.T @ np.atleast_2d(sigma_n) @ hyp.m_matrix, shift))
    return noncentral_chisq_sf(chisq_quantile(hyp.rank, level), hyp.rank, max(delta, 0.0))
