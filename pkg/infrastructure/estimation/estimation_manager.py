import math

import numpy as np
from loguru import logger

from commons.numerics import RngStream, cholesky_spd, inverse_spd, min_eigenvalue, solve_spd
from commons.utils import check_alpha
from errors.input_errors import DomainError
from errors.numerical_errors import DecompositionError, DegenerateFitError
from infrastructure.families.family_manager import NormalLinearFamily
from infrastructure.families.objective_manager import objective, score
from models.FitModel import CovarianceTriple, DesignDiagnostics, FitResult, SolverOptions
from models.RegressionModel import ModelData, Theta

ASYMPTOTIC = "asymptotic"
TABULATED = "tabulated"
CONVENTIONS = (ASYMPTOTIC, TABULATED)

MIN_DESIGN_EIGENVALUE = 1e-12
DEGENERATE_SCALE = 1e-10
# relative change below which the reweighting sweeps are considered settled
SWEEP_TOLERANCE = 1e-12
ARMIJO = 1e-4
MAX_HALVINGS = 60


def design_diagnostics(data: ModelData) -> DesignDiagnostics:
    """Smallest eigenvalue of (1/n)XᵀX, n·max leverage and the largest covariate in absolute value."""
    moment = data.design_moment()
    smallest = min_eigenvalue(moment)
    if smallest > MIN_DESIGN_EIGENVALUE:
        hat = np.einsum("ij,ji->i", data.design, solve_spd(data.design.T @ data.design, data.design.T))
        leverage = data.n * float(np.max(hat))
    else:
        leverage = math.inf
    return DesignDiagnostics(smallest, leverage, float(np.max(np.abs(data.design))))


def _check_design(data: ModelData, source: str):
    diagnostics = design_diagnostics(data)
    if diagnostics.min_eigenvalue_xtx_over_n <= MIN_DESIGN_EIGENVALUE:
        # dpotrf names the first failing pivot when it can see the defect
        cholesky_spd(data.design_moment())
        raise DecompositionError(
            f"design is numerically rank deficient (min eigenvalue {diagnostics.min_eigenvalue_xtx_over_n:.3e})",
            source=source,
            pivot=data.p,
        )
    return diagnostics


def _response_scale(data: ModelData) -> float:
    return max(float(np.std(data.response)), float(np.max(np.abs(data.response))), np.finfo(float).tiny)


def _check_sigma(sigma: float, floor: float, source: str):
    if not sigma >= floor:
        raise DegenerateFitError(f"scale estimate collapsed to {sigma:.3e}", source=source,
                                 details={"sigma": sigma, "threshold": floor})


def sigma_n_matrix(design_moment, sigma: float, alpha: float, convention: str = ASYMPTOTIC) -> CovarianceTriple:
    """
    Ψ_n, Ω_n and Σ_n of the normal linear model from (1/n)XᵀX, σ and α.

    Σ_n has β block σ²(α+1)³/(2α+1)^{3/2}·S⁻¹ and σ entry σ²(α+1)³(3α²+4α+2)/(4(2α+1)^{5/2}).
    The tabulated convention replaces σ² by σ in every block.
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown covariance convention '{convention}', expected one of {CONVENTIONS}",
                          source="sigma_n_matrix()")
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}", source="sigma_n_matrix()")
    a = check_alpha(alpha, source="sigma_n_matrix()")
    moment = np.atleast_2d(np.asarray(design_moment, dtype=float))
    p = moment.shape[0]
    scale = sigma ** 2 if convention == ASYMPTOTIC else sigma
    psi = np.zeros((p + 1, p + 1))
    omega = np.zeros((p + 1, p + 1))
    sigma_n = np.zeros((p + 1, p + 1))
    quadratic = 3 * a ** 2 + 4 * a + 2
    sigma_n[:p, :p] = scale * (a + 1) ** 3 / (2 * a + 1) ** 1.5 * inverse_spd(moment)
    sigma_n[p, p] = scale * (a + 1) ** 3 * quadratic / (4 * (2 * a + 1) ** 2.5)
    psi[:p, :p] = moment / (scale * (a + 1) ** 1.5)
    psi[p, p] = 2 / (scale * (a + 1) ** 2.5)
    omega[:p, :p] = moment / (scale * (2 * a + 1) ** 1.5)
    omega[p, p] = quadratic / (scale * (a + 1) ** 2 * (2 * a + 1) ** 2.5)
    return CovarianceTriple(psi, omega, sigma_n, convention)


def covariance_mlrm(data: ModelData, theta: Theta, alpha: float, convention: str = ASYMPTOTIC) -> CovarianceTriple:
    return sigma_n_matrix(data.design_moment(), theta.sigma, alpha, convention)


def fit_mle(data: ModelData, convention: str = ASYMPTOTIC) -> FitResult:
    """
    Closed form maximum likelihood fit: OLS coefficients and σ̂² = RSS/n.

    Raises:
        DecompositionError: Rank deficient design.
        DegenerateFitError: Zero residuals.
    """
    _check_design(data, "fit_mle()")
    beta = solve_spd(data.design.T @ data.design, data.design.T @ data.response)
    residuals = data.response - data.design @ beta
    sigma = math.sqrt(float(np.mean(residuals ** 2)))
    _check_sigma(sigma, DEGENERATE_SCALE * _response_scale(data), "fit_mle()")
    theta = Theta(beta, sigma)
    family = NormalLinearFamily(data.design)
    gradient = score(family, data, theta, 0.0)
    return FitResult(
        theta_hat=theta,
        alpha=0.0,
        converged=True,
        iterations=0,
        gradient_norm=float(np.max(np.abs(gradient))),
        sigma_n=covariance_mlrm(data, theta, 0.0, convention).sigma_n,
        objective_value=objective(family, data, theta, 0.0),
        design_moment=data.design_moment(),
        n=data.n,
        convention=convention,
    )


def _continuation_stages(start: float, target: float, step: float) -> list[float]:
    count = max(1, math.ceil((target - start) / step - 1e-12))
    return [start + (target - start) * k / count for k in range(1, count + 1)]


def _reweighting_sweeps(family, data, theta, alpha, options, floor):
    """Fixed point sweeps of the estimating equations: weighted least squares for β, σ² = (1+α)Σw r²/Σw."""
    x, y = data.design, data.response
    used = 0
    for _ in range(options.max_sweeps):
        weights = np.exp(-0.5 * alpha * data.residuals(theta) ** 2)
        beta = solve_spd((x.T * weights) @ x, x.T @ (weights * y))
        sigma = math.sqrt((1 + alpha) * float(weights @ (y - x @ beta) ** 2) / float(np.sum(weights)))
        _check_sigma(sigma, floor, "fit_rp()")
        candidate = Theta(beta, sigma)
        change = np.max(np.abs(candidate.to_vector() - theta.to_vector()) / np.maximum(1.0, np.abs(theta.to_vector())))
        theta = candidate
        used += 1
        if change <= SWEEP_TOLERANCE:
            break
    return theta, used


def _sigma_gradient_norm(gradient: np.ndarray, sigma: float) -> float:
    return float(max(np.max(np.abs(gradient[:-1]), initial=0.0), abs(gradient[-1]) / sigma))


def _newton_polish(family, data, theta, alpha, options, floor):
    """Damped Newton ascent on (β, log σ) with Armijo backtracking; gradient ascent where −H is not PD."""
    y = data.response
    used = 0
    for _ in range(options.max_newton):
        value, gradient, hessian = family.log_sigma_terms(y, theta, alpha)
        if _sigma_gradient_norm(gradient, theta.sigma) <= options.tolerance:
            break
        try:
            direction = solve_spd(-hessian, gradient)
        except DecompositionError:
            direction = gradient
        slope = float(gradient @ direction)
        point = np.append(theta.beta, math.log(theta.sigma))
        step = 1.0
        accepted = None
        for _ in range(MAX_HALVINGS):
            trial = point + step * direction
            if trial[-1] < 700:
                candidate = Theta(trial[:-1], math.exp(trial[-1]))
                if family.log_sigma_terms(y, candidate, alpha)[0] >= value + ARMIJO * step * slope:
                    accepted = candidate
                    break
            step /= 2
        if accepted is None:
            break
        _check_sigma(accepted.sigma, floor, "fit_rp()")
        theta = accepted
        used += 1
    gradient = family.log_sigma_terms(y, theta, alpha)[1]
    return theta, used, _sigma_gradient_norm(gradient, theta.sigma)


def _solve_stage(family, data, theta, alpha, options, floor, newton_first: bool = False):
    """
    One α stage. From a user or random start newton_first runs the polish alone and falls back
    to sweeps then polish when it stalls or σ collapses.
    """
    spent = 0
    if newton_first:
        try:
            polished, steps, gradient_norm = _newton_polish(family, data, theta, alpha, options, floor)
        except DegenerateFitError as error:
            logger.debug(f"_solve_stage() - alpha={alpha:.4f} Newton from the start failed: {error}")
        else:
            if gradient_norm <= options.tolerance:
                logger.debug(f"_solve_stage() - alpha={alpha:.4f} newton={steps} gradient={gradient_norm:.3e}")
                return polished, steps, gradient_norm
            theta, spent = polished, steps
    theta, sweeps = _reweighting_sweeps(family, data, theta, alpha, options, floor)
    theta, steps, gradient_norm = _newton_polish(family, data, theta, alpha, options, floor)
    logger.debug(f"_solve_stage() - alpha={alpha:.4f} sweeps={sweeps} newton={steps} gradient={gradient_norm:.3e}")
    return theta, spent + sweeps + steps, gradient_norm


def _multistart(family, data, alpha, best, mle: Theta, options, floor):
    """Random restarts around the MLE solved directly at alpha; keeps the highest converged objective."""
    rng = RngStream(options.seed, 0)
    spread = np.sqrt(np.diag(inverse_spd(data.design_moment()))) * mle.sigma
    best_value = objective(family, data, best, alpha)
    for restart in range(options.restarts):
        start = Theta(mle.beta + spread * rng.standard_normal(mle.beta.size),
                      mle.sigma * math.exp(float(rng.uniform(-1.0, 1.0, 1)[0])))
        try:
            candidate, _, gradient_norm = _solve_stage(family, data, start, alpha, options, floor, newton_first=True)
        except DegenerateFitError:
            continue
        value = objective(family, data, candidate, alpha)
        if gradient_norm <= options.tolerance and value > best_value:
            logger.info(f"_multistart() - restart {restart} improves the objective to {value:.10g}")
            best, best_value = candidate, value
    return best


def _fit_result(family, data, theta, alpha, iterations, gradient_norm, options, convention) -> FitResult:
    converged = gradient_norm <= options.tolerance
    if not converged:
        logger.warning(f"fit_rp() - alpha={alpha} did not converge, gradient norm {gradient_norm:.3e}")
    return FitResult(
        theta_hat=theta,
        alpha=alpha,
        converged=converged,
        iterations=iterations,
        gradient_norm=gradient_norm,
        sigma_n=covariance_mlrm(data, theta, alpha, convention).sigma_n,
        objective_value=objective(family, data, theta, alpha),
        design_moment=data.design_moment(),
        n=data.n,
        convention=convention,
    )


def fit_rp(
    data: ModelData,
    alpha: float,
    init: Theta = None,
    options: SolverOptions = None,
    convention: str = ASYMPTOTIC,
) -> FitResult:
    """
    Minimum RP estimate of the normal linear model.

    Without init the solution is tracked from the MLE along α in steps of at most
    options.alpha_step; each stage runs reweighting sweeps and then a damped Newton
    polish. With init the target α is solved directly from that point, polishing first
    and falling back to sweeps when the polish stalls or σ collapses.

    Args:
        data (ModelData): The sample.
        alpha (float): Tuning parameter, 0 gives the MLE.
        init (Theta): Optional starting point.
        options (SolverOptions): Solver knobs.
        convention (str): Covariance convention stored in the result.
    Returns:
        A FitResult, flagged non-converged when the score norm stays above the tolerance.
    Raises:
        DecompositionError: Rank deficient design.
        DegenerateFitError: σ̂ collapsed.
    """
    alpha = check_alpha(alpha, source="fit_rp()")
    options = options if options is not None else SolverOptions()
    mle = fit_mle(data, convention)
    if alpha == 0:
        return mle
    family = NormalLinearFamily(data.design)
    floor = DEGENERATE_SCALE * _response_scale(data)
    theta = mle.theta_hat if init is None else init
    stages = [alpha] if init is not None else _continuation_stages(0.0, alpha, options.alpha_step)
    iterations, gradient_norm = 0, math.inf
    for stage in stages:
        theta, used, gradient_norm = _solve_stage(family, data, theta, stage, options, floor,
                                                  newton_first=init is not None)
        iterations += used
    if options.multistart:
        theta = _multistart(family, data, alpha, theta, mle.theta_hat, options, floor)
        gradient_norm = _sigma_gradient_norm(family.log_sigma_terms(data.response, theta, alpha)[1], theta.sigma)
    return _fit_result(family, data, theta, alpha, iterations, gradient_norm, options, convention)


def fit_rp_path(
    data: ModelData,
    alphas: list[float],
    options: SolverOptions = None,
    convention: str = ASYMPTOTIC,
) -> dict[float, FitResult]:
    """
    Fits every α of a grid along one continuation path, so the solution at each α is the
    warm start of the next. Used by the Monte Carlo harness.
    """
    options = options if options is not None else SolverOptions()
    grid = sorted({check_alpha(alpha, source="fit_rp_path()") for alpha in alphas})
    mle = fit_mle(data, convention)
    family = NormalLinearFamily(data.design)
    floor = DEGENERATE_SCALE * _response_scale(data)
    results = {}
    theta, current, iterations, gradient_norm = mle.theta_hat, 0.0, 0, math.inf
    for alpha in grid:
        if alpha == 0:
            results[alpha] = mle
            continue
        for stage in _continuation_stages(current, alpha, options.alpha_step):
            theta, used, gradient_norm = _solve_stage(family, data, theta, stage, options, floor)
            iterations += used
        current = alpha
        results[alpha] = _fit_result(family, data, theta, alpha, iterations, gradient_norm, options, convention)
    return results
