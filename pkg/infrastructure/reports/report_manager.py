import math

import numpy as np
import pandas as pd
from loguru import logger

from errors.base_errors import RenyiError
from infrastructure.estimation.estimation_manager import ASYMPTOTIC, fit_rp
from infrastructure.inference.inference_manager import (
    UNBOUNDED,
    approx_power,
    mlrm_sigma_provider,
    required_sample_size,
    wald_composite,
)
from infrastructure.robustness.robustness_manager import (
    are,
    gross_error_optima,
    gross_error_sensitivity,
    if2_wald,
    if_mlrm_closed,
)
from infrastructure.simulation.simulation_manager import contiguous_table
from models.FitModel import SolverOptions
from models.InferenceModel import LinearHypothesis
from models.RegressionModel import ModelData, Theta
from models.RobustnessModel import IFRequest

DEFAULT_ALPHAS = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
ARE_ALPHAS = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.8, 1.0, 1.5]
ALL_ROWS = "all"
WITHOUT_EXCLUDED = "excluded"


def _samples(data: ModelData, exclude: list[int]) -> list[tuple[str, ModelData]]:
    samples = [(ALL_ROWS, data)]
    if exclude:
        samples.append((WITHOUT_EXCLUDED, data.without_rows(exclude)))
    return samples


def _fits(data: ModelData, alphas, exclude, options, convention):
    """Yields (sample, alpha, FitResult | None, error message | None), continuing past failed fits."""
    for sample, subset in _samples(data, exclude):
        for alpha in alphas:
            try:
                yield sample, subset, alpha, fit_rp(subset, alpha, options=options, convention=convention), None
            except RenyiError as error:
                logger.warning(f"_fits() - {sample} rows, alpha={alpha}: {error}")
                yield sample, subset, alpha, None, str(error)


def build_fit_table(data: ModelData, alphas=None, exclude: list[int] = None, options: SolverOptions = None,
                    convention: str = ASYMPTOTIC) -> pd.DataFrame:
    """One row per (sample, α): σ̂, β̂₀..β̂_p, convergence information and objective."""
    alphas = DEFAULT_ALPHAS if alphas is None else alphas
    rows = []
    for sample, subset, alpha, fit, error in _fits(data, alphas, exclude, options, convention):
        row = {"sample": sample, "alpha": alpha, "n": subset.n, "sigma": math.nan}
        row.update({name: math.nan for name in data.coefficient_names})
        row.update({"converged": False, "iterations": 0, "gradient_norm": math.nan, "objective": math.nan,
                    "error": error if error is not None else ""})
        if fit is not None:
            row["sigma"] = fit.theta_hat.sigma
            row.update(dict(zip(data.coefficient_names, fit.theta_hat.beta.tolist())))
            row.update({"converged": fit.converged, "iterations": fit.iterations,
                        "gradient_norm": fit.gradient_norm, "objective": fit.objective_value})
        rows.append(row)
    return pd.DataFrame(rows)


def build_test_table(data: ModelData, hypotheses: list[LinearHypothesis], alphas=None, level: float = 0.05,
                     exclude: list[int] = None, options: SolverOptions = None,
                     convention: str = ASYMPTOTIC) -> pd.DataFrame:
    """One row per (sample, α, hypothesis) with the Wald-type statistic, its p-value and the decision at level."""
    alphas = DEFAULT_ALPHAS if alphas is None else alphas
    rows = []
    for sample, subset, alpha, fit, error in _fits(data, alphas, exclude, options, convention):
        for hyp in hypotheses:
            row = {"sample": sample, "alpha": alpha, "hypothesis": hyp.label, "statistic": math.nan,
                   "df": hyp.rank, "p_value": math.nan, "reject": False, "converged": False,
                   "error": error if error is not None else ""}
            if fit is not None:
                outcome = wald_composite(fit, hyp, levels=(level,))
                row.update({"statistic": outcome.statistic, "p_value": outcome.p_value,
                            "reject": outcome.reject_at[level], "converged": fit.converged})
            rows.append(row)
    return pd.DataFrame(rows)


def build_influence_tables(data: ModelData, theta: Theta, alphas, direction, points,
                           hyp: LinearHypothesis = None) -> tuple[pd.DataFrame, dict]:
    """
    IF curves over the contamination grid for every α, plus a per α summary of the
    gross error sensitivities (UNBOUNDED at α = 0).
    """
    rows, summary = [], {}
    i0 = 1 if direction == "all" else direction
    for alpha in alphas:
        req = IFRequest(direction, points, theta, alpha)
        first = if_mlrm_closed(data, req)
        second = if2_wald(data, req, hyp)
        for k, t in enumerate(req.contamination_points):
            value = first.first_order[k]
            rows.append({
                "alpha": alpha,
                "t": t,
                "if_norm": float(np.linalg.norm(value)),
                "if_beta_norm": float(np.linalg.norm(value[:-1])),
                "if_sigma": float(value[-1]),
                "if2_simple": second.second_order_simple[k],
                "if2_composite": second.second_order_composite[k] if hyp is not None else math.nan,
            })
        gamma_beta, gamma_sigma = gross_error_sensitivity(data, i0, theta, alpha)
        summary[str(alpha)] = {
            "sup_norm_on_grid": first.sup_norm,
            "gamma_beta": gamma_beta,
            "gamma_sigma": gamma_sigma,
            "bounded": alpha > 0,
        }
    return pd.DataFrame(rows), summary


def build_gross_error_table(data: ModelData, theta: Theta, i0: int, alphas) -> tuple[pd.DataFrame, dict]:
    rows = []
    for alpha in alphas:
        gamma_beta, gamma_sigma = gross_error_sensitivity(data, i0, theta, alpha)
        rows.append({"alpha": alpha, "gamma_beta": gamma_beta, "gamma_sigma": gamma_sigma})
    best_beta, best_sigma = gross_error_optima()
    return pd.DataFrame(rows), {"argmin_gamma_beta": best_beta, "argmin_gamma_sigma": best_sigma}


def build_are_table(alphas=None) -> pd.DataFrame:
    """ARE of β̂_α and σ̂_α, in percent."""
    alphas = ARE_ALPHAS if alphas is None else alphas
    rows = []
    for alpha in alphas:
        are_beta, are_sigma = are(alpha)
        rows.append({"alpha": alpha, "are_beta": 100 * are_beta, "are_sigma": 100 * are_sigma})
    return pd.DataFrame(rows)


def build_power_table(alphas=None, d_values=None, sigma: float = 1.0, level: float = 0.05) -> pd.DataFrame:
    return contiguous_table(alphas, d_values, sigma, level)


def build_power_plan(design_moment, theta_star: Theta, theta0: Theta, alphas, n_grid, level: float = 0.05,
                     target_power: float = 0.8) -> tuple[pd.DataFrame, dict]:
    """Approximate power of the simple test over an n grid and the sample size reaching target_power, per α."""
    rows, summary = [], {}
    for alpha in alphas:
        provider = mlrm_sigma_provider(design_moment, alpha)
        for n in n_grid:
            report = approx_power(theta_star, theta0, alpha, n, level, provider)
            rows.append({"alpha": alpha, "n": n, "ell": report.ell, "sigma_w": report.sigma_w,
                         "approx_power": report.approx_power})
        needed = required_sample_size(theta_star, theta0, alpha, target_power, level, provider)
        summary[str(alpha)] = {"target_power": target_power, "required_n": needed, "unbounded": needed == UNBOUNDED}
    return pd.DataFrame(rows), summary
