import numpy as np
from pydantic import BaseModel, Field

from models.RegressionModel import Theta


class SolverOptions(BaseModel):
    """
    Knobs of the minimum RP solver.

    Attributes:
        tolerance (float): Stop when the ∞-norm of the score is below this value.
        max_newton (int): Newton steps per α stage.
        max_sweeps (int): Reweighting sweeps per α stage before the Newton polish.
        alpha_step (float): Largest α increment of the continuation path.
        multistart (bool): Also run `restarts` random restarts at the target α and keep the best objective.
        restarts (int): Number of random restarts.
        seed (int): Seed of the restart generator.
    """

    tolerance: float = Field(default=1e-8, gt=0)
    max_newton: int = Field(default=200, ge=1)
    max_sweeps: int = Field(default=500, ge=0)
    alpha_step: float = Field(default=0.1, gt=0)
    multistart: bool = False
    restarts: int = Field(default=10, ge=1)
    seed: int = Field(default=20240101, ge=0, lt=2**64)


class DesignDiagnostics:
    """
    Conditioning summaries of a fixed design.

    Attributes:
        min_eigenvalue_xtx_over_n (float): Smallest eigenvalue of (1/n)·XᵀX.
        max_scaled_leverage (float): n·max_i x_iᵀ(XᵀX)⁻¹x_i.
        max_abs_covariate (float): Largest absolute design entry.
    """

    def __init__(self, min_eigenvalue_xtx_over_n: float, max_scaled_leverage: float, max_abs_covariate: float):
        self.min_eigenvalue_xtx_over_n = float(min_eigenvalue_xtx_over_n)
        self.max_scaled_leverage = float(max_scaled_leverage)
        self.max_abs_covariate = float(max_abs_covariate)

    def to_json(self):
        return {
            "min_eigenvalue_xtx_over_n": self.min_eigenvalue_xtx_over_n,
            "max_scaled_leverage": self.max_scaled_leverage,
            "max_abs_covariate": self.max_abs_covariate,
        }


class CovarianceTriple:
    """
    Sandwich ingredients of the minimum RP estimator, in the positive definite convention.

    Attributes:
        psi_n (np.ndarray): Averaged expected negative Hessian of the estimating equations.
        omega_n (np.ndarray): Averaged variance of the estimating equations.
        sigma_n (np.ndarray): Asymptotic covariance of √n(θ̂ − θ), equal to Ψ⁻¹ΩΨ⁻¹.
        convention (str): "asymptotic" or "tabulated".
    """

    def __init__(self, psi_n, omega_n, sigma_n, convention: str = "asymptotic"):
        self.psi_n = np.asarray(psi_n, dtype=float)
        self.omega_n = np.asarray(omega_n, dtype=float)
        self.sigma_n = np.asarray(sigma_n, dtype=float)
        self.convention = convention

    def to_json(self):
        return {
            "psi_n": self.psi_n.tolist(),
            "omega_n": self.omega_n.tolist(),
            "sigma_n": self.sigma_n.tolist(),
            "convention": self.convention,
        }


class FitResult:
    """
    Outcome of one minimum RP fit.

    Attributes:
        theta_hat (Theta): The estimate.
        alpha (float): Tuning parameter used.
        converged (bool): Whether the score norm reached the tolerance.
        iterations (int): Total reweighting sweeps and Newton steps over all stages.
        gradient_norm (float): ∞-norm of the score at theta_hat, w.r.t. (β, σ).
        sigma_n (np.ndarray): Asymptotic covariance at theta_hat.
        objective_value (float): Objective at theta_hat.
        design_moment (np.ndarray): (1/n)·XᵀX, kept so Σ can be re-evaluated at other points.
        n (int): Sample size of the fit.
        convention (str): Covariance convention of sigma_n.
        excluded_rows (list[int]): 1-based rows removed before fitting.
    """

    def __init__(
        self,
        theta_hat: Theta,
        alpha: float,
        converged: bool,
        iterations: int,
        gradient_norm: float,
        sigma_n,
        objective_value: float,
        design_moment,
        n: int,
        convention: str = "asymptotic",
        excluded_rows: list[int] = None,
    ):
        self.theta_hat = theta_hat
        self.alpha = float(alpha)
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.gradient_norm = float(gradient_norm)
        self.sigma_n = np.asarray(sigma_n, dtype=float)
        self.objective_value = float(objective_value)
        self.design_moment = np.asarray(design_moment, dtype=float)
        self.n = int(n)
        self.convention = convention
        self.excluded_rows = excluded_rows if excluded_rows is not None else []

    def to_json(self):
        return {
            "theta_hat": self.theta_hat.to_json(),
            "alpha": self.alpha,
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_norm": self.gradient_norm,
            "sigma_n": self.sigma_n.tolist(),
            "objective_value": self.objective_value,
            "n": self.n,
            "convention": self.convention,
            "excluded_rows": self.excluded_rows,
        }
