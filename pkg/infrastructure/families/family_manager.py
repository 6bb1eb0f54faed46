import math
from abc import ABC, abstractmethod

import numpy as np

from commons.numerics import DEFAULT_RULE, QuadratureRule, integrate
from errors.input_errors import DomainError
from models.RegressionModel import Theta

LOG_2PI = math.log(2 * math.pi)


class DensityFamily(ABC):
    """
    Densities f_i(·, θ) of independent, non identically distributed observations sharing θ.

    Subclasses provide the pointwise quantities (log density, score, score jacobian) and a
    location/spread hint for every f_i. The integrals over y are computed by quadrature
    around that hint unless a subclass overrides them with closed forms.

    Attributes:
        design (np.ndarray): n×p fixed design the densities depend on.
        rule (QuadratureRule): Rule used by the quadrature backed integrals.
    """

    has_closed_form = False

    def __init__(self, design, rule: QuadratureRule = None):
        design = np.asarray(design, dtype=float)
        self.design = design[:, None] if design.ndim == 1 else design
        self.rule = DEFAULT_RULE if rule is None else rule

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def dim(self) -> int:
        return self.design.shape[1] + 1

    @abstractmethod
    def log_density(self, i: int, y, theta: Theta) -> np.ndarray:
        """log f_i(y, θ), vectorised over y."""

    @abstractmethod
    def score(self, i: int, y, theta: Theta) -> np.ndarray:
        """u_i(y, θ) = ∂ log f_i/∂θ, shape (len(y), dim)."""

    @abstractmethod
    def score_jacobian(self, i: int, y, theta: Theta) -> np.ndarray:
        """∂u_i/∂θ, shape (len(y), dim, dim)."""

    @abstractmethod
    def location(self, i: int, theta: Theta) -> float:
        """Centre of f_i, used to place quadrature nodes."""

    @abstractmethod
    def spread(self, theta: Theta) -> float:
        """Scale of f_i, used to place quadrature nodes."""

    def _integrate(self, i: int, theta: Theta, exponent: float, fn) -> float:
        if exponent <= 0:
            raise DomainError(f"power integrals need a positive exponent, got {exponent}",
                              source="DensityFamily._integrate()")

        def integrand(y):
            y = np.atleast_1d(y)
            return np.exp(exponent * self.log_density(i, y, theta)) * fn(y)

        return integrate(integrand, self.rule, self.location(i, theta), self.spread(theta) / math.sqrt(exponent))

    def power_integral(self, i: int, theta: Theta, exponent: float) -> float:
        """∫ f_i(y, θ)^c dy."""
        return self._integrate(i, theta, exponent, lambda y: np.ones_like(y))

    def power_score_integral(self, i: int, theta: Theta, exponent: float) -> np.ndarray:
        """∫ f_i^c u_i dy."""
        return np.array([
            self._integrate(i, theta, exponent, lambda y, k=k: self.score(i, y, theta)[:, k])
            for k in range(self.dim)
        ])

    def power_score_outer_integral(self, i: int, theta: Theta, exponent: float) -> np.ndarray:
        """∫ f_i^c u_i u_iᵀ dy."""
        outer = np.empty((self.dim, self.dim))
        for k in range(self.dim):
            for j in range(k, self.dim):
                outer[k, j] = outer[j, k] = self._integrate(
                    i, theta, exponent, lambda y, k=k, j=j: self.score(i, y, theta)[:, k] * self.score(i, y, theta)[:, j]
                )
        return outer

    def power_score_jacobian_integral(self, i: int, theta: Theta, exponent: float) -> np.ndarray:
        """∫ f_i^c ∂u_i/∂θ dy."""
        jacobian = np.empty((self.dim, self.dim))
        for k in range(self.dim):
            for j in range(self.dim):
                jacobian[k, j] = self._integrate(
                    i, theta, exponent, lambda y, k=k, j=j: self.score_jacobian(i, y, theta)[:, k, j]
                )
        return jacobian


class NormalLinearFamily(DensityFamily):
    """
    f_i(·, θ) = N(x_iᵀβ, σ²), the fixed design normal linear model.

    With closed_form=False every integral goes through the quadrature backend of
    DensityFamily, which is how the closed forms are checked.
    """

    def __init__(self, design, rule: QuadratureRule = None, closed_form: bool = True):
        super().__init__(design, rule)
        self.has_closed_form = closed_form

    def _residual(self, i: int, y, theta: Theta) -> np.ndarray:
        return (np.atleast_1d(np.asarray(y, dtype=float)) - self.design[i] @ theta.beta) / theta.sigma

    def log_density(self, i: int, y, theta: Theta) -> np.ndarray:
        r = self._residual(i, y, theta)
        return -0.5 * LOG_2PI - math.log(theta.sigma) - 0.5 * r ** 2

    def score(self, i: int, y, theta: Theta) -> np.ndarray:
        r = self._residual(i, y, theta)
        x = self.design[i]
        return np.column_stack([r[:, None] * x[None, :] / theta.sigma, (r ** 2 - 1) / theta.sigma])

    def score_jacobian(self, i: int, y, theta: Theta) -> np.ndarray:
        r = self._residual(i, y, theta)
        x = self.design[i]
        sigma2 = theta.sigma ** 2
        p = x.size
        jacobian = np.zeros((r.size, p + 1, p + 1))
        jacobian[:, :p, :p] = -np.outer(x, x)[None, :, :] / sigma2
        jacobian[:, :p, p] = jacobian[:, p, :p] = -2 * r[:, None] * x[None, :] / sigma2
        jacobian[:, p, p] = (1 - 3 * r ** 2) / sigma2
        return jacobian

    def location(self, i: int, theta: Theta) -> float:
        return float(self.design[i] @ theta.beta)

    def spread(self, theta: Theta) -> float:
        return theta.sigma

    def power_integral(self, i: int, theta: Theta, exponent: float) -> float:
        if not self.has_closed_form:
            return super().power_integral(i, theta, exponent)
        c = exponent
        return (2 * math.pi) ** ((1 - c) / 2) * theta.sigma ** (1 - c) / math.sqrt(c)

    def power_score_integral(self, i: int, theta: Theta, exponent: float) -> np.ndarray:
        if not self.has_closed_form:
            return super().power_score_integral(i, theta, exponent)
        value = np.zeros(self.dim)
        value[-1] = self.power_integral(i, theta, exponent) * (1 / exponent - 1) / theta.sigma
        return value

    def power_score_outer_integral(self, i: int, theta: Theta, exponent: float) -> np.ndarray:
        if not self.has_closed_form:
            return super().power_score_outer_integral(i, theta, exponent)
        c = exponent
        x = self.design[i]
        p = x.size
        outer = np.zeros((p + 1, p + 1))
        outer[:p, :p] = np.outer(x, x) / c
        outer[p, p] = 3 / c ** 2 - 2 / c + 1
        return self.power_integral(i, theta, c) * outer / theta.sigma ** 2

    def power_score_jacobian_integral(self, i: int, theta: Theta, exponent: float) -> np.ndarray:
        if not self.has_closed_form:
            return super().power_score_jacobian_integral(i, theta, exponent)
        c = exponent
        x = self.design[i]
        p = x.size
        jacobian = np.zeros((p + 1, p + 1))
        jacobian[:p, :p] = -np.outer(x, x)
        jacobian[p, p] = 1 - 3 / c
        return self.power_integral(i, theta, c) * jacobian / theta.sigma ** 2

    def log_sigma_terms(self, response, theta: Theta, alpha: float) -> tuple[float, np.ndarray, np.ndarray]:
        """
        Objective, gradient and Hessian in the coordinates (β, log σ), averaged over the sample.

        Returns:
            (value, gradient, hessian) with the log σ coordinate last.
        """
        x = self.design
        n, p = x.shape
        sigma = theta.sigma
        r = (np.asarray(response, dtype=float) - x @ theta.beta) / sigma
        gradient = np.empty(p + 1)
        hessian = np.empty((p + 1, p + 1))
        if alpha == 0:
            value = float(np.mean(-0.5 * LOG_2PI - math.log(sigma) - 0.5 * r ** 2))
            gradient[:p] = x.T @ r / (n * sigma)
            gradient[p] = np.mean(r ** 2 - 1)
            hessian[:p, :p] = -x.T @ x / (n * sigma ** 2)
            hessian[:p, p] = hessian[p, :p] = -2 * x.T @ r / (n * sigma)
            hessian[p, p] = -2 * np.mean(r ** 2)
            return value, gradient, hessian
        c = 1 / (alpha + 1)
        v = self.v_weights(r, sigma, alpha)
        value = float(np.mean(v))
        centred = r ** 2 - c
        gradient[:p] = alpha * x.T @ (v * r) / (n * sigma)
        gradient[p] = alpha * np.mean(v * centred)
        hessian[:p, :p] = alpha * (x.T * (v * (alpha * r ** 2 - 1))) @ x / (n * sigma ** 2)
        hessian[:p, p] = hessian[p, :p] = alpha * x.T @ (v * r * (alpha * centred - 2)) / (n * sigma)
        hessian[p, p] = alpha * np.mean(v * (alpha * centred ** 2 - 2 * r ** 2))
        return value, gradient, hessian

    @staticmethod
    def v_weights(r, sigma: float, alpha: float) -> np.ndarray:
        """((1+α)/2π)^{α/(2(α+1))}·σ^{−α/(α+1)}·exp(−α r²/2) for standardised residuals r."""
        constant = ((1 + alpha) / (2 * math.pi)) ** (alpha / (2 * (alpha + 1)))
        return constant * sigma ** (-alpha / (alpha + 1)) * np.exp(-0.5 * alpha * np.asarray(r) ** 2)
