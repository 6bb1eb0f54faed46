import math

import numpy as np

from errors.input_errors import DomainError


class Theta:
    """
    A point of the parameter space of the normal linear model.

    Attributes:
        beta (np.ndarray): Regression coefficients, one per design column.
        sigma (float): Error standard deviation, strictly positive.
    """

    def __init__(self, beta, sigma: float):
        self.beta = np.atleast_1d(np.asarray(beta, dtype=float)).copy()
        self.sigma = float(sigma)
        if not np.all(np.isfinite(self.beta)):
            raise DomainError("beta must be finite", source="Theta()")
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise DomainError(f"sigma must be finite and > 0, got {self.sigma}", source="Theta()")

    @property
    def dim(self) -> int:
        return self.beta.size + 1

    def to_vector(self) -> np.ndarray:
        return np.append(self.beta, self.sigma)

    @classmethod
    def from_vector(cls, vector) -> "Theta":
        vector = np.asarray(vector, dtype=float)
        return cls(vector[:-1], vector[-1])

    def to_json(self):
        return {"beta": self.beta.tolist(), "sigma": self.sigma}

    def __repr__(self):
        return f"Theta(beta={self.beta.tolist()}, sigma={self.sigma})"


class ModelData:
    """
    A fixed design regression sample.

    Attributes:
        design (np.ndarray): n×p design matrix, row i is x_i.
        response (np.ndarray): The n responses.
        coefficient_names (list[str]): Names of the β coordinates, "beta0".."beta{p-1}" by default.
        row_labels (list[str]): Optional labels of the observations (animal, child...).
    """

    def __init__(self, design, response, coefficient_names: list[str] = None, row_labels: list[str] = None):
        design = np.asarray(design, dtype=float)
        if design.ndim == 1:
            design = design[:, None]
        response = np.asarray(response, dtype=float).ravel()
        if design.shape[0] != response.size:
            raise DomainError(f"design has {design.shape[0]} rows but response has {response.size} values",
                              source="ModelData()")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise DomainError("design and response must be finite", source="ModelData()")
        if response.size < design.shape[1] + 1:
            raise DomainError(f"need n >= p + 1 observations, got n={response.size}, p={design.shape[1]}",
                              source="ModelData()")
        self.design = design
        self.response = response
        self.coefficient_names = (
            coefficient_names if coefficient_names is not None else [f"beta{j}" for j in range(design.shape[1])]
        )
        self.row_labels = row_labels

    @property
    def n(self) -> int:
        return self.response.size

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def parameter_names(self) -> list[str]:
        return self.coefficient_names + ["sigma"]

    def design_moment(self) -> np.ndarray:
        """(1/n)·XᵀX."""
        return self.design.T @ self.design / self.n

    def residuals(self, theta: Theta) -> np.ndarray:
        """Standardised residuals (Y_i − x_iᵀβ)/σ."""
        return (self.response - self.design @ theta.beta) / theta.sigma

    def without_rows(self, rows: list[int]) -> "ModelData":
        """Copy without the given 1-based rows."""
        if any(row < 1 or row > self.n for row in rows):
            raise DomainError(f"row indices must lie in 1..{self.n}, got {rows}", source="without_rows()")
        keep = np.setdiff1d(np.arange(self.n), np.asarray(rows, dtype=int) - 1)
        labels = None if self.row_labels is None else [self.row_labels[i] for i in keep]
        return ModelData(self.design[keep], self.response[keep], list(self.coefficient_names), labels)

    def to_json(self):
        return {
            "n": self.n,
            "p": self.p,
            "coefficient_names": self.coefficient_names,
            "design": self.design.tolist(),
            "response": self.response.tolist(),
        }
