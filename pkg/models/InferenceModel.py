import numpy as np

from errors.input_errors import HypothesisError

RANK_TOLERANCE = 1e-10


class LinearHypothesis:
    """
    The linear null H₀: Mᵀθ = m.

    Attributes:
        m_matrix (np.ndarray): dim(θ)×r matrix M of full column rank.
        m_vector (np.ndarray): The r restricted values m.
        label (str): Human readable form, e.g. "beta0=1.98,beta1=0.73".
    """

    def __init__(self, m_matrix, m_vector, label: str = None):
        m_matrix = np.asarray(m_matrix, dtype=float)
        if m_matrix.ndim == 1:
            m_matrix = m_matrix[:, None]
        m_vector = np.atleast_1d(np.asarray(m_vector, dtype=float))
        if m_matrix.shape[1] != m_vector.size:
            raise HypothesisError(f"M has {m_matrix.shape[1]} columns but m has {m_vector.size} entries",
                                  source="LinearHypothesis()")
        if m_matrix.shape[1] > m_matrix.shape[0]:
            raise HypothesisError(f"more restrictions ({m_matrix.shape[1]}) than parameters ({m_matrix.shape[0]})",
                                  source="LinearHypothesis()")
        if np.linalg.svd(m_matrix, compute_uv=False).min() <= RANK_TOLERANCE:
            raise HypothesisError("M is not of full column rank", source="LinearHypothesis()")
        self.m_matrix = m_matrix
        self.m_vector = m_vector
        self.label = label if label is not None else "custom"

    @property
    def rank(self) -> int:
        return self.m_matrix.shape[1]

    @classmethod
    def from_assignments(cls, text: str, parameter_names: list[str]) -> "LinearHypothesis":
        """
        Builds the hypothesis from "name=value" pairs separated by commas.

        Args:
            text (str): e.g. "beta0=112.56,beta1=-1.28".
            parameter_names (list[str]): Names of the θ coordinates, σ last.
        Raises:
            HypothesisError: Unknown name, duplicate name or unparsable value.
        """
        columns, values = [], []
        for pair in [item.strip() for item in text.split(",") if item.strip() != ""]:
            name, sep, value = pair.partition("=")
            name = name.strip()
            if sep == "" or name not in parameter_names:
                raise HypothesisError(f"cannot read '{pair}', expected one of {parameter_names} as name=value",
                                      source="from_assignments()")
            if parameter_names.index(name) in columns:
                raise HypothesisError(f"'{name}' is restricted twice", source="from_assignments()")
            try:
                values.append(float(value))
            except ValueError:
                raise HypothesisError(f"'{value}' is not a number", source="from_assignments()")
            columns.append(parameter_names.index(name))
        if not columns:
            raise HypothesisError("empty hypothesis", source="from_assignments()")
        m_matrix = np.zeros((len(parameter_names), len(columns)))
        m_matrix[columns, np.arange(len(columns))] = 1.0
        return cls(m_matrix, values, label=",".join(item.strip() for item in text.split(",") if item.strip()))

    @classmethod
    def from_rows(cls, rows: list[list[float]], label: str = None) -> "LinearHypothesis":
        """Each row is one restriction: the coefficients on every θ coordinate followed by its value."""
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] < 2:
            raise HypothesisError("restriction rows need coefficients and a value", source="from_rows()")
        return cls(rows[:, :-1].T, rows[:, -1], label=label)

    def to_json(self):
        return {"label": self.label, "m_matrix": self.m_matrix.tolist(), "m_vector": self.m_vector.tolist()}


class WaldOutcome:
    """
    Result of a Wald-type test.

    Attributes:
        statistic (float): Value of the statistic, >= 0.
        df (int): Degrees of freedom of the null chi-square.
        p_value (float): Central chi-square survival function at the statistic.
        reject_at (dict[float, bool]): Decision at each requested level.
    """

    def __init__(self, statistic: float, df: int, p_value: float, reject_at: dict):
        self.statistic = float(statistic)
        self.df = int(df)
        self.p_value = float(p_value)
        self.reject_at = reject_at

    def to_json(self):
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "reject_at": {str(level): decision for level, decision in self.reject_at.items()},
        }


class PowerReport:
    """
    Normal approximation of the power of the simple Wald-type test.

    Attributes:
        ell (float): (θ* − θ⁰)ᵀΣ⁻¹(θ⁰)(θ* − θ⁰).
        sigma_w (float): Asymptotic standard deviation of the statistic under θ*.
        approx_power (float): Approximate power.
        n_used (int): Sample size the approximation was evaluated at.
    """

    def __init__(self, ell: float, sigma_w: float, approx_power: float, n_used: int):
        self.ell = float(ell)
        self.sigma_w = float(sigma_w)
        self.approx_power = float(approx_power)
        self.n_used = int(n_used)

    def to_json(self):
        return {"ell": self.ell, "sigma_w": self.sigma_w, "approx_power": self.approx_power, "n_used": self.n_used}
