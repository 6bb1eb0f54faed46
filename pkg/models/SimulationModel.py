from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator

from errors.input_errors import DomainError

TWO_POINT = "two_point"
FIXED_NORMAL = "fixed_normal"
FIRST_BLOCK = "first_block"
RANDOM_INDICES = "random_indices"
AT_NULL = "null"
AT_ESTIMATE = "estimate"


class DesignSpec:
    """
    A fixed simple regression design with intercept.

    Attributes:
        kind (str): "two_point" (half the rows at a, half at b) or "fixed_normal" (N(0,1) covariates drawn once).
        n (int): Number of rows.
        a (float): First level of the two point design.
        b (float): Second level of the two point design.
        seed (int): Seed of the fixed normal covariates.
    """

    def __init__(self, kind: str, n: int, a: float = 1.0, b: float = 5.0, seed: int = 7):
        if kind not in (TWO_POINT, FIXED_NORMAL):
            raise DomainError(f"unknown design kind '{kind}'", source="DesignSpec()")
        if n < 3:
            raise DomainError(f"a design needs at least 3 rows, got {n}", source="DesignSpec()")
        if kind == TWO_POINT and n % 2 != 0:
            raise DomainError(f"the two point design needs an even n, got {n}", source="DesignSpec()")
        self.kind = kind
        self.n = int(n)
        self.a = float(a)
        self.b = float(b)
        self.seed = int(seed)

    def to_json(self):
        return {"kind": self.kind, "n": self.n, "a": self.a, "b": self.b, "seed": self.seed}


class ContaminationSpec:
    """
    Gross error model: ⌊fraction·n⌋ responses are generated from contaminating_beta.

    Attributes:
        fraction (float): Share of contaminated rows, in [0, 0.5).
        contaminating_beta (np.ndarray): Coefficients used on the contaminated rows.
        placement (str): "first_block" or "random_indices".
        seed (int): Seed of the random placement.
    """

    def __init__(self, fraction: float = 0.10, contaminating_beta=(1.5, 2.0), placement: str = FIRST_BLOCK,
                 seed: int = 0):
        if not 0 <= fraction < 0.5:
            raise DomainError(f"contamination fraction must lie in [0, 0.5), got {fraction}",
                              source="ContaminationSpec()")
        if placement not in (FIRST_BLOCK, RANDOM_INDICES):
            raise DomainError(f"unknown placement '{placement}'", source="ContaminationSpec()")
        self.fraction = float(fraction)
        self.contaminating_beta = np.asarray(contaminating_beta, dtype=float)
        self.placement = placement
        self.seed = int(seed)

    def count(self, n: int) -> int:
        return int(np.floor(self.fraction * n + 1e-12))

    def to_json(self):
        return {
            "fraction": self.fraction,
            "contaminating_beta": self.contaminating_beta.tolist(),
            "placement": self.placement,
            "seed": self.seed,
        }


def _split(value, separator: str = ","):
    if isinstance(value, str):
        return [item.strip() for item in value.split(separator) if item.strip() != ""]
    return value


class StudyConfig(BaseModel):
    """
    Monte Carlo study definition, read from a flat key = value file or a YAML file.

    List fields accept comma separated strings; hypotheses and power_alternatives are
    separated by ';' since a single hypothesis may restrict several coordinates.
    """

    model_config = ConfigDict(extra="forbid")

    design: Literal["two_point", "fixed_normal"] = TWO_POINT
    design_a: float = 1.0
    design_b: float = 5.0
    design_seed: int = Field(default=7, ge=0)
    sample_sizes: list[int] = [50, 100, 200, 400, 800]
    true_beta: list[float] = [1.0, 1.0]
    true_sigma: float = Field(default=1.0, gt=0)
    alphas: list[float] = [0.0, 0.3, 0.7, 1.0]
    replications: int = Field(default=1000, ge=1)
    level: float = Field(default=0.05, gt=0, lt=1)
    # point at which the Wald tests evaluate Σ: the null-restricted θ̃ or θ̂
    covariance_at: Literal["null", "estimate"] = AT_NULL
    hypotheses: list[str] = ["beta1=1", "sigma=1"]
    power_alternatives: dict[str, float] = {"beta1": 0.45, "sigma": 0.8}
    contamination_fraction: float = Field(default=0.0, ge=0, lt=0.5)
    contaminating_beta: list[float] = [1.5, 2.0]
    contamination_placement: Literal["first_block", "random_indices"] = FIRST_BLOCK
    contamination_seed: int = Field(default=0, ge=0)
    seed: int = Field(default=20240101, ge=0, lt=2**64)

    @field_validator("sample_sizes", "true_beta", "alphas", "contaminating_beta", mode="before")
    @classmethod
    def split_lists(cls, value):
        return _split(value)

    @field_validator("hypotheses", mode="before")
    @classmethod
    def split_hypotheses(cls, value):
        return _split(value, ";")

    @field_validator("power_alternatives", mode="before")
    @classmethod
    def split_alternatives(cls, value):
        if isinstance(value, str):
            return {name.strip(): val for name, _, val in (item.partition("=") for item in _split(value, ";"))}
        return value

    @field_validator("alphas")
    @classmethod
    def check_alphas(cls, value):
        if not value or any(alpha < 0 for alpha in value):
            raise ValueError("alphas must be a non-empty list of values >= 0")
        return value

    def design_spec(self, n: int) -> DesignSpec:
        return DesignSpec(self.design, n, self.design_a, self.design_b, self.design_seed)

    def contamination_spec(self) -> ContaminationSpec:
        return ContaminationSpec(self.contamination_fraction, self.contaminating_beta,
                                 self.contamination_placement, self.contamination_seed)


STUDY_COLUMNS = [
    "alpha",
    "n",
    "hypothesis",
    "rmse_theta",
    "empirical_level",
    "empirical_power",
    "non_convergence_count",
    "replications_used",
]


class StudyResult:
    """
    Aggregated Monte Carlo output, one row per (alpha, n, hypothesis).

    Attributes:
        rows (list[dict]): Records with the keys of STUDY_COLUMNS.
        config (StudyConfig): The study that produced them.
    """

    def __init__(self, rows: list[dict], config: StudyConfig):
        self.rows = rows
        self.config = config

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=STUDY_COLUMNS)

    def to_json(self):
        return {"config": self.config.model_dump(), "rows": self.rows}
