import math
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from dotenv import dotenv_values
from envyaml import EnvYAML
from joblib import Parallel, delayed
from loguru import logger
from pydantic import ValidationError

from commons.numerics import RngStream
from commons.settings import get_settings
from errors.base_errors import RenyiError
from errors.input_errors import ConfigError
from infrastructure.estimation.estimation_manager import fit_rp_path, sigma_n_matrix
from infrastructure.inference.inference_manager import contiguous_power, wald_composite, wald_composite_at_null
from models.InferenceModel import LinearHypothesis
from models.RegressionModel import ModelData, Theta
from models.SimulationModel import (
    AT_NULL,
    FIRST_BLOCK,
    TWO_POINT,
    ContaminationSpec,
    DesignSpec,
    StudyConfig,
    StudyResult,
)

# exclusion share above which a study cell is reported as unreliable
EXCLUSION_WARNING = 0.01
TABLE_ALPHAS = [0.0, 0.2, 0.5, 0.8, 1.0, 1.5]
TABLE_DISTANCES = [0.0, 2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]


def make_design(spec: DesignSpec) -> np.ndarray:
    """n×2 design with an intercept column and one covariate."""
    if spec.kind == TWO_POINT:
        covariate = np.repeat([spec.a, spec.b], spec.n // 2)
    else:
        covariate = RngStream(spec.seed, 0).standard_normal(spec.n)
    return np.column_stack([np.ones(spec.n), covariate])


def contaminated_rows(n: int, contamination: ContaminationSpec) -> np.ndarray:
    count = contamination.count(n)
    if contamination.placement == FIRST_BLOCK:
        return np.arange(count)
    # placement has its own stream so the noise draws stay aligned with the clean case
    return np.sort(RngStream(contamination.seed, 1).permutation(n)[:count])


def generate_data(design, theta: Theta, contamination: ContaminationSpec = None, rng: RngStream = None) -> np.ndarray:
    """Y_i = x_iᵀβ_i + σε_i with β_i the contaminating vector on the contaminated rows."""
    design = np.asarray(design, dtype=float)
    rng = rng if rng is not None else RngStream(get_settings().seed)
    noise = rng.standard_normal(design.shape[0])
    means = design @ theta.beta
    if contamination is not None:
        rows = contaminated_rows(design.shape[0], contamination)
        means[rows] = design[rows] @ contamination.contaminating_beta
    return means + theta.sigma * noise


def load_study_config(path: str) -> StudyConfig:
    """
    Reads a study definition from a flat key = value file, or from YAML when the suffix is .yml/.yaml.

    Raises:
        ConfigError: Unreadable file, unknown key or invalid value; details["key"] names the key.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file '{path}' not found", source="load_study_config()")
    if path.suffix in (".yml", ".yaml"):
        # export() also carries flattened "a.b" keys and any .env file in the working directory
        try:
            document = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
            env = EnvYAML(str(path), include_environment=False)
        except (yaml.YAMLError, ValueError) as error:
            raise ConfigError(f"cannot read '{path}': {error}", source="load_study_config()")
        if not isinstance(document, dict):
            raise ConfigError(f"'{path}' must hold a mapping of study keys", source="load_study_config()")
        values = {str(key): env.get(str(key)) for key in document}
    else:
        values = dotenv_values(path)
    empty = [key for key, value in values.items() if value is None]
    if empty:
        raise ConfigError(f"key '{empty[0]}' has no value", source="load_study_config()", key=empty[0])
    try:
        return StudyConfig(**values)
    except ValidationError as error:
        detail = error.errors()[0]
        key = ".".join(str(item) for item in detail["loc"])
        raise ConfigError(f"invalid configuration key '{key}': {detail['msg']}", source="load_study_config()",
                          key=key)


def _hypotheses(config: StudyConfig, names: list[str]) -> list[tuple[LinearHypothesis, Theta]]:
    """Each hypothesis with the generating θ of its power study (None when no alternative applies)."""
    truth = np.append(config.true_beta, config.true_sigma)
    pairs = []
    for text in config.hypotheses:
        hyp = LinearHypothesis.from_assignments(text, names)
        restricted = [names[k] for k in np.flatnonzero(np.any(hyp.m_matrix != 0, axis=1))]
        alternative = truth.copy()
        for name in restricted:
            if name in config.power_alternatives:
                alternative[names.index(name)] = config.power_alternatives[name]
        pairs.append((hyp, Theta.from_vector(alternative) if not np.array_equal(alternative, truth) else None))
    return pairs


def _fit_all(design, response, alphas):
    try:
        return fit_rp_path(ModelData(design, response), alphas)
    except RenyiError as error:
        logger.debug(f"_fit_all() - {error}")
        return {}


def _rejects(config: StudyConfig, fit, hyp: LinearHypothesis) -> bool:
    levels = (config.level,)
    if config.covariance_at == AT_NULL:
        return wald_composite_at_null(fit, hyp, levels=levels).reject_at[config.level]
    return wald_composite(fit, hyp, levels=levels).reject_at[config.level]


def _replicate(config: StudyConfig, size_index: int, design, replication: int) -> dict:
    """One replication: null data fitted at every α, then one alternative data set per hypothesis."""
    names = [f"beta{j}" for j in range(design.shape[1])] + ["sigma"]
    truth = Theta(config.true_beta, config.true_sigma)
    contamination = config.contamination_spec() if config.contamination_fraction > 0 else None
    rng = RngStream(config.seed, (size_index << 32) | replication)
    null_fits = _fit_all(design, generate_data(design, truth, contamination, rng), config.alphas)
    record = {}
    alternatives = []
    for hyp, alternative in _hypotheses(config, names):
        fits = None if alternative is None else _fit_all(
            design, generate_data(design, alternative, contamination, rng), config.alphas)
        alternatives.append((hyp, fits))
    for alpha in config.alphas:
        fit = null_fits.get(alpha)
        usable = fit is not None and fit.converged
        cell = {
            "squared_error": float(np.sum((fit.theta_hat.to_vector() - truth.to_vector()) ** 2)) if usable else None,
            "failures": 0 if usable else 1,
            "level": {},
            "power": {},
        }
        for hyp, fits in alternatives:
            if usable:
                cell["level"][hyp.label] = _rejects(config, fit, hyp)
            if fits is None:
                continue
            alt_fit = fits.get(alpha)
            if alt_fit is not None and alt_fit.converged:
                cell["power"][hyp.label] = _rejects(config, alt_fit, hyp)
            else:
                cell["failures"] += 1
        record[alpha] = cell
    return record


def _mean(values: list) -> float:
    return float(np.mean(values)) if values else math.nan


def run_study(config: StudyConfig, workers: int = None) -> StudyResult:
    """
    Monte Carlo study over config.sample_sizes × config.alphas.

    Replication r at the k-th sample size draws from the stream (seed, k·2³² + r), so the
    result does not depend on the number of joblib workers.
    """
    workers = workers if workers is not None else get_settings().workers
    names = [f"beta{j}" for j in range(len(config.true_beta))] + ["sigma"]
    labels = [hyp.label for hyp, _ in _hypotheses(config, names)]
    rows = []
    for size_index, n in enumerate(config.sample_sizes):
        design = make_design(config.design_spec(n))
        logger.info(f"run_study() - n={n}, {config.replications} replications on {workers} worker(s)")
        records = Parallel(n_jobs=workers)(
            delayed(_replicate)(config, size_index, design, replication) for replication in range(config.replications)
        )
        for alpha in config.alphas:
            cells = [record[alpha] for record in records]
            errors = [cell["squared_error"] for cell in cells if cell["squared_error"] is not None]
            failures = sum(cell["failures"] for cell in cells)
            if failures > EXCLUSION_WARNING * config.replications:
                logger.warning(f"run_study() - alpha={alpha}, n={n}: {failures} fits excluded")
            for label in labels:
                rows.append({
                    "alpha": alpha,
                    "n": n,
                    "hypothesis": label,
                    "rmse_theta": math.sqrt(_mean(errors)) if errors else math.nan,
                    "empirical_level": _mean([cell["level"][label] for cell in cells if label in cell["level"]]),
                    "empirical_power": _mean([cell["power"][label] for cell in cells if label in cell["power"]]),
                    "non_convergence_count": failures,
                    "replications_used": len(errors),
                })
    return StudyResult(rows, config)


def contiguous_table(alphas: list[float] = None, d_values: list[float] = None, sigma: float = 1.0,
                     level: float = 0.05) -> pd.DataFrame:
    """
    Asymptotic power of the β₁ test under contiguous alternatives, one row per (α, d_x).

    The design moment is the identity and the shift is √d_x on β₁, which gives the
    noncentrality d_x(2α+1)^{3/2}/(σ²(α+1)³).
    """
    alphas = TABLE_ALPHAS if alphas is None else alphas
    d_values = TABLE_DISTANCES if d_values is None else d_values
    hyp = LinearHypothesis([0.0, 1.0, 0.0], [0.0], label="beta1")
    rows = []
    for alpha in alphas:
        sigma_n = sigma_n_matrix(np.eye(2), sigma, alpha).sigma_n
        for d_x in d_values:
            shift = np.array([0.0, math.sqrt(d_x), 0.0])
            rows.append({"alpha": alpha, "d_x": d_x, "power": contiguous_power(hyp, shift, alpha, level, sigma_n)})
    return pd.DataFrame(rows, columns=["alpha", "d_x", "power"])
