import math

import numpy as np
from loguru import logger
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy import linalg, stats
from scipy.linalg import lapack

from errors.input_errors import DomainError
from errors.numerical_errors import DecompositionError, NumericalError

GAUSS_HERMITE = "gauss-hermite-transformed"
ADAPTIVE_INTERVAL = "adaptive-interval"

# remaining Poisson mass below which the noncentral series is cut
POISSON_TAIL = 1e-12
MIN_NODES = 16


def normal_cdf(x: float) -> float:
    return float(stats.norm.cdf(x))


def normal_quantile(p: float) -> float:
    if not 0 < p < 1:
        raise DomainError(f"probability must lie in (0, 1), got {p}", source="normal_quantile()")
    return float(stats.norm.ppf(p))


def chisq_quantile(df: int, upper_tail: float) -> float:
    """
    Upper quantile of the central chi-square distribution.

    Args:
        df (int): Degrees of freedom, at least 1.
        upper_tail (float): P(χ²_df > x), strictly inside (0, 1).
    Returns:
        The x with P(χ²_df > x) = upper_tail.
    Raises:
        DomainError: Invalid df or tail probability.
    """
    if int(df) != df or df < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {df}", source="chisq_quantile()")
    if not 0 < upper_tail < 1:
        raise DomainError(f"tail probability must lie in (0, 1), got {upper_tail}", source="chisq_quantile()")
    return float(stats.chi2.isf(upper_tail, int(df)))


def noncentral_chisq_sf(x: float, df: int, delta: float) -> float:
    """
    Survival function of the noncentral chi-square distribution.

    Computed as a Poisson(δ/2) mixture of central chi-square survival functions with
    df + 2j degrees of freedom, summed until the remaining Poisson mass drops below 1e-12.
    """
    if delta < 0:
        raise DomainError(f"noncentrality must be >= 0, got {delta}", source="noncentral_chisq_sf()")
    if x <= 0:
        return 1.0
    if delta == 0:
        return float(stats.chi2.sf(x, df))
    half = delta / 2.0
    last = int(stats.poisson.isf(POISSON_TAIL, half)) + 1
    terms = np.arange(0, last + 1)
    mixture = stats.poisson.pmf(terms, half) @ stats.chi2.sf(x, df + 2 * terms)
    return float(min(max(mixture, 0.0), 1.0))


class QuadratureRule:
    """
    Nodes and positive weights of a one dimensional quadrature rule in standardised units.

    For the gauss-hermite-transformed kind the weights integrate against the standard normal
    density (they sum to one). For the adaptive-interval kind the rule is a composite
    Gauss-Legendre rule on [lower, upper] integrating against Lebesgue measure.

    Attributes:
        nodes (np.ndarray): Abscissas in standardised units.
        weights (np.ndarray): Positive weights, same length as nodes.
        kind (str): GAUSS_HERMITE or ADAPTIVE_INTERVAL.
    """

    def __init__(self, nodes, weights, kind: str):
        nodes = np.asarray(nodes, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if kind not in (GAUSS_HERMITE, ADAPTIVE_INTERVAL):
            raise DomainError(f"unknown quadrature kind '{kind}'", source="QuadratureRule()")
        if nodes.shape != weights.shape or nodes.ndim != 1 or nodes.size < MIN_NODES:
            raise DomainError(f"a rule needs matching node/weight vectors of length >= {MIN_NODES}",
                              source="QuadratureRule()")
        if np.any(weights <= 0):
            raise DomainError("quadrature weights must be positive", source="QuadratureRule()")
        self.nodes = nodes
        self.weights = weights
        self.kind = kind
        if kind == GAUSS_HERMITE:
            # w_k / φ(z_k), assembled in log space since φ underflows at the outer nodes
            self._lebesgue_weights = np.exp(np.log(weights) + 0.5 * nodes ** 2 + 0.5 * math.log(2 * math.pi))
        else:
            self._lebesgue_weights = weights

    def reference_mass(self) -> float:
        """Integral of the standard normal density under this rule (1 up to the rule's accuracy)."""
        return float(self._lebesgue_weights @ stats.norm.pdf(self.nodes))

    def to_json(self):
        return {"kind": self.kind, "nodes": self.nodes.tolist(), "weights": self.weights.tolist()}


def gauss_hermite_rule(order: int = 64) -> QuadratureRule:
    nodes, weights = hermgauss(order)
    return QuadratureRule(math.sqrt(2.0) * nodes, weights / math.sqrt(math.pi), GAUSS_HERMITE)


def interval_rule(lower: float = -12.0, upper: float = 12.0, panels: int = 48, order: int = 16) -> QuadratureRule:
    """Composite Gauss-Legendre rule with `panels` equal panels of `order` nodes each."""
    if not upper > lower:
        raise DomainError(f"empty interval [{lower}, {upper}]", source="interval_rule()")
    base_nodes, base_weights = leggauss(order)
    edges = np.linspace(lower, upper, panels + 1)
    half = np.diff(edges) / 2.0
    middle = (edges[:-1] + edges[1:]) / 2.0
    nodes = (middle[:, None] + half[:, None] * base_nodes[None, :]).ravel()
    weights = (half[:, None] * base_weights[None, :]).ravel()
    return QuadratureRule(nodes, weights, ADAPTIVE_INTERVAL)


DEFAULT_RULE = gauss_hermite_rule()


def integrate(fn, rule: QuadratureRule = None, center: float = 0.0, scale: float = 1.0) -> float:
    """
    Integrates fn over the real line (or the rule's interval) after the change of variable
    y = center + scale·z.

    fn is called once on the whole vector of transformed nodes; callables that cannot take
    arrays are evaluated node by node.

    Raises:
        DomainError: scale is not positive.
        NumericalError: fn is not finite at some node; details["node"] holds its location.
    """
    rule = DEFAULT_RULE if rule is None else rule
    if not scale > 0:
        raise DomainError(f"scale must be > 0, got {scale}", source="integrate()")
    points = center + scale * rule.nodes
    try:
        values = np.asarray(fn(points), dtype=float)
    except (TypeError, ValueError):
        values = None
    if values is None or values.shape != points.shape:
        values = np.array([float(fn(point)) for point in points])
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size > 0:
        node = float(points[bad[0]])
        logger.error(f"integrate() - non-finite integrand at y = {node}")
        raise NumericalError(f"integrand is not finite at y = {node}", source="integrate()", details={"node": node})
    return float(scale * (rule._lebesgue_weights @ values))


def cholesky_spd(matrix) -> np.ndarray:
    """
    Lower Cholesky factor of a symmetric positive definite matrix.

    Raises:
        DecompositionError: The leading minor of order `pivot` is not positive definite.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[0] != matrix.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {matrix.shape}", source="cholesky_spd()")
    factor, info = lapack.dpotrf(matrix, lower=1, clean=1)
    if info > 0:
        raise DecompositionError(f"matrix is not positive definite (pivot {info})", source="cholesky_spd()",
                                 pivot=int(info))
    if info < 0:
        raise DomainError(f"invalid argument {-info} passed to dpotrf", source="cholesky_spd()")
    return factor


def solve_spd(matrix, rhs) -> np.ndarray:
    """Solves A·x = b for symmetric positive definite A through its Cholesky factor."""
    factor = cholesky_spd(matrix)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != factor.shape[0]:
        raise DomainError(f"dimension mismatch: {factor.shape} against {rhs.shape}", source="solve_spd()")
    return linalg.cho_solve((factor, True), rhs)


def inverse_spd(matrix) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return solve_spd(matrix, np.eye(matrix.shape[0]))


def min_eigenvalue(matrix) -> float:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return float(linalg.eigvalsh((matrix + matrix.T) / 2.0)[0])


class RngStream:
    """
    Counter based random stream keyed by (seed, stream_id).

    The same pair always reproduces the same draws; distinct stream ids give independent
    Philox streams, so every Monte Carlo replication can own one regardless of which
    worker runs it.

    Attributes:
        seed (int): 64-bit unsigned study seed.
        stream_id (int): 64-bit unsigned stream identifier.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not 0 <= int(seed) < 2 ** 64 or not 0 <= int(stream_id) < 2 ** 64:
            raise DomainError("seed and stream id must be 64-bit unsigned integers", source="RngStream()")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.generator = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,)))
        )

    def standard_normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self.generator.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def to_json(self):
        return {"seed": self.seed, "stream_id": self.stream_id}
