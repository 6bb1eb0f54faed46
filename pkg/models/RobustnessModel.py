import numpy as np

from errors.input_errors import DomainError
from models.RegressionModel import Theta

ALL_DIRECTIONS = "all"


class IFRequest:
    """
    Where and how to contaminate.

    Attributes:
        direction (int | str): 1-based index i₀ of the contaminated observation, or "all".
        contamination_points (list[float]): Contamination values t in response units.
        theta (Theta): Parameter point the functional is evaluated at.
        alpha (float): Tuning parameter.
    """

    def __init__(self, direction, contamination_points, theta: Theta, alpha: float):
        if direction != ALL_DIRECTIONS and (not isinstance(direction, (int, np.integer)) or direction < 1):
            raise DomainError(f"direction must be a 1-based index or '{ALL_DIRECTIONS}', got {direction!r}",
                              source="IFRequest()")
        points = [float(t) for t in np.atleast_1d(contamination_points)]
        if not points:
            raise DomainError("at least one contamination point is required", source="IFRequest()")
        self.direction = direction if direction == ALL_DIRECTIONS else int(direction)
        self.contamination_points = points
        self.theta = theta
        self.alpha = float(alpha)

    def directions(self, n: int) -> list[int]:
        """0-based indices of the contaminated observations, validated against n."""
        if self.direction == ALL_DIRECTIONS:
            return list(range(n))
        if self.direction > n:
            raise DomainError(f"direction {self.direction} outside 1..{n}", source="IFRequest.directions()")
        return [self.direction - 1]

    def to_json(self):
        return {
            "direction": self.direction,
            "contamination_points": self.contamination_points,
            "theta": self.theta.to_json(),
            "alpha": self.alpha,
        }


class IFReport:
    """
    Influence function values along the requested contamination points.

    Attributes:
        points (list[float]): The contamination points t.
        first_order (list[np.ndarray]): IF vector at each point, θ order (β, σ).
        second_order_simple (list[float]): Second order IF of the simple-null Wald functional, when computed.
        second_order_composite (list[float]): Second order IF of the composite Wald functional, when computed.
        sup_norm (float): Largest ‖IF‖₂ over the points.
    """

    def __init__(self, points, first_order, second_order_simple=None, second_order_composite=None):
        self.points = [float(t) for t in points]
        self.first_order = [np.asarray(value, dtype=float) for value in first_order]
        self.second_order_simple = second_order_simple
        self.second_order_composite = second_order_composite
        self.sup_norm = float(max(np.linalg.norm(value) for value in self.first_order))

    def to_json(self):
        return {
            "points": self.points,
            "first_order": [value.tolist() for value in self.first_order],
            "second_order_simple": self.second_order_simple,
            "second_order_composite": self.second_order_composite,
            "sup_norm": self.sup_norm,
        }
