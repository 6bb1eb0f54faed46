from errors.base_errors import RenyiError
from errors.input_errors import (
    ConfigError,
    DataParseError,
    DomainError,
    HypothesisError,
)
from errors.numerical_errors import (
    DecompositionError,
    DegenerateDirectionError,
    DegenerateFitError,
    NumericalError,
)
