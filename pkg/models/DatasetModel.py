import json
from pathlib import Path

from __init__ import __version__

BRAIN_WEIGHT = "brain_weight"
FIRST_WORD = "first_word"
LOG_LOG = "log_log"
NO_TRANSFORM = "none"


class DatasetDescriptor:
    """
    Where a dataset lives and how to turn it into a regression sample.

    Attributes:
        name (str): "brain_weight", "first_word" or "user".
        path (str): CSV location.
        response_column (str): Column holding Y.
        covariate_columns (list[str]): Columns of the design, intercept excluded.
        transform (str): "log_log" or "none".
        outliers (list[int]): 1-based rows known to be outlying.
        label_column (str): Optional column naming the rows.
        header (bool): Whether the CSV starts with a header line.
        n (int): Rows, filled in once loaded.
        p (int): Design columns including intercept, filled in once loaded.
    """

    def __init__(
        self,
        name: str,
        path: str,
        response_column: str,
        covariate_columns: list[str],
        transform: str = NO_TRANSFORM,
        outliers: list[int] = None,
        label_column: str = None,
        header: bool = True,
        n: int = None,
        p: int = None,
    ):
        self.name = name
        self.path = str(path)
        self.response_column = response_column
        self.covariate_columns = covariate_columns
        self.transform = transform
        self.outliers = outliers if outliers is not None else []
        self.label_column = label_column
        self.header = header
        self.n = n
        self.p = p

    def to_json(self):
        return {
            "name": self.name,
            "path": self.path,
            "response_column": self.response_column,
            "covariate_columns": self.covariate_columns,
            "transform": self.transform,
            "outliers": self.outliers,
            "n": self.n,
            "p": self.p,
        }


class RunManifest:
    """
    Everything needed to rerun a command bit for bit.

    Attributes:
        command (str): Subcommand name.
        options (dict): Resolved options, defaults included.
        seed (int): Seed in effect.
        version (str): Package version.
        checksums (dict[str, str]): sha256 of every input file.
    """

    def __init__(self, command: str, options: dict, seed: int, checksums: dict = None, version: str = __version__):
        self.command = command
        self.options = options
        self.seed = int(seed)
        self.version = version
        self.checksums = checksums if checksums is not None else dict()

    def to_json(self):
        return {
            "command": self.command,
            "options": self.options,
            "seed": self.seed,
            "version": self.version,
            "checksums": self.checksums,
        }

    def write(self, output_path: str) -> Path:
        """Writes <output_path>.manifest.json next to the report."""
        target = Path(f"{output_path}.manifest.json")
        target.write_text(json.dumps(self.to_json(), indent=2, default=str))
        return target
