from pathlib import Path

import numpy as np
import pandas as pd

from errors.input_errors import DataParseError, DomainError
from models.DatasetModel import BRAIN_WEIGHT, FIRST_WORD, LOG_LOG, NO_TRANSFORM, DatasetDescriptor
from models.RegressionModel import ModelData

DATASETS_DIR = Path(__file__).resolve().parent.parent / "datasets"

BUNDLED = {
    BRAIN_WEIGHT: DatasetDescriptor(
        name=BRAIN_WEIGHT,
        path=DATASETS_DIR / "brain_weight.csv",
        response_column="brain_g",
        covariate_columns=["body_kg"],
        transform=LOG_LOG,
        outliers=[6, 16, 25],
        label_column="animal",
    ),
    FIRST_WORD: DatasetDescriptor(
        name=FIRST_WORD,
        path=DATASETS_DIR / "first_word.csv",
        response_column="gesell_score",
        covariate_columns=["age_months"],
        transform=NO_TRANSFORM,
        outliers=[18],
        label_column="child",
    ),
}


def _numeric_column(frame: pd.DataFrame, column: str, path: str) -> np.ndarray:
    if column not in frame.columns:
        raise DataParseError(f"column '{column}' not found in {path}, available: {list(frame.columns)}",
                             source="load_csv()", column=column)
    values = np.empty(len(frame))
    for row, cell in enumerate(frame[column], start=1):
        text = str(cell).strip()
        if text == "":
            raise DataParseError(f"missing value at row {row}, column '{column}'", source="load_csv()",
                                 row=row, column=column)
        try:
            values[row - 1] = float(text)
        except ValueError:
            raise DataParseError(f"'{text}' is not a number (row {row}, column '{column}')", source="load_csv()",
                                 row=row, column=column)
    return values


def load_csv(
    path: str,
    header: bool = True,
    response_column: str = None,
    covariate_columns: list[str] = None,
    add_intercept: bool = True,
    transform: str = NO_TRANSFORM,
    label_column: str = None,
) -> ModelData:
    """
    Reads a comma separated file into a regression sample.

    Without a header the columns are named "0", "1", ... By default the last column is
    the response and every other column except label_column is a covariate.

    Args:
        path (str): CSV file, UTF-8, '.' as decimal point.
        header (bool): Whether the first line names the columns.
        response_column (str): Column holding Y.
        covariate_columns (list[str]): Design columns, intercept excluded.
        add_intercept (bool): Prepend a column of ones.
        transform (str): "log_log" takes natural logs of the response and the covariates.
        label_column (str): Optional column naming the rows.
    Returns:
        The ModelData, coefficients named beta0.. in design order.
    Raises:
        DataParseError: Missing file or column, empty or non numeric cell, non positive value under log_log.
    """
    if not Path(path).is_file():
        raise DataParseError(f"file '{path}' not found", source="load_csv()")
    frame = pd.read_csv(path, header=0 if header else None, dtype=str, keep_default_na=False,
                        skipinitialspace=True, encoding="utf-8")
    frame.columns = [str(column).strip() for column in frame.columns]
    if frame.empty:
        raise DataParseError(f"'{path}' holds no data rows", source="load_csv()")
    response_column = frame.columns[-1] if response_column is None else response_column
    if covariate_columns is None:
        covariate_columns = [column for column in frame.columns if column not in (response_column, label_column)]
    response = _numeric_column(frame, response_column, path)
    covariates = [_numeric_column(frame, column, path) for column in covariate_columns]
    if transform == LOG_LOG:
        for column, values in zip([response_column] + covariate_columns, [response] + covariates):
            if np.any(values <= 0):
                row = int(np.flatnonzero(values <= 0)[0]) + 1
                raise DataParseError(f"log_log needs positive values (row {row}, column '{column}')",
                                     source="load_csv()", row=row, column=column)
        response = np.log(response)
        covariates = [np.log(values) for values in covariates]
    elif transform != NO_TRANSFORM:
        raise DomainError(f"unknown transform '{transform}'", source="load_csv()")
    columns = ([np.ones(len(frame))] if add_intercept else []) + covariates
    if not columns:
        raise DataParseError("no design column selected", source="load_csv()")
    labels = None if label_column is None else [str(value) for value in frame[label_column]]
    return ModelData(np.column_stack(columns), response, row_labels=labels)


def resolve_dataset(name: str, response_column: str = None, covariate_columns: list[str] = None,
                    transform: str = None, header: bool = True) -> DatasetDescriptor:
    """Descriptor of a bundled dataset by name, or of a user CSV by path."""
    if name in BUNDLED:
        bundled = BUNDLED[name]
        return DatasetDescriptor(bundled.name, bundled.path, bundled.response_column, bundled.covariate_columns,
                                 bundled.transform if transform is None else transform, bundled.outliers,
                                 bundled.label_column)
    return DatasetDescriptor("user", name, response_column, covariate_columns,
                             NO_TRANSFORM if transform is None else transform, header=header)


def load_dataset(descriptor: DatasetDescriptor) -> ModelData:
    data = load_csv(
        descriptor.path,
        header=descriptor.header,
        response_column=descriptor.response_column,
        covariate_columns=descriptor.covariate_columns,
        transform=descriptor.transform,
        label_column=descriptor.label_column,
    )
    descriptor.n, descriptor.p = data.n, data.p
    return data
