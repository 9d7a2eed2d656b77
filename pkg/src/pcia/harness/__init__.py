from .crossval import CrossValReport, FoldResult, cross_validate, select_checkpoint
from .datasets import ExperimentData, experiment_data, fold_partition, partitioned
from .evaluation import EvalReport, evaluate_model, evaluate_predictor, mean_and_ci
from .reporting import format_table, parse_table_csv, table_csv, table_rows, write_report
from .training import NonFiniteLossError, TrainResult, run_epochs, train

__all__ = [
    "CrossValReport", "EvalReport", "ExperimentData", "FoldResult", "NonFiniteLossError", "TrainResult",
    "cross_validate", "evaluate_model", "evaluate_predictor", "experiment_data", "fold_partition",
    "format_table", "mean_and_ci", "parse_table_csv", "partitioned", "run_epochs", "select_checkpoint",
    "table_csv", "table_rows", "train", "write_report",
]
