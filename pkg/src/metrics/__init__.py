from src.metrics.evaluation import (
    EvalReport,
    consistency_ratio,
    consistency_score,
    evaluate,
    evaluate_dataset,
    group_types,
    step_macc,
    type_metrics,
    write_report,
)

__all__ = [
    "EvalReport",
    "consistency_ratio",
    "consistency_score",
    "evaluate",
    "evaluate_dataset",
    "group_types",
    "step_macc",
    "type_metrics",
    "write_report",
]
