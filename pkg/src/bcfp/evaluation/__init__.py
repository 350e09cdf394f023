from bcfp.evaluation.metrics import auroc, average_precision, f1_at_threshold
from bcfp.evaluation.splits import SplitPlan, stratified_holdout, stratified_kfold
from bcfp.evaluation.stats import TukeyResult, studentized_range_cdf, studentized_range_ppf, tukey_hsd

__all__ = [
    "auroc", "average_precision", "f1_at_threshold",
    "SplitPlan", "stratified_holdout", "stratified_kfold",
    "TukeyResult", "studentized_range_cdf", "studentized_range_ppf", "tukey_hsd",
]
