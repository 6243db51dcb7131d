"""Biomarker-based fatality risk toolkit.

Penalized logistic regression with interaction terms, cross-validated
hyperparameter search with median coefficient aggregation, threshold
tuning, and multi-day-ahead forecasting evaluation.
"""

__version__ = "0.1.0"
