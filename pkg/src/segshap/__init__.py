"""Segment-based SHAP attributions for time series classifiers and their perturbation-based evaluation."""

__version__ = "0.1.0"
