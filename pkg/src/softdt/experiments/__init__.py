"""Noise-robustness experiments, synthetic data, statistics and self-checks."""

from .protocol import (METHODS, BenchmarkDataset, ExperimentPlan, RunRecord, calibrate_benchmark,
                       confidence_sweep, cv_tune_parameter, fit_method, run_experiment,
                       run_experiment1, run_experiment2, synthetic_benchmarks)
from .stats import StandardizedMetric, standardize, standardize_metrics, wilcoxon_signed_rank
from .synth import (SYNTHETIC_LABEL_NOISE, SYNTHETIC_SHAPES, synth_guyon, synthetic_dataset,
                    synthetic_suite)
from .toy import toy_misclassification_prob, toy_monte_carlo
