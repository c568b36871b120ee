"""Desk-scale tabular in-context learning stack.

Subpackages cover the autodiff engine, the synthetic-task prior, the
two-axis attention model, pretraining, the ensemble predictor, classical
baselines, the statistics layer, and the benchmark harness.
"""

__version__ = "0.1.0"
