"""Experiment presets, curve analysis, SVG output and the property-check runner."""
from __future__ import annotations

from .analysis import estimate_plateau, fit_linear_rate, fit_loglog_slope
from .checks import CheckReport, SuiteResult, run_checks
from .experiments import (AnalysisResult, ExperimentConfig, ExperimentResult, Variant, run_experiment,
                          variants_for)
from .svg import emit_svg

__all__ = [
    "AnalysisResult", "CheckReport", "ExperimentConfig", "ExperimentResult", "SuiteResult", "Variant",
    "emit_svg", "estimate_plateau", "fit_linear_rate", "fit_loglog_slope", "run_checks",
    "run_experiment", "variants_for",
]
