"""Discrete homotopy of finite metric spaces over the Rips scale filtration."""

from .spaces import (FiniteMetricSpace, MetricError, MetricGraph, graph_to_space, hawaiian_truncation,
                     product_space, sample_circle, validate_metric, wedge)
from .chains import Chain, HomotopyCertificate, Move, Polyline
from .rips import ScalePoint, presentation, scale_points, scale_set
from .homotopy import Budget, Decision, decide_null
from .spectrum import SpectrumReport, critical_spectrum, family_report, homology_spectrum
from .covers import build_cover, deck_elements, kernel_report, lift_chain
from .topology import spanier_check, ultrametric_table, verify_ultrametric

__all__ = [
    "FiniteMetricSpace", "MetricError", "MetricGraph", "graph_to_space", "hawaiian_truncation",
    "product_space", "sample_circle", "validate_metric", "wedge",
    "Chain", "HomotopyCertificate", "Move", "Polyline",
    "ScalePoint", "presentation", "scale_points", "scale_set",
    "Budget", "Decision", "decide_null",
    "SpectrumReport", "critical_spectrum", "family_report", "homology_spectrum",
    "build_cover", "deck_elements", "kernel_report", "lift_chain",
    "spanier_check", "ultrametric_table", "verify_ultrametric",
]
