"""Semi-structured discrete-time multi-state transition models."""

from mstrans._core import (
    FORMAT_VERSION,
    GroundTruth,
    ModelBundle,
    MstransError,
    Panel,
    aalen_johansen,
    approx_state1,
    approx_state2,
    binary_auc,
    brier_multiclass,
    compound,
    ece,
    evaluate_spans,
    exact_state0,
    exact_state1,
    exact_state2,
    fit,
    gelu,
    make_demo_panel,
    multiclass_auc,
    one_vs_all_auc,
    predict_distributions,
    project_out,
    simulate,
    spline_basis,
    woe_encode,
)

__version__ = "0.1.0"

__all__ = [
    "FORMAT_VERSION",
    "GroundTruth",
    "ModelBundle",
    "MstransError",
    "Panel",
    "aalen_johansen",
    "approx_state1",
    "approx_state2",
    "binary_auc",
    "brier_multiclass",
    "compound",
    "ece",
    "evaluate_spans",
    "exact_state0",
    "exact_state1",
    "exact_state2",
    "fit",
    "gelu",
    "make_demo_panel",
    "multiclass_auc",
    "one_vs_all_auc",
    "predict_distributions",
    "project_out",
    "simulate",
    "spline_basis",
    "woe_encode",
]
