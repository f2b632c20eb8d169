"""Stable sheaves on nodal curves, worked out on finite combinatorial data."""

from .charge import ChargeDatum, ChargeValue, central_charge, precedes, slope, stability_verdict
from .curve_graph import CurveGraph, Subcurve, collapse, genus, insert_tree, stabilize
from .error_charge import FMDatum, TorsionRecord, err_charge, is_flat
from .reduction_engine import Move, ReductionState, greedy_move, run, validate_semistable_type
from .sheaf_on_tree import SheafOnTree, SplittingType, classify_positivity, h0, h0_oracle

__version__ = "0.1.0"

__all__ = [
    "ChargeDatum",
    "ChargeValue",
    "CurveGraph",
    "FMDatum",
    "Move",
    "ReductionState",
    "SheafOnTree",
    "SplittingType",
    "Subcurve",
    "TorsionRecord",
    "central_charge",
    "classify_positivity",
    "collapse",
    "err_charge",
    "genus",
    "greedy_move",
    "h0",
    "h0_oracle",
    "insert_tree",
    "is_flat",
    "precedes",
    "run",
    "slope",
    "stabilize",
    "stability_verdict",
    "validate_semistable_type",
]
