"""Livšic-type analysis of cocycles with values in a Banach ring.

Real square matrices with the max-row-sum norm stand in for the ring; the
base dynamics are shifts of finite type and hyperbolic toral automorphisms.
"""
__version__ = "0.1.0"

from .ring import MatrixRing, ScalarRing, Element, SingularError, group_dist, distortion_bound
from .dynamics import ShiftOfFiniteType, ToralAutomorphism, SymbolPoint, TorusPoint
from .cocycle import (
    Cocycle,
    CoboundaryGenerator,
    ConstantGenerator,
    ExprGenerator,
    WindowGenerator,
    scan_obstructions,
    window_coboundary,
)
from .transfer import TransferTable, solve, consistency_check, verify_coboundary, compare_transfers

__all__ = [
    "MatrixRing", "ScalarRing", "Element", "SingularError", "group_dist", "distortion_bound",
    "ShiftOfFiniteType", "ToralAutomorphism", "SymbolPoint", "TorusPoint",
    "Cocycle", "CoboundaryGenerator", "ConstantGenerator", "ExprGenerator", "WindowGenerator",
    "scan_obstructions", "window_coboundary",
    "TransferTable", "solve", "consistency_check", "verify_coboundary", "compare_transfers",
]
