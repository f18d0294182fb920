"""Spinor squares in signature p - q = 1 mod 8 and Lorentzian three-manifolds with skew torsion."""

from .algebra import Polyform, Signature, geometric_product, vee_product
from .expr import Chart, parse
from .lorentz3 import Coframe3, FormField, Sampling
from .nsns import NSNSConfig, SusyData, generate_local_solution
from .spinors import paired_module, reconstruct_spinor, square_spinor

__version__ = "0.1.0"

__all__ = [
    "Chart",
    "Coframe3",
    "FormField",
    "NSNSConfig",
    "Polyform",
    "Sampling",
    "Signature",
    "SusyData",
    "generate_local_solution",
    "geometric_product",
    "paired_module",
    "parse",
    "reconstruct_spinor",
    "square_spinor",
    "vee_product",
]
