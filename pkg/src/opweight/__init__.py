"""Completely positive operator-valued weights on finite-dimensional C*-algebras.

Block algebras, Hilbert modules over them, weights with their canonical
dilations (module, embedding, representation), dominated maps, weights
rebuilt from seed data, tensor products and the certification suites.
"""

from .algebra import AlgebraSpec, Element, PartialUnitNet
from .cpmap import CpFamilySampler, CpMap, DominatedMap, directed_join, is_completely_positive, solve_T
from .errors import OpWeightError
from .hmodule import ModuleMap, ModuleRep, free_module
from .ksgns import KsgnsTriplet, Weight, build_canonical_ksgns, verify_ksgns
from .regular import (QuotientModule, RegularWeight, SeedData, TruncatingNet, build_quotient_module,
                      certify_regular, close_lambda, construct_weight, verify_truncating_net)
from .report import Check, Report
from .tensor import TensorWeight, tensor_weight
from .verify import MONITOR, gns, reconstruct_omega

__all__ = [
    "AlgebraSpec", "Element", "PartialUnitNet",
    "CpFamilySampler", "CpMap", "DominatedMap", "directed_join", "is_completely_positive", "solve_T",
    "OpWeightError",
    "ModuleMap", "ModuleRep", "free_module",
    "KsgnsTriplet", "Weight", "build_canonical_ksgns", "verify_ksgns",
    "QuotientModule", "RegularWeight", "SeedData", "TruncatingNet", "build_quotient_module",
    "certify_regular", "close_lambda", "construct_weight", "verify_truncating_net",
    "Check", "Report",
    "TensorWeight", "tensor_weight",
    "MONITOR", "gns", "reconstruct_omega",
]
__version__ = "0.1.0"
