"""Elias-Fano ordered sets: static, dynamic and append-only."""

from .append_only import AppendOnlySet
from .bitvec import BitVector
from .dynset import DynSet
from .ef_static import (EliasFano, SampledPredecessor, SpaceReport, b_bits, ef_bits, ef_bound,
                        encode, join, low_width, split)
from .errors import (CapacityError, EfsetError, FormatError, MonotonicityError, OrderingError,
                     RangeError, StaleIndexError, UniverseError)
from .small_set_tree import ClassParams, SmallSetTree
from .yfast import YFastTrie

__all__ = [
    "AppendOnlySet", "BitVector", "CapacityError", "ClassParams", "DynSet", "EfsetError",
    "EliasFano", "FormatError", "MonotonicityError", "OrderingError", "RangeError",
    "SampledPredecessor", "SmallSetTree", "SpaceReport", "StaleIndexError", "UniverseError",
    "YFastTrie", "b_bits", "ef_bits", "ef_bound", "encode", "join", "low_width", "split",
]
__version__ = "0.1.0"
