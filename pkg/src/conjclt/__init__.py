"""Statistics of free-group displacement restricted to a conjugacy class."""

__version__ = "0.1.0"

from .conjugacy import ConjugacyClass, class_of
from .symbolic import WeightFunction, tree_length_weight, weight_from_spec
from .words import Letter, Word

__all__ = [
    "ConjugacyClass",
    "Letter",
    "WeightFunction",
    "Word",
    "class_of",
    "tree_length_weight",
    "weight_from_spec",
]
