"""Finite models of normal trees, tree equivalence relations and their Boolean algebras."""
from . import boolalg, branchspace, kernels, largeness, simulator, ter, trees
from .boolalg import FiniteBooleanAlgebra, SubalgebraPartition, ro_algebra
from .ter import Ter
from .trees import LevelledTree, full_tree

__version__ = "0.1.0"
