"""Hausdorff dimension of sofic sets in two and three dimensions."""

from .dim2 import Dim2Config, DimensionReport, MethodInapplicable, dimension2d
from .dim3 import Dim3Config, detect_recursive_structure, dimension3d
from .graph_model import AdjacencyFamily, AlphabetSpec, load_any, parse_digraph
from .oracle import brute_dim2, brute_dim3, trivial_case_dimension

__version__ = "0.1.0"
