"""Graph and product-graph learning from smooth signals."""

from .bpgl import FactorEstimates, PGLConfig, bpgl_learn, bpgl_learn_parallel_cartesian, factor_score_matrix, full_objective
from .errors import DimensionError, GraphError, ProdGraphError, SolverDivergence
from .glp import GLPConfig, GLPResult, admm_solve, build_constraints, glp_learn, score_matrix
from .graph import WeightedAdjacency, laplacian, pack, param_count, unpack
from .tensor import FactorGraphSet, ProductKind, product_adjacency, product_apply, product_eigvals, product_gft

__version__ = "0.1.0"
