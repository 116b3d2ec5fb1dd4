"""Mean-value consensus protocols on weighted digraphs.

Linear, polynomial, entropic, scaling-invariant and metric-driven consensus
dynamics, the means they converge to, and the free-energy view of their
flows.
"""

from .dynamics import IntegratorConfig, Trajectory, integrate
from .graph import (
    WeightedDigraph,
    generate_complete,
    generate_regular,
    is_balanced,
    is_strongly_connected,
    laplacian,
    load_edge_list,
    parse_edge_list,
    perron_left_vector,
)
from .means import agm, am, am_w, elliptic_integral, gm, gm_w, lgm
from .protocols import Protocol, vector_field

__version__ = "0.1.0"

__all__ = [
    "IntegratorConfig",
    "Protocol",
    "Trajectory",
    "WeightedDigraph",
    "agm",
    "am",
    "am_w",
    "elliptic_integral",
    "generate_complete",
    "generate_regular",
    "gm",
    "gm_w",
    "integrate",
    "is_balanced",
    "is_strongly_connected",
    "laplacian",
    "lgm",
    "load_edge_list",
    "parse_edge_list",
    "perron_left_vector",
    "vector_field",
]
