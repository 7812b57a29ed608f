"""Schreier graph oracles of subgroups of the free group, with verifiers and Green functions."""

from .oracles import (  # noqa: F401
    FreeOracle,
    GluedOracle,
    GraphOracle,
    LambdaOracle,
    LazyRegion,
    ProductOracle,
    Region,
    TableOracle,
    ZsOracle,
    bfs_ball,
    build_glued,
    cayley_oracle,
    intersection_oracle,
)
from .checks import ContractError, graph_prefix, verify_locality, verify_properness, verify_rad  # noqa: F401
