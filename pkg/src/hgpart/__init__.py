"""k-way hypergraph partitioning: a simplified n-level multilevel core with a
steady-state memetic search layer and a benchmark harness."""

from .hgraph import (
    ContractionMemento,
    HmetisFormatError,
    Hypergraph,
    parse_hmetis,
    read_partition_file,
    write_hmetis,
    write_partition_file,
)
from .memetic import (
    Individual,
    OperatorConfig,
    Population,
    block_quality,
    build_mutation_clusters,
    combine_c1,
    combine_c2,
    combine_c3,
    distance,
    evolve,
    greedy_block_clusters,
    init_population,
    mutate_m1,
    mutate_m2,
    mutate_m3,
    mutate_m4,
    replace,
    tournament_select,
)
from .multilevel import (
    Clustering,
    ClusterPolicy,
    CoarseningConfig,
    CoarseningHierarchy,
    coarsen,
    fm_refine,
    heavy_edge_rating,
    initial_partition,
    partition_single,
    vcycle,
)
from .partition import (
    Partition,
    audit_partition,
    balance_cap,
    connectivity_metric,
    cut_metric,
    imbalance,
    is_balanced,
    signature,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
