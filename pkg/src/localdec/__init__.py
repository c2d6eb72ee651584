"""Local covers, tangles and canonical graph decompositions of finite multigraphs."""

from localdec.multigraph import (
    Multigraph,
    Walk,
    CycleSubgraph,
    BinaryCycleSpace,
    Isomorphism,
    UNDECIDED,
    GraphError,
    DisconnectedGraphError,
    MalformedWalkError,
    reduce_walk,
    homotopic,
    ball,
    enumerate_short_cycles,
    spanning_tree,
    fundamental_walks,
    cycle_space_basis,
    short_cycles_span,
    isomorphic,
    automorphisms,
)
from localdec.grouppres import (
    FreeWord,
    Presentation,
    CosetTable,
    FiniteGroup,
    walk_to_word,
    deck_group_presentation,
    todd_coxeter,
    table_to_group,
    word_image,
)
from localdec.localcover import (
    Covering,
    TruncatedCover,
    VoltageAssignment,
    LabelledGraph,
    local_cover,
    lift_walk,
    verify_ball_preservation,
    verify_cover_cycle_space,
    verify_idempotence,
    cayley_graph,
    local_group_extension,
    covering_equivalence,
)
from localdec.tangles import (
    Separation,
    SeparationUniverse,
    Tangle,
    NestedSet,
    enumerate_separations,
    is_tight,
    enumerate_tangles,
    enumerate_blocks,
    block_tangle,
    distinguishers,
    canonical_nested_set,
)
from localdec.treedecomp import (
    SplittingStar,
    TreeDecomposition,
    consistent_orientations,
    splitting_stars,
    induce_tree_decomposition,
    verify_tree_decomposition,
)
from localdec.graphdec import (
    GraphDecomposition,
    DecompositionReport,
    DecompositionResult,
    verify_graph_decomposition,
    dual_decomposition,
    induce_separation_from_model,
    quotient_decomposition,
    cayley_model_decomposition,
    verify_canonicity,
    decompose,
)

__all__ = [
    "Multigraph", "Walk", "CycleSubgraph", "BinaryCycleSpace", "Isomorphism",
    "UNDECIDED", "GraphError", "DisconnectedGraphError", "MalformedWalkError",
    "reduce_walk", "homotopic", "ball", "enumerate_short_cycles",
    "spanning_tree", "fundamental_walks", "cycle_space_basis",
    "short_cycles_span", "isomorphic", "automorphisms",
    "FreeWord", "Presentation", "CosetTable", "FiniteGroup", "walk_to_word",
    "deck_group_presentation", "todd_coxeter", "table_to_group", "word_image",
    "Covering", "TruncatedCover", "VoltageAssignment", "LabelledGraph",
    "local_cover", "lift_walk", "verify_ball_preservation",
    "verify_cover_cycle_space", "verify_idempotence", "cayley_graph",
    "local_group_extension", "covering_equivalence",
    "Separation", "SeparationUniverse", "Tangle", "NestedSet",
    "enumerate_separations", "is_tight", "enumerate_tangles",
    "enumerate_blocks", "block_tangle", "distinguishers",
    "canonical_nested_set",
    "SplittingStar", "TreeDecomposition", "consistent_orientations",
    "splitting_stars", "induce_tree_decomposition",
    "verify_tree_decomposition",
    "GraphDecomposition", "DecompositionReport", "DecompositionResult",
    "verify_graph_decomposition", "dual_decomposition",
    "induce_separation_from_model", "quotient_decomposition",
    "cayley_model_decomposition", "verify_canonicity", "decompose",
]
