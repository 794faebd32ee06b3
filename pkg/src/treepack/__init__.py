"""treepack: decompose blow-up and near-complete graphs into copies of a tree.

The pipeline embeds a stripped tree rainbow-style in a Cayley digraph over
Z_p, completes it with a star forest, lifts everything to the blow-up
Z_p x Z_r, repairs the lift conflicts by column permutations of label
matrices, and closes under translations. Independent verification and a
certificate file format live in :mod:`treepack.certify`.
"""

from .blowup import (
    ConflictMatrixPair,
    CopyFamily,
    Decomposition,
    conflict_matrices,
    decompose_blowup,
    hall_repair,
    lift_copy,
    reassign_outgoing,
)
from .certify import (
    Certificate,
    VerificationReport,
    read_certificate,
    verify_decomposition,
    verify_rainbow,
    write_certificate,
)
from .corollaries import (
    Tournament,
    decompose_clique_complement,
    decompose_matching_complement,
    decompose_near_complete,
    leaf_assignment_search,
    regular_tournament,
)
from .embedding import (
    QuasiEmbedding,
    RainbowEmbedding,
    cn_coefficient_oracle,
    compose_quasi_embedding,
    distinct_sums_permutation,
    embed_star_forest,
    embed_tree_rainbow,
)
from .errors import CertificateError, ConstructionError
from .graphs import (
    CayleyDigraph,
    ColorSet,
    CyclicGroup,
    ProductGroup,
    TargetGraph,
    blow_up_arc,
    build_cayley,
    build_target,
    translate,
)
from .trees import (
    Split,
    StarForest,
    Tree,
    canonical_form,
    free_tree_count,
    leaf_count,
    peeling_ordering,
    sample_labeled_tree,
    sample_unlabeled_tree,
    strip_leaves,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
