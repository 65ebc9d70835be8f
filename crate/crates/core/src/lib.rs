//! Tournament unavoidability toolkit.
//!
//! Tournaments with bit-row adjacency, oriented trees, local median orders,
//! and the constructive embedding procedures that place every oriented tree
//! inside any tournament of sufficient order, together with a brute-force
//! oracle so each embedding, bound, and classical counterexample can be
//! checked mechanically at small scale.

pub mod arbo;
pub mod bits;
pub mod bounds;
pub mod embedding;
pub mod enumerate;
pub mod error;
pub mod forest;
pub mod median;
pub mod oracle;
pub mod stub;
pub mod tournament;
pub mod tree;
pub mod tree_embed;

pub use arbo::{embed_in_arborescence, embed_out_arborescence, embed_sigma_f_nice, extend_out_leaf, ForbiddenSet, GreedyTrace};
pub use bounds::{best_bound, embed_auto, embed_with, Algorithm, BoundReport};
pub use embedding::{verify_embedding, Embedding, Violation};
pub use forest::embed_forest_at_roots;
pub use error::{Error, FailureDump, Result};
pub use stub::{embed_stub, embed_very_few_leaves, find_path_between_sets, find_path_origin_set, is_stub, islands_layout, make_fork, reduce_to_stubs, segments, stump_type, two_out_paths, PathType, Sign};
pub use oracle::{brute_force_embed, contains_all, grunbaum_checks, unvd_exact, GrunbaumReport, SweepReport};
pub use median::{check_m2, forward_arc_count, local_median_order, Ordering};
pub use tournament::Tournament;
pub use tree_embed::{choose_root_few_leaves, clusters, embed_bi_arborescence, embed_few_leaves, embed_many_leaves, embed_root_source, equivalent_arborescence, min_gamma, root_metrics, ClusterSplit, RootMetrics};
pub use tree::{LeafPartition, OrientedTree, RootedTree, TreeMetrics};
