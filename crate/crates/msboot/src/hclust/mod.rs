//! Hierarchical clustering of columns with per-cluster uncertainty: distance
//! matrices, average-linkage trees, cluster-frequency counting across
//! resampling scales, and the assembled per-node p-value pipeline.

mod counts;
mod dist;
mod pvclust;
mod sim;
mod tree;

pub use counts::multiscale_cluster_counts;
pub use dist::{distance, DistanceMatrix, Metric};
pub use pvclust::{
    annotated_newick, assessments_to_tsv, pvclust_run, ClusterAssessment, PvclustConfig,
    PvclustOutcome,
};
pub use sim::mixture_sim;
pub use tree::{
    average_linkage, average_linkage_labeled, clusters_of, newick_annotated, ClusterId,
    Dendrogram, Merge, Node,
};
