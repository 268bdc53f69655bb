//! Density clustering of item profiles and cluster-based candidate
//! reduction.

mod dbscan;
mod model;
mod profiles;

pub use dbscan::{
    dbscan, dbscan_with, euclidean, region_query, ClusterLabel, DbscanOutput, DbscanParams,
};
pub use model::{candidate_items, recluster, recluster_with, ClusterModel, DbscanSettings};
pub use profiles::{ItemProfile, ItemProfiles};
