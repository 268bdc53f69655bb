use serde::{Deserialize, Serialize};

use super::dbscan::{dbscan_with, euclidean, ClusterLabel, DbscanParams};
use super::ItemProfiles;
use crate::par::Exec;
use crate::{ItemIndex, Result};

/// Config-level DBSCAN settings; `eps = None` derives the radius from the
/// current profiles (half the median pairwise distance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbscanSettings {
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default = "default_min_pts")]
    pub min_pts: usize,
}

fn default_min_pts() -> usize {
    4
}

impl Default for DbscanSettings {
    fn default() -> Self {
        Self {
            eps: None,
            min_pts: default_min_pts(),
        }
    }
}

impl DbscanSettings {
    pub fn validate(&self) -> Result<()> {
        let eps = self.eps.unwrap_or(1.0);
        DbscanParams::new(eps, self.min_pts).map(|_| ())
    }

    pub fn resolve(&self, points: &[Vec<f64>]) -> DbscanParams {
        let eps = self.eps.unwrap_or_else(|| auto_eps(points));
        DbscanParams {
            eps,
            min_pts: self.min_pts,
        }
    }
}

fn auto_eps(points: &[Vec<f64>]) -> f64 {
    let mut dists = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            dists.push(euclidean(&points[i], &points[j]));
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    (0.5 * median).max(1e-12)
}

/// DBSCAN result over item profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    /// One label per vocabulary item; items without a profile are noise.
    pub labels: Vec<ClusterLabel>,
    /// Member items per cluster, ascending.
    pub clusters: Vec<Vec<ItemIndex>>,
    /// Mean of the member profiles' contexts.
    pub centroids: Vec<Vec<f64>>,
    pub params: DbscanParams,
}

impl ClusterModel {
    pub fn empty(n_items: usize, params: DbscanParams) -> Self {
        Self {
            labels: vec![ClusterLabel::Noise; n_items],
            clusters: Vec::new(),
            centroids: Vec::new(),
            params,
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn largest_cluster(&self) -> usize {
        self.clusters.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Index of the cluster whose centroid is closest to `context`; ties go
    /// to the lower cluster id.
    pub fn nearest_cluster(&self, context: &[f64]) -> Option<usize> {
        self.centroids
            .iter()
            .enumerate()
            .map(|(c, centroid)| (c, euclidean(context, centroid)))
            .fold(None, |best: Option<(usize, f64)>, (c, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((c, d)),
            })
            .map(|(c, _)| c)
    }
}

pub fn recluster(
    profiles: &ItemProfiles,
    settings: &DbscanSettings,
    n_items: usize,
) -> ClusterModel {
    recluster_with(profiles, settings, n_items, Exec::default())
}

pub fn recluster_with(
    profiles: &ItemProfiles,
    settings: &DbscanSettings,
    n_items: usize,
    exec: Exec,
) -> ClusterModel {
    let items: Vec<ItemIndex> = profiles.iter().map(|p| p.item).collect();
    let points: Vec<Vec<f64>> = profiles.iter().map(|p| p.mean_context.clone()).collect();
    let params = settings.resolve(&points);
    let mut model = ClusterModel::empty(n_items, params);
    if points.is_empty() {
        return model;
    }
    let out = dbscan_with(&points, params, exec);
    model.clusters = vec![Vec::new(); out.n_clusters];
    for (&item, label) in items.iter().zip(&out.labels) {
        if item < n_items {
            model.labels[item] = *label;
        }
        if let ClusterLabel::Cluster(c) = label {
            model.clusters[*c].push(item);
        }
    }
    let dim = points[0].len();
    model.centroids = model
        .clusters
        .iter()
        .map(|members| {
            let mut centroid = vec![0.0; dim];
            for &m in members {
                let profile = profiles.get(m).expect("member has a profile");
                for (c, v) in centroid.iter_mut().zip(&profile.mean_context) {
                    *c += v;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= members.len() as f64);
            centroid
        })
        .collect();
    model
}

/// Candidate items for a context: the members of the nearest cluster, or
/// every item when there is no usable cluster or the nearest one cannot
/// fill a slate of `k`.
pub fn candidate_items(
    context: &[f64],
    model: Option<&ClusterModel>,
    n_items: usize,
    k: usize,
) -> Vec<ItemIndex> {
    let all = || (0..n_items).collect();
    let Some(model) = model else { return all() };
    match model.nearest_cluster(context) {
        Some(c) if model.clusters[c].len() >= k => model.clusters[c].clone(),
        _ => all(),
    }
}
