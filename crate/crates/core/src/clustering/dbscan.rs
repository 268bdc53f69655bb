use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::par::{self, Exec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    /// Euclidean neighborhood radius (inclusive).
    pub eps: f64,
    /// A point is core when its eps-ball, itself included, holds at least
    /// this many points.
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        let params = Self { eps, min_pts };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::config(format!(
                "dbscan eps must be positive, got {}",
                self.eps
            )));
        }
        if self.min_pts == 0 {
            return Err(Error::config("dbscan min_pts must be at least 1"));
        }
        Ok(())
    }
}

/// Cluster assignment. Serialized as the cluster id, or -1 for noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i64", try_from = "i64")]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(c) => Some(c),
            ClusterLabel::Noise => None,
        }
    }
}

impl From<ClusterLabel> for i64 {
    fn from(label: ClusterLabel) -> i64 {
        match label {
            ClusterLabel::Cluster(c) => c as i64,
            ClusterLabel::Noise => -1,
        }
    }
}

impl TryFrom<i64> for ClusterLabel {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(ClusterLabel::Noise),
            c if c >= 0 => Ok(ClusterLabel::Cluster(c as usize)),
            other => Err(format!("invalid cluster label {other}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbscanOutput {
    pub labels: Vec<ClusterLabel>,
    pub n_clusters: usize,
}

#[inline]
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Indices `j` with `‖points[i] − points[j]‖ ≤ eps`, ascending, `i` included.
pub fn region_query(points: &[Vec<f64>], i: usize, eps: f64) -> Vec<usize> {
    let p = &points[i];
    (0..points.len())
        .filter(|&j| euclidean(p, &points[j]) <= eps)
        .collect()
}

/// Uniform grid with cell side `eps`: every neighbor of a point lies in
/// the 3^d cells around it. Only built for d ≤ 3.
struct Grid {
    dim: usize,
    eps: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

impl Grid {
    const MAX_DIM: usize = 3;

    fn build(points: &[Vec<f64>], eps: f64) -> Option<Self> {
        let dim = points.first()?.len();
        if dim == 0 || dim > Self::MAX_DIM || eps <= 0.0 || !eps.is_finite() {
            return None;
        }
        let max_abs = points.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !max_abs.is_finite() || max_abs / eps > 1e15 {
            return None;
        }
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Some(Self { dim, eps, cells })
    }

    fn key(p: &[f64], eps: f64) -> [i64; 3] {
        let mut key = [0i64; 3];
        for (k, v) in key.iter_mut().zip(p) {
            *k = (v / eps).floor() as i64;
        }
        key
    }

    fn neighbors(&self, points: &[Vec<f64>], i: usize) -> Vec<usize> {
        let p = &points[i];
        let center = Self::key(p, self.eps);
        let mut out = Vec::new();
        let span = 3usize.pow(self.dim as u32);
        for code in 0..span {
            let mut key = center;
            let mut c = code;
            for slot in key.iter_mut().take(self.dim) {
                *slot += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(members) = self.cells.get(&key) {
                out.extend(
                    members
                        .iter()
                        .copied()
                        .filter(|&j| euclidean(p, &points[j]) <= self.eps),
                );
            }
        }
        out.sort_unstable();
        out
    }
}

fn neighbor_lists(points: &[Vec<f64>], eps: f64, exec: Exec) -> Vec<Vec<usize>> {
    match Grid::build(points, eps) {
        Some(grid) => par::map_indexed(exec, points.len(), |i| grid.neighbors(points, i)),
        None => par::map_indexed(exec, points.len(), |i| region_query(points, i, eps)),
    }
}

pub fn dbscan(points: &[Vec<f64>], params: DbscanParams) -> DbscanOutput {
    dbscan_with(points, params, Exec::default())
}

/// Classic DBSCAN. Clusters are seeded from unlabeled core points in
/// ascending index order and grown breadth-first; a border point reachable
/// from several clusters joins the one that reaches it first, which is the
/// cluster with the smallest seed index. Points left unlabeled are noise.
pub fn dbscan_with(points: &[Vec<f64>], params: DbscanParams, exec: Exec) -> DbscanOutput {
    let neighbors = neighbor_lists(points, params.eps, exec);
    let core: Vec<bool> = neighbors
        .iter()
        .map(|n| n.len() >= params.min_pts)
        .collect();
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();
    for seed in 0..points.len() {
        if labels[seed].is_some() || !core[seed] {
            continue;
        }
        let cluster = n_clusters;
        n_clusters += 1;
        labels[seed] = Some(cluster);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(cluster);
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    DbscanOutput {
        labels: labels
            .into_iter()
            .map(|l| l.map_or(ClusterLabel::Noise, ClusterLabel::Cluster))
            .collect(),
        n_clusters,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn region_query_on_a_line() {
        let pts = line(&[0.0, 1.0, 3.0]);
        assert_eq!(region_query(&pts, 0, 1.0), vec![0, 1]);
        let dup = line(&[2.0, 5.0, 2.0]);
        assert_eq!(region_query(&dup, 0, 0.0), vec![0, 2]);
    }

    #[test]
    fn region_query_matches_pairwise_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random(), rng.random()]).collect();
        for i in 0..pts.len() {
            let mut expected = Vec::new();
            for j in 0..pts.len() {
                let dx = pts[i][0] - pts[j][0];
                let dy = pts[i][1] - pts[j][1];
                if (dx * dx + dy * dy).sqrt() <= 0.2 {
                    expected.push(j);
                }
            }
            assert_eq!(region_query(&pts, i, 0.2), expected);
        }
    }

    #[test]
    fn two_groups_and_an_outlier() {
        let pts = line(&[0.0, 1.0, 2.0, 10.0, 11.0, 12.0, 50.0]);
        let out = dbscan(&pts, DbscanParams::new(1.5, 2).unwrap());
        use ClusterLabel::*;
        assert_eq!(out.n_clusters, 2);
        assert_eq!(
            out.labels,
            vec![
                Cluster(0),
                Cluster(0),
                Cluster(0),
                Cluster(1),
                Cluster(1),
                Cluster(1),
                Noise
            ]
        );
    }

    #[test]
    fn huge_eps_with_min_pts_one_gives_single_cluster() {
        let pts = line(&[-100.0, 3.0, 7e6, 0.5]);
        let out = dbscan(&pts, DbscanParams::new(f64::INFINITY, 1).unwrap());
        assert_eq!(out.n_clusters, 1);
        assert!(out.labels.iter().all(|l| *l == ClusterLabel::Cluster(0)));
    }

    #[test]
    fn empty_input_has_no_clusters() {
        let out = dbscan(&[], DbscanParams::new(1.0, 3).unwrap());
        assert_eq!(out.n_clusters, 0);
        assert!(out.labels.is_empty());
    }

    #[test]
    fn border_point_joins_the_first_reaching_cluster() {
        // index 4 is a non-core point within reach of both groups.
        let pts = line(&[0.0, 0.2, 0.4, 0.8, 1.7, 2.6, 3.0, 3.2, 3.4]);
        let out = dbscan(&pts, DbscanParams::new(1.0, 4).unwrap());
        assert_eq!(out.n_clusters, 2);
        assert_eq!(out.labels[4], ClusterLabel::Cluster(0));
        assert_eq!(out.labels[5], ClusterLabel::Cluster(1));
    }

    #[test]
    fn grid_and_linear_scan_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dim in 1..=3 {
            let pts: Vec<Vec<f64>> = (0..300)
                .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let eps = 0.3;
            let grid = Grid::build(&pts, eps).unwrap();
            for i in 0..pts.len() {
                assert_eq!(grid.neighbors(&pts, i), region_query(&pts, i, eps));
            }
        }
    }

    #[test]
    fn params_are_validated() {
        assert!(DbscanParams::new(0.0, 3).is_err());
        assert!(DbscanParams::new(f64::NAN, 3).is_err());
        assert!(DbscanParams::new(1.0, 0).is_err());
    }

    #[test]
    fn labels_serialize_as_integers() {
        let json = serde_json::to_string(&[ClusterLabel::Cluster(2), ClusterLabel::Noise]).unwrap();
        assert_eq!(json, "[2,-1]");
        let back: Vec<ClusterLabel> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![ClusterLabel::Cluster(2), ClusterLabel::Noise]);
    }
}
