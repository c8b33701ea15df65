//! Density clustering of edge pixels into active regions.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::imaging::BinaryImage;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist_sq(&self, other: &Point2D) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbscanParams {
    /// Neighbourhood radius in pixels; the ball is closed (`dist <= eps`).
    pub eps: f64,
    /// Neighbours (the point itself included) required for a core point.
    pub min_pts: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self {
            eps: 10.0,
            min_pts: 5,
        }
    }
}

impl DbscanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {}", self.eps)));
        }
        if self.min_pts == 0 {
            return Err(Error::InvalidParameter("min_pts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClusterLabel {
    Noise,
    Cluster(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub labels: Vec<ClusterLabel>,
    pub n_clusters: usize,
    /// Core-point flags, parallel to `labels`.
    pub core: Vec<bool>,
}

/// Uniform grid with cell side `eps`; a query inspects the 3x3 block of cells
/// around the query point and then filters by exact distance, so results
/// equal an exhaustive scan.
struct GridIndex<'a> {
    points: &'a [Point2D],
    eps_sq: f64,
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    fn new(points: &'a [Point2D], eps: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Self {
            points,
            eps_sq: eps * eps,
            cell: eps,
            cells,
        }
    }

    fn key(p: &Point2D, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Neighbours of point `i` (itself included) in ascending index order.
    fn neighbours(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        let (cx, cy) = Self::key(p, self.cell);
        let mut out = Vec::new();
        for gy in cy - 1..=cy + 1 {
            for gx in cx - 1..=cx + 1 {
                if let Some(members) = self.cells.get(&(gx, gy)) {
                    out.extend(
                        members
                            .iter()
                            .copied()
                            .filter(|&j| p.dist_sq(&self.points[j]) <= self.eps_sq),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// DBSCAN over `points`, processed in input order.
///
/// A border point reachable from several clusters joins the first cluster
/// that reaches it.
pub fn dbscan(points: &[Point2D], params: &DbscanParams) -> Result<ClusterLabeling> {
    params.validate()?;
    if let Some(p) = points.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::InvalidParameter(format!("non-finite point {p:?}")));
    }
    let n = points.len();
    let index = GridIndex::new(points, params.eps);
    let mut labels: Vec<Option<ClusterLabel>> = vec![None; n];
    let mut core = vec![false; n];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();

    for i in 0..n {
        if labels[i].is_some() {
            continue;
        }
        let neigh = index.neighbours(i);
        if neigh.len() < params.min_pts {
            labels[i] = Some(ClusterLabel::Noise);
            continue;
        }
        let id = n_clusters;
        n_clusters += 1;
        core[i] = true;
        labels[i] = Some(ClusterLabel::Cluster(id));
        queue.extend(neigh);
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Some(ClusterLabel::Cluster(_)) => continue,
                Some(ClusterLabel::Noise) => {
                    // noise is only ever assigned to non-core points
                    labels[j] = Some(ClusterLabel::Cluster(id));
                    continue;
                }
                None => labels[j] = Some(ClusterLabel::Cluster(id)),
            }
            let nj = index.neighbours(j);
            if nj.len() >= params.min_pts {
                core[j] = true;
                queue.extend(nj);
            }
        }
    }

    Ok(ClusterLabeling {
        labels: labels
            .into_iter()
            .map(|l| l.expect("every point visited"))
            .collect(),
        n_clusters,
        core,
    })
}

/// Number of clusters, noise excluded.
pub fn count_regions(labeling: &ClusterLabeling) -> usize {
    labeling.n_clusters
}

/// Edge pixels as points, in row-major scan order.
pub fn edge_points(edges: &BinaryImage) -> Vec<Point2D> {
    edges
        .foreground()
        .map(|(x, y)| Point2D::new(x as f64, y as f64))
        .collect()
}
