//! Finite (pseudo)metric spaces with exact rational distances.
//!
//! A space is a list of opaque point labels plus a full distance matrix.
//! Validation reports every axiom failure with explicit witnesses instead of
//! stopping at the first, so a bad input file can be fixed in one pass.

use crate::error::{CwError, Result};
use crate::rational::{format_q, qzero, Q};
use num::Zero;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<Q>>,
}

/// Whether zero distance between distinct points is acceptable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricMode {
    Metric,
    Pseudometric,
}

/// One failed axiom, with the points that witness the failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricDefect {
    Shape { detail: String },
    Negative { i: usize, j: usize, value: String },
    Asymmetric { i: usize, j: usize },
    NonzeroDiagonal { i: usize, value: String },
    Indiscernible { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize, lhs: String, rhs: String },
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub defects: Vec<MetricDefect>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.defects.is_empty()
    }
}

impl FiniteMetricSpace {
    /// Builds a space without validating the axioms; see [`Self::validate`].
    pub fn new(labels: Vec<String>, dist: Vec<Vec<Q>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(CwError::input("a metric space needs at least one point"));
        }
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(CwError::input(format!("distance matrix must be {n}x{n}")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(CwError::input(format!("duplicate point label {l:?}")));
            }
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn d(&self, i: usize, j: usize) -> &Q {
        &self.dist[i][j]
    }

    pub fn diameter(&self) -> Q {
        let mut best = qzero();
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.dist[i][j] > best {
                    best = self.dist[i][j].clone();
                }
            }
        }
        best
    }

    /// Checks all axioms on all pairs/triples, reporting every failure.
    pub fn validate(&self, mode: MetricMode) -> ValidationReport {
        let n = self.n();
        let mut defects = Vec::new();
        for i in 0..n {
            if !self.dist[i][i].is_zero() {
                defects.push(MetricDefect::NonzeroDiagonal {
                    i,
                    value: format_q(&self.dist[i][i]),
                });
            }
            for j in 0..n {
                if self.dist[i][j] < qzero() {
                    defects.push(MetricDefect::Negative { i, j, value: format_q(&self.dist[i][j]) });
                }
                if i < j {
                    if self.dist[i][j] != self.dist[j][i] {
                        defects.push(MetricDefect::Asymmetric { i, j });
                    }
                    if mode == MetricMode::Metric && self.dist[i][j].is_zero() {
                        defects.push(MetricDefect::Indiscernible { i, j });
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    let lhs = &self.dist[i][k];
                    let rhs = &self.dist[i][j] + &self.dist[j][k];
                    if *lhs > rhs {
                        defects.push(MetricDefect::Triangle {
                            i,
                            j,
                            k,
                            lhs: format_q(lhs),
                            rhs: format_q(&rhs),
                        });
                    }
                }
            }
        }
        ValidationReport { defects }
    }

    /// Shortest-path metric of an undirected unit-length graph.
    ///
    /// Fails with a witness pair if the graph is disconnected.
    pub fn word_metric(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(CwError::input("word metric needs at least one vertex"));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(CwError::input(format!("edge ({a},{b}) outside vertex range 0..{n}")));
            }
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut dist = vec![vec![qzero(); n]; n];
        for s in 0..n {
            let mut hops = vec![usize::MAX; n];
            hops[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if hops[v] == usize::MAX {
                        hops[v] = hops[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if let Some(unreached) = hops.iter().position(|&h| h == usize::MAX) {
                return Err(CwError::Disconnected {
                    a: labels[s].clone(),
                    b: labels[unreached].clone(),
                });
            }
            for v in 0..n {
                dist[s][v] = crate::rational::qi(hops[v] as i64);
            }
        }
        FiniteMetricSpace::new(labels, dist)
    }

    /// Minimum positive pairwise distance. `None` means no positive pairwise
    /// distance exists (single point, or a totally degenerate pseudometric),
    /// to be read with "+infinity" semantics by callers.
    pub fn uniform_discreteness(&self) -> Option<Q> {
        let mut best: Option<Q> = None;
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                let d = &self.dist[i][j];
                if d.is_zero() {
                    continue;
                }
                if best.as_ref().map_or(true, |b| d < b) {
                    best = Some(d.clone());
                }
            }
        }
        best
    }

    /// True if no two distinct points sit at distance zero.
    pub fn is_uniformly_discrete(&self) -> bool {
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.dist[i][j].is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// Largest cardinality of a closed ball of radius `c`.
    pub fn bounded_geometry(&self, c: &Q) -> usize {
        (0..self.n())
            .map(|i| (0..self.n()).filter(|&j| &self.dist[i][j] <= c).count())
            .max()
            .unwrap_or(0)
    }

    /// Points of the closed ball around `center`.
    pub fn closed_ball(&self, center: usize, radius: &Q) -> Vec<usize> {
        (0..self.n()).filter(|&j| &self.dist[center][j] <= radius).collect()
    }
}

/// A map `p : domain -> codomain` together with the constant `C` at which it
/// is meant to be coarsely dense.
#[derive(Clone, Debug)]
pub struct DenseMap {
    /// `values[i]` is the codomain index of the image of domain point `i`.
    pub values: Vec<usize>,
    pub c: Q,
}

impl DenseMap {
    pub fn new(values: Vec<usize>, codomain_size: usize, c: Q) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&v| v >= codomain_size) {
            return Err(CwError::input(format!(
                "map value {bad} outside codomain of size {codomain_size}"
            )));
        }
        if c < qzero() {
            return Err(CwError::input("density constant C must be nonnegative"));
        }
        Ok(DenseMap { values, c })
    }

    pub fn image_of(&self, i: usize) -> usize {
        self.values[i]
    }
}

/// Result of the density check: the farthest codomain point from the image.
#[derive(Clone, Debug)]
pub struct DensityReport {
    pub dense: bool,
    /// Codomain point realizing the covering radius, with its distance.
    pub worst_point: usize,
    pub worst_distance: Q,
}

/// Is every point of `codomain` within `p.c` of the image of `p`?
pub fn check_dense(p: &DenseMap, codomain: &FiniteMetricSpace) -> Result<DensityReport> {
    if p.values.is_empty() {
        return Err(CwError::input("density check needs a nonempty domain"));
    }
    let mut worst_point = 0usize;
    let mut worst_distance: Option<Q> = None;
    for z in 0..codomain.n() {
        let near = p
            .values
            .iter()
            .map(|&im| codomain.d(z, im).clone())
            .min()
            .expect("nonempty domain");
        if worst_distance.as_ref().map_or(true, |w| near > *w) {
            worst_distance = Some(near);
            worst_point = z;
        }
    }
    let worst_distance = worst_distance.expect("nonempty codomain");
    Ok(DensityReport { dense: worst_distance <= p.c, worst_point, worst_distance })
}

/// Discreteness and bounded-geometry data consumed by the certification step.
#[derive(Clone, Debug)]
pub struct GeometryReport {
    /// Minimum positive gap of the position space, if it is uniformly discrete.
    pub delta_y: Option<Q>,
    /// Largest closed `C`-ball cardinality in the index space.
    pub n_c: usize,
    /// Minimum positive gap of the fiber space, if uniformly discrete.
    pub delta_x: Option<Q>,
    /// Hypothesis sets that hold: [Y unif. discrete & Z bdd geom, Y bdd geom &
    /// Z bdd geom, X unif. discrete].
    pub sets: [bool; 3],
    /// First set that holds, if any (preference order as listed above).
    pub chosen: Option<usize>,
}

/// Convenience constructors used across tests and fixtures.
pub fn cycle_space(n: usize) -> FiniteMetricSpace {
    let labels = (0..n).map(|i| i.to_string()).collect();
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    FiniteMetricSpace::word_metric(labels, &edges).expect("cycle is connected")
}

pub fn path_space(n: usize) -> FiniteMetricSpace {
    let labels = (0..n).map(|i| i.to_string()).collect();
    let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    FiniteMetricSpace::word_metric(labels, &edges).expect("path is connected")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qi, qr};

    fn three_path() -> FiniteMetricSpace {
        path_space(3)
    }

    #[test]
    fn valid_path_metric_passes() {
        let m = three_path();
        assert!(m.validate(MetricMode::Metric).is_valid());
        assert_eq!(*m.d(0, 2), qi(2));
    }

    #[test]
    fn triangle_violation_carries_witness() {
        let mut dist = vec![vec![qzero(); 3]; 3];
        dist[0][1] = qi(1);
        dist[1][0] = qi(1);
        dist[1][2] = qi(1);
        dist[2][1] = qi(1);
        dist[0][2] = qi(5);
        dist[2][0] = qi(5);
        let m = FiniteMetricSpace::new(vec!["a".into(), "b".into(), "c".into()], dist).unwrap();
        let report = m.validate(MetricMode::Metric);
        assert!(report
            .defects
            .iter()
            .any(|d| matches!(d, MetricDefect::Triangle { i: 0, j: 1, k: 2, .. })));
    }

    #[test]
    fn pseudometric_mode_permits_zero_gaps() {
        let mut dist = vec![vec![qzero(); 2]; 2];
        dist[0][1] = qzero();
        dist[1][0] = qzero();
        let m = FiniteMetricSpace::new(vec!["a".into(), "b".into()], dist).unwrap();
        assert!(!m.validate(MetricMode::Metric).is_valid());
        assert!(m.validate(MetricMode::Pseudometric).is_valid());
        assert!(!m.is_uniformly_discrete());
        assert_eq!(m.uniform_discreteness(), None);
    }

    #[test]
    fn word_metric_on_six_cycle() {
        let m = cycle_space(6);
        assert_eq!(*m.d(0, 3), qi(3));
        assert_eq!(*m.d(0, 5), qi(1));
        assert!(m.validate(MetricMode::Metric).is_valid());
    }

    #[test]
    fn disconnected_graph_names_a_witness_pair() {
        let labels = vec!["a".into(), "b".into(), "c".into()];
        let err = FiniteMetricSpace::word_metric(labels, &[(0, 1)]).unwrap_err();
        match err {
            CwError::Disconnected { a, b } => {
                assert_eq!(a, "a");
                assert_eq!(b, "c");
            }
            other => panic!("expected Disconnected, got {other:?}"),
        }
    }

    #[test]
    fn discreteness_gap_of_rational_points() {
        let pts = [qi(0), qi(1), qr(5, 2)];
        let n = pts.len();
        let mut dist = vec![vec![qzero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let diff = &pts[i] - &pts[j];
                dist[i][j] = if diff < qzero() { -diff } else { diff };
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        let m = FiniteMetricSpace::new(labels, dist).unwrap();
        assert_eq!(m.uniform_discreteness(), Some(qi(1)));
    }

    #[test]
    fn closed_ball_counts_on_six_cycle() {
        let m = cycle_space(6);
        assert_eq!(m.bounded_geometry(&qi(2)), 5);
        assert_eq!(m.bounded_geometry(&qzero()), 1);
        assert_eq!(m.bounded_geometry(&qi(3)), 6);
    }

    #[test]
    fn density_of_mod_reduction() {
        let c12 = cycle_space(12);
        let c6 = cycle_space(6);
        let _ = c12;
        let p = DenseMap::new((0..12).map(|y| y % 6).collect(), c6.n(), qzero()).unwrap();
        let report = check_dense(&p, &c6).unwrap();
        assert!(report.dense);
        assert_eq!(report.worst_distance, qzero());
    }

    #[test]
    fn sparse_image_fails_density_with_witness() {
        let c6 = cycle_space(6);
        // Image {0}: the far side of the cycle is 3 away.
        let p = DenseMap::new(vec![0], c6.n(), qi(1)).unwrap();
        let report = check_dense(&p, &c6).unwrap();
        assert!(!report.dense);
        assert_eq!(report.worst_distance, qi(3));
        assert_eq!(report.worst_point, 3);
    }
}
