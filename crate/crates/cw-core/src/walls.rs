//! Weighted halfspace families over a finite ground set.
//!
//! A structure stores each wall once, as the side containing the first ground
//! point; loading merges a halfspace with its complement (weights added) and
//! drops sides that cut nothing. The wall pseudometric, its coordinate
//! realizations in L¹/Lᵖ, pullbacks and sums, the cut-cone decomposition of a
//! metric, and the negative-type kernel test all live here.

use crate::bits::BitSet;
use crate::error::{CwError, Result};
use crate::metric::FiniteMetricSpace;
use crate::rational::{q_to_f64, qzero, Q};
use crate::simplex::{solve_eq_nonneg, LinearFeasibility};
use num::Zero;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WallsStructure {
    ground: Vec<String>,
    /// Canonicalized halfspaces (each contains ground point 0), sorted,
    /// with strictly positive weights.
    halfspaces: Vec<(BitSet, Q)>,
}

/// What normalization did to the raw halfspace list.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Halfspaces merged into an already-seen side (or its complement).
    pub merged: usize,
    /// Empty or full sides dropped: they cut no pair.
    pub dropped_trivial: usize,
    /// Zero-weight halfspaces dropped.
    pub dropped_zero: usize,
}

impl WallsStructure {
    /// Normalizes and validates; see [`LoadReport`] for what was adjusted.
    pub fn load(ground: Vec<String>, raw: Vec<(BitSet, Q)>) -> Result<(Self, LoadReport)> {
        let n = ground.len();
        if n == 0 {
            return Err(CwError::input("walls structure needs a nonempty ground set"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &ground {
            if !seen.insert(l.clone()) {
                return Err(CwError::input(format!("duplicate ground label {l:?}")));
            }
        }
        let mut report = LoadReport::default();
        let mut canon: std::collections::BTreeMap<BitSet, Q> = std::collections::BTreeMap::new();
        for (side, weight) in raw {
            if side.universe_len() != n {
                return Err(CwError::input(format!(
                    "halfspace over universe of {} but ground has {} points",
                    side.universe_len(),
                    n
                )));
            }
            if weight < qzero() {
                return Err(CwError::input("halfspace weights must be nonnegative"));
            }
            if weight.is_zero() {
                report.dropped_zero += 1;
                continue;
            }
            if side.is_empty() || side.is_full() {
                report.dropped_trivial += 1;
                continue;
            }
            let key = if side.contains(0) { side } else { side.complement() };
            match canon.entry(key) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(weight);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() += weight;
                    report.merged += 1;
                }
            }
        }
        let halfspaces = canon.into_iter().collect();
        Ok((WallsStructure { ground, halfspaces }, report))
    }

    /// [`Self::load`] with the report discarded.
    pub fn new(ground: Vec<String>, raw: Vec<(BitSet, Q)>) -> Result<Self> {
        Ok(Self::load(ground, raw)?.0)
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    pub fn ground(&self) -> &[String] {
        &self.ground
    }

    pub fn label(&self, i: usize) -> &str {
        &self.ground[i]
    }

    pub fn halfspaces(&self) -> &[(BitSet, Q)] {
        &self.halfspaces
    }

    /// Total weight of halfspaces separating `x` from `y`.
    pub fn wall_metric(&self, x: usize, y: usize) -> Q {
        let mut sum = qzero();
        for (side, w) in &self.halfspaces {
            if side.contains(x) != side.contains(y) {
                sum += w;
            }
        }
        sum
    }

    /// The full wall pseudometric as a space on the ground labels.
    pub fn wall_metric_space(&self) -> Result<FiniteMetricSpace> {
        let n = self.n();
        let mut dist = vec![vec![qzero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = self.wall_metric(i, j);
                dist[i][j] = d.clone();
                dist[j][i] = d;
            }
        }
        FiniteMetricSpace::new(self.ground.clone(), dist)
    }

    /// True iff the wall pseudometric is invariant under each permutation
    /// (given as images; compositions are then invariant too).
    pub fn is_invariant_under(&self, perms: &[Vec<usize>]) -> Result<bool> {
        let n = self.n();
        for perm in perms {
            if perm.len() != n {
                return Err(CwError::input("permutation length differs from ground size"));
            }
            let mut hit = vec![false; n];
            for &img in perm {
                if img >= n || hit[img] {
                    return Err(CwError::input("not a permutation of the ground set"));
                }
                hit[img] = true;
            }
        }
        let mut d = vec![vec![qzero(); n]; n];
        for i in 0..n {
            for j in i + 1..n {
                d[i][j] = self.wall_metric(i, j);
            }
        }
        let at = |d: &Vec<Vec<Q>>, i: usize, j: usize| -> Q {
            if i < j {
                d[i][j].clone()
            } else if j < i {
                d[j][i].clone()
            } else {
                qzero()
            }
        };
        for perm in perms {
            for i in 0..n {
                for j in i + 1..n {
                    if at(&d, perm[i], perm[j]) != d[i][j] {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// Walls on the domain of `map` induced by walls on its codomain: each side
/// is replaced by its preimage. The wall metric of the result equals the
/// original metric of the images.
pub fn pullback(
    w: &WallsStructure,
    domain_labels: Vec<String>,
    map: &[usize],
) -> Result<WallsStructure> {
    if map.len() != domain_labels.len() {
        return Err(CwError::input("pullback map length differs from domain size"));
    }
    if let Some(&bad) = map.iter().find(|&&v| v >= w.n()) {
        return Err(CwError::input(format!("pullback map value {bad} outside codomain")));
    }
    let m = map.len();
    let raw = w
        .halfspaces
        .iter()
        .map(|(side, weight)| {
            let idx: Vec<usize> = (0..m).filter(|&i| side.contains(map[i])).collect();
            (BitSet::from_indices(m, &idx), weight.clone())
        })
        .collect();
    WallsStructure::new(domain_labels, raw)
}

/// Walls on the product of the factor ground sets (indexed row-major, labels
/// `"(a,b)"`), pulling each factor's walls back along its projection. The
/// wall metric of the result is the sum of the factor metrics — the exact
/// product identity.
pub fn sum_walls(factors: &[WallsStructure]) -> Result<WallsStructure> {
    let Some((first, rest)) = factors.split_first() else {
        return Err(CwError::input("sum_walls needs at least one factor"));
    };
    let mut acc = first.clone();
    for b in rest {
        acc = sum_two(&acc, b)?;
    }
    Ok(acc)
}

fn sum_two(a: &WallsStructure, b: &WallsStructure) -> Result<WallsStructure> {
    let (na, nb) = (a.n(), b.n());
    let n = na * nb;
    let mut labels = Vec::with_capacity(n);
    for i in 0..na {
        for j in 0..nb {
            labels.push(format!("({},{})", a.label(i), b.label(j)));
        }
    }
    let mut raw = Vec::with_capacity(a.halfspaces.len() + b.halfspaces.len());
    for (side, w) in &a.halfspaces {
        let idx: Vec<usize> = (0..n).filter(|&x| side.contains(x / nb)).collect();
        raw.push((BitSet::from_indices(n, &idx), w.clone()));
    }
    for (side, w) in &b.halfspaces {
        let idx: Vec<usize> = (0..n).filter(|&x| side.contains(x % nb)).collect();
        raw.push((BitSet::from_indices(n, &idx), w.clone()));
    }
    WallsStructure::new(labels, raw)
}

/// Coordinates of a map into a finite-dimensional Lᵖ space, stored in the
/// weight-and-incidence form every construction here produces: coordinate `c`
/// of point `i` is `weights[c]^(1/p)` if `rows[i]` has bit `c`, else 0, so
/// `‖f(i)-f(j)‖_p^p` is the exact rational sum of `weights[c]` over bits
/// where the two rows differ. Roots are taken only for display.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    p: u32,
    labels: Vec<String>,
    weights: Vec<Q>,
    rows: Vec<BitSet>,
}

impl EmbeddingTable {
    pub fn new(p: u32, labels: Vec<String>, weights: Vec<Q>, rows: Vec<BitSet>) -> Result<Self> {
        if p == 0 {
            return Err(CwError::input("embedding exponent must be at least 1"));
        }
        if rows.len() != labels.len() {
            return Err(CwError::input("one incidence row per point required"));
        }
        let dim = weights.len();
        if rows.iter().any(|r| r.universe_len() != dim) {
            return Err(CwError::input("incidence row width differs from coordinate count"));
        }
        if weights.iter().any(|w| *w < qzero()) {
            return Err(CwError::input("coordinate weights must be nonnegative"));
        }
        Ok(EmbeddingTable { p, labels, weights, rows })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weight(&self, c: usize) -> &Q {
        &self.weights[c]
    }

    /// Indices of the coordinates where point `i` has a nonzero entry.
    pub fn row_coordinates(&self, i: usize) -> Vec<usize> {
        self.rows[i].iter().collect()
    }

    /// Exact `‖f(i)-f(j)‖_p^p`.
    pub fn dist_pow(&self, i: usize, j: usize) -> Q {
        let mut sum = qzero();
        for c in self.rows[i].sym_diff_iter(&self.rows[j]) {
            sum += &self.weights[c];
        }
        sum
    }

    /// `‖f(i)-f(j)‖_p` as a float, for display only.
    pub fn dist_f64(&self, i: usize, j: usize) -> f64 {
        q_to_f64(&self.dist_pow(i, j)).powf(1.0 / self.p as f64)
    }

    /// Coordinate value as a float (`weights[c]^(1/p)` or 0), for display.
    pub fn coordinate_f64(&self, i: usize, c: usize) -> f64 {
        if self.rows[i].contains(c) {
            q_to_f64(&self.weights[c]).powf(1.0 / self.p as f64)
        } else {
            0.0
        }
    }

    /// The point's total mass `‖f(i)‖_p^p`, i.e. its distance-power to the
    /// all-zero vector.
    pub fn mass_pow(&self, i: usize) -> Q {
        let mut sum = qzero();
        for c in self.rows[i].iter() {
            sum += &self.weights[c];
        }
        sum
    }

    /// Side-by-side concatenation of coordinate blocks over the same points.
    pub fn concat(parts: &[EmbeddingTable]) -> Result<EmbeddingTable> {
        let Some(first) = parts.first() else {
            return Err(CwError::input("concat needs at least one block"));
        };
        for t in parts {
            if t.labels != first.labels || t.p != first.p {
                return Err(CwError::input("concat blocks must share points and exponent"));
            }
        }
        let dim: usize = parts.iter().map(|t| t.dim()).sum();
        let mut weights = Vec::with_capacity(dim);
        for t in parts {
            weights.extend(t.weights.iter().cloned());
        }
        let mut rows = Vec::with_capacity(first.n());
        for i in 0..first.n() {
            let mut row = BitSet::new(dim);
            let mut off = 0;
            for t in parts {
                for c in t.rows[i].iter() {
                    row.insert(off + c);
                }
                off += t.dim();
            }
            rows.push(row);
        }
        EmbeddingTable::new(first.p, first.labels.clone(), weights, rows)
    }

    /// First pair where `dist_pow` differs from `target`, if any.
    pub fn isometry_defect<F: Fn(usize, usize) -> Q>(&self, target: F) -> Option<(usize, usize)> {
        for i in 0..self.n() {
            for j in i + 1..self.n() {
                if self.dist_pow(i, j) != target(i, j) {
                    return Some((i, j));
                }
            }
        }
        None
    }
}

/// One coordinate per halfspace, valued `weight^(1/p)` on the side and 0 off
/// it; `‖f(x)-f(y)‖_p^p` equals the wall metric exactly.
pub fn embed_lp(w: &WallsStructure, p: u32) -> Result<EmbeddingTable> {
    let dim = w.halfspaces.len();
    let weights = w.halfspaces.iter().map(|(_, wt)| wt.clone()).collect();
    let rows = (0..w.n())
        .map(|i| {
            let idx: Vec<usize> =
                (0..dim).filter(|&c| w.halfspaces[c].0.contains(i)).collect();
            BitSet::from_indices(dim, &idx)
        })
        .collect();
    EmbeddingTable::new(p, w.ground.clone(), weights, rows)
}

/// The p = 1 case: an exact isometry onto the wall metric.
pub fn embed_l1(w: &WallsStructure) -> Result<EmbeddingTable> {
    embed_lp(w, 1)
}

/// A dual certificate that a metric lies outside the cut cone: pair weights
/// `y` with `Σ y·cut_S <= 0` for every cut `S` while `Σ y·d > 0`.
#[derive(Clone, Debug)]
pub struct CutObstruction {
    /// Weight per unordered pair `(i, j)`, `i < j`.
    pub pair_weights: Vec<((usize, usize), Q)>,
}

impl CutObstruction {
    /// Re-verifies both certificate inequalities against `m` from scratch.
    pub fn verify(&self, m: &FiniteMetricSpace) -> bool {
        let n = m.n();
        let mut value = qzero();
        for ((i, j), y) in &self.pair_weights {
            value += y * m.d(*i, *j);
        }
        if value <= qzero() {
            return false;
        }
        // Every cut, canonicalized as the subsets avoiding point 0.
        for mask in 1u64..(1u64 << (n - 1)) {
            let mut cut_total = qzero();
            for ((i, j), y) in &self.pair_weights {
                let side_i = *i > 0 && mask >> (i - 1) & 1 == 1;
                let side_j = *j > 0 && mask >> (j - 1) & 1 == 1;
                if side_i != side_j {
                    cut_total += y;
                }
            }
            if cut_total > qzero() {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
pub enum CutDecomposition {
    /// Walls whose metric reproduces the input exactly.
    Decomposed(WallsStructure),
    /// The metric is not a nonnegative combination of cuts, hence not
    /// L¹-embeddable; carries a verified separating certificate.
    Infeasible(CutObstruction),
}

pub const CUT_DECOMPOSE_CAP: usize = 12;

/// Expresses a (pseudo)metric as a weighted sum of cut semimetrics, or
/// certifies that none exists. Enumerates all `2^(n-1) - 1` cuts, so the
/// ground set is capped at [`CUT_DECOMPOSE_CAP`] points.
pub fn cut_decompose(m: &FiniteMetricSpace) -> Result<CutDecomposition> {
    let n = m.n();
    if n > CUT_DECOMPOSE_CAP {
        return Err(CwError::cap(
            "cut enumeration",
            1u128 << (n - 1),
            1u128 << (CUT_DECOMPOSE_CAP - 1),
        ));
    }
    if n == 1 {
        let walls = WallsStructure::new(m.labels().to_vec(), Vec::new())?;
        return Ok(CutDecomposition::Decomposed(walls));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
        }
    }
    // Columns: cuts S avoiding point 0, one per nonzero mask over points 1..n.
    let cols: Vec<u64> = (1..(1u64 << (n - 1))).collect();
    let a: Vec<Vec<Q>> = pairs
        .iter()
        .map(|&(i, j)| {
            cols.iter()
                .map(|&mask| {
                    let side_i = i > 0 && mask >> (i - 1) & 1 == 1;
                    let side_j = j > 0 && mask >> (j - 1) & 1 == 1;
                    if side_i != side_j {
                        crate::rational::qone()
                    } else {
                        qzero()
                    }
                })
                .collect()
        })
        .collect();
    let b: Vec<Q> = pairs.iter().map(|&(i, j)| m.d(i, j).clone()).collect();
    match solve_eq_nonneg(&a, &b)? {
        LinearFeasibility::Feasible(x) => {
            let raw: Vec<(BitSet, Q)> = cols
                .iter()
                .zip(x)
                .filter(|(_, w)| !w.is_zero())
                .map(|(&mask, w)| {
                    let idx: Vec<usize> =
                        (1..n).filter(|&i| mask >> (i - 1) & 1 == 1).collect();
                    (BitSet::from_indices(n, &idx), w)
                })
                .collect();
            let walls = WallsStructure::new(m.labels().to_vec(), raw)?;
            for (i, j) in pairs {
                if walls.wall_metric(i, j) != *m.d(i, j) {
                    return Err(CwError::internal(format!(
                        "cut reconstruction differs at pair ({i},{j})"
                    )));
                }
            }
            Ok(CutDecomposition::Decomposed(walls))
        }
        LinearFeasibility::Infeasible(y) => {
            let obstruction =
                CutObstruction { pair_weights: pairs.into_iter().zip(y).collect() };
            if !obstruction.verify(m) {
                return Err(CwError::internal("cut obstruction failed re-verification"));
            }
            Ok(CutDecomposition::Infeasible(obstruction))
        }
    }
}

/// Is the kernel of negative type: `Σ λ_i λ_j k(i,j) <= 0` whenever
/// `Σ λ_i = 0`? Decided exactly through the positive-semidefiniteness of the
/// centered matrix `k(i,0) + k(0,j) - k(i,j)` over indices `i, j >= 1`.
pub fn is_cnd_kernel(k: &[Vec<Q>]) -> Result<bool> {
    let n = k.len();
    if n == 0 || k.iter().any(|row| row.len() != n) {
        return Err(CwError::input("kernel must be a nonempty square matrix"));
    }
    for i in 0..n {
        if !k[i][i].is_zero() {
            return Err(CwError::input(format!("kernel diagonal must vanish (row {i})")));
        }
        for j in 0..i {
            if k[i][j] != k[j][i] {
                return Err(CwError::input(format!("kernel must be symmetric at ({i},{j})")));
            }
        }
    }
    if n == 1 {
        return Ok(true);
    }
    let m = n - 1;
    let mut g = vec![vec![qzero(); m]; m];
    for i in 0..m {
        for j in 0..m {
            g[i][j] = &(&k[i + 1][0] + &k[0][j + 1]) - &k[i + 1][j + 1];
        }
    }
    Ok(psd(&mut g))
}

/// Exact positive-semidefiniteness by symmetric Gaussian elimination: a
/// negative pivot refutes; a zero pivot forces its whole row to vanish.
fn psd(g: &mut [Vec<Q>]) -> bool {
    let m = g.len();
    for c in 0..m {
        if g[c][c] < qzero() {
            return false;
        }
        if g[c][c].is_zero() {
            if (c + 1..m).any(|j| !g[c][j].is_zero()) {
                return false;
            }
            continue;
        }
        for i in c + 1..m {
            if g[i][c].is_zero() {
                continue;
            }
            let f = &g[i][c] / &g[c][c];
            for j in c..m {
                let delta = &f * &g[c][j];
                g[i][j] -= delta;
            }
        }
    }
    true
}

/// Interval cuts of the `n`-cycle: arcs `{i+1, .., i+⌊n/2⌋}`, each of weight
/// 1/2; for even `n` antipodal arcs are complements and merge to weight 1.
/// The wall metric is exactly the cycle graph metric.
pub fn cycle_walls(n: usize) -> Result<WallsStructure> {
    let labels = (0..n).map(|i| i.to_string()).collect();
    if n == 1 {
        return WallsStructure::new(labels, Vec::new());
    }
    let half = n / 2;
    let raw = (0..n)
        .map(|i| {
            let idx: Vec<usize> = (1..=half).map(|t| (i + t) % n).collect();
            (BitSet::from_indices(n, &idx), crate::rational::qr(1, 2))
        })
        .collect();
    WallsStructure::new(labels, raw)
}

/// Prefix cuts `{0, .., i}` of the `n`-point path, weight 1 each; the wall
/// metric is exactly the path graph metric.
pub fn path_walls(n: usize) -> Result<WallsStructure> {
    let labels = (0..n).map(|i| i.to_string()).collect();
    let raw = (0..n.saturating_sub(1))
        .map(|i| {
            let idx: Vec<usize> = (0..=i).collect();
            (BitSet::from_indices(n, &idx), crate::rational::qone())
        })
        .collect();
    WallsStructure::new(labels, raw)
}
