//! Empirical moduli, polynomial lifting fits, compression-exponent
//! estimation, and exact distortion certification.
//!
//! Everything an inequality depends on is computed in rationals; floats
//! appear only in the two fitting routines ([`poly_fit`] and
//! [`compression_fit`]), which are estimates by nature. Step functions are
//! tabulated on *attained* values only, with the generalized-inverse
//! convention `rho⁻¹(R) = max{t attained : rho(t) ≤ R}` (and `0` when even
//! the smallest tabulated value exceeds `R`); suprema over empty sets are
//! `0`.

use num::{Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::error::{CwError, Result};
use crate::lift::{assemble_lambda, hypothesis_check, point_label, WallsTriple};
use crate::metric::{DenseMap, FiniteMetricSpace, GeometryReport};
use crate::rational::{format_q, q_to_f64, qi, qone, qzero, Q};
use crate::wreath::{PairDistances, WreathInstance, WreathPoint};

/// Whether a step function is a lower envelope (`rho`) or an upper envelope
/// (`eta`) of its defining point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModulusKind {
    Lower,
    Upper,
}

/// A monotone step function tabulated on the attained abscissae of a pair
/// cloud `(t, value)`.
#[derive(Debug, Clone)]
pub struct Modulus {
    kind: ModulusKind,
    table: Vec<(Q, Q)>,
}

impl Modulus {
    /// `rho(t) = min{value : abscissa ≥ t}` over the cloud, tabulated at
    /// every attained abscissa.
    pub fn lower_from_cloud(cloud: &[(Q, Q)]) -> Modulus {
        let grouped = group_min(cloud);
        let mut table: Vec<(Q, Q)> = grouped.into_iter().collect();
        // Suffix minimum turns per-abscissa minima into the envelope.
        let mut i = table.len();
        let mut running: Option<Q> = None;
        while i > 0 {
            i -= 1;
            let v = match &running {
                Some(r) if *r < table[i].1 => r.clone(),
                _ => table[i].1.clone(),
            };
            table[i].1 = v.clone();
            running = Some(v);
        }
        Modulus { kind: ModulusKind::Lower, table }
    }

    /// `eta(t) = max{value : abscissa ≤ t}` over the cloud.
    pub fn upper_from_cloud(cloud: &[(Q, Q)]) -> Modulus {
        let grouped = group_max(cloud);
        let mut table: Vec<(Q, Q)> = grouped.into_iter().collect();
        let mut running: Option<Q> = None;
        for entry in table.iter_mut() {
            let v = match &running {
                Some(r) if *r > entry.1 => r.clone(),
                _ => entry.1.clone(),
            };
            entry.1 = v.clone();
            running = Some(v);
        }
        Modulus { kind: ModulusKind::Upper, table }
    }

    pub fn kind(&self) -> ModulusKind {
        self.kind
    }

    /// The tabulated `(t, value)` pairs, ascending in `t`.
    pub fn points(&self) -> &[(Q, Q)] {
        &self.table
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.table.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    /// Evaluates the step function. For an upper envelope the value at `t`
    /// is taken from the largest tabulated abscissa `≤ t` (`0` below the
    /// table — the supremum over an empty set). For a lower envelope it is
    /// the value at the smallest tabulated abscissa `≥ t`, and `None` above
    /// the table (an empty minimum).
    pub fn eval(&self, t: &Q) -> Option<Q> {
        match self.kind {
            ModulusKind::Upper => Some(
                self.table
                    .iter()
                    .rev()
                    .find(|(a, _)| a <= t)
                    .map(|(_, v)| v.clone())
                    .unwrap_or_else(qzero),
            ),
            ModulusKind::Lower => self
                .table
                .iter()
                .find(|(a, _)| a >= t)
                .map(|(_, v)| v.clone()),
        }
    }

    /// Upper-envelope evaluation as a total function (`0` below the table).
    /// Panics if called on a lower envelope — the two evaluation
    /// conventions must not be mixed silently.
    pub fn eval_upper(&self, t: &Q) -> Q {
        assert!(self.kind == ModulusKind::Upper, "eval_upper on a lower envelope");
        self.eval(t).expect("upper envelopes are total")
    }

    /// Generalized inverse for lower envelopes:
    /// `max{t attained : rho(t) ≤ r}`, and `0` when every tabulated value
    /// exceeds `r`.
    pub fn inverse_at(&self, r: &Q) -> Q {
        assert!(self.kind == ModulusKind::Lower, "inverse_at on an upper envelope");
        self.table
            .iter()
            .rev()
            .find(|(_, v)| v <= r)
            .map(|(t, _)| t.clone())
            .unwrap_or_else(qzero)
    }

    /// Largest tabulated abscissa, if the table is nonempty.
    pub fn max_abscissa(&self) -> Option<&Q> {
        self.table.last().map(|(t, _)| t)
    }

    /// Largest tabulated value, if the table is nonempty. Both kinds are
    /// monotone, so the last entry carries it.
    pub fn max_value(&self) -> Option<Q> {
        self.table.last().map(|(_, v)| v.clone())
    }
}

fn group_min(cloud: &[(Q, Q)]) -> BTreeMap<Q, Q> {
    let mut out: BTreeMap<Q, Q> = BTreeMap::new();
    for (t, v) in cloud {
        out.entry(t.clone())
            .and_modify(|cur| {
                if v < cur {
                    *cur = v.clone();
                }
            })
            .or_insert_with(|| v.clone());
    }
    out
}

fn group_max(cloud: &[(Q, Q)]) -> BTreeMap<Q, Q> {
    let mut out: BTreeMap<Q, Q> = BTreeMap::new();
    for (t, v) in cloud {
        out.entry(t.clone())
            .and_modify(|cur| {
                if v > cur {
                    *cur = v.clone();
                }
            })
            .or_insert_with(|| v.clone());
    }
    out
}

/// Both envelopes of an embedding metric against a space, over all
/// unordered pairs of distinct indices.
pub fn empirical_moduli<F: Fn(usize, usize) -> Q>(
    space: &FiniteMetricSpace,
    embedding_metric: F,
) -> (Modulus, Modulus) {
    let mut cloud = Vec::new();
    for i in 0..space.n() {
        for j in (i + 1)..space.n() {
            cloud.push((space.d(i, j).clone(), embedding_metric(i, j)));
        }
    }
    (
        Modulus::lower_from_cloud(&cloud),
        Modulus::upper_from_cloud(&cloud),
    )
}

/// Worst-case cost of lifting a step in the index space back through the
/// map: tabulated at every attained index distance.
#[derive(Debug, Clone)]
pub struct LiftingProfile {
    table: Vec<(Q, Q)>,
    pub c: Q,
}

impl LiftingProfile {
    /// Builds a profile from raw `(r, theta(r))` rows: sorts, keeps the max
    /// per abscissa, then takes the running maximum so the profile is
    /// nondecreasing (a larger tabulated cost at a smaller distance is
    /// still a valid lift bound at the larger distance).
    pub fn from_table(rows: Vec<(Q, Q)>, c: Q) -> LiftingProfile {
        let grouped = group_max(&rows);
        let mut table: Vec<(Q, Q)> = grouped.into_iter().collect();
        let mut running: Option<Q> = None;
        for entry in table.iter_mut() {
            let v = match &running {
                Some(r) if *r > entry.1 => r.clone(),
                _ => entry.1.clone(),
            };
            entry.1 = v.clone();
            running = Some(v);
        }
        LiftingProfile { table, c }
    }

    pub fn points(&self) -> &[(Q, Q)] {
        &self.table
    }

    /// `theta(t)`: value at the largest tabulated distance `≤ t`, `0`
    /// below the table.
    pub fn eval(&self, t: &Q) -> Q {
        self.table
            .iter()
            .rev()
            .find(|(r, _)| r <= t)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(qzero)
    }
}

/// Exhaustive lifting profile of a dense map: for every index pair
/// `(z, z')` at distance `r` and every position whose image is `C`-close
/// to `z`, the cheapest position over `z'` is found, and `theta(r)` is the
/// worst such cost.
pub fn lifting_modulus(
    p: &DenseMap,
    y: &FiniteMetricSpace,
    z: &FiniteMetricSpace,
) -> Result<LiftingProfile> {
    let mut rows: Vec<(Q, Q)> = Vec::new();
    for z1 in 0..z.n() {
        // Positions admissible for z1.
        let fiber1: Vec<usize> = (0..y.n())
            .filter(|&yy| z.d(p.image_of(yy), z1) <= &p.c)
            .collect();
        if fiber1.is_empty() {
            continue;
        }
        for z2 in 0..z.n() {
            let fiber2: Vec<usize> = (0..y.n())
                .filter(|&yy| z.d(p.image_of(yy), z2) <= &p.c)
                .collect();
            if fiber2.is_empty() {
                return Err(CwError::internal(format!(
                    "no admissible position over index point {z2} despite density"
                )));
            }
            let mut worst = qzero();
            for &y1 in &fiber1 {
                let best = fiber2
                    .iter()
                    .map(|&y2| y.d(y1, y2).clone())
                    .min()
                    .expect("fiber2 nonempty");
                if best > worst {
                    worst = best;
                }
            }
            rows.push((z.d(z1, z2).clone(), worst));
        }
    }
    Ok(LiftingProfile::from_table(rows, p.c.clone()))
}

/// Least-squares exponent fit for a lifting profile.
#[derive(Debug, Clone, Copy)]
pub struct PolyFit {
    /// Fitted exponent: slope of `ln theta(r)` against `ln r` over the
    /// tabulated rows with both coordinates positive, clamped at `0`.
    pub delta_hat: f64,
    /// Smallest constant `≥ 1` with `theta(r) ≤ K(r^delta_hat + 1)` on
    /// every tabulated row.
    pub k: f64,
}

pub fn poly_fit(profile: &LiftingProfile) -> PolyFit {
    let logs: Vec<(f64, f64)> = profile
        .points()
        .iter()
        .filter(|(r, v)| r > &qzero() && v > &qzero())
        .map(|(r, v)| (q_to_f64(r).ln(), q_to_f64(v).ln()))
        .collect();
    let delta_hat = ls_slope(&logs).max(0.0);
    let mut k: f64 = 1.0;
    for (r, v) in profile.points() {
        let rf = q_to_f64(r);
        let vf = q_to_f64(v);
        let denom = rf.powf(delta_hat) + 1.0;
        if vf / denom > k {
            k = vf / denom;
        }
    }
    PolyFit { delta_hat, k }
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in points {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `S(R) = max{d_Z(p(y), p(y')) : d_Y(y, y') ≤ R}` as an upper envelope.
pub fn bornologous_modulus(
    p: &DenseMap,
    y: &FiniteMetricSpace,
    z: &FiniteMetricSpace,
) -> Modulus {
    let mut cloud = Vec::new();
    for y1 in 0..y.n() {
        for y2 in (y1 + 1)..y.n() {
            cloud.push((
                y.d(y1, y2).clone(),
                z.d(p.image_of(y1), p.image_of(y2)).clone(),
            ));
        }
    }
    Modulus::upper_from_cloud(&cloud)
}

/// Exact affine upper envelope of the image distances: `a` is the largest
/// ratio `d_Z/d_Y` over pairs with `d_Y > 0`, and `b` the smallest offset
/// making `a·d_Y + b` dominate the whole cloud (it is `0` unless some pair
/// at `d_Y = 0` moves in the image).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineBound {
    pub a: Q,
    pub b: Q,
}

pub fn affine_upper(p: &DenseMap, y: &FiniteMetricSpace, z: &FiniteMetricSpace) -> AffineBound {
    let mut a = qzero();
    for y1 in 0..y.n() {
        for y2 in (y1 + 1)..y.n() {
            let dy = y.d(y1, y2);
            let dz = z.d(p.image_of(y1), p.image_of(y2));
            if dy > &qzero() {
                let ratio = dz / dy;
                if ratio > a {
                    a = ratio;
                }
            }
        }
    }
    let mut b = qzero();
    for y1 in 0..y.n() {
        for y2 in (y1 + 1)..y.n() {
            let slack = z.d(p.image_of(y1), p.image_of(y2)) - &a * y.d(y1, y2);
            if slack > b {
                b = slack;
            }
        }
    }
    AffineBound { a, b }
}

/// Finite-sample compression estimate from a `(d, ‖Δf‖)` pair cloud: the
/// log-log least-squares slope of the lower envelope (minimum embedded
/// distance per attained `d > 0`), clamped to `[0, 1]` and snapped to a
/// `0.01` grid, together with sandwich constants at that exponent. This
/// estimates — never proves — an asymptotic exponent.
#[derive(Debug, Clone, Copy)]
pub struct CompressionFit {
    pub r_hat: f64,
    pub c: f64,
    pub d: f64,
    pub feasible: bool,
    pub envelope_points: usize,
}

/// Constants making `(1/C)·d^r − D ≤ ‖Δf‖ ≤ C·d + D` hold over the cloud,
/// with `C ≥ 1` and `D > 0`, re-verified pair by pair in floats.
#[derive(Debug, Clone, Copy)]
pub struct SandwichFit {
    pub c: f64,
    pub d: f64,
    pub feasible: bool,
}

pub fn sandwich_at(cloud: &[(Q, Q)], r: f64) -> SandwichFit {
    let mut c: f64 = 1.0;
    for (dq, eq) in cloud {
        let df = q_to_f64(dq);
        let ef = q_to_f64(eq);
        if ef > 0.0 {
            c = c.max(df.powf(r) / ef);
        }
        if df > 0.0 {
            c = c.max(ef / df);
        }
    }
    let mut d: f64 = 1e-9;
    for (dq, eq) in cloud {
        let df = q_to_f64(dq);
        let ef = q_to_f64(eq);
        if ef == 0.0 {
            d = d.max(df.powf(r) / c);
        }
        if df == 0.0 {
            d = d.max(ef);
        }
    }
    let eps = 1e-9;
    let feasible = cloud.iter().all(|(dq, eq)| {
        let df = q_to_f64(dq);
        let ef = q_to_f64(eq);
        df.powf(r) / c - d <= ef + eps && ef <= c * df + d + eps
    });
    SandwichFit { c, d, feasible }
}

pub fn compression_fit(cloud: &[(Q, Q)]) -> CompressionFit {
    let mut envelope: BTreeMap<Q, Q> = BTreeMap::new();
    for (dq, eq) in cloud {
        if dq <= &qzero() {
            continue;
        }
        envelope
            .entry(dq.clone())
            .and_modify(|cur| {
                if eq < cur {
                    *cur = eq.clone();
                }
            })
            .or_insert_with(|| eq.clone());
    }
    let logs: Vec<(f64, f64)> = envelope
        .iter()
        .filter(|(_, v)| *v > &qzero())
        .map(|(d, v)| (q_to_f64(d).ln(), q_to_f64(v).ln()))
        .collect();
    let r_hat = if logs.len() < 2 {
        0.0
    } else {
        let raw = ls_slope(&logs).clamp(0.0, 1.0);
        (raw * 100.0).round() / 100.0
    };
    let sandwich = sandwich_at(cloud, r_hat);
    CompressionFit {
        r_hat,
        c: sandwich.c,
        d: sandwich.d,
        feasible: sandwich.feasible,
        envelope_points: envelope.len(),
    }
}

/// `min(alpha, beta, gamma/(gamma+delta))`, with the ratio read as `0`
/// when `gamma = delta = 0`. Inputs must be nonnegative.
pub fn comp_lower_bound(alpha: &Q, beta: &Q, gamma: &Q, delta: &Q) -> Result<Q> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
        if v.is_negative() {
            return Err(CwError::input(format!("{name} must be nonnegative")));
        }
    }
    let denom = gamma + delta;
    let ratio = if denom.is_zero() { qzero() } else { gamma / &denom };
    let mut out = alpha.clone();
    if beta < &out {
        out = beta.clone();
    }
    if ratio < out {
        out = ratio;
    }
    Ok(out)
}

/// Everything the distortion bounds depend on, derived once from an
/// instance and its walls. Keeping the inputs separate from the walls that
/// produce the comparison distances lets a mutation test corrupt the
/// latter while holding the former fixed.
#[derive(Debug, Clone)]
pub struct CertInputs {
    pub rho_x: Modulus,
    pub eta_x: Modulus,
    pub rho_y: Modulus,
    pub eta_y: Modulus,
    pub rho_z: Modulus,
    pub eta_z: Modulus,
    pub theta: LiftingProfile,
    pub s_table: Modulus,
    pub geometry: GeometryReport,
    pub c: Q,
}

impl CertInputs {
    pub fn derive(inst: &WreathInstance, walls: &WallsTriple) -> Result<CertInputs> {
        walls.check_against(inst)?;
        let (rho_x, eta_x) = empirical_moduli(&inst.x, |i, j| walls.sigma.wall_metric(i, j));
        let (rho_y, eta_y) = empirical_moduli(&inst.y, |i, j| walls.nu.wall_metric(i, j));
        let (rho_z, eta_z) = empirical_moduli(&inst.z, |i, j| walls.mu.wall_metric(i, j));
        let theta = lifting_modulus(&inst.p, &inst.y, &inst.z)?;
        let s_table = bornologous_modulus(&inst.p, &inst.y, &inst.z);
        let geometry = hypothesis_check(inst);
        Ok(CertInputs {
            rho_x,
            eta_x,
            rho_y,
            eta_y,
            rho_z,
            eta_z,
            theta,
            s_table,
            geometry,
            c: inst.p.c.clone(),
        })
    }

    /// Bound for the first direction: a pair at comparison distance `≤ R`
    /// has product distance at most
    /// `2R·theta(rho_Z⁻¹(R)) + rho_Y⁻¹(R) + R·rho_X⁻¹(R)`.
    /// Nondecreasing in `R`, so checking each pair at its own attained `R`
    /// settles the statement for the whole attained value set.
    pub fn c1_bound(&self, r: &Q) -> Q {
        let two_r = qi(2) * r;
        let lift_reach = self.theta.eval(&self.rho_z.inverse_at(r));
        &two_r * &lift_reach + self.rho_y.inverse_at(r) + r * &self.rho_x.inverse_at(r)
    }

    /// Bound for the second direction, available when the position space
    /// is uniformly discrete (the first hypothesis set): a pair at product
    /// distance `≤ R` has comparison distance at most
    /// `eta_Y(R) + E(R)·(eta_Z(S(R+1) + 2C) + eta_X(R) + 1)` with
    /// `E(R) = N(C)·(R+1)/delta_Y`. Also nondecreasing in `R`.
    pub fn c2_bound(&self, r: &Q) -> Option<Q> {
        if self.geometry.chosen != Some(0) {
            return None;
        }
        let delta_y = self.geometry.delta_y.clone()?;
        let r_plus = r + qone();
        let e = qi(self.geometry.n_c as i64) * &r_plus / &delta_y;
        let spread = self.s_table.eval_upper(&r_plus) + qi(2) * &self.c;
        let inner = self.eta_z.eval_upper(&spread) + self.eta_x.eval_upper(r) + qone();
        Some(self.eta_y.eval_upper(r) + &e * &inner)
    }
}

/// One failed inequality, with the pair and both sides rendered exactly.
#[derive(Debug, Clone)]
pub struct Violation {
    pub a: String,
    pub b: String,
    /// Which bound failed: "product<=C1(comparison)" or
    /// "comparison<=C2(product)".
    pub rule: &'static str,
    pub lhs: String,
    pub bound: String,
    pub at: String,
}

#[derive(Debug, Clone)]
pub struct CertificationReport {
    pub pairs: usize,
    pub c2_evaluated: bool,
    pub violations: Vec<Violation>,
    /// Largest attained product and comparison distances, for context.
    pub max_product: Option<Q>,
    pub max_comparison: Option<Q>,
}

impl CertificationReport {
    pub fn is_certified(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The `(product distance, comparison distance)` cloud over all unordered
/// pairs of the point list, computed through the subset DP and the
/// assembled embedding table respectively.
pub fn pair_cloud(
    inst: &WreathInstance,
    walls: &WallsTriple,
    points: &[WreathPoint],
) -> Result<Vec<(Q, Q)>> {
    let asm = assemble_lambda(inst, walls, points)?;
    let mut pd = PairDistances::new(inst);
    let mut cloud = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dw = pd.distance(&points[i], &points[j])?;
            cloud.push((dw, asm.table.dist_pow(i, j)));
        }
    }
    Ok(cloud)
}

/// Checks both distortion bounds on every unordered pair of the point
/// list, against separately supplied inputs (see [`CertInputs`]).
pub fn certify_with_inputs(
    inst: &WreathInstance,
    walls: &WallsTriple,
    points: &[WreathPoint],
    inputs: &CertInputs,
) -> Result<CertificationReport> {
    let asm = assemble_lambda(inst, walls, points)?;
    let mut pd = PairDistances::new(inst);
    let mut rows: Vec<(usize, usize, Q, Q)> = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dw = pd.distance(&points[i], &points[j])?;
            rows.push((i, j, dw, asm.table.dist_pow(i, j)));
        }
    }
    let c2_evaluated = inputs.geometry.chosen == Some(0);
    let violations: Vec<Violation> = rows
        .par_iter()
        .flat_map_iter(|(i, j, dw, dl)| {
            let mut found = Vec::new();
            let c1 = inputs.c1_bound(dl);
            if *dw > c1 {
                found.push(Violation {
                    a: point_label(inst, &points[*i]),
                    b: point_label(inst, &points[*j]),
                    rule: "product<=C1(comparison)",
                    lhs: format_q(dw),
                    bound: format_q(&c1),
                    at: format_q(dl),
                });
            }
            if let Some(c2) = inputs.c2_bound(dw) {
                if *dl > c2 {
                    found.push(Violation {
                        a: point_label(inst, &points[*i]),
                        b: point_label(inst, &points[*j]),
                        rule: "comparison<=C2(product)",
                        lhs: format_q(dl),
                        bound: format_q(&c2),
                        at: format_q(dw),
                    });
                }
            }
            found
        })
        .collect();
    let max_product = rows.iter().map(|(_, _, dw, _)| dw.clone()).max();
    let max_comparison = rows.iter().map(|(_, _, _, dl)| dl.clone()).max();
    Ok(CertificationReport {
        pairs: rows.len(),
        c2_evaluated,
        violations,
        max_product,
        max_comparison,
    })
}

/// Derives the inputs from the same walls and certifies the point list.
pub fn certify_c1c2(
    inst: &WreathInstance,
    walls: &WallsTriple,
    points: &[WreathPoint],
) -> Result<(CertificationReport, CertInputs)> {
    let inputs = CertInputs::derive(inst, walls)?;
    let report = certify_with_inputs(inst, walls, points, &inputs)?;
    Ok((report, inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{cycle_space, path_space};
    use crate::rational::qr;
    use crate::walls::{cycle_walls, path_walls, WallsStructure};
    use crate::wreath::{enumerate_all_points, enumerate_ball, WreathPoint, DEFAULT_BALL_CAP};

    fn lamplighter_c5() -> (WreathInstance, WallsTriple) {
        let p = DenseMap::new((0..5).collect(), 5, qzero()).unwrap();
        let inst =
            WreathInstance::new(path_space(2), 0, cycle_space(5), cycle_space(5), p).unwrap();
        let triple = WallsTriple::new(path_walls(2).unwrap(), cycle_walls(5).unwrap(), cycle_walls(5).unwrap());
        (inst, triple)
    }

    #[test]
    fn moduli_of_identity_embedding_are_identity() {
        let space = cycle_space(5);
        let (rho, eta) = empirical_moduli(&space, |i, j| space.d(i, j).clone());
        let expect = vec![(qi(1), qi(1)), (qi(2), qi(2))];
        assert_eq!(rho.points(), expect.as_slice());
        assert_eq!(eta.points(), expect.as_slice());
        assert!(rho.is_nondecreasing() && eta.is_nondecreasing());
    }

    #[test]
    fn cycle_walls_metric_has_identity_moduli() {
        let space = cycle_space(5);
        let walls = cycle_walls(5).unwrap();
        let (rho, eta) = empirical_moduli(&space, |i, j| walls.wall_metric(i, j));
        assert_eq!(rho.points(), &[(qi(1), qi(1)), (qi(2), qi(2))]);
        assert_eq!(eta.points(), &[(qi(1), qi(1)), (qi(2), qi(2))]);
    }

    #[test]
    fn constant_embedding_has_zero_lower_envelope() {
        let space = cycle_space(6);
        let (rho, _) = empirical_moduli(&space, |_, _| qzero());
        assert!(rho.points().iter().all(|(_, v)| v.is_zero()));
    }

    #[test]
    fn envelope_evaluation_conventions() {
        let cloud = vec![(qi(1), qi(2)), (qi(3), qi(5)), (qi(3), qi(4))];
        let rho = Modulus::lower_from_cloud(&cloud);
        let eta = Modulus::upper_from_cloud(&cloud);
        // rho tabulates min-then-suffix-min: (1,2), (3,4).
        assert_eq!(rho.points(), &[(qi(1), qi(2)), (qi(3), qi(4))]);
        assert_eq!(rho.eval(&qi(2)), Some(qi(4)));
        assert_eq!(rho.eval(&qi(9)), None);
        assert_eq!(rho.inverse_at(&qi(2)), qi(1));
        assert_eq!(rho.inverse_at(&qi(4)), qi(3));
        assert_eq!(rho.inverse_at(&qi(1)), qzero());
        // eta tabulates max-then-prefix-max: (1,2), (3,5).
        assert_eq!(eta.points(), &[(qi(1), qi(2)), (qi(3), qi(5))]);
        assert_eq!(eta.eval_upper(&qr(1, 2)), qzero());
        assert_eq!(eta.eval_upper(&qi(2)), qi(2));
        assert_eq!(eta.eval_upper(&qi(30)), qi(5));
    }

    #[test]
    fn lifting_profile_of_identity_is_identity() {
        let y = cycle_space(5);
        let z = cycle_space(5);
        let p = DenseMap::new((0..5).collect(), 5, qzero()).unwrap();
        let theta = lifting_modulus(&p, &y, &z).unwrap();
        assert_eq!(
            theta.points(),
            &[(qzero(), qzero()), (qi(1), qi(1)), (qi(2), qi(2))]
        );
        assert_eq!(theta.eval(&qr(3, 2)), qi(1));
        assert_eq!(theta.eval(&qi(100)), qi(2));
    }

    #[test]
    fn lifting_profile_of_mod_six_reduction() {
        let y = cycle_space(12);
        let z = cycle_space(6);
        let p = DenseMap::new((0..12).map(|i| i % 6).collect(), 6, qzero()).unwrap();
        let theta = lifting_modulus(&p, &y, &z).unwrap();
        for r in 0..=3i64 {
            assert_eq!(theta.eval(&qi(r)), qi(r));
        }
    }

    #[test]
    fn lifting_profile_of_constant_map_is_zero() {
        let y = cycle_space(4);
        let z = path_space(1);
        let p = DenseMap::new(vec![0; 4], 1, qzero()).unwrap();
        let theta = lifting_modulus(&p, &y, &z).unwrap();
        assert!(theta.points().iter().all(|(_, v)| v.is_zero()));
    }

    #[test]
    fn poly_fit_linear_profile() {
        let y = cycle_space(9);
        let z = cycle_space(9);
        let p = DenseMap::new((0..9).collect(), 9, qzero()).unwrap();
        let theta = lifting_modulus(&p, &y, &z).unwrap();
        let fit = poly_fit(&theta);
        assert!((fit.delta_hat - 1.0).abs() < 1e-9);
        assert_eq!(fit.k, 1.0);
    }

    #[test]
    fn poly_fit_quadratic_synthetic_table() {
        let rows: Vec<(Q, Q)> = (1..=8).map(|r| (qi(r), qi(r * r))).collect();
        let theta = LiftingProfile::from_table(rows, qzero());
        let fit = poly_fit(&theta);
        assert!((fit.delta_hat - 2.0).abs() < 1e-9);
    }

    #[test]
    fn poly_fit_constant_profile_is_degree_zero() {
        let rows: Vec<(Q, Q)> = (1..=6).map(|r| (qi(r), qi(7))).collect();
        let theta = LiftingProfile::from_table(rows, qzero());
        let fit = poly_fit(&theta);
        assert_eq!(fit.delta_hat, 0.0);
        // theta ≤ K(r^0 + 1) = 2K needs K = 7/2.
        assert!((fit.k - 3.5).abs() < 1e-12);
    }

    #[test]
    fn bornologous_and_affine_for_identity() {
        let y = cycle_space(7);
        let z = cycle_space(7);
        let p = DenseMap::new((0..7).collect(), 7, qzero()).unwrap();
        let s = bornologous_modulus(&p, &y, &z);
        for r in 1..=3i64 {
            assert_eq!(s.eval_upper(&qi(r)), qi(r));
        }
        let ab = affine_upper(&p, &y, &z);
        assert_eq!(ab, AffineBound { a: qone(), b: qzero() });
    }

    #[test]
    fn affine_bound_for_mod_six_reduction() {
        let y = cycle_space(12);
        let z = cycle_space(6);
        let p = DenseMap::new((0..12).map(|i| i % 6).collect(), 6, qzero()).unwrap();
        let ab = affine_upper(&p, &y, &z);
        assert_eq!(ab, AffineBound { a: qone(), b: qzero() });
    }

    #[test]
    fn affine_bound_for_constant_map() {
        let y = cycle_space(5);
        let z = cycle_space(4);
        let p = DenseMap::new(vec![2; 5], 4, qi(2)).unwrap();
        let s = bornologous_modulus(&p, &y, &z);
        assert_eq!(s.eval_upper(&qi(2)), qzero());
        let ab = affine_upper(&p, &y, &z);
        assert_eq!(ab, AffineBound { a: qzero(), b: qzero() });
    }

    #[test]
    fn compression_of_identity_cloud_is_one_and_scale_invariant() {
        let cloud: Vec<(Q, Q)> = (1..=20).map(|d| (qi(d), qi(d))).collect();
        let fit = compression_fit(&cloud);
        assert_eq!(fit.r_hat, 1.0);
        assert!(fit.feasible);
        let scaled: Vec<(Q, Q)> = cloud.iter().map(|(d, e)| (d.clone(), qr(7, 3) * e)).collect();
        assert_eq!(compression_fit(&scaled).r_hat, 1.0);
    }

    #[test]
    fn compression_of_square_root_cloud() {
        let cloud: Vec<(Q, Q)> = (1..=100).map(|k| (qi(k * k), qi(k))).collect();
        let fit = compression_fit(&cloud);
        assert!((fit.r_hat - 0.5).abs() <= 0.02);
        assert!(fit.feasible);
    }

    #[test]
    fn compression_of_bounded_cloud_is_zero() {
        let cloud: Vec<(Q, Q)> = (1..=50).map(|d| (qi(d), qi(5))).collect();
        let fit = compression_fit(&cloud);
        assert_eq!(fit.r_hat, 0.0);
        assert!(fit.feasible);
    }

    #[test]
    fn sandwich_holds_at_half_on_mixed_cloud() {
        let cloud: Vec<(Q, Q)> = (0..=30)
            .map(|d| (qi(d), if d == 0 { qzero() } else { qi((d + 1) / 2) }))
            .collect();
        let fit = sandwich_at(&cloud, 0.5);
        assert!(fit.feasible);
        assert!(fit.c >= 1.0 && fit.d > 0.0);
    }

    #[test]
    fn lower_bound_combination_rules() {
        assert_eq!(
            comp_lower_bound(&qone(), &qone(), &qone(), &qone()).unwrap(),
            qr(1, 2)
        );
        assert_eq!(
            comp_lower_bound(&qone(), &qone(), &qi(3), &qzero()).unwrap(),
            qone()
        );
        assert_eq!(
            comp_lower_bound(&qr(3, 10), &qone(), &qone(), &qone()).unwrap(),
            qr(3, 10)
        );
        assert_eq!(
            comp_lower_bound(&qone(), &qone(), &qzero(), &qzero()).unwrap(),
            qzero()
        );
        assert!(comp_lower_bound(&qi(-1), &qone(), &qone(), &qone()).is_err());
        // Never exceeds min(alpha, beta).
        for a in 0..4i64 {
            for b in 0..4i64 {
                let v = comp_lower_bound(&qi(a), &qi(b), &qi(2), &qi(3)).unwrap();
                assert!(v <= qi(a.min(b)));
            }
        }
    }

    #[test]
    fn certification_clean_on_fixture_ball() {
        let (inst, triple) = lamplighter_c5();
        let center = WreathPoint::rest(&inst, 0);
        let points: Vec<WreathPoint> =
            enumerate_ball(&inst, &center, &qi(4), inst.z.n(), DEFAULT_BALL_CAP)
                .unwrap()
                .into_iter()
                .map(|(pt, _)| pt)
                .collect();
        assert!(points.len() >= 30);
        let (report, inputs) = certify_c1c2(&inst, &triple, &points).unwrap();
        assert!(report.c2_evaluated);
        assert!(report.is_certified(), "violations: {:?}", report.violations);
        assert_eq!(inputs.geometry.chosen, Some(0));
    }

    #[test]
    fn certification_vacuous_on_single_point() {
        let (inst, triple) = lamplighter_c5();
        let points = vec![WreathPoint::rest(&inst, 2)];
        let (report, _) = certify_c1c2(&inst, &triple, &points).unwrap();
        assert_eq!(report.pairs, 0);
        assert!(report.is_certified());
    }

    #[test]
    fn corrupting_fiber_walls_breaks_the_second_bound() {
        let (inst, triple) = lamplighter_c5();
        let inputs = CertInputs::derive(&inst, &triple).unwrap();
        // C2 at product distance 1, from clean inputs: eta_Y(1)=1, E(1)=2,
        // S(2)=2, eta_Z(2)=2, eta_X(1)=1, so 1 + 2·(2+1+1) = 9.
        assert_eq!(inputs.c2_bound(&qone()), Some(qi(9)));
        let corrupted = WallsTriple::new(
            WallsStructure::new(
                vec!["x0".into(), "x1".into()],
                vec![(crate::bits::BitSet::from_indices(2, &[0]), qi(10))],
            )
            .unwrap(),
            triple.nu.clone(),
            triple.mu.clone(),
        );
        let points = vec![
            WreathPoint::rest(&inst, 0),
            WreathPoint::new(&inst, [(0, 1)].into_iter().collect(), 0).unwrap(),
        ];
        let report = certify_with_inputs(&inst, &corrupted, &points, &inputs).unwrap();
        assert_eq!(report.pairs, 1);
        let v: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.rule == "comparison<=C2(product)")
            .collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].lhs, "11");
        assert_eq!(v[0].bound, "9");
    }

    #[test]
    fn certification_bounds_are_monotone() {
        let (inst, triple) = lamplighter_c5();
        let inputs = CertInputs::derive(&inst, &triple).unwrap();
        let mut last_c1 = qzero();
        let mut last_c2 = qzero();
        for r in 0..12i64 {
            let c1 = inputs.c1_bound(&qi(r));
            let c2 = inputs.c2_bound(&qi(r)).unwrap();
            assert!(c1 >= last_c1);
            assert!(c2 >= last_c2);
            last_c1 = c1;
            last_c2 = c2;
        }
    }

    #[test]
    fn pair_cloud_matches_whole_space_count() {
        let (inst, triple) = lamplighter_c5();
        let points: Vec<WreathPoint> = enumerate_all_points(&inst, 200)
            .unwrap()
            .into_iter()
            .step_by(16)
            .collect();
        let cloud = pair_cloud(&inst, &triple, &points).unwrap();
        assert_eq!(cloud.len(), points.len() * (points.len() - 1) / 2);
        assert!(cloud.iter().all(|(dw, dl)| dw >= &qzero() && dl >= &qzero()));
    }
}
