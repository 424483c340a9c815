//! Lifting measured walls from the index space to configuration data.
//!
//! A halfspace `A` on `Z` separates two pairs `(f, z)` and `(g, z')` — a
//! configuration together with a position — exactly when it cuts the set
//! `phi(f, g) ∪ {z, z'}`, where `phi` is the support gauge (the sites where
//! the configurations disagree). Summing the weights of the separating
//! halfspaces gives a pseudometric on such pairs, and because "not cut by
//! `A`" is an equivalence relation per halfspace, the pseudometric embeds
//! into `ell_1` exactly: each halfspace contributes one coordinate of
//! weight `w/2` per equivalence class.
//!
//! [`assemble_lambda`] stacks four such blocks — the lift pulled back
//! through the index map, a per-site block for the fibre values, a block
//! for the underlying space, and a support-counting block — into a single
//! comparison metric `d_lambda` with an exact `ell_1` embedding.

use std::collections::BTreeMap;

use crate::bits::BitSet;
use crate::error::{CwError, Result};
use crate::metric::GeometryReport;
use crate::rational::{format_q, qi, qr, qzero, Q};
use crate::walls::{EmbeddingTable, WallsStructure};
use crate::wreath::{support_diff, LampConfig, WreathInstance, WreathPoint};

/// A carrier point for the lifted walls: a configuration plus a position in
/// the ground set of the base walls.
pub type LiftPoint = (LampConfig, usize);

/// Checks the gauge axioms for the support gauge on a sample of
/// configurations: `phi(f, f) = ∅`, symmetry, and the triangle containment
/// `phi(f, h) ⊆ phi(f, g) ∪ phi(g, h)`. Returns a human-readable witness on
/// failure. The axioms hold by construction; the check exists so that the
/// construction stays audited as the code evolves.
pub fn check_gauge_axioms(configs: &[LampConfig]) -> Option<String> {
    for (i, f) in configs.iter().enumerate() {
        if !support_diff(f, f).is_empty() {
            return Some(format!("phi(f, f) nonempty for config #{i}"));
        }
        for (j, g) in configs.iter().enumerate() {
            if support_diff(f, g) != support_diff(g, f) {
                return Some(format!("phi asymmetric for configs #{i}, #{j}"));
            }
            for (k, h) in configs.iter().enumerate() {
                let fh = support_diff(f, h);
                let fg = support_diff(f, g);
                let gh = support_diff(g, h);
                if fh
                    .iter()
                    .any(|s| !fg.contains(s) && !gh.contains(s))
                {
                    return Some(format!(
                        "triangle containment fails for configs #{i}, #{j}, #{k}"
                    ));
                }
            }
        }
    }
    None
}

fn check_lift_points(walls: &WallsStructure, points: &[&LiftPoint]) -> Result<()> {
    for (f, z) in points {
        if *z >= walls.n() {
            return Err(CwError::input(format!(
                "lift position {z} outside ground set of size {}",
                walls.n()
            )));
        }
        if let Some((&site, _)) = f.0.iter().next_back() {
            if site >= walls.n() {
                return Err(CwError::input(format!(
                    "configuration site {site} outside ground set of size {}",
                    walls.n()
                )));
            }
        }
    }
    Ok(())
}

/// Distance in the lifted walls: total weight of the halfspaces of `walls`
/// that cut `phi(f, g) ∪ {z, z'}`.
pub fn lift_metric(walls: &WallsStructure, a: &LiftPoint, b: &LiftPoint) -> Result<Q> {
    check_lift_points(walls, &[a, b])?;
    let mut cut_set = support_diff(&a.0, &b.0);
    for z in [a.1, b.1] {
        if let Err(pos) = cut_set.binary_search(&z) {
            cut_set.insert(pos, z);
        }
    }
    let mut total = qzero();
    for (side, w) in walls.halfspaces() {
        if side.cuts(cut_set.iter().copied()) {
            total = &total + w;
        }
    }
    Ok(total)
}

/// The per-halfspace signature that determines the equivalence class of a
/// carrier point: which side the position sits on, and the configuration
/// restricted to the *other* side. Two points are uncut by the halfspace
/// exactly when their signatures agree.
fn lift_signature(side: &BitSet, point: &LiftPoint) -> (bool, Vec<(usize, usize)>) {
    let inside = side.contains(point.1);
    let restriction: Vec<(usize, usize)> = point
        .0
         .0
        .iter()
        .filter(|(&site, _)| side.contains(site) != inside)
        .map(|(&site, &v)| (site, v))
        .collect();
    (inside, restriction)
}

fn lift_block(
    walls: &WallsStructure,
    points: &[LiftPoint],
    labels: Vec<String>,
) -> Result<EmbeddingTable> {
    let refs: Vec<&LiftPoint> = points.iter().collect();
    check_lift_points(walls, &refs)?;
    let mut weights = Vec::new();
    let mut columns: Vec<Vec<usize>> = Vec::new();
    for (side, w) in walls.halfspaces() {
        let mut classes: BTreeMap<(bool, Vec<(usize, usize)>), Vec<usize>> = BTreeMap::new();
        for (i, pt) in points.iter().enumerate() {
            classes.entry(lift_signature(side, pt)).or_default().push(i);
        }
        let half = w / qi(2);
        for members in classes.values() {
            weights.push(half.clone());
            columns.push(members.clone());
        }
    }
    let mut rows = vec![BitSet::new(weights.len()); points.len()];
    for (c, members) in columns.iter().enumerate() {
        for &i in members {
            rows[i].insert(c);
        }
    }
    EmbeddingTable::new(1, labels, weights, rows)
}

/// Exact `ell_1` embedding of the lifted walls restricted to `points`: one
/// coordinate of weight `w/2` per halfspace per equivalence class. The
/// distance between two rows equals [`lift_metric`] for every pair; the
/// tests enforce that contract exhaustively.
pub fn lift_embedding(walls: &WallsStructure, points: &[LiftPoint]) -> Result<EmbeddingTable> {
    let labels = points
        .iter()
        .map(|(f, z)| format!("{}@{}", config_label_raw(f), walls.label(*z)))
        .collect();
    lift_block(walls, points, labels)
}

fn config_label_raw(f: &LampConfig) -> String {
    let body: Vec<String> = f.0.iter().map(|(z, v)| format!("{z}:{v}")).collect();
    format!("{{{}}}", body.join(","))
}

/// Canonical display label for a point, using the instance's own labels.
pub fn point_label(inst: &WreathInstance, pt: &WreathPoint) -> String {
    let body: Vec<String> = pt
        .f
        .0
        .iter()
        .map(|(&z, &v)| format!("{}:{}", inst.z.label(z), inst.x.label(v)))
        .collect();
    format!("({{{}}},{})", body.join(","), inst.y.label(pt.y))
}

/// Support-counting block: one coordinate of weight `1/2` for every
/// (value, site) pair, set when the configuration takes that value there.
/// Two rows then differ in exactly two coordinates per disagreeing site, so
/// the `ell_1` distance is the size of the support difference.
pub fn omega_embedding(inst: &WreathInstance, points: &[WreathPoint]) -> Result<EmbeddingTable> {
    let (xn, zn) = (inst.x.n(), inst.z.n());
    let labels = points.iter().map(|pt| point_label(inst, pt)).collect();
    let weights = vec![qr(1, 2); xn * zn];
    let rows = points
        .iter()
        .map(|pt| {
            let mut row = BitSet::new(xn * zn);
            for z in 0..zn {
                row.insert(pt.f.value_at(z, inst.basepoint) * zn + z);
            }
            row
        })
        .collect();
    EmbeddingTable::new(1, labels, weights, rows)
}

/// Number of sites where the two configurations disagree, as a rational.
pub fn omega_metric(a: &WreathPoint, b: &WreathPoint) -> Q {
    qi(support_diff(&a.f, &b.f).len() as i64)
}

/// Measured walls on each of the three component spaces.
#[derive(Debug, Clone)]
pub struct WallsTriple {
    /// Walls on the fibre space `X`.
    pub sigma: WallsStructure,
    /// Walls on the underlying space `Y`.
    pub nu: WallsStructure,
    /// Walls on the index space `Z`; these are the ones that get lifted.
    pub mu: WallsStructure,
}

impl WallsTriple {
    pub fn new(sigma: WallsStructure, nu: WallsStructure, mu: WallsStructure) -> Self {
        WallsTriple { sigma, nu, mu }
    }

    /// Checks the ground sets against an instance's component sizes.
    pub fn check_against(&self, inst: &WreathInstance) -> Result<()> {
        let want = [
            (self.sigma.n(), inst.x.n(), "sigma/X"),
            (self.nu.n(), inst.y.n(), "nu/Y"),
            (self.mu.n(), inst.z.n(), "mu/Z"),
        ];
        for (got, expect, what) in want {
            if got != expect {
                return Err(CwError::input(format!(
                    "walls ground size mismatch for {what}: {got} vs {expect}"
                )));
            }
        }
        Ok(())
    }
}

/// The comparison metric: lifted walls pulled back through the index map,
/// plus per-site fibre distances, plus the underlying walls, plus the
/// support count.
pub fn lambda_metric(
    inst: &WreathInstance,
    walls: &WallsTriple,
    a: &WreathPoint,
    b: &WreathPoint,
) -> Result<Q> {
    walls.check_against(inst)?;
    let la = (a.f.clone(), inst.p.image_of(a.y));
    let lb = (b.f.clone(), inst.p.image_of(b.y));
    let mut total = lift_metric(&walls.mu, &la, &lb)?;
    for z in support_diff(&a.f, &b.f) {
        let va = a.f.value_at(z, inst.basepoint);
        let vb = b.f.value_at(z, inst.basepoint);
        total = &total + &walls.sigma.wall_metric(va, vb);
    }
    total = &total + &walls.nu.wall_metric(a.y, b.y);
    Ok(&total + &omega_metric(a, b))
}

/// An exact `ell_1` embedding realising [`lambda_metric`] on a point list,
/// assembled as the concatenation of the four blocks.
pub struct LambdaAssembly {
    pub table: EmbeddingTable,
    pub points: Vec<WreathPoint>,
}

pub fn assemble_lambda(
    inst: &WreathInstance,
    walls: &WallsTriple,
    points: &[WreathPoint],
) -> Result<LambdaAssembly> {
    walls.check_against(inst)?;
    let labels: Vec<String> = points.iter().map(|pt| point_label(inst, pt)).collect();

    let carrier: Vec<LiftPoint> = points
        .iter()
        .map(|pt| (pt.f.clone(), inst.p.image_of(pt.y)))
        .collect();
    let lifted = lift_block(&walls.mu, &carrier, labels.clone())?;

    // One copy of the sigma walls per site: coordinate (site, halfspace),
    // set when the configuration's value there lies inside the halfspace.
    let sigma_halfspaces = walls.sigma.halfspaces();
    let zn = inst.z.n();
    let mut sigma_weights = Vec::with_capacity(zn * sigma_halfspaces.len());
    for _ in 0..zn {
        for (_, w) in sigma_halfspaces {
            sigma_weights.push(w.clone());
        }
    }
    let per_site = sigma_halfspaces.len();
    let sigma_rows: Vec<BitSet> = points
        .iter()
        .map(|pt| {
            let mut row = BitSet::new(zn * per_site);
            for z in 0..zn {
                let v = pt.f.value_at(z, inst.basepoint);
                for (h, (side, _)) in sigma_halfspaces.iter().enumerate() {
                    if side.contains(v) {
                        row.insert(z * per_site + h);
                    }
                }
            }
            row
        })
        .collect();
    let sigma_block = EmbeddingTable::new(1, labels.clone(), sigma_weights, sigma_rows)?;

    let nu_halfspaces = walls.nu.halfspaces();
    let nu_weights: Vec<Q> = nu_halfspaces.iter().map(|(_, w)| w.clone()).collect();
    let nu_rows: Vec<BitSet> = points
        .iter()
        .map(|pt| {
            let mut row = BitSet::new(nu_halfspaces.len());
            for (h, (side, _)) in nu_halfspaces.iter().enumerate() {
                if side.contains(pt.y) {
                    row.insert(h);
                }
            }
            row
        })
        .collect();
    let nu_block = EmbeddingTable::new(1, labels.clone(), nu_weights, nu_rows)?;

    let omega_block = omega_embedding(inst, points)?;

    let table = EmbeddingTable::concat(&[lifted, sigma_block, nu_block, omega_block])?;
    Ok(LambdaAssembly {
        table,
        points: points.to_vec(),
    })
}

/// Classifies which geometric hypotheses an instance satisfies, with the
/// quantities the downstream estimates need. The sets, in order:
/// uniformly discrete `Y` with `C`-bounded index fibres; bounded geometry
/// (automatic for finite data); uniformly discrete `X`. `chosen` is the
/// first that holds.
pub fn hypothesis_check(inst: &WreathInstance) -> GeometryReport {
    let delta_y = inst.y.uniform_discreteness();
    let n_c = inst.z.bounded_geometry(&inst.p.c);
    let delta_x = inst.x.uniform_discreteness();
    let sets = [delta_y.is_some(), true, delta_x.is_some()];
    let chosen = sets.iter().position(|&s| s);
    GeometryReport {
        delta_y,
        n_c,
        delta_x,
        sets,
        chosen,
    }
}

/// A convenience used by reports: the assembled table's exact distance for
/// a pair of row indices, rendered.
pub fn render_distance(table: &EmbeddingTable, i: usize, j: usize) -> String {
    format_q(&table.dist_pow(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{cycle_space, path_space, DenseMap};
    use crate::rational::qone;
    use crate::walls::{cycle_walls, path_walls};
    use crate::wreath::{enumerate_all_points, wreath_distance, PairDistances};

    fn config(entries: &[(usize, usize)]) -> LampConfig {
        LampConfig(entries.iter().copied().collect())
    }

    fn lamplighter_c5() -> (WreathInstance, WallsTriple) {
        let x = path_space(2);
        let y = cycle_space(5);
        let z = cycle_space(5);
        let p = DenseMap::new((0..5).collect(), 5, qzero()).unwrap();
        let inst = WreathInstance::new(x, 0, y, z, p).unwrap();
        let triple = WallsTriple::new(path_walls(2).unwrap(), cycle_walls(5).unwrap(), cycle_walls(5).unwrap());
        (inst, triple)
    }

    #[test]
    fn gauge_axioms_hold_on_sampled_configs() {
        let configs = vec![
            config(&[]),
            config(&[(0, 1)]),
            config(&[(1, 1), (4, 1)]),
            config(&[(0, 1), (1, 1)]),
            config(&[(2, 1)]),
        ];
        assert_eq!(check_gauge_axioms(&configs), None);
    }

    #[test]
    fn two_point_ground_examples() {
        // Ground set {0, 1} with the single halfspace {0} of weight 1.
        let walls = path_walls(2).unwrap();
        let e = config(&[]);
        let f = config(&[(0, 1)]);
        // Both positions at 0 and the disagreement site is 0: nothing cut.
        assert_eq!(lift_metric(&walls, &(e.clone(), 0), &(f.clone(), 0)).unwrap(), qzero());
        // Positions on opposite sides: cut once.
        assert_eq!(lift_metric(&walls, &(e.clone(), 0), &(f.clone(), 1)).unwrap(), qone());
        // Equal configurations reduce to the wall metric on positions.
        for z in 0..2 {
            for zp in 0..2 {
                assert_eq!(
                    lift_metric(&walls, &(e.clone(), z), &(e.clone(), zp)).unwrap(),
                    walls.wall_metric(z, zp)
                );
            }
        }
    }

    #[test]
    fn equal_configs_reduce_to_wall_metric_on_cycle() {
        let walls = cycle_walls(5).unwrap();
        let f = config(&[(2, 1)]);
        for z in 0..5 {
            for zp in 0..5 {
                assert_eq!(
                    lift_metric(&walls, &(f.clone(), z), &(f.clone(), zp)).unwrap(),
                    walls.wall_metric(z, zp)
                );
            }
        }
    }

    #[test]
    fn lift_embedding_is_exactly_isometric() {
        // All configurations over three sites with two values, all positions.
        let walls = cycle_walls(3).unwrap();
        let mut points = Vec::new();
        for bits in 0..8usize {
            let f = config(
                &(0..3)
                    .filter(|s| bits >> s & 1 == 1)
                    .map(|s| (s, 1))
                    .collect::<Vec<_>>(),
            );
            for z in 0..3 {
                points.push((f.clone(), z));
            }
        }
        let table = lift_embedding(&walls, &points).unwrap();
        let defect = table.isometry_defect(|i, j| {
            lift_metric(&walls, &points[i], &points[j]).unwrap()
        });
        assert_eq!(defect, None);
        // Pseudometric triangle inequality over all triples.
        let n = points.len();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let ij = lift_metric(&walls, &points[i], &points[j]).unwrap();
                    let jk = lift_metric(&walls, &points[j], &points[k]).unwrap();
                    let ik = lift_metric(&walls, &points[i], &points[k]).unwrap();
                    assert!(ik <= &ij + &jk);
                }
            }
        }
    }

    #[test]
    fn omega_distance_counts_support_difference() {
        let (inst, _) = lamplighter_c5();
        let points = vec![
            WreathPoint::rest(&inst, 0),
            WreathPoint::new(&inst, [(1, 1), (4, 1)].into_iter().collect(), 0).unwrap(),
            WreathPoint::new(&inst, [(1, 1)].into_iter().collect(), 3).unwrap(),
        ];
        let table = omega_embedding(&inst, &points).unwrap();
        for i in 0..points.len() {
            for j in 0..points.len() {
                assert_eq!(table.dist_pow(i, j), omega_metric(&points[i], &points[j]));
            }
        }
        assert_eq!(omega_metric(&points[0], &points[1]), qi(2));
        assert_eq!(omega_metric(&points[1], &points[2]), qi(1));
    }

    #[test]
    fn lamplighter_two_lamp_comparison_distance() {
        let (inst, triple) = lamplighter_c5();
        let a = WreathPoint::rest(&inst, 0);
        let b = WreathPoint::new(&inst, [(1, 1), (4, 1)].into_iter().collect(), 0).unwrap();
        // Halfspace enumeration route.
        let direct = lambda_metric(&inst, &triple, &a, &b).unwrap();
        assert_eq!(direct, qi(6));
        // Embedding route.
        let asm = assemble_lambda(&inst, &triple, &[a, b]).unwrap();
        assert_eq!(asm.table.dist_pow(0, 1), qi(6));
    }

    #[test]
    fn assembled_table_matches_metric_on_whole_space() {
        let (inst, triple) = lamplighter_c5();
        let points = enumerate_all_points(&inst, 200).unwrap();
        assert_eq!(points.len(), 160);
        let asm = assemble_lambda(&inst, &triple, &points).unwrap();
        let defect = asm.table.isometry_defect(|i, j| {
            lambda_metric(&inst, &triple, &points[i], &points[j]).unwrap()
        });
        assert_eq!(defect, None);
    }

    #[test]
    fn lambda_is_invariant_under_cycle_rotation() {
        let (inst, triple) = lamplighter_c5();
        let points = enumerate_all_points(&inst, 200).unwrap();
        let rotate = |pt: &WreathPoint| -> WreathPoint {
            let f = pt
                .f
                .0
                .iter()
                .map(|(&z, &v)| ((z + 1) % 5, v))
                .collect();
            WreathPoint::new(&inst, f, (pt.y + 1) % 5).unwrap()
        };
        for i in (0..points.len()).step_by(13) {
            for j in (0..points.len()).step_by(17) {
                let d = lambda_metric(&inst, &triple, &points[i], &points[j]).unwrap();
                let dr = lambda_metric(
                    &inst,
                    &triple,
                    &rotate(&points[i]),
                    &rotate(&points[j]),
                )
                .unwrap();
                assert_eq!(d, dr);
            }
        }
    }

    #[test]
    fn lambda_dominates_nothing_spurious_on_identical_points() {
        let (inst, triple) = lamplighter_c5();
        let a = WreathPoint::new(&inst, [(2, 1)].into_iter().collect(), 4).unwrap();
        assert_eq!(lambda_metric(&inst, &triple, &a, &a).unwrap(), qzero());
    }

    #[test]
    fn lambda_comparable_to_wreath_distance_on_sample() {
        // Sanity envelope on the fixture: the comparison metric never
        // exceeds three times the product distance plus a constant, and is
        // never zero for distinct points. (The precise certified bounds are
        // exercised by the certification module.)
        let (inst, triple) = lamplighter_c5();
        let points = enumerate_all_points(&inst, 200).unwrap();
        let mut pd = PairDistances::new(&inst);
        for i in (0..points.len()).step_by(7) {
            for j in (0..points.len()).step_by(11) {
                if i == j {
                    continue;
                }
                let dl = lambda_metric(&inst, &triple, &points[i], &points[j]).unwrap();
                let dw = pd.distance(&points[i], &points[j]).unwrap();
                assert!(dl > qzero());
                assert!(dw > qzero());
                assert!(dl <= qi(3) * &dw + qi(4));
            }
        }
    }

    #[test]
    fn hypothesis_report_on_fixture() {
        let (inst, _) = lamplighter_c5();
        let rep = hypothesis_check(&inst);
        assert_eq!(rep.delta_y, Some(qone()));
        assert_eq!(rep.n_c, 1);
        assert_eq!(rep.delta_x, Some(qone()));
        assert_eq!(rep.sets, [true, true, true]);
        assert_eq!(rep.chosen, Some(0));
    }

    #[test]
    fn walls_triple_rejects_wrong_ground_sizes() {
        let (inst, mut triple) = lamplighter_c5();
        triple.mu = cycle_walls(4).unwrap();
        assert!(triple.check_against(&inst).is_err());
    }

    #[test]
    fn lift_rejects_out_of_range_position() {
        let walls = cycle_walls(4).unwrap();
        let e = config(&[]);
        assert!(lift_metric(&walls, &(e.clone(), 0), &(e, 9)).is_err());
    }

    #[test]
    fn wreath_distance_on_fixture_pair_is_six() {
        // The same pair as the comparison-distance test, through the
        // product metric: visit sites 1 and 4 from position 0 and return.
        let (inst, _) = lamplighter_c5();
        let a = WreathPoint::rest(&inst, 0);
        let b = WreathPoint::new(&inst, [(1, 1), (4, 1)].into_iter().collect(), 0).unwrap();
        assert_eq!(wreath_distance(&inst, &a, &b).unwrap(), qi(6));
    }

    #[test]
    fn all_points_enumeration_is_deterministic_and_complete() {
        let x = path_space(2);
        let y = cycle_space(3);
        let z = cycle_space(2);
        let p = DenseMap::new(vec![0, 1, 0], 2, qi(1)).unwrap();
        let inst = WreathInstance::new(x, 0, y, z, p).unwrap();
        let points = enumerate_all_points(&inst, 100).unwrap();
        assert_eq!(points.len(), 12);
        let again = enumerate_all_points(&inst, 100).unwrap();
        assert_eq!(points, again);
        assert!(enumerate_all_points(&inst, 5).is_err());
        // No duplicates.
        let mut seen: Vec<String> = points
            .iter()
            .map(|pt| point_label(&inst, pt))
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn rotation_pullback_keeps_lift_invariant() {
        // Rotating both configurations and positions by the cycle symmetry
        // leaves the lifted distance unchanged, because the canonical cycle
        // walls are rotation invariant.
        let walls = cycle_walls(5).unwrap();
        let pts = [
            (config(&[]), 0usize),
            (config(&[(1, 1), (4, 1)]), 0),
            (config(&[(2, 1)]), 3),
        ];
        let rot = |(f, z): &LiftPoint| -> LiftPoint {
            (
                LampConfig(f.0.iter().map(|(&s, &v)| ((s + 1) % 5, v)).collect()),
                (z + 1) % 5,
            )
        };
        for a in &pts {
            for b in &pts {
                assert_eq!(
                    lift_metric(&walls, a, b).unwrap(),
                    lift_metric(&walls, &rot(a), &rot(b)).unwrap()
                );
            }
        }
    }
}
