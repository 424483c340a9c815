//! Lamplighter-type spaces: configurations over an index space with a moving
//! head, and the exact path distance between them.
//!
//! The distance between (f, y) and (g, y') is the cheapest tour that starts
//! at y, passes near every index where f and g disagree (within the density
//! radius C, through lift points of the position space), ends at y', plus the
//! cost of switching each disagreeing lamp. The tour part is solved exactly
//! by dynamic programming over visited subsets; an independent
//! permutation-based solver ([`path_through_oracle`]) is kept as an oracle.

use num::Signed;

use crate::error::{CwError, Result};
use crate::metric::{check_dense, DenseMap, FiniteMetricSpace, MetricMode};
use crate::rational::{qzero, Q};
use std::collections::{BTreeMap, HashMap};

/// Everything needed to measure distances on `X wr Y` over index space `Z`.
#[derive(Clone, Debug)]
pub struct WreathInstance {
    pub x: FiniteMetricSpace,
    /// Basepoint of `X`: the rest value of unlit lamps.
    pub basepoint: usize,
    pub y: FiniteMetricSpace,
    pub z: FiniteMetricSpace,
    /// `p : Y -> Z` with its density constant `C`.
    pub p: DenseMap,
    /// Largest support-difference size the subset DP will accept.
    pub dp_cap: usize,
}

pub const DEFAULT_DP_CAP: usize = 14;

impl WreathInstance {
    /// Validates shapes, metric axioms (pseudometrics allowed) and density.
    pub fn new(
        x: FiniteMetricSpace,
        basepoint: usize,
        y: FiniteMetricSpace,
        z: FiniteMetricSpace,
        p: DenseMap,
    ) -> Result<Self> {
        if basepoint >= x.n() {
            return Err(CwError::input("basepoint outside X"));
        }
        if p.values.len() != y.n() {
            return Err(CwError::input(format!(
                "map p has {} values but Y has {} points",
                p.values.len(),
                y.n()
            )));
        }
        for (name, space) in [("X", &x), ("Y", &y), ("Z", &z)] {
            let report = space.validate(MetricMode::Pseudometric);
            if !report.is_valid() {
                return Err(CwError::input(format!(
                    "{name} is not a pseudometric: {:?}",
                    report.defects[0]
                )));
            }
        }
        let density = check_dense(&p, &z)?;
        if !density.dense {
            return Err(CwError::input(format!(
                "p is not C-dense: point {} of Z sits at distance {} from the image",
                z.label(density.worst_point),
                crate::rational::format_q(&density.worst_distance)
            )));
        }
        Ok(WreathInstance { x, basepoint, y, z, p, dp_cap: DEFAULT_DP_CAP })
    }

    /// Lift points of `z_site`: positions of Y mapping within C of it.
    pub fn fiber(&self, z_site: usize) -> Vec<usize> {
        (0..self.y.n())
            .filter(|&u| self.z.d(self.p.image_of(u), z_site) <= &self.p.c)
            .collect()
    }
}

/// Finitely supported configuration: non-basepoint lamp values by Z index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LampConfig(pub BTreeMap<usize, usize>);

impl LampConfig {
    pub fn empty() -> Self {
        LampConfig(BTreeMap::new())
    }

    pub fn value_at(&self, z: usize, basepoint: usize) -> usize {
        self.0.get(&z).copied().unwrap_or(basepoint)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.keys().copied()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WreathPoint {
    pub f: LampConfig,
    pub y: usize,
}

impl WreathPoint {
    /// Normalizes (drops explicit basepoint values) and range-checks.
    pub fn new(inst: &WreathInstance, f: BTreeMap<usize, usize>, y: usize) -> Result<Self> {
        if y >= inst.y.n() {
            return Err(CwError::input(format!("position {y} outside Y")));
        }
        let mut clean = BTreeMap::new();
        for (z, v) in f {
            if z >= inst.z.n() {
                return Err(CwError::input(format!("lamp site {z} outside Z")));
            }
            if v >= inst.x.n() {
                return Err(CwError::input(format!("lamp value {v} outside X")));
            }
            if v != inst.basepoint {
                clean.insert(z, v);
            }
        }
        Ok(WreathPoint { f: LampConfig(clean), y })
    }

    pub fn rest(inst: &WreathInstance, y: usize) -> Self {
        let _ = inst;
        WreathPoint { f: LampConfig::empty(), y }
    }
}

/// Sites where the two configurations disagree, ascending.
pub fn support_diff(a: &LampConfig, b: &LampConfig) -> Vec<usize> {
    let mut out = Vec::new();
    let mut ia = a.0.iter().peekable();
    let mut ib = b.0.iter().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (Some(&(&za, &va)), Some(&(&zb, &vb))) => {
                if za < zb {
                    out.push(za);
                    ia.next();
                } else if zb < za {
                    out.push(zb);
                    ib.next();
                } else {
                    if va != vb {
                        out.push(za);
                    }
                    ia.next();
                    ib.next();
                }
            }
            (Some(&(&za, _)), None) => {
                out.push(za);
                ia.next();
            }
            (None, Some(&(&zb, _))) => {
                out.push(zb);
                ib.next();
            }
            (None, None) => break,
        }
    }
    out
}

/// A tour instance: visit a lift of every site in `sites`, in any order, from
/// `y_start` to `y_end`.
#[derive(Clone, Debug)]
pub struct PathProblem<'a> {
    pub inst: &'a WreathInstance,
    pub sites: Vec<usize>,
    pub y_start: usize,
    pub y_end: usize,
}

/// Minimum tour cost to every possible endpoint, via subset DP.
///
/// One call costs O(2^n * F^2) rational operations, F the total fiber size,
/// and yields the cost for all endpoints at once.
pub fn path_costs_all_ends(
    inst: &WreathInstance,
    sites: &[usize],
    y_start: usize,
) -> Result<Vec<Q>> {
    let n = sites.len();
    if n > inst.dp_cap {
        return Err(CwError::cap("tour subset DP", 1u128 << n, 1u128 << inst.dp_cap));
    }
    if n == 0 {
        return Ok((0..inst.y.n()).map(|e| inst.y.d(y_start, e).clone()).collect());
    }
    // Relevant lift points: union of the fibers.
    let fibers: Vec<Vec<usize>> = sites.iter().map(|&zs| inst.fiber(zs)).collect();
    if let Some(k) = fibers.iter().position(|f| f.is_empty()) {
        return Err(CwError::internal(format!(
            "empty fiber over site {} despite density check",
            inst.z.label(sites[k])
        )));
    }
    let mut rel: Vec<usize> = fibers.iter().flatten().copied().collect();
    rel.sort_unstable();
    rel.dedup();
    let rel_pos: HashMap<usize, usize> = rel.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let fiber_rel: Vec<Vec<usize>> =
        fibers.iter().map(|f| f.iter().map(|u| rel_pos[u]).collect()).collect();

    let full = (1usize << n) - 1;
    let mut dp: Vec<Vec<Option<Q>>> = vec![vec![None; rel.len()]; full + 1];
    for (k, fr) in fiber_rel.iter().enumerate() {
        for &u in fr {
            let cand = inst.y.d(y_start, rel[u]).clone();
            let slot = &mut dp[1 << k][u];
            if slot.as_ref().map_or(true, |cur| cand < *cur) {
                *slot = Some(cand);
            }
        }
    }
    for mask in 1..=full {
        for u in 0..rel.len() {
            let Some(cost) = dp[mask][u].clone() else { continue };
            for (k, fr) in fiber_rel.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next_mask = mask | (1 << k);
                for &v in fr {
                    let cand = &cost + inst.y.d(rel[u], rel[v]);
                    let slot = &mut dp[next_mask][v];
                    if slot.as_ref().map_or(true, |cur| cand < *cur) {
                        *slot = Some(cand);
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(inst.y.n());
    for end in 0..inst.y.n() {
        let mut best: Option<Q> = None;
        for u in 0..rel.len() {
            if let Some(cost) = &dp[full][u] {
                let cand = cost + inst.y.d(rel[u], end);
                if best.as_ref().map_or(true, |b| cand < *b) {
                    best = Some(cand);
                }
            }
        }
        out.push(best.expect("fibers are nonempty"));
    }
    Ok(out)
}

pub fn path_through(problem: &PathProblem) -> Result<Q> {
    let costs = path_costs_all_ends(problem.inst, &problem.sites, problem.y_start)?;
    Ok(costs[problem.y_end].clone())
}

/// Reference solver: enumerate every visiting order of the sites, and for a
/// fixed order minimize over lift choices by a forward sweep. Exhaustive over
/// the same search space as the DP, organized independently of it.
pub fn path_through_oracle(problem: &PathProblem) -> Result<Q> {
    let inst = problem.inst;
    let n = problem.sites.len();
    if n == 0 {
        return Ok(inst.y.d(problem.y_start, problem.y_end).clone());
    }
    if n > 9 {
        return Err(CwError::cap("oracle permutation enumeration", factorial(n), factorial(9)));
    }
    let fibers: Vec<Vec<usize>> = problem.sites.iter().map(|&zs| inst.fiber(zs)).collect();
    if fibers.iter().any(|f| f.is_empty()) {
        return Err(CwError::internal("empty fiber in oracle"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut best: Option<Q> = None;
    permute(&mut order, 0, &mut |perm: &[usize]| {
        // Forward sweep: cheapest cost to stand at each lift of the current
        // site after visiting the prefix in this order.
        let mut costs: Vec<Q> =
            fibers[perm[0]].iter().map(|&u| inst.y.d(problem.y_start, u).clone()).collect();
        for w in 1..n {
            let prev_fiber = &fibers[perm[w - 1]];
            let next_fiber = &fibers[perm[w]];
            let mut next_costs = Vec::with_capacity(next_fiber.len());
            for &v in next_fiber {
                let mut cheapest: Option<Q> = None;
                for (i, &u) in prev_fiber.iter().enumerate() {
                    let cand = &costs[i] + inst.y.d(u, v);
                    if cheapest.as_ref().map_or(true, |c| cand < *c) {
                        cheapest = Some(cand);
                    }
                }
                next_costs.push(cheapest.expect("nonempty fiber"));
            }
            costs = next_costs;
        }
        let last_fiber = &fibers[perm[n - 1]];
        for (i, &u) in last_fiber.iter().enumerate() {
            let cand = &costs[i] + inst.y.d(u, problem.y_end);
            if best.as_ref().map_or(true, |b| cand < *b) {
                best = Some(cand);
            }
        }
    });
    Ok(best.expect("at least one permutation"))
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn permute(order: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == order.len() {
        visit(order);
        return;
    }
    for i in k..order.len() {
        order.swap(k, i);
        permute(order, k + 1, visit);
        order.swap(k, i);
    }
}

/// Full distance: tour through the disagreement sites plus lamp switch costs.
pub fn wreath_distance(inst: &WreathInstance, a: &WreathPoint, b: &WreathPoint) -> Result<Q> {
    let sites = support_diff(&a.f, &b.f);
    let problem = PathProblem { inst, sites: sites.clone(), y_start: a.y, y_end: b.y };
    let tour = path_through(&problem)?;
    Ok(tour + lamp_cost(inst, a, b, &sites))
}

fn lamp_cost(inst: &WreathInstance, a: &WreathPoint, b: &WreathPoint, sites: &[usize]) -> Q {
    let mut sum = qzero();
    for &z in sites {
        let va = a.f.value_at(z, inst.basepoint);
        let vb = b.f.value_at(z, inst.basepoint);
        sum += inst.x.d(va, vb);
    }
    sum
}

/// Shared-memo bulk evaluator: tours with the same disagreement set and start
/// position reuse one DP run (which already yields every endpoint).
pub struct PairDistances<'a> {
    pub inst: &'a WreathInstance,
    memo: HashMap<(Vec<usize>, usize), std::rc::Rc<Vec<Q>>>,
}

impl<'a> PairDistances<'a> {
    pub fn new(inst: &'a WreathInstance) -> Self {
        PairDistances { inst, memo: HashMap::new() }
    }

    pub fn distance(&mut self, a: &WreathPoint, b: &WreathPoint) -> Result<Q> {
        let sites = support_diff(&a.f, &b.f);
        let key = (sites.clone(), a.y);
        let costs = match self.memo.get(&key) {
            Some(c) => c.clone(),
            None => {
                let c = std::rc::Rc::new(path_costs_all_ends(self.inst, &sites, a.y)?);
                self.memo.insert(key, c.clone());
                c
            }
        };
        Ok(&costs[b.y] + lamp_cost(self.inst, a, b, &sites))
    }
}

/// Outcome of comparing the path-formula metric against the word metric of
/// the same group.
#[derive(Clone, Debug)]
pub struct CrosscheckReport {
    pub pairs: usize,
    pub max_discrepancy: Q,
    /// A pair realizing the maximum, as group element labels.
    pub witness: Option<(String, String)>,
}

/// Builds the wreath product of two finite groups, its Cayley word metric,
/// and the corresponding instance (X = Cay(base), Y = Z = Cay(top), p = id,
/// C = 0), then compares the two distances on all pairs.
pub fn group_metric_crosscheck(
    base: &crate::group::FiniteGroup,
    top: &crate::group::FiniteGroup,
    cap: u128,
) -> Result<CrosscheckReport> {
    let w = crate::group::FiniteWreathGroup::new(base, top, cap)?;
    let word = w.word_metric_space()?;
    let inst = instance_for_groups(base, top)?;
    let points: Vec<WreathPoint> = (0..w.order())
        .map(|idx| {
            let (f, h) = w.decode(idx);
            let lamps: BTreeMap<usize, usize> = f
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != base.identity())
                .map(|(z, &v)| (z, v))
                .collect();
            WreathPoint { f: LampConfig(lamps), y: h }
        })
        .collect();
    let mut bulk = PairDistances::new(&inst);
    let mut max_disc = qzero();
    let mut witness = None;
    let mut pairs = 0usize;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let formula = bulk.distance(&points[i], &points[j])?;
            let disc = (&formula - word.d(i, j)).abs();
            if disc > max_disc {
                max_disc = disc;
                witness = Some((w.label(i), w.label(j)));
            }
            pairs += 1;
        }
    }
    Ok(CrosscheckReport { pairs, max_discrepancy: max_disc, witness })
}

/// Instance whose distance should coincide with the word metric of
/// `base wr top`: X = Cay(base) based at the identity, Y = Z = Cay(top),
/// p = identity with C = 0.
pub fn instance_for_groups(
    base: &crate::group::FiniteGroup,
    top: &crate::group::FiniteGroup,
) -> Result<WreathInstance> {
    let x = base.word_metric_space()?;
    let y = top.word_metric_space()?;
    let z = y.clone();
    let p = DenseMap::new((0..y.n()).collect(), z.n(), qzero())?;
    WreathInstance::new(x, base.identity(), y, z, p)
}

/// Every point of the space: all configurations over `Z` crossed with all
/// positions, in deterministic order (configurations as little-endian
/// base-|X| counters over sites, position fastest). Errors when the count
/// exceeds `cap`.
pub fn enumerate_all_points(inst: &WreathInstance, cap: usize) -> Result<Vec<WreathPoint>> {
    let (xn, yn, zn) = (inst.x.n(), inst.y.n(), inst.z.n());
    let mut total: u128 = yn as u128;
    for _ in 0..zn {
        total = total.saturating_mul(xn as u128);
        if total > cap as u128 {
            return Err(CwError::cap("point enumeration", total, cap as u128));
        }
    }
    let mut out = Vec::with_capacity(total as usize);
    let mut values = vec![0usize; zn];
    loop {
        let f: BTreeMap<usize, usize> = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != inst.basepoint)
            .map(|(z, &v)| (z, v))
            .collect();
        for y in 0..yn {
            out.push(WreathPoint { f: LampConfig(f.clone()), y });
        }
        // Advance the mixed-radix counter.
        let mut carry = true;
        for v in values.iter_mut() {
            if !carry {
                break;
            }
            *v += 1;
            if *v == xn {
                *v = 0;
            } else {
                carry = false;
            }
        }
        if carry {
            break;
        }
    }
    Ok(out)
}

pub const DEFAULT_BALL_CAP: usize = 1 << 20;

/// All points (f, y) with |Supp f| <= `support_cap` and distance from
/// `center` at most `radius`, with their distances, in deterministic order
/// (disagreement supports by size then lexicographically, then lamp values,
/// then position).
///
/// Supersets of a disagreement set whose cheapest tour plus cheapest lamp
/// switches already exceed the radius are pruned; both bounds are monotone.
pub fn enumerate_ball(
    inst: &WreathInstance,
    center: &WreathPoint,
    radius: &Q,
    support_cap: usize,
    ball_cap: usize,
) -> Result<Vec<(WreathPoint, Q)>> {
    let zn = inst.z.n();
    // Cheapest way for a point to disagree with the center at site z.
    let min_switch: Vec<Option<Q>> = (0..zn)
        .map(|z| {
            let c = center.f.value_at(z, inst.basepoint);
            (0..inst.x.n())
                .filter(|&v| v != c)
                .map(|v| inst.x.d(c, v).clone())
                .min()
        })
        .collect();
    let diff_cap = support_cap + center.f.0.len();
    let mut out: Vec<(WreathPoint, Q)> = Vec::new();
    let mut stack_sites: Vec<usize> = Vec::new();
    enumerate_rec(
        inst,
        center,
        radius,
        support_cap,
        ball_cap,
        diff_cap,
        &min_switch,
        &mut stack_sites,
        0,
        &mut out,
    )?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    inst: &WreathInstance,
    center: &WreathPoint,
    radius: &Q,
    support_cap: usize,
    ball_cap: usize,
    diff_cap: usize,
    min_switch: &[Option<Q>],
    sites: &mut Vec<usize>,
    next_site: usize,
    out: &mut Vec<(WreathPoint, Q)>,
) -> Result<()> {
    // Cheapest completion for this disagreement set: tour to the nearest
    // endpoint plus the cheapest switch at every site.
    let tour_costs = path_costs_all_ends(inst, sites, center.y)?;
    let min_tour = tour_costs.iter().min().expect("Y nonempty").clone();
    let mut floor = min_tour;
    for &z in sites.iter() {
        match &min_switch[z] {
            Some(w) => floor += w,
            None => return Ok(()), // X has a single point: no disagreement possible
        }
    }
    if floor > *radius {
        return Ok(()); // supersets only cost more
    }
    // Emit every assignment of disagreeing values over `sites` and position.
    let mut assignment: Vec<usize> = Vec::with_capacity(sites.len());
    emit_assignments(inst, center, radius, support_cap, ball_cap, sites, &tour_costs, &mut assignment, out)?;
    if sites.len() < diff_cap {
        for z in next_site..inst.z.n() {
            sites.push(z);
            enumerate_rec(
                inst,
                center,
                radius,
                support_cap,
                ball_cap,
                diff_cap,
                min_switch,
                sites,
                z + 1,
                out,
            )?;
            sites.pop();
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn emit_assignments(
    inst: &WreathInstance,
    center: &WreathPoint,
    radius: &Q,
    support_cap: usize,
    ball_cap: usize,
    sites: &[usize],
    tour_costs: &[Q],
    assignment: &mut Vec<usize>,
    out: &mut Vec<(WreathPoint, Q)>,
) -> Result<()> {
    if assignment.len() == sites.len() {
        let mut switch_cost = qzero();
        let mut f = center.f.0.clone();
        for (&z, &v) in sites.iter().zip(assignment.iter()) {
            let c = center.f.value_at(z, inst.basepoint);
            switch_cost += inst.x.d(c, v);
            if v == inst.basepoint {
                f.remove(&z);
            } else {
                f.insert(z, v);
            }
        }
        if f.len() > support_cap {
            return Ok(());
        }
        for y in 0..inst.y.n() {
            let total = &tour_costs[y] + &switch_cost;
            if total <= *radius {
                if out.len() >= ball_cap {
                    return Err(CwError::cap("ball enumeration", out.len() as u128 + 1, ball_cap as u128));
                }
                out.push((WreathPoint { f: LampConfig(f.clone()), y }, total));
            }
        }
        return Ok(());
    }
    let z = sites[assignment.len()];
    let c = center.f.value_at(z, inst.basepoint);
    for v in 0..inst.x.n() {
        if v == c {
            continue; // must disagree at a chosen site
        }
        assignment.push(v);
        emit_assignments(inst, center, radius, support_cap, ball_cap, sites, tour_costs, assignment, out)?;
        assignment.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;
    use crate::metric::cycle_space;
    use crate::rational::qi;

    fn lamplighter_c5() -> WreathInstance {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let c5 = FiniteGroup::cyclic(5).unwrap();
        instance_for_groups(&z2, &c5).unwrap()
    }

    #[test]
    fn tour_on_five_cycle_through_two_sites() {
        let inst = lamplighter_c5();
        let problem = PathProblem { inst: &inst, sites: vec![1, 4], y_start: 0, y_end: 0 };
        assert_eq!(path_through(&problem).unwrap(), qi(4));
        assert_eq!(path_through_oracle(&problem).unwrap(), qi(4));
    }

    #[test]
    fn tour_with_empty_site_set_is_plain_distance() {
        let inst = lamplighter_c5();
        let problem = PathProblem { inst: &inst, sites: vec![], y_start: 0, y_end: 2 };
        assert_eq!(path_through(&problem).unwrap(), qi(2));
    }

    #[test]
    fn fiber_tour_through_mod_six_reduction() {
        // Y = 12-cycle mapping onto Z = 6-cycle; the fiber over 3 is {3, 9}.
        let y = cycle_space(12);
        let z = cycle_space(6);
        let x = crate::metric::path_space(2);
        let p = DenseMap::new((0..12).map(|v| v % 6).collect(), 6, qzero()).unwrap();
        let inst = WreathInstance::new(x, 0, y, z, p).unwrap();
        assert_eq!(inst.fiber(3), vec![3, 9]);
        let problem = PathProblem { inst: &inst, sites: vec![3], y_start: 0, y_end: 0 };
        assert_eq!(path_through(&problem).unwrap(), qi(6));
        assert_eq!(path_through_oracle(&problem).unwrap(), qi(6));
    }

    #[test]
    fn lamplighter_distance_with_two_lit_lamps() {
        let inst = lamplighter_c5();
        let a = WreathPoint::rest(&inst, 0);
        let b = WreathPoint::new(&inst, [(1usize, 1usize), (4, 1)].into_iter().collect(), 0).unwrap();
        assert_eq!(wreath_distance(&inst, &a, &b).unwrap(), qi(6));
    }

    #[test]
    fn support_diff_merges_and_skips_equal_values() {
        let a = LampConfig([(1usize, 1usize), (3, 1)].into_iter().collect());
        let b = LampConfig([(1usize, 1usize), (4, 1)].into_iter().collect());
        assert_eq!(support_diff(&a, &b), vec![3, 4]);
        assert_eq!(support_diff(&a, &a), Vec::<usize>::new());
    }

    #[test]
    fn point_constructor_normalizes_basepoint_entries() {
        let inst = lamplighter_c5();
        let p = WreathPoint::new(&inst, [(2usize, 0usize)].into_iter().collect(), 1).unwrap();
        assert!(p.f.0.is_empty());
    }

    #[test]
    fn dp_cap_is_enforced() {
        let mut inst = lamplighter_c5();
        inst.dp_cap = 1;
        let problem = PathProblem { inst: &inst, sites: vec![1, 2], y_start: 0, y_end: 0 };
        match path_through(&problem) {
            Err(CwError::CapExceeded { .. }) => {}
            other => panic!("expected CapExceeded, got {other:?}"),
        }
    }

    #[test]
    fn formula_matches_word_metric_on_small_groups() {
        let z2 = FiniteGroup::cyclic(2).unwrap();
        let z3 = FiniteGroup::cyclic(3).unwrap();
        for top in [&z2, &z3] {
            let report = group_metric_crosscheck(&z2, top, 1 << 20).unwrap();
            assert_eq!(report.max_discrepancy, qzero(), "witness {:?}", report.witness);
        }
    }

    #[test]
    fn ball_of_radius_two_in_the_lamplighter() {
        let inst = lamplighter_c5();
        let center = WreathPoint::rest(&inst, 0);
        let ball = enumerate_ball(&inst, &center, &qi(2), 5, 1 << 20).unwrap();
        // Five rest configurations (the whole 5-cycle has diameter 2) plus
        // five one-lamp points.
        assert_eq!(ball.len(), 10);
        assert!(ball.iter().all(|(_, d)| *d <= qi(2)));
        let rests = ball.iter().filter(|(pt, _)| pt.f.0.is_empty()).count();
        assert_eq!(rests, 5);
        // Support cap 0 keeps only rest configurations.
        let ball0 = enumerate_ball(&inst, &center, &qi(2), 0, 1 << 20).unwrap();
        assert_eq!(ball0.len(), 5);
    }

    #[test]
    fn ball_distances_match_direct_computation() {
        let inst = lamplighter_c5();
        let center = WreathPoint::rest(&inst, 1);
        let ball = enumerate_ball(&inst, &center, &qi(4), 5, 1 << 20).unwrap();
        for (pt, d) in &ball {
            assert_eq!(wreath_distance(&inst, &center, pt).unwrap(), *d);
        }
    }

    #[test]
    fn oracle_agrees_with_dp_on_literal_tuple_enumeration() {
        // Tiny instance where every admissible tuple can be listed by hand:
        // brute force over (lift of site a, lift of site b) in both orders.
        let y = cycle_space(6);
        let z = cycle_space(3);
        let x = crate::metric::path_space(2);
        let p = DenseMap::new((0..6).map(|v| v % 3).collect(), 3, qzero()).unwrap();
        let inst = WreathInstance::new(x, 0, y, z, p).unwrap();
        let fibers = [inst.fiber(1), inst.fiber(2)];
        let mut best: Option<Q> = None;
        for (fa, fb) in [(&fibers[0], &fibers[1]), (&fibers[1], &fibers[0])] {
            for &u in fa {
                for &v in fb {
                    let cand = inst.y.d(0, u) + inst.y.d(u, v) + inst.y.d(v, 5);
                    if best.as_ref().map_or(true, |b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
        }
        let problem = PathProblem { inst: &inst, sites: vec![1, 2], y_start: 0, y_end: 5 };
        let dp = path_through(&problem).unwrap();
        assert_eq!(dp, best.unwrap());
        assert_eq!(path_through_oracle(&problem).unwrap(), dp);
    }

    #[test]
    fn tour_is_symmetric_in_endpoints() {
        let inst = lamplighter_c5();
        for sites in [vec![], vec![2], vec![1, 3], vec![0, 2, 4]] {
            for ys in 0..5 {
                for ye in 0..5 {
                    let fwd = PathProblem { inst: &inst, sites: sites.clone(), y_start: ys, y_end: ye };
                    let bwd = PathProblem { inst: &inst, sites: sites.clone(), y_start: ye, y_end: ys };
                    assert_eq!(path_through(&fwd).unwrap(), path_through(&bwd).unwrap());
                }
            }
        }
    }
}
