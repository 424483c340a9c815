//! The built-in acceptance suite.
//!
//! Each criterion is an end-to-end check against an independent oracle or
//! a certified inequality, producing one pass/fail line. Everything is
//! deterministic in the seed: reports carry no timing and no machine
//! noise, so two runs with the same seed emit identical bytes.

use num::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;

use crate::analysis::{
    certify_with_inputs, comp_lower_bound, lifting_modulus, poly_fit, sandwich_at, CertInputs,
};
use crate::boxspace::{box_embedding, build_wreath_chain, check_m_chain, SubgroupChainZ};
use crate::error::Result;
use crate::group::{FiniteGroup, FiniteWreathGroup};
use crate::lift::{lift_embedding, lift_metric, WallsTriple};
use crate::metric::{cycle_space, path_space, DenseMap};
use crate::rational::{format_f64, format_q, qi, qr, qzero, Q};
use crate::samples::{lamplighter_fixture, random_certified_instance, random_instance, random_walls, rng};
use crate::walls::{cut_decompose, embed_l1, embed_lp, CutDecomposition, WallsStructure};
use crate::wreath::{
    enumerate_ball, group_metric_crosscheck, path_through, path_through_oracle, LampConfig,
    PairDistances, PathProblem, WreathInstance, WreathPoint, DEFAULT_BALL_CAP,
};

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }
}

fn run(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CriterionResult {
    match f() {
        Ok((passed, details)) => CriterionResult { name, passed, details },
        Err(e) => CriterionResult { name, passed: false, details: format!("error: {e}") },
    }
}

/// Runs the whole suite. The ninth acceptance criterion (byte-identical
/// reports across runs) is checked from outside by running this twice.
pub fn run_selftest(seed: u64) -> SelftestReport {
    let results = vec![
        run("group-metric-oracle", criterion_group_metric_oracle),
        run("path-dp-oracle", || criterion_path_dp_oracle(seed)),
        run("walls-isometry", || criterion_walls_isometry(seed)),
        run("lift-isometry", || criterion_lift_isometry(seed)),
        run("certification", || criterion_certification(seed)),
        run("cut-decomposition", || criterion_cut_decomposition(seed)),
        run("compression-pipeline", criterion_compression_pipeline),
        run("box-space", criterion_box_space),
    ];
    SelftestReport { seed, results }
}

/// Renders the report; the bytes depend only on the seed and the code.
pub fn render_report(report: &SelftestReport) -> String {
    let mut out = format!("selftest seed={}\n", report.seed);
    for c in &report.results {
        out.push_str(&format!(
            "[{}] {}: {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.details
        ));
    }
    out.push_str(if report.all_passed() {
        "result: all criteria passed\n"
    } else {
        "result: FAILURES present\n"
    });
    out
}

/// Criterion 1: the tour formula reproduces the Cayley word metric of
/// small wreath products of cyclic groups, on every pair of elements.
pub fn criterion_group_metric_oracle() -> Result<(bool, String)> {
    let mut total_pairs = 0usize;
    let mut all_exact = true;
    let mut sizes = Vec::new();
    let cases: Vec<(usize, usize)> = vec![(2, 2), (2, 3), (2, 4), (2, 5), (3, 3)];
    for (b, t) in cases {
        let base = FiniteGroup::cyclic(b)?;
        let top = FiniteGroup::cyclic(t)?;
        let report = group_metric_crosscheck(&base, &top, FiniteWreathGroup::DEFAULT_CAP)?;
        total_pairs += report.pairs;
        sizes.push(format!("{b}wr{t}"));
        if !report.max_discrepancy.is_zero() {
            all_exact = false;
        }
    }
    Ok((
        all_exact,
        format!(
            "{} products ({}), {} pairs, max discrepancy {}",
            sizes.len(),
            sizes.join(" "),
            total_pairs,
            if all_exact { "0" } else { "nonzero" }
        ),
    ))
}

/// Criterion 2: the subset DP for tour costs agrees with exhaustive
/// permutation-times-lift enumeration on 300 random instances.
pub fn criterion_path_dp_oracle(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed ^ 0x9a02);
    let mut max_sites = 0usize;
    for _ in 0..300 {
        let inst = random_instance(&mut r)?;
        let zn = inst.z.n();
        let k = r.gen_range(0..=zn.min(6));
        let mut sites: Vec<usize> = (0..zn).collect();
        sites.shuffle(&mut r);
        sites.truncate(k);
        sites.sort_unstable();
        max_sites = max_sites.max(k);
        let y_start = r.gen_range(0..inst.y.n());
        let y_end = r.gen_range(0..inst.y.n());
        let problem = PathProblem { inst: &inst, sites, y_start, y_end };
        let dp = path_through(&problem)?;
        let oracle = path_through_oracle(&problem)?;
        if dp != oracle {
            return Ok((
                false,
                format!("tour mismatch: dp {} vs oracle {}", format_q(&dp), format_q(&oracle)),
            ));
        }
    }
    Ok((true, format!("300 instances, site sets up to {max_sites}, all tours equal the oracle")))
}

/// Criterion 3: the weighted-halfspace embeddings are exact isometries
/// onto the wall metric, for exponents 1, 2, 3.
pub fn criterion_walls_isometry(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed ^ 0x3a11);
    for _ in 0..200 {
        let n = r.gen_range(2..=10);
        let walls = random_walls(&mut r, n, 12)?;
        let l1 = embed_l1(&walls)?;
        for i in 0..n {
            for j in 0..n {
                if l1.dist_pow(i, j) != walls.wall_metric(i, j) {
                    return Ok((false, format!("l1 defect at pair ({i},{j})")));
                }
            }
        }
        for p in 2u32..=3 {
            let t = embed_lp(&walls, p)?;
            if let Some((i, j)) = t.isometry_defect(|i, j| walls.wall_metric(i, j)) {
                return Ok((false, format!("l{p} defect at pair ({i},{j})")));
            }
        }
    }
    Ok((true, "200 walls structures, exponents 1,2,3, exact isometries".to_string()))
}

/// Criterion 4: the lifted-walls embedding is an exact isometry onto the
/// lifted pseudometric, and that pseudometric satisfies every triangle
/// inequality, on 100 random small instances.
pub fn criterion_lift_isometry(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed ^ 0x11f7);
    let mut triangles = 0usize;
    for _ in 0..100 {
        let zn = r.gen_range(2..=4);
        let walls = random_walls(&mut r, zn, 8)?;
        // All two-valued configurations over the sites, at every position.
        let mut points = Vec::new();
        for mask in 0u32..(1 << zn) {
            let f: BTreeMap<usize, usize> =
                (0..zn).filter(|s| mask >> s & 1 == 1).map(|s| (s, 1usize)).collect();
            for z in 0..zn {
                points.push((LampConfig(f.clone()), z));
            }
        }
        let m = points.len();
        let mut dist = vec![vec![qzero(); m]; m];
        for i in 0..m {
            for j in (i + 1)..m {
                let d = lift_metric(&walls, &points[i], &points[j])?;
                dist[i][j] = d.clone();
                dist[j][i] = d;
            }
        }
        let table = lift_embedding(&walls, &points)?;
        if let Some((i, j)) = table.isometry_defect(|i, j| dist[i][j].clone()) {
            return Ok((false, format!("lift embedding defect at pair ({i},{j})")));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                for k in (j + 1)..m {
                    triangles += 1;
                    if dist[i][k] > &dist[i][j] + &dist[j][k]
                        || dist[i][j] > &dist[i][k] + &dist[k][j]
                        || dist[j][k] > &dist[j][i] + &dist[i][k]
                    {
                        return Ok((false, format!("triangle violation at ({i},{j},{k})")));
                    }
                }
            }
        }
    }
    Ok((true, format!("100 lifted instances, exact isometries, {triangles} triangles hold")))
}

fn whole_space_size(inst: &WreathInstance) -> u128 {
    let mut size: u128 = inst.y.n() as u128;
    for _ in 0..inst.z.n() {
        size = size.saturating_mul(inst.x.n() as u128);
    }
    size
}

/// Grows a ball around the rest point until it holds at least
/// `min(500, whole space)` points.
pub fn ball_of_at_least(inst: &WreathInstance, target_cap: usize) -> Result<Vec<WreathPoint>> {
    let center = WreathPoint::rest(inst, 0);
    let target = (whole_space_size(inst).min(target_cap as u128)) as usize;
    let mut radius = qi(2);
    loop {
        let ball = enumerate_ball(inst, &center, &radius, inst.z.n(), DEFAULT_BALL_CAP)?;
        if ball.len() >= target {
            return Ok(ball.into_iter().map(|(pt, _)| pt).collect());
        }
        radius += qi(1);
    }
}

fn scale_first_wall(walls: &WallsStructure, factor: i64) -> Result<WallsStructure> {
    let labels: Vec<String> = (0..walls.n()).map(|i| walls.label(i).to_string()).collect();
    let raw: Vec<_> = walls
        .halfspaces()
        .iter()
        .enumerate()
        .map(|(k, (side, w))| {
            let w = if k == 0 { w * qi(factor) } else { w.clone() };
            (side.clone(), w)
        })
        .collect();
    WallsStructure::new(labels, raw)
}

/// Criterion 5: both distortion inequalities hold pairwise on large balls
/// of the fixture and of two random certified instances, and corrupting a
/// fibre wall weight produces at least one violation witness.
pub fn criterion_certification(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed ^ 0xc1c2);
    let mut cases = vec![lamplighter_fixture()?];
    cases.push(random_certified_instance(&mut r)?);
    cases.push(random_certified_instance(&mut r)?);

    let mut ball_sizes = Vec::new();
    for (inst, triple) in &cases {
        let points = ball_of_at_least(inst, 500)?;
        ball_sizes.push(points.len().to_string());
        let inputs = CertInputs::derive(inst, triple)?;
        let report = certify_with_inputs(inst, triple, &points, &inputs)?;
        if !report.is_certified() {
            return Ok((
                false,
                format!(
                    "{} violations over {} pairs (first rule {})",
                    report.violations.len(),
                    report.pairs,
                    report.violations.first().map(|v| v.rule).unwrap_or("none")
                ),
            ));
        }
    }

    // Mutation: scale one fibre wall weight by 10 and recheck the fixture
    // ball against the clean constants — the corruption must be caught.
    let (inst, triple) = &cases[0];
    let points = ball_of_at_least(inst, 500)?;
    let corrupted = WallsTriple::new(
        scale_first_wall(&triple.sigma, 10)?,
        triple.nu.clone(),
        triple.mu.clone(),
    );
    let clean_inputs = CertInputs::derive(inst, triple)?;
    let mutated = certify_with_inputs(inst, &corrupted, &points, &clean_inputs)?;
    if mutated.violations.is_empty() {
        return Ok((false, "mutation produced no violation witness".to_string()));
    }

    Ok((
        true,
        format!(
            "3 instances certified on balls of {} points; mutation caught with {} witnesses",
            ball_sizes.join("/"),
            mutated.violations.len()
        ),
    ))
}

/// Criterion 6: exact cut decomposition round-trips: random wall metrics
/// and the 5-cycle graph metric are reconstructed with zero error.
pub fn criterion_cut_decomposition(seed: u64) -> Result<(bool, String)> {
    let mut r = rng(seed ^ 0x6d6d);
    for _ in 0..100 {
        let n = r.gen_range(2..=8);
        let walls = random_walls(&mut r, n, 10)?;
        let space = walls.wall_metric_space()?;
        match cut_decompose(&space)? {
            CutDecomposition::Decomposed(back) => {
                for i in 0..n {
                    for j in 0..n {
                        if &back.wall_metric(i, j) != space.d(i, j) {
                            return Ok((false, format!("reconstruction differs at ({i},{j})")));
                        }
                    }
                }
            }
            CutDecomposition::Infeasible(_) => {
                return Ok((false, "wall metric reported non-decomposable".to_string()));
            }
        }
    }
    let c5 = cycle_space(5);
    match cut_decompose(&c5)? {
        CutDecomposition::Decomposed(back) => {
            for i in 0..5 {
                for j in 0..5 {
                    if &back.wall_metric(i, j) != c5.d(i, j) {
                        return Ok((false, format!("5-cycle reconstruction differs at ({i},{j})")));
                    }
                }
            }
        }
        CutDecomposition::Infeasible(_) => {
            return Ok((false, "5-cycle reported non-decomposable".to_string()));
        }
    }
    Ok((true, "100 random wall metrics + the 5-cycle reconstruct exactly".to_string()))
}

/// Criterion 7: the lifting profile of the identity map fits slope 1, the
/// closed-form lower bound evaluates exactly, and the comparison metric on
/// a large lamplighter-over-a-path ball sits inside a fitted sandwich
/// `(1/C) d^{1/2} - D <= d_lambda <= C d + D`.
pub fn criterion_compression_pipeline() -> Result<(bool, String)> {
    // Identity lifting profile on the 12-cycle: theta(r) = r.
    let n = 12;
    let p_id = DenseMap::new((0..n).collect(), n, qzero())?;
    let theta = lifting_modulus(&p_id, &cycle_space(n), &cycle_space(n))?;
    let fit = poly_fit(&theta);
    if (fit.delta_hat - 1.0).abs() > 0.01 {
        return Ok((false, format!("identity profile fitted slope {}", format_f64(fit.delta_hat))));
    }

    let closed_form = comp_lower_bound(&qi(1), &qi(1), &qi(1), &qi(1))?;
    if closed_form != qr(1, 2) {
        return Ok((false, format!("closed-form bound {}", format_q(&closed_form))));
    }

    // Lamplighter over the 16-point path: a support-capped slice of the
    // radius-32 ball, subsampled deterministically.
    let m = 16;
    let p = DenseMap::new((0..m).collect(), m, qzero())?;
    let inst = WreathInstance::new(path_space(2), 0, path_space(m), path_space(m), p)?;
    let triple = WallsTriple::new(
        crate::walls::path_walls(2)?,
        crate::walls::path_walls(m)?,
        crate::walls::path_walls(m)?,
    );
    let center = WreathPoint::rest(&inst, 0);
    let ball = enumerate_ball(&inst, &center, &qi(32), 3, DEFAULT_BALL_CAP)?;
    let stride = (ball.len() + 399) / 400;
    let points: Vec<WreathPoint> =
        ball.into_iter().step_by(stride.max(1)).map(|(pt, _)| pt).collect();

    let asm = crate::lift::assemble_lambda(&inst, &triple, &points)?;
    let mut pd = PairDistances::new(&inst);
    let mut cloud: Vec<(Q, Q)> = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if (i * 997 + j) % 23 != 0 {
                continue;
            }
            let dw = pd.distance(&points[i], &points[j])?;
            cloud.push((dw, asm.table.dist_pow(i, j)));
        }
    }
    let fit_sandwich = sandwich_at(&cloud, 0.5);
    if !fit_sandwich.feasible {
        return Ok((false, format!("sandwich infeasible over {} pairs", cloud.len())));
    }
    Ok((
        true,
        format!(
            "slope {} (fitted), closed form 1/2, sandwich C={} D={} (fitted) over {} pairs of {} points",
            format_f64(fit.delta_hat),
            format_f64(fit_sandwich.c),
            format_f64(fit_sandwich.d),
            cloud.len(),
            points.len()
        ),
    ))
}

/// Criterion 8: the 2,4,8 tower of the two-element lamplighter has the
/// exact level orders, passes the factoring and survival checks at radius
/// 6, and admits one global growing lower envelope across all components.
pub fn criterion_box_space() -> Result<(bool, String)> {
    let g = FiniteGroup::cyclic(2)?;
    let k_chain = vec![std::collections::BTreeSet::from([0usize]); 3];
    let n_chain = SubgroupChainZ::new(vec![2, 4, 8])?;
    let chain = build_wreath_chain(&g, &k_chain, &n_chain, FiniteWreathGroup::DEFAULT_CAP)?;
    let orders: Vec<usize> = chain.levels.iter().map(|l| l.group.order()).collect();
    if orders != vec![8, 64, 2048] {
        return Ok((false, format!("level orders {orders:?}")));
    }
    for level in &chain.levels {
        if level.index != level.group.order() as u128 {
            return Ok((false, "index identity fails".to_string()));
        }
    }
    let report = check_m_chain(&chain, 6)?;
    if !report.nesting_ok {
        return Ok((
            false,
            format!("nesting: {}", report.nesting_witness.unwrap_or_default()),
        ));
    }
    if !report.triviality_ok {
        return Ok((
            false,
            format!("survival: {}", report.triviality_witness.unwrap_or_default()),
        ));
    }
    let result = box_embedding(&chain)?;
    let expected_pairs: u64 = {
        let ns = [8u64, 64, 2048];
        let within: u64 = ns.iter().map(|n| n * (n - 1) / 2).sum();
        let cross: u64 = ns[0] * ns[1] + ns[0] * ns[2] + ns[1] * ns[2];
        within + cross
    };
    if result.pairs != expected_pairs {
        return Ok((false, format!("pair count {} != {}", result.pairs, expected_pairs)));
    }
    if !result.rho_minus.is_nondecreasing() || !result.unbounded_proxy {
        return Ok((false, "lower envelope does not keep growing across components".to_string()));
    }
    let top = result
        .rho_minus
        .points()
        .last()
        .map(|(t, v)| format!("rho_-({}) = {}", format_q(t), format_q(v)))
        .unwrap_or_default();
    Ok((
        true,
        format!(
            "orders 8/64/2048, {} ball words survive, {} pairs enveloped, {}",
            report.ball_size, result.pairs, top
        ),
    ))
}
