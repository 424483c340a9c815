//! Implementations behind the subcommands: load, compute, report.
//!
//! Every report goes to stdout as pretty JSON (or CSV/TSV for tabular
//! artifacts) built exclusively from exact rational strings, integers,
//! and the deterministic 12-significant-digit float rendering, so reruns
//! on the same inputs are byte-identical. Each numeric field carries its
//! provenance: `computed` for exact values, `fitted` for regression
//! outputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde_json::json;

use cw_core::analysis::{
    certify_c1c2, compression_fit, lifting_modulus, pair_cloud, poly_fit, sandwich_at, Modulus,
};
use cw_core::boxspace::{
    box_embedding, build_wreath_chain, check_m_chain, finite_h_box, ChainKind, SubgroupChainZ,
};
use cw_core::error::Result;
use cw_core::io::{
    computed, fitted, read_json_file, to_json_pretty, GroupDto, InstanceDto, MetricDto, PointDto,
    Tagged, WallsDto,
};
use cw_core::lift::{assemble_lambda, WallsTriple};
use cw_core::metric::{MetricDefect, MetricMode};
use cw_core::rational::{format_q, parse_q, qi};
use cw_core::selftest::{ball_of_at_least, render_report, run_selftest};
use cw_core::walls::{
    cut_decompose, embed_lp, CutDecomposition, EmbeddingTable, LoadReport, WallsStructure,
};
use cw_core::wreath::{
    enumerate_ball, wreath_distance, PairDistances, WreathInstance, WreathPoint, DEFAULT_BALL_CAP,
};
use cw_core::CwError;

use crate::{Cmd, WallsCmd};

/// Dispatches one parsed command; `Ok(false)` means "ran fine, but a
/// checked property failed", which the caller turns into exit code 1.
pub(crate) fn run(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Validate { file, pseudo } => cmd_validate(&file, pseudo),
        Cmd::Geometry { file, c } => cmd_geometry(&file, &c),
        Cmd::WreathDist { instance, point_a, point_b } => {
            cmd_wreath_dist(&instance, &point_a, &point_b)
        }
        Cmd::Walls { cmd } => match cmd {
            WallsCmd::Metric { file } => cmd_walls_metric(&file),
            WallsCmd::Embed { file, p } => cmd_walls_embed(&file, p),
            WallsCmd::Decompose { file } => cmd_walls_decompose(&file),
        },
        Cmd::EmbedWreath { instance, walls_x, walls_y, walls_z, points, out } => {
            cmd_embed_wreath(&instance, &walls_x, &walls_y, &walls_z, &points, &out)
        }
        Cmd::Certify { instance, walls_x, walls_y, walls_z, min_points } => {
            cmd_certify(&instance, &walls_x, &walls_y, &walls_z, min_points)
        }
        Cmd::Compress {
            instance,
            walls_x,
            walls_y,
            walls_z,
            ball_radius,
            support_cap,
            max_points,
            r,
            out,
        } => cmd_compress(
            &instance,
            &walls_x,
            &walls_y,
            &walls_z,
            ball_radius,
            support_cap,
            max_points,
            r,
            out.as_deref(),
        ),
        Cmd::Boxspace { g, k_chain, n_chain, finite_top, ball, cap, out } => cmd_boxspace(
            &g,
            &k_chain,
            n_chain.as_deref(),
            finite_top.as_deref(),
            ball,
            cap,
            out.as_deref(),
        ),
        Cmd::Selftest { seed } => {
            let report = run_selftest(seed);
            emit(&render_report(&report));
            Ok(report.all_passed())
        }
    }
}

/// Writes to stdout, exiting quietly when the reader has gone away
/// (e.g. the output is piped through `head`).
fn emit(s: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_all(s.as_bytes()).and_then(|_| out.flush()).is_err() {
        std::process::exit(0);
    }
}

fn emit_json(v: &serde_json::Value) -> Result<()> {
    emit(&format!("{}\n", to_json_pretty(v)?));
    Ok(())
}

fn tag(t: Tagged) -> serde_json::Value {
    json!({ "value": t.value, "kind": t.kind })
}

fn modulus_json(m: &Modulus) -> serde_json::Value {
    json!({
        "kind": "computed",
        "points": m
            .points()
            .iter()
            .map(|(t, v)| json!([format_q(t), format_q(v)]))
            .collect::<Vec<_>>(),
    })
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)
        .map_err(|e| CwError::input(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path)
        .map_err(|e| CwError::input(format!("cannot create {}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<WreathInstance> {
    read_json_file::<InstanceDto>(path)?.to_instance()
}

fn read_walls(path: &Path) -> Result<(WallsStructure, LoadReport)> {
    read_json_file::<WallsDto>(path)?.to_walls()
}

fn read_triple(wx: &Path, wy: &Path, wz: &Path) -> Result<WallsTriple> {
    let (sigma, _) = read_walls(wx)?;
    let (nu, _) = read_walls(wy)?;
    let (mu, _) = read_walls(wz)?;
    Ok(WallsTriple::new(sigma, nu, mu))
}

fn defect_line(d: &MetricDefect) -> String {
    match d {
        MetricDefect::Shape { detail } => format!("shape: {detail}"),
        MetricDefect::Negative { i, j, value } => format!("negative d({i},{j}) = {value}"),
        MetricDefect::Asymmetric { i, j } => format!("asymmetric pair ({i},{j})"),
        MetricDefect::NonzeroDiagonal { i, value } => format!("nonzero diagonal d({i},{i}) = {value}"),
        MetricDefect::Indiscernible { i, j } => format!("distinct points {i},{j} at distance 0"),
        MetricDefect::Triangle { i, j, k, lhs, rhs } => {
            format!("triangle ({i},{j},{k}): {lhs} > {rhs}")
        }
    }
}

fn cmd_validate(file: &Path, pseudo: bool) -> Result<bool> {
    let space = read_json_file::<MetricDto>(file)?.to_space()?;
    let mode = if pseudo { MetricMode::Pseudometric } else { MetricMode::Metric };
    let report = space.validate(mode);
    let out = json!({
        "points": space.n(),
        "mode": if pseudo { "pseudometric" } else { "metric" },
        "valid": report.is_valid(),
        "defects": report.defects.iter().map(defect_line).collect::<Vec<_>>(),
    });
    emit_json(&out)?;
    Ok(report.is_valid())
}

fn cmd_geometry(file: &Path, c_raw: &str) -> Result<bool> {
    let space = read_json_file::<MetricDto>(file)?.to_space()?;
    let c = parse_q(c_raw)?;
    let out = json!({
        "points": space.n(),
        "diameter": tag(computed(&space.diameter())),
        "uniform_discreteness": space.uniform_discreteness().map(|q| tag(computed(&q))),
        "ball_bound": { "c": tag(computed(&c)), "n": space.bounded_geometry(&c) },
    });
    emit_json(&out)?;
    Ok(true)
}

fn cmd_wreath_dist(instance: &Path, point_a: &Path, point_b: &Path) -> Result<bool> {
    let inst = read_instance(instance)?;
    let a = read_json_file::<PointDto>(point_a)?.to_point(&inst)?;
    let b = read_json_file::<PointDto>(point_b)?.to_point(&inst)?;
    let d = wreath_distance(&inst, &a, &b)?;
    emit(&format!("{}\n", format_q(&d)));
    Ok(true)
}

fn cmd_walls_metric(file: &Path) -> Result<bool> {
    let (walls, load) = read_walls(file)?;
    let space = walls.wall_metric_space()?;
    let metric = serde_json::to_value(MetricDto::from_space(&space))
        .map_err(|e| CwError::internal(format!("metric serialization: {e}")))?;
    let out = json!({
        "load": {
            "merged": load.merged,
            "dropped_trivial": load.dropped_trivial,
            "dropped_zero": load.dropped_zero,
        },
        "halfspaces": walls.halfspaces().len(),
        "metric": metric,
    });
    emit_json(&out)?;
    Ok(true)
}

/// Renders the factored form: a weights row (the p-th powers), then one
/// 0/1 incidence row per point. Exact for every p, including p ≥ 2 where
/// the coordinates themselves would be irrational.
fn embedding_csv(table: &EmbeddingTable) -> String {
    let mut out = String::from("point");
    for c in 0..table.dim() {
        out.push_str(&format!(",w{c}"));
    }
    out.push_str("\n#weight");
    for c in 0..table.dim() {
        out.push(',');
        out.push_str(&format_q(table.weight(c)));
    }
    out.push('\n');
    for i in 0..table.n() {
        out.push('"');
        out.push_str(&table.labels()[i].replace('"', "\"\""));
        out.push('"');
        let row: BTreeSet<usize> = table.row_coordinates(i).into_iter().collect();
        for c in 0..table.dim() {
            out.push_str(if row.contains(&c) { ",1" } else { ",0" });
        }
        out.push('\n');
    }
    out
}

fn cmd_walls_embed(file: &Path, p: u32) -> Result<bool> {
    let (walls, _) = read_walls(file)?;
    let table = embed_lp(&walls, p)?;
    emit(&embedding_csv(&table));
    Ok(true)
}

fn cmd_walls_decompose(file: &Path) -> Result<bool> {
    let space = read_json_file::<MetricDto>(file)?.to_space()?;
    let out = match cut_decompose(&space)? {
        CutDecomposition::Decomposed(w) => {
            for i in 0..space.n() {
                for j in (i + 1)..space.n() {
                    if w.wall_metric(i, j) != *space.d(i, j) {
                        return Err(CwError::internal(format!(
                            "decomposition drifted at pair ({i},{j})"
                        )));
                    }
                }
            }
            let walls = serde_json::to_value(WallsDto::from_walls(&w))
                .map_err(|e| CwError::internal(format!("walls serialization: {e}")))?;
            json!({ "decomposed": true, "walls": walls })
        }
        CutDecomposition::Infeasible(obs) => {
            if !obs.verify(&space) {
                return Err(CwError::internal("obstruction failed re-verification"));
            }
            json!({
                "decomposed": false,
                "obstruction": obs
                    .pair_weights
                    .iter()
                    .map(|((i, j), y)| json!({ "i": i, "j": j, "weight": format_q(y) }))
                    .collect::<Vec<_>>(),
            })
        }
    };
    emit_json(&out)?;
    Ok(true)
}

fn cmd_embed_wreath(
    instance: &Path,
    walls_x: &Path,
    walls_y: &Path,
    walls_z: &Path,
    points: &Path,
    out_dir: &Path,
) -> Result<bool> {
    let inst = read_instance(instance)?;
    let triple = read_triple(walls_x, walls_y, walls_z)?;
    let dtos: Vec<PointDto> = read_json_file(points)?;
    if dtos.is_empty() {
        return Err(CwError::input("the point list is empty"));
    }
    let pts: Vec<WreathPoint> =
        dtos.iter().map(|d| d.to_point(&inst)).collect::<Result<_>>()?;
    let asm = assemble_lambda(&inst, &triple, &pts)?;

    ensure_dir(out_dir)?;
    let coords_path = out_dir.join("coords.csv");
    write_file(&coords_path, &embedding_csv(&asm.table))?;

    let mut pd = PairDistances::new(&inst);
    let mut tsv = String::from("product\tcomparison\n");
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            let dw = pd.distance(&pts[i], &pts[j])?;
            tsv.push_str(&format!(
                "{}\t{}\n",
                format_q(&dw),
                format_q(&asm.table.dist_pow(i, j))
            ));
        }
    }
    let scatter_path = out_dir.join("scatter.tsv");
    write_file(&scatter_path, &tsv)?;

    let out = json!({
        "points": pts.len(),
        "dimension": asm.table.dim(),
        "coords_csv": coords_path.display().to_string(),
        "scatter_tsv": scatter_path.display().to_string(),
    });
    emit_json(&out)?;
    Ok(true)
}

fn cmd_certify(
    instance: &Path,
    walls_x: &Path,
    walls_y: &Path,
    walls_z: &Path,
    min_points: usize,
) -> Result<bool> {
    let inst = read_instance(instance)?;
    let triple = read_triple(walls_x, walls_y, walls_z)?;
    let points = ball_of_at_least(&inst, min_points)?;
    let (report, inputs) = certify_c1c2(&inst, &triple, &points)?;
    let geo = &inputs.geometry;
    let out = json!({
        "points": points.len(),
        "pairs": report.pairs,
        "hypothesis": {
            "uniform_discreteness_y": geo.delta_y.as_ref().map(|q| tag(computed(q))),
            "ball_bound_z": geo.n_c,
            "uniform_discreteness_x": geo.delta_x.as_ref().map(|q| tag(computed(q))),
            "sets": geo.sets,
            "chosen": geo.chosen,
        },
        "c2_evaluated": report.c2_evaluated,
        "max_product": report.max_product.as_ref().map(|q| tag(computed(q))),
        "max_comparison": report.max_comparison.as_ref().map(|q| tag(computed(q))),
        "violations": report
            .violations
            .iter()
            .map(|v| json!({
                "a": v.a,
                "b": v.b,
                "rule": v.rule,
                "lhs": v.lhs,
                "bound": v.bound,
                "at": v.at,
            }))
            .collect::<Vec<_>>(),
        "certified": report.is_certified(),
    });
    emit_json(&out)?;
    Ok(report.is_certified())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compress(
    instance: &Path,
    walls_x: &Path,
    walls_y: &Path,
    walls_z: &Path,
    ball_radius: u32,
    support_cap: usize,
    max_points: usize,
    r: f64,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let inst = read_instance(instance)?;
    let triple = read_triple(walls_x, walls_y, walls_z)?;
    let center = WreathPoint::rest(&inst, 0);
    let ball = enumerate_ball(
        &inst,
        &center,
        &qi(ball_radius as i64),
        support_cap,
        DEFAULT_BALL_CAP,
    )?;
    let mut pts: Vec<WreathPoint> = ball.into_iter().map(|(pt, _)| pt).collect();
    let ball_points = pts.len();
    if max_points > 0 && pts.len() > max_points {
        let stride = pts.len().div_ceil(max_points);
        pts = pts.into_iter().step_by(stride).collect();
    }
    let cloud = pair_cloud(&inst, &triple, &pts)?;

    let theta = lifting_modulus(&inst.p, &inst.y, &inst.z)?;
    let pf = poly_fit(&theta);
    let sandwich = sandwich_at(&cloud, r);
    let cf = compression_fit(&cloud);

    let cloud_tsv = match out_dir {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join("cloud.tsv");
            let mut tsv = String::from("product\tcomparison\n");
            for (d, e) in &cloud {
                tsv.push_str(&format!("{}\t{}\n", format_q(d), format_q(e)));
            }
            write_file(&path, &tsv)?;
            Some(path.display().to_string())
        }
        None => None,
    };

    let out = json!({
        "ball_points": ball_points,
        "kept_points": pts.len(),
        "pairs": cloud.len(),
        "lifting_fit": {
            "delta_hat": tag(fitted(pf.delta_hat)),
            "k": tag(fitted(pf.k)),
        },
        "sandwich": {
            "r": tag(fitted(r)),
            "c": tag(fitted(sandwich.c)),
            "d": tag(fitted(sandwich.d)),
            "feasible": sandwich.feasible,
        },
        "compression": {
            "r_hat": tag(fitted(cf.r_hat)),
            "c": tag(fitted(cf.c)),
            "d": tag(fitted(cf.d)),
            "feasible": cf.feasible,
            "envelope_points": cf.envelope_points,
        },
        "cloud_tsv": cloud_tsv,
    });
    emit_json(&out)?;
    Ok(true)
}

fn parse_k_chain(raw: &str) -> Result<Vec<BTreeSet<usize>>> {
    raw.split(';')
        .map(|level| {
            let mut set = BTreeSet::new();
            for tok in level.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    continue;
                }
                set.insert(tok.parse::<usize>().map_err(|_| {
                    CwError::input(format!("bad element index {tok:?} in --k-chain"))
                })?);
            }
            if set.is_empty() {
                return Err(CwError::input(
                    "each --k-chain level needs at least one element index",
                ));
            }
            Ok(set)
        })
        .collect()
}

fn parse_moduli(raw: &str) -> Result<Vec<u64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u64>()
                .map_err(|_| CwError::input(format!("bad modulus {:?} in --n-chain", tok.trim())))
        })
        .collect()
}

fn cmd_boxspace(
    g: &Path,
    k_chain_raw: &str,
    n_chain: Option<&str>,
    finite_top: Option<&Path>,
    ball: u32,
    cap: u128,
    out_dir: Option<&Path>,
) -> Result<bool> {
    let base = read_json_file::<GroupDto>(g)?.to_group()?;
    let k_chain = parse_k_chain(k_chain_raw)?;
    let chain = match (n_chain, finite_top) {
        (Some(moduli_raw), None) => {
            let moduli = SubgroupChainZ::new(parse_moduli(moduli_raw)?)?;
            build_wreath_chain(&base, &k_chain, &moduli, cap)?
        }
        (None, Some(path)) => {
            let top = read_json_file::<GroupDto>(path)?.to_group()?;
            finite_h_box(&base, &k_chain, &top, cap)?
        }
        _ => {
            return Err(CwError::input(
                "pass exactly one of --n-chain or --finite-top",
            ))
        }
    };
    let checks = check_m_chain(&chain, ball)?;
    let emb = box_embedding(&chain)?;

    let mut level_files = Vec::new();
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        for (i, table) in emb.tables.iter().enumerate() {
            let path = dir.join(format!("level{i}.csv"));
            write_file(&path, &embedding_csv(table))?;
            level_files.push(path.display().to_string());
        }
    }

    let out = json!({
        "kind": match chain.kind {
            ChainKind::IntegerTop => "integer-top",
            ChainKind::FiniteTop => "finite-top",
        },
        "levels": emb
            .levels
            .iter()
            .map(|l| json!({
                "order": l.order,
                "index": l.index.to_string(),
                "quotient_order": l.quotient_order,
                "top_order": l.top_order,
                "diameter": tag(computed(&l.diameter)),
                "embedding_dim": l.embedding_dim,
            }))
            .collect::<Vec<_>>(),
        "truncated_at": chain.truncated_at,
        "notice": chain.notice,
        "checks": {
            "levels": checks.levels,
            "nesting_ok": checks.nesting_ok,
            "nesting_witness": checks.nesting_witness,
            "triviality_ok": checks.triviality_ok,
            "triviality_witness": checks.triviality_witness,
            "ball_size": checks.ball_size,
        },
        "offsets": emb.offsets.iter().map(|q| tag(computed(q))).collect::<Vec<_>>(),
        "rho_minus": modulus_json(&emb.rho_minus),
        "rho_plus": modulus_json(&emb.rho_plus),
        "unbounded_proxy": emb.unbounded_proxy,
        "pairs": emb.pairs,
        "max_within_distance": tag(computed(&emb.max_within_distance)),
        "level_files": level_files,
    });
    emit_json(&out)?;
    Ok(checks.all_ok())
}
