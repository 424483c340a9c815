//! Box spaces of wreath products at desk scale.
//!
//! A divisibility chain `n_1 | n_2 | …` in the integers and a descending
//! chain of subgroups of a finite abelian base `G` produce a tower of
//! finite quotients `(G/K_i) ≀ (Z/n_i)` of `G ≀ Z`. This module builds the
//! tower, checks that the quotient maps factor through one another
//! (nestedness) and that every short word survives in some level (trivial
//! intersection, at a chosen radius), assembles the disjoint union into a
//! single metric space, and embeds everything into one `ell_1` table whose
//! lower and upper envelopes are valid across *all* components at once.
//!
//! Within a component the embedding is the wall-lift comparison metric;
//! components are separated by offset coordinates whose increments follow
//! the inter-component distance rule `diam_i + diam_j + |i − j|`, so the
//! single global lower envelope keeps growing across levels — the
//! finite-scale shadow of a coarse embedding.

use num::integer::lcm;
use num::ToPrimitive;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

use crate::analysis::Modulus;
use crate::error::{CwError, Result};
use crate::lift::{assemble_lambda, hypothesis_check, WallsTriple};
use crate::metric::{cycle_space, DenseMap, FiniteMetricSpace};
use crate::rational::{qi, qr, qzero, Q};
use crate::group::{FiniteGroup, FiniteWreathGroup, WreathZElement};
use crate::walls::{
    cut_decompose, cycle_walls, CutDecomposition, EmbeddingTable, WallsStructure,
    CUT_DECOMPOSE_CAP,
};
use crate::wreath::{WreathInstance, WreathPoint};

/// Nested finite-index subgroups of the integers, stored by their moduli:
/// strictly increasing, each dividing the next.
#[derive(Debug, Clone)]
pub struct SubgroupChainZ {
    moduli: Vec<u64>,
}

impl SubgroupChainZ {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(CwError::input("subgroup chain must be nonempty"));
        }
        for (i, w) in moduli.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(CwError::input(format!(
                    "chain moduli must strictly increase: {} then {} at position {}",
                    w[0],
                    w[1],
                    i + 1
                )));
            }
            if w[1] % w[0] != 0 {
                return Err(CwError::input(format!(
                    "chain moduli must divide in order: {} does not divide {}",
                    w[0], w[1]
                )));
            }
        }
        if moduli[0] == 0 {
            return Err(CwError::input("chain moduli must be positive"));
        }
        Ok(SubgroupChainZ { moduli })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }
}

/// Accepts the two shapes for which the full wreath product is residually
/// finite by Gruenberg's criterion: an abelian base over the integers, or
/// any finite base over a finite top.
pub fn precondition_gruenberg(g: &FiniteGroup, finite_top: Option<&FiniteGroup>) -> Result<()> {
    match finite_top {
        Some(_) => Ok(()),
        None => {
            if g.is_abelian() {
                Ok(())
            } else {
                Err(CwError::input(
                    "Gruenberg's criterion: over an integer top the base must be abelian \
                     for the quotient tower to separate elements",
                ))
            }
        }
    }
}

/// Whether the tower quotients an integer top (positions reduced modulo
/// `n_i`, lamp sites folded) or keeps a fixed finite top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    IntegerTop,
    FiniteTop,
}

/// One level of the tower: the quotient wreath group together with the
/// base projection data needed to reduce elements into it.
#[derive(Debug, Clone)]
pub struct BoxLevel {
    pub group: FiniteWreathGroup,
    /// `G/K_i`.
    pub quotient: FiniteGroup,
    /// Base element index -> quotient index.
    pub proj: Vec<usize>,
    /// Quotient index -> minimal representative in the base.
    pub reps: Vec<usize>,
    /// Top order at this level (`n_i`, or `|H|` for a finite top).
    pub n: u64,
    /// `|G/K_i|^n · n`.
    pub index: u128,
}

#[derive(Debug, Clone)]
pub struct WreathChain {
    pub g: FiniteGroup,
    pub kind: ChainKind,
    pub levels: Vec<BoxLevel>,
    /// First level that exceeded the cap, when the tower was truncated.
    pub truncated_at: Option<usize>,
    pub notice: Option<String>,
}

fn validate_k_chain(g: &FiniteGroup, k_chain: &[BTreeSet<usize>]) -> Result<()> {
    if k_chain.is_empty() {
        return Err(CwError::input("subgroup chain in the base must be nonempty"));
    }
    for (i, w) in k_chain.windows(2).enumerate() {
        if !w[1].is_subset(&w[0]) {
            return Err(CwError::input(format!(
                "base subgroups must descend: level {} is not contained in level {}",
                i + 1,
                i
            )));
        }
    }
    for (i, k) in k_chain.iter().enumerate() {
        for &x in k {
            if x >= g.order() {
                return Err(CwError::input(format!(
                    "subgroup element {x} at level {i} outside the base group"
                )));
            }
        }
    }
    Ok(())
}

fn level_index(quotient_order: usize, n: u64) -> u128 {
    let mut idx: u128 = n as u128;
    for _ in 0..n {
        idx = idx.saturating_mul(quotient_order as u128);
    }
    idx
}

fn build_levels(
    g: &FiniteGroup,
    k_chain: &[BTreeSet<usize>],
    tops: &[FiniteGroup],
    cap: u128,
) -> Result<(Vec<BoxLevel>, Option<usize>, Option<String>)> {
    let mut levels = Vec::new();
    for (i, (k, top)) in k_chain.iter().zip(tops).enumerate() {
        let (quotient, proj, reps) = g.quotient_with_projection(k)?;
        match FiniteWreathGroup::new(&quotient, top, cap) {
            Ok(group) => {
                let n = top.order() as u64;
                let index = level_index(quotient.order(), n);
                levels.push(BoxLevel { group, quotient, proj, reps, n, index });
            }
            Err(CwError::CapExceeded { needed, cap, .. }) => {
                let notice = format!(
                    "tower truncated before level {i}: order {needed} exceeds cap {cap}"
                );
                return Ok((levels, Some(i), Some(notice)));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((levels, None, None))
}

/// Builds the tower `(G/K_i) ≀ (Z/n_i)` for an abelian base. A level past
/// the cap truncates the tower with a notice instead of failing.
pub fn build_wreath_chain(
    g: &FiniteGroup,
    k_chain: &[BTreeSet<usize>],
    n_chain: &SubgroupChainZ,
    cap: u128,
) -> Result<WreathChain> {
    precondition_gruenberg(g, None)?;
    validate_k_chain(g, k_chain)?;
    if k_chain.len() != n_chain.moduli().len() {
        return Err(CwError::input(format!(
            "base chain has {} levels but integer chain has {}",
            k_chain.len(),
            n_chain.moduli().len()
        )));
    }
    let tops: Vec<FiniteGroup> = n_chain
        .moduli()
        .iter()
        .map(|&n| FiniteGroup::cyclic(n as usize))
        .collect::<Result<_>>()?;
    let (levels, truncated_at, notice) = build_levels(g, k_chain, &tops, cap)?;
    Ok(WreathChain { g: g.clone(), kind: ChainKind::IntegerTop, levels, truncated_at, notice })
}

/// Tower over a fixed finite top: levels `(G/K_i) ≀ H`.
pub fn finite_h_box(
    g: &FiniteGroup,
    k_chain: &[BTreeSet<usize>],
    h: &FiniteGroup,
    cap: u128,
) -> Result<WreathChain> {
    precondition_gruenberg(g, Some(h))?;
    validate_k_chain(g, k_chain)?;
    let tops = vec![h.clone(); k_chain.len()];
    let (levels, truncated_at, notice) = build_levels(g, k_chain, &tops, cap)?;
    Ok(WreathChain { g: g.clone(), kind: ChainKind::FiniteTop, levels, truncated_at, notice })
}

/// Image of a level-`hi` group element in level `lo < hi`: lamp values are
/// projected along the base quotients and, over an integer top, lamp sites
/// and the position are reduced modulo the smaller level (colliding sites
/// multiply — the base is abelian there by construction).
fn project_index(chain: &WreathChain, hi: usize, lo: usize, idx: usize) -> usize {
    let lg = &chain.levels[hi];
    let sg = &chain.levels[lo];
    let (f, h) = lg.group.decode(idx);
    let n_lo = sg.group.top.order();
    let mut f_lo = vec![sg.quotient.identity(); n_lo];
    for (t, &v) in f.iter().enumerate() {
        let qv = sg.proj[lg.reps[v]];
        let site = match chain.kind {
            ChainKind::IntegerTop => t % n_lo,
            ChainKind::FiniteTop => t,
        };
        f_lo[site] = sg.quotient.mul(f_lo[site], qv);
    }
    let h_lo = match chain.kind {
        ChainKind::IntegerTop => h % n_lo,
        ChainKind::FiniteTop => h,
    };
    sg.group.encode(&f_lo, h_lo)
}

/// Whether a word of the full product dies (maps to the identity) at a
/// level of the tower. Only meaningful for integer-top chains.
pub fn element_dies_at_level(chain: &WreathChain, level: usize, el: &WreathZElement) -> bool {
    let lv = &chain.levels[level];
    let n = lv.n as i64;
    if el.pos.rem_euclid(n) != 0 {
        return false;
    }
    let q = &lv.quotient;
    let mut acc: BTreeMap<i64, usize> = BTreeMap::new();
    for (&site, &v) in &el.lamps {
        let s = site.rem_euclid(n);
        let qv = lv.proj[v];
        let cur = acc.get(&s).copied().unwrap_or_else(|| q.identity());
        let prod = q.mul(cur, qv);
        if prod == q.identity() {
            acc.remove(&s);
        } else {
            acc.insert(s, prod);
        }
    }
    acc.is_empty()
}

/// Ball of the full product `G ≀ Z` up to a word length, over the
/// symmetrized standard generators (lamps at the origin, unit shifts).
/// Deterministic order.
pub fn integer_wreath_ball(g: &FiniteGroup, radius: u32) -> Vec<WreathZElement> {
    let mut gens: Vec<WreathZElement> = Vec::new();
    for &s in g.generators() {
        gens.push(WreathZElement::lamp(g, 0, s));
        gens.push(WreathZElement::lamp(g, 0, g.inv(s)));
    }
    gens.push(WreathZElement::translation(1));
    gens.push(WreathZElement::translation(-1));
    gens.sort();
    gens.dedup();

    let mut seen: BTreeSet<WreathZElement> = BTreeSet::new();
    seen.insert(WreathZElement::identity());
    let mut frontier = vec![WreathZElement::identity()];
    for _ in 0..radius {
        let mut next = Vec::new();
        for el in &frontier {
            for gen in &gens {
                let prod = el.mul(g, gen);
                if seen.insert(prod.clone()) {
                    next.push(prod);
                }
            }
        }
        frontier = next;
    }
    seen.into_iter().collect()
}

/// Result of the tower checks: do the quotient maps factor through one
/// another, and does every short nontrivial word survive somewhere?
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub levels: usize,
    pub nesting_ok: bool,
    pub nesting_witness: Option<String>,
    pub triviality_ok: bool,
    pub triviality_witness: Option<String>,
    /// Number of words examined for triviality (ball size, or the whole
    /// finite product for a finite top).
    pub ball_size: usize,
}

impl ChainReport {
    pub fn all_ok(&self) -> bool {
        self.nesting_ok && self.triviality_ok
    }
}

/// Checks (a) that each level factors onto the previous one by a
/// generator-respecting homomorphism, verified on every element against
/// every generator, and (b) that every nontrivial word of length at most
/// `radius` in the full product survives in some level.
pub fn check_m_chain(chain: &WreathChain, radius: u32) -> Result<ChainReport> {
    if chain.levels.is_empty() {
        return Err(CwError::input("tower has no levels to check"));
    }
    let mut nesting_ok = true;
    let mut nesting_witness = None;
    'nesting: for i in 0..chain.levels.len() - 1 {
        let hi = &chain.levels[i + 1];
        let lo = &chain.levels[i];
        let hi_gens = hi.group.generator_indices();
        let lo_gens = lo.group.generator_indices();
        let mapped: Vec<usize> = hi_gens
            .iter()
            .map(|&s| project_index(chain, i + 1, i, s))
            .collect();
        if mapped != lo_gens {
            nesting_ok = false;
            nesting_witness = Some(format!(
                "generators of level {} do not map onto those of level {i}",
                i + 1
            ));
            break 'nesting;
        }
        for a in 0..hi.group.order() {
            let pa = project_index(chain, i + 1, i, a);
            for (gi, &s) in hi_gens.iter().enumerate() {
                let lhs = project_index(chain, i + 1, i, hi.group.mul(a, s));
                let rhs = lo.group.mul(pa, mapped[gi]);
                if lhs != rhs {
                    nesting_ok = false;
                    nesting_witness = Some(format!(
                        "factoring fails between levels {} and {i} at element {} with generator {}",
                        i + 1,
                        hi.group.label(a),
                        hi.group.label(s)
                    ));
                    break 'nesting;
                }
            }
        }
    }

    let mut triviality_ok = true;
    let mut triviality_witness = None;
    let ball_size;
    match chain.kind {
        ChainKind::IntegerTop => {
            let ball = integer_wreath_ball(&chain.g, radius);
            ball_size = ball.len();
            for el in &ball {
                if el.is_identity() {
                    continue;
                }
                let survives =
                    (0..chain.levels.len()).any(|i| !element_dies_at_level(chain, i, el));
                if !survives {
                    triviality_ok = false;
                    triviality_witness = Some(format!(
                        "word with {} lamps and shift {} dies in every level",
                        el.lamps.len(),
                        el.pos
                    ));
                    break;
                }
            }
        }
        ChainKind::FiniteTop => {
            // The full product is finite: examine all of it.
            let top = &chain.levels[0].group.top;
            let full = FiniteWreathGroup::new(&chain.g, top, FiniteWreathGroup::DEFAULT_CAP)?;
            ball_size = full.order();
            'outer: for idx in 0..full.order() {
                if idx == full.identity() {
                    continue;
                }
                let (f, h) = full.decode(idx);
                for lv in &chain.levels {
                    let h_alive = h != top.identity();
                    let lamp_alive = f
                        .iter()
                        .any(|&v| lv.proj[v] != lv.quotient.identity());
                    if h_alive || lamp_alive {
                        continue 'outer;
                    }
                }
                triviality_ok = false;
                triviality_witness =
                    Some(format!("element {} dies in every level", full.label(idx)));
                break;
            }
        }
    }

    Ok(ChainReport {
        levels: chain.levels.len(),
        nesting_ok,
        nesting_witness,
        triviality_ok,
        triviality_witness,
        ball_size,
    })
}

/// Disjoint union of finite components with the inter-component rule
/// `diam_i + diam_j + |i − j|`: strictly larger than either diameter, and
/// triangle-consistent (any detour through a third component only adds
/// nonnegative terms).
#[derive(Debug, Clone)]
pub struct BoxSpace {
    pub space: FiniteMetricSpace,
    pub component_of: Vec<usize>,
    pub diameters: Vec<Q>,
}

pub fn assemble_box(components: &[FiniteMetricSpace]) -> Result<BoxSpace> {
    if components.is_empty() {
        return Err(CwError::input("box space needs at least one component"));
    }
    let diameters: Vec<Q> = components.iter().map(|c| c.diameter()).collect();
    let mut labels = Vec::new();
    let mut component_of = Vec::new();
    for (ci, comp) in components.iter().enumerate() {
        for k in 0..comp.n() {
            labels.push(format!("c{ci}:{}", comp.label(k)));
            component_of.push(ci);
        }
    }
    let total = labels.len();
    let mut offsets = Vec::with_capacity(components.len());
    let mut acc = 0usize;
    for comp in components {
        offsets.push(acc);
        acc += comp.n();
    }
    let mut dist = vec![vec![qzero(); total]; total];
    for (ci, comp) in components.iter().enumerate() {
        for a in 0..comp.n() {
            for (cj, comp2) in components.iter().enumerate() {
                for b in 0..comp2.n() {
                    let (ia, ib) = (offsets[ci] + a, offsets[cj] + b);
                    dist[ia][ib] = if ci == cj {
                        comp.d(a, b).clone()
                    } else {
                        let gap = qi((ci as i64 - cj as i64).abs());
                        &diameters[ci] + &diameters[cj] + gap
                    };
                }
            }
        }
    }
    let space = FiniteMetricSpace::new(labels, dist)?;
    Ok(BoxSpace { space, component_of, diameters })
}

/// Per-level summary inside a [`BoxResult`].
#[derive(Debug, Clone)]
pub struct LevelSummary {
    pub order: usize,
    pub index: u128,
    pub quotient_order: usize,
    pub top_order: usize,
    pub diameter: Q,
    pub embedding_dim: usize,
}

/// The assembled tower embedding: per-level summaries, the separating
/// offsets, and the pair of envelopes valid across every component
/// simultaneously.
#[derive(Debug, Clone)]
pub struct BoxResult {
    pub levels: Vec<LevelSummary>,
    /// The per-level comparison-metric tables (one point per group
    /// element), in level order.
    pub tables: Vec<EmbeddingTable>,
    pub offsets: Vec<Q>,
    pub rho_minus: Modulus,
    pub rho_plus: Modulus,
    /// Finite-scale unboundedness: the lower envelope climbs strictly
    /// beyond everything it attains at within-component distances.
    pub unbounded_proxy: bool,
    pub pairs: u64,
    pub max_within_distance: Q,
}

/// Canonical fibre walls for a quotient group: the exact cut decomposition
/// of its word metric. Capped — the tower quotients stay tiny by design.
pub fn canonical_quotient_walls(q: &FiniteGroup) -> Result<WallsStructure> {
    if q.order() > CUT_DECOMPOSE_CAP {
        return Err(CwError::cap(
            "canonical walls for quotient",
            q.order() as u128,
            CUT_DECOMPOSE_CAP as u128,
        ));
    }
    let space = q.word_metric_space()?;
    match cut_decompose(&space)? {
        CutDecomposition::Decomposed(w) => Ok(w),
        CutDecomposition::Infeasible(_) => Err(CwError::input(
            "quotient word metric admits no cut decomposition; no canonical walls",
        )),
    }
}

struct LevelData {
    summary: LevelSummary,
    table: EmbeddingTable,
    /// Word-metric distances within the level.
    dist: Vec<Vec<u32>>,
    /// Per weight class: (weight numerator in 1/den units, packed rows).
    classes: Vec<(u64, Vec<Vec<u64>>)>,
    /// All weight denominators appearing in the raw table.
    denominators: Vec<u64>,
    /// Raw table weights and rows, kept to re-pack once the global unit is
    /// known.
    weights: Vec<Q>,
    rows: Vec<Vec<usize>>,
}

fn bfs_distances(order: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); order];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut out = Vec::with_capacity(order);
    for src in 0..order {
        let mut d = vec![u32::MAX; order];
        d[src] = 0;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if d[v] == u32::MAX {
                    d[v] = d[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        out.push(d);
    }
    out
}

fn q_denominator_u64(w: &Q) -> Result<u64> {
    w.denom()
        .to_u64()
        .ok_or_else(|| CwError::internal("weight denominator too large for unit packing"))
}

fn q_in_units(w: &Q, den: u64) -> Result<u64> {
    let scaled = w * qi(den as i64);
    if !scaled.is_integer() {
        return Err(CwError::internal("value not a multiple of the common unit"));
    }
    scaled
        .to_integer()
        .to_u64()
        .ok_or_else(|| CwError::internal("value too large for unit packing"))
}

/// Largest level order the all-pairs embedding pipeline accepts: the
/// per-level distance matrix is quadratic in the order, so this is much
/// stricter than the group-construction cap.
pub const BOX_EMBED_CAP: u128 = 1 << 12;

fn build_level_data(level: &BoxLevel) -> Result<LevelData> {
    if level.group.order() as u128 > BOX_EMBED_CAP {
        return Err(CwError::cap(
            "box embedding level",
            level.group.order() as u128,
            BOX_EMBED_CAP,
        ));
    }
    let n = level.n as usize;
    let x = level.quotient.word_metric_space()?;
    let sigma = canonical_quotient_walls(&level.quotient)?;
    let nu = cycle_walls(n)?;
    let mu = cycle_walls(n)?;
    let p = DenseMap::new((0..n).collect(), n, qzero())?;
    let inst = WreathInstance::new(x, level.quotient.identity(), cycle_space(n), cycle_space(n), p)?;
    let geometry = hypothesis_check(&inst);
    if geometry.chosen != Some(0) {
        return Err(CwError::input(
            "tower level fails the geometric hypotheses for certified embedding",
        ));
    }
    let triple = WallsTriple::new(sigma, nu, mu);

    let order = level.group.order();
    let mut points = Vec::with_capacity(order);
    for idx in 0..order {
        let (f, h) = level.group.decode(idx);
        let map: BTreeMap<usize, usize> = f.into_iter().enumerate().collect();
        points.push(WreathPoint::new(&inst, map, h)?);
    }
    let asm = assemble_lambda(&inst, &triple, &points)?;

    let dist = bfs_distances(order, &level.group.cayley_edges());
    let mut diameter = 0u32;
    for row in &dist {
        for &d in row {
            if d == u32::MAX {
                return Err(CwError::internal("level Cayley graph is disconnected"));
            }
            diameter = diameter.max(d);
        }
    }

    let dim = asm.table.dim();
    let mut weights = Vec::with_capacity(dim);
    let mut denominators = Vec::new();
    for c in 0..dim {
        let w = asm.table.weight(c).clone();
        denominators.push(q_denominator_u64(&w)?);
        weights.push(w);
    }
    let mut rows = Vec::with_capacity(order);
    for i in 0..order {
        rows.push(asm.table.row_coordinates(i));
    }

    Ok(LevelData {
        summary: LevelSummary {
            order,
            index: level.index,
            quotient_order: level.quotient.order(),
            top_order: n,
            diameter: qi(diameter as i64),
            embedding_dim: dim,
        },
        table: asm.table,
        dist,
        classes: Vec::new(),
        denominators,
        weights,
        rows,
    })
}

fn pack_level_classes(data: &mut LevelData, den: u64) -> Result<()> {
    let mut by_units: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (c, w) in data.weights.iter().enumerate() {
        by_units.entry(q_in_units(w, den)?).or_default().push(c);
    }
    let n = data.rows.len();
    let mut classes = Vec::with_capacity(by_units.len());
    for (units, coords) in by_units {
        let words = (coords.len() + 63) / 64;
        let mut rows = vec![vec![0u64; words]; n];
        let pos_of: BTreeMap<usize, usize> =
            coords.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        for (i, row) in data.rows.iter().enumerate() {
            for c in row {
                if let Some(&k) = pos_of.get(c) {
                    rows[i][k / 64] |= 1u64 << (k % 64);
                }
            }
        }
        classes.push((units, rows));
    }
    data.classes = classes;
    Ok(())
}

fn dist_units(classes: &[(u64, Vec<Vec<u64>>)], i: usize, j: usize) -> u64 {
    let mut total = 0u64;
    for (units, rows) in classes {
        let mut bits = 0u32;
        for (a, b) in rows[i].iter().zip(&rows[j]) {
            bits += (a ^ b).count_ones();
        }
        total += units * bits as u64;
    }
    total
}

fn mass_units(classes: &[(u64, Vec<Vec<u64>>)], i: usize) -> u64 {
    let mut total = 0u64;
    for (units, rows) in classes {
        let mut bits = 0u32;
        for a in &rows[i] {
            bits += a.count_ones();
        }
        total += units * bits as u64;
    }
    total
}

/// Canonical separating offsets for the rule `diam_i + diam_j + |i − j|`:
/// `o_1 = 0`, `o_{i+1} − o_i = diam_i + diam_{i+1} + 1`.
pub fn canonical_offsets(diameters: &[Q]) -> Vec<Q> {
    let mut offsets = vec![qzero()];
    for w in diameters.windows(2) {
        let last = offsets.last().cloned().unwrap_or_else(qzero);
        offsets.push(last + &w[0] + &w[1] + qi(1));
    }
    offsets
}

pub fn box_embedding(chain: &WreathChain) -> Result<BoxResult> {
    let data: Vec<LevelData> = chain
        .levels
        .par_iter()
        .map(build_level_data)
        .collect::<Result<_>>()?;
    let diameters: Vec<Q> = data.iter().map(|d| d.summary.diameter.clone()).collect();
    let offsets = canonical_offsets(&diameters);
    box_embedding_finish(data, &offsets)
}

/// Same assembly with caller-chosen offsets (the mutation tests feed
/// degenerate ones to watch the envelope collapse).
pub fn box_embedding_with_offsets(chain: &WreathChain, offsets: &[Q]) -> Result<BoxResult> {
    if offsets.len() != chain.levels.len() {
        return Err(CwError::input(format!(
            "{} offsets for {} levels",
            offsets.len(),
            chain.levels.len()
        )));
    }
    let data: Vec<LevelData> = chain
        .levels
        .par_iter()
        .map(build_level_data)
        .collect::<Result<_>>()?;
    box_embedding_finish(data, offsets)
}

fn box_embedding_finish(mut data: Vec<LevelData>, offsets: &[Q]) -> Result<BoxResult> {
    if data.is_empty() {
        return Err(CwError::input("tower has no levels to embed"));
    }
    // Common unit for exact integer arithmetic across every level and the
    // offsets.
    let mut den = 1u64;
    for d in data.iter() {
        for &q in &d.denominators {
            den = lcm(den, q);
        }
    }
    for o in offsets {
        den = lcm(den, q_denominator_u64(o)?);
    }
    for d in data.iter_mut() {
        pack_level_classes(d, den)?;
    }
    let offset_units: Vec<u64> = offsets
        .iter()
        .map(|o| q_in_units(o, den))
        .collect::<Result<_>>()?;

    // Envelope accumulator keyed by the box distance.
    let mut envelope: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    let note = |d: u64, emb: u64, env: &mut BTreeMap<u64, (u64, u64)>| {
        env.entry(d)
            .and_modify(|(lo, hi)| {
                *lo = (*lo).min(emb);
                *hi = (*hi).max(emb);
            })
            .or_insert((emb, emb));
    };

    let mut pairs = 0u64;
    let mut max_within = 0u64;
    // Within-component pairs, computed exactly in units.
    let per_level: Vec<(u64, u64)> = data
        .iter()
        .map(|lvl| {
            let n = lvl.summary.order;
            let mut mass_min = u64::MAX;
            let mut mass_max = 0u64;
            for i in 0..n {
                let m = mass_units(&lvl.classes, i);
                mass_min = mass_min.min(m);
                mass_max = mass_max.max(m);
            }
            (mass_min, mass_max)
        })
        .collect();
    for lvl in data.iter() {
        let n = lvl.summary.order;
        let level_pairs: Vec<(u64, u64)> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let lvl = &*lvl;
                ((i + 1)..n).map(move |j| {
                    (lvl.dist[i][j] as u64, dist_units(&lvl.classes, i, j))
                })
            })
            .collect();
        for (d, emb) in level_pairs {
            note(d, emb, &mut envelope);
            max_within = max_within.max(d);
            pairs += 1;
        }
    }
    // Cross-component pairs: the box distance is constant per level pair
    // and the embedded distance is mass(u) + mass(v) + |o_i − o_j|, so the
    // envelope contribution reduces to the mass extremes.
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            let d_box = q_in_units(&data[i].summary.diameter, 1)?
                + q_in_units(&data[j].summary.diameter, 1)?
                + (j - i) as u64;
            let gap = offset_units[j].abs_diff(offset_units[i]);
            let lo = per_level[i].0 + per_level[j].0 + gap;
            let hi = per_level[i].1 + per_level[j].1 + gap;
            note(d_box, lo, &mut envelope);
            note(d_box, hi, &mut envelope);
            pairs += (data[i].summary.order as u64) * (data[j].summary.order as u64);
        }
    }

    let unit = qr(1, den as i64);
    let lower_cloud: Vec<(Q, Q)> = envelope
        .iter()
        .map(|(&d, &(lo, _))| (qi(d as i64), qi(lo as i64) * &unit))
        .collect();
    let upper_cloud: Vec<(Q, Q)> = envelope
        .iter()
        .map(|(&d, &(_, hi))| (qi(d as i64), qi(hi as i64) * &unit))
        .collect();
    let rho_minus = Modulus::lower_from_cloud(&lower_cloud);
    let rho_plus = Modulus::upper_from_cloud(&upper_cloud);

    // The lower envelope must keep strictly growing past every value it
    // attains at within-component scale.
    let within_peak = rho_minus
        .points()
        .iter()
        .filter(|(t, _)| t <= &qi(max_within as i64))
        .map(|(_, v)| v.clone())
        .max();
    let beyond = rho_minus
        .points()
        .iter()
        .filter(|(t, _)| t > &qi(max_within as i64))
        .map(|(_, v)| v.clone())
        .max();
    let unbounded_proxy = match (within_peak, beyond) {
        (Some(w), Some(b)) => b > w && rho_minus.is_nondecreasing(),
        _ => false,
    };

    let levels = data.iter().map(|d| d.summary.clone()).collect();
    let tables = data.into_iter().map(|d| d.table).collect();
    Ok(BoxResult {
        levels,
        tables,
        offsets: offsets.to_vec(),
        rho_minus,
        rho_plus,
        unbounded_proxy,
        pairs,
        max_within_distance: qi(max_within as i64),
    })
}
