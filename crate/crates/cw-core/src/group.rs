//! Finite groups as multiplication tables, finite wreath products, and
//! lamplighter elements over the integers.
//!
//! Table groups stay small (quotients, bases, tops); wreath products compute
//! products on demand from the (configuration, position) structure, so their
//! Cayley graphs can be walked without materializing an order-squared table.

use crate::error::{CwError, Result};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Debug)]
pub struct FiniteGroup {
    mul: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
    generators: Vec<usize>,
    labels: Vec<String>,
}

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.mul.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|a| (a..n).all(|b| self.mul[a][b] == self.mul[b][a]))
    }

    /// Conjugate `h` by `g`, i.e. `g h g^{-1}`.
    pub fn conj(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inv(g))
    }

    /// Cyclic group of order `n`, generated by 1, labels "0".."n-1".
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(CwError::input("cyclic group order must be positive"));
        }
        let mul = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let inverse = (0..n).map(|a| (n - a) % n).collect();
        let generators = if n == 1 { vec![] } else { vec![1] };
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(FiniteGroup { mul, identity: 0, inverse, generators, labels })
    }

    /// Direct product with componentwise operation; generators are the two
    /// generating sets embedded in their factors.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Self {
        let (na, nb) = (a.order(), b.order());
        let n = na * nb;
        let pack = |x: usize, y: usize| x * nb + y;
        let mut mul = vec![vec![0; n]; n];
        for xa in 0..na {
            for ya in 0..nb {
                for xb in 0..na {
                    for yb in 0..nb {
                        mul[pack(xa, ya)][pack(xb, yb)] = pack(a.mul(xa, xb), b.mul(ya, yb));
                    }
                }
            }
        }
        let inverse = (0..n).map(|i| pack(a.inv(i / nb), b.inv(i % nb))).collect();
        let mut generators = Vec::new();
        for &g in a.generators() {
            generators.push(pack(g, b.identity()));
        }
        for &g in b.generators() {
            generators.push(pack(a.identity(), g));
        }
        let labels = (0..n)
            .map(|i| format!("({},{})", a.label(i / nb), b.label(i % nb)))
            .collect();
        FiniteGroup { mul, identity: pack(a.identity(), b.identity()), inverse, generators, labels }
    }

    /// Builds a group from a raw multiplication table and validates the laws.
    pub fn from_table(mul: Vec<Vec<usize>>, generators: Vec<usize>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = mul.len();
        if n == 0 {
            return Err(CwError::input("empty multiplication table"));
        }
        if mul.iter().any(|row| row.len() != n) || generators.iter().any(|&g| g >= n) {
            return Err(CwError::input("multiplication table must be square with generators in range"));
        }
        if mul.iter().flatten().any(|&v| v >= n) {
            return Err(CwError::input("table entry outside element range"));
        }
        // Identity: the unique e with e*x = x*e = x.
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| mul[e][x] == x && mul[x][e] == x))
            .ok_or_else(|| CwError::input("table has no two-sided identity"))?;
        let mut inverse = vec![usize::MAX; n];
        for a in 0..n {
            inverse[a] = (0..n)
                .find(|&b| mul[a][b] == identity && mul[b][a] == identity)
                .ok_or_else(|| CwError::input(format!("element {a} has no inverse")))?;
        }
        let labels = labels.unwrap_or_else(|| (0..n).map(|i| format!("g{i}")).collect());
        if labels.len() != n {
            return Err(CwError::input("label count must match group order"));
        }
        let g = FiniteGroup { mul, identity, inverse, generators, labels };
        g.validate()?;
        Ok(g)
    }

    /// Checks associativity (full below order 513, deterministic sample above)
    /// and that the declared generators generate.
    pub fn validate(&self) -> Result<()> {
        let n = self.order();
        if n <= 512 {
            for a in 0..n {
                for b in 0..n {
                    let ab = self.mul(a, b);
                    for c in 0..n {
                        if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                            return Err(CwError::input(format!(
                                "associativity fails at ({a},{b},{c})"
                            )));
                        }
                    }
                }
            }
        } else {
            let mut state = 0x9e3779b97f4a7c15u64;
            let mut next = move || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 33) as usize
            };
            for _ in 0..200_000 {
                let (a, b, c) = (next() % n, next() % n, next() % n);
                if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)) {
                    return Err(CwError::input(format!("associativity fails at ({a},{b},{c})")));
                }
            }
        }
        if !self.generators.is_empty() || n == 1 {
            let reached = self.subgroup_closure(&self.generators);
            if reached.len() != n {
                return Err(CwError::input(format!(
                    "generators reach only {} of {} elements",
                    reached.len(),
                    n
                )));
            }
        }
        Ok(())
    }

    /// Smallest subgroup containing `seed`.
    pub fn subgroup_closure(&self, seed: &[usize]) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = BTreeSet::from([self.identity]);
        let mut queue: VecDeque<usize> = VecDeque::from([self.identity]);
        for &s in seed {
            if set.insert(s) {
                queue.push_back(s);
            }
        }
        // Close under products with already-known elements on both sides, and
        // under inverses.
        while let Some(a) = queue.pop_front() {
            let snapshot: Vec<usize> = set.iter().copied().collect();
            for b in snapshot {
                for c in [self.mul(a, b), self.mul(b, a)] {
                    if set.insert(c) {
                        queue.push_back(c);
                    }
                }
            }
            let ia = self.inv(a);
            if set.insert(ia) {
                queue.push_back(ia);
            }
        }
        set
    }

    /// Smallest normal subgroup containing `seed`: closure of all conjugates.
    pub fn normal_closure(&self, seed: &[usize]) -> BTreeSet<usize> {
        let mut conjugates = Vec::new();
        for &s in seed {
            for g in 0..self.order() {
                conjugates.push(self.conj(g, s));
            }
        }
        self.subgroup_closure(&conjugates)
    }

    /// Quotient by a normal subgroup given as an element set. Rejects
    /// non-subgroups, and non-normal subgroups with a conjugation witness.
    pub fn quotient(&self, n_set: &BTreeSet<usize>) -> Result<FiniteGroup> {
        self.quotient_with_projection(n_set).map(|(q, _, _)| q)
    }

    /// Like [`FiniteGroup::quotient`], but also returns the projection
    /// (element index -> coset index) and the minimal coset
    /// representatives (coset index -> element index).
    pub fn quotient_with_projection(
        &self,
        n_set: &BTreeSet<usize>,
    ) -> Result<(FiniteGroup, Vec<usize>, Vec<usize>)> {
        if !n_set.contains(&self.identity) {
            return Err(CwError::input("subgroup must contain the identity"));
        }
        for &a in n_set {
            if !n_set.contains(&self.inv(a)) {
                return Err(CwError::input(format!("set not closed under inverse at {a}")));
            }
            for &b in n_set {
                if !n_set.contains(&self.mul(a, b)) {
                    return Err(CwError::input(format!("set not closed under product at ({a},{b})")));
                }
            }
        }
        for g in 0..self.order() {
            for &h in n_set {
                if !n_set.contains(&self.conj(g, h)) {
                    return Err(CwError::NotNormal {
                        g: self.label(g).to_string(),
                        n: self.label(h).to_string(),
                    });
                }
            }
        }
        // Cosets, represented by their minimal element.
        let order = self.order();
        let mut coset_of = vec![usize::MAX; order];
        let mut reps: Vec<usize> = Vec::new();
        for x in 0..order {
            if coset_of[x] != usize::MAX {
                continue;
            }
            let id = reps.len();
            for &h in n_set {
                coset_of[self.mul(x, h)] = id;
            }
            reps.push(x);
        }
        let m = reps.len();
        let mut mul = vec![vec![0; m]; m];
        for (i, &ri) in reps.iter().enumerate() {
            for (j, &rj) in reps.iter().enumerate() {
                mul[i][j] = coset_of[self.mul(ri, rj)];
            }
        }
        let identity = coset_of[self.identity];
        let inverse = (0..m).map(|i| coset_of[self.inv(reps[i])]).collect();
        // Induced generators: images of the originals, duplicates kept.
        let generators = self.generators.iter().map(|&g| coset_of[g]).collect();
        let labels = reps.iter().map(|&r| format!("[{}]", self.label(r))).collect();
        Ok((FiniteGroup { mul, identity, inverse, generators, labels }, coset_of, reps))
    }

    /// Undirected Cayley edges for the declared generators (no self-loops,
    /// symmetric closure implied by undirectedness).
    pub fn cayley_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for a in 0..self.order() {
            for &s in &self.generators {
                let b = self.mul(a, s);
                if a < b {
                    edges.push((a, b));
                } else if b < a {
                    edges.push((b, a));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Word metric of the Cayley graph.
    pub fn word_metric_space(&self) -> Result<crate::metric::FiniteMetricSpace> {
        crate::metric::FiniteMetricSpace::word_metric(self.labels.clone(), &self.cayley_edges())
    }
}

/// Finite wreath product of `base` by `top`: pairs (f, h) with
/// f : top -> base finitely supported (here: arbitrary, top is finite) and
/// h in top, multiplied by (f, h)(g, h') = (f * (h.g), h h') where
/// (h.g)(z) = g(h^{-1} z).
///
/// Elements are indexed as `rank(f) * |top| + h` with
/// `rank(f) = sum_k f(t_k) |base|^k`; products are computed on demand.
#[derive(Clone, Debug)]
pub struct FiniteWreathGroup {
    pub base: FiniteGroup,
    pub top: FiniteGroup,
    order: usize,
}

impl FiniteWreathGroup {
    pub const DEFAULT_CAP: u128 = 1 << 20;

    pub fn new(base: &FiniteGroup, top: &FiniteGroup, cap: u128) -> Result<Self> {
        let mut order: u128 = top.order() as u128;
        for _ in 0..top.order() {
            order = order.saturating_mul(base.order() as u128);
            if order > cap {
                return Err(CwError::cap("wreath product enumeration", order, cap));
            }
        }
        Ok(FiniteWreathGroup { base: base.clone(), top: top.clone(), order: order as usize })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.encode(&vec![self.base.identity(); self.top.order()], self.top.identity())
    }

    pub fn encode(&self, f: &[usize], h: usize) -> usize {
        let nb = self.base.order();
        let mut rank = 0usize;
        for &v in f.iter().rev() {
            rank = rank * nb + v;
        }
        rank * self.top.order() + h
    }

    /// Inverse of [`Self::encode`]: the configuration over top indices, and
    /// the top coordinate.
    pub fn decode(&self, idx: usize) -> (Vec<usize>, usize) {
        let nt = self.top.order();
        let nb = self.base.order();
        let h = idx % nt;
        let mut rank = idx / nt;
        let mut f = Vec::with_capacity(nt);
        for _ in 0..nt {
            f.push(rank % nb);
            rank /= nb;
        }
        (f, h)
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        let (fa, ha) = self.decode(a);
        let (fb, hb) = self.decode(b);
        let nt = self.top.order();
        let mut f = vec![0usize; nt];
        let ha_inv = self.top.inv(ha);
        for z in 0..nt {
            // (ha.fb)(z) = fb(ha^{-1} z)
            let shifted = self.top.mul(ha_inv, z);
            f[z] = self.base.mul(fa[z], fb[shifted]);
        }
        self.encode(&f, self.top.mul(ha, hb))
    }

    pub fn inv(&self, a: usize) -> usize {
        let (fa, ha) = self.decode(a);
        let nt = self.top.order();
        let hi = self.top.inv(ha);
        let mut f = vec![0usize; nt];
        for z in 0..nt {
            // g(z) = fa(ha z)^{-1} satisfies fa * (ha.g) = identity.
            let w = self.top.mul(ha, z);
            f[z] = self.base.inv(fa[w]);
        }
        self.encode(&f, hi)
    }

    /// Standard generators: one lamp generator per base generator (placed at
    /// the top identity), plus the top generators acting as moves.
    pub fn generator_indices(&self) -> Vec<usize> {
        let nt = self.top.order();
        let mut gens = Vec::new();
        for &s in self.base.generators() {
            let mut f = vec![self.base.identity(); nt];
            f[self.top.identity()] = s;
            gens.push(self.encode(&f, self.top.identity()));
        }
        for &t in self.top.generators() {
            gens.push(self.encode(&vec![self.base.identity(); nt], t));
        }
        gens
    }

    pub fn label(&self, idx: usize) -> String {
        let (f, h) = self.decode(idx);
        let lamps: Vec<String> = f
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != self.base.identity())
            .map(|(z, &v)| format!("{}:{}", self.top.label(z), self.base.label(v)))
            .collect();
        format!("({{{}}},{})", lamps.join(","), self.top.label(h))
    }

    pub fn cayley_edges(&self) -> Vec<(usize, usize)> {
        let gens = self.generator_indices();
        let mut edges = Vec::new();
        for a in 0..self.order {
            for &s in &gens {
                let b = self.mul(a, s);
                if a < b {
                    edges.push((a, b));
                } else if b < a {
                    edges.push((b, a));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    pub fn word_metric_space(&self) -> Result<crate::metric::FiniteMetricSpace> {
        let labels = (0..self.order).map(|i| self.label(i)).collect();
        crate::metric::FiniteMetricSpace::word_metric(labels, &self.cayley_edges())
    }

    /// Materializes the full multiplication table. Only sensible for small
    /// orders; used by subgroup computations and validation tests.
    pub fn as_finite_group(&self, cap: usize) -> Result<FiniteGroup> {
        let n = self.order;
        if n > cap {
            return Err(CwError::cap("wreath multiplication table", (n as u128) * (n as u128), (cap as u128) * (cap as u128)));
        }
        let mut mul = vec![vec![0usize; n]; n];
        for a in 0..n {
            for b in 0..n {
                mul[a][b] = self.mul(a, b);
            }
        }
        let labels = (0..n).map(|i| self.label(i)).collect();
        FiniteGroup::from_table(mul, self.generator_indices(), Some(labels))
    }
}

/// Element of `base wr Z` for an abelian finite `base`: finitely many lit
/// lamps indexed by integers, plus an integer position.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WreathZElement {
    /// Non-identity lamp values, keyed by position.
    pub lamps: BTreeMap<i64, usize>,
    pub pos: i64,
}

impl WreathZElement {
    pub fn identity() -> Self {
        WreathZElement { lamps: BTreeMap::new(), pos: 0 }
    }

    pub fn lamp(base: &FiniteGroup, site: i64, value: usize) -> Self {
        let mut lamps = BTreeMap::new();
        if value != base.identity() {
            lamps.insert(site, value);
        }
        WreathZElement { lamps, pos: 0 }
    }

    pub fn translation(step: i64) -> Self {
        WreathZElement { lamps: BTreeMap::new(), pos: step }
    }

    /// (f, m)(g, m') = (f * (m.g), m + m') with (m.g)(z) = g(z - m).
    pub fn mul(&self, base: &FiniteGroup, other: &WreathZElement) -> Self {
        let mut lamps = self.lamps.clone();
        for (&z, &v) in &other.lamps {
            let site = z + self.pos;
            let cur = lamps.get(&site).copied().unwrap_or(base.identity());
            let prod = base.mul(cur, v);
            if prod == base.identity() {
                lamps.remove(&site);
            } else {
                lamps.insert(site, prod);
            }
        }
        WreathZElement { lamps, pos: self.pos + other.pos }
    }

    pub fn inv(&self, base: &FiniteGroup) -> Self {
        let mut lamps = BTreeMap::new();
        for (&z, &v) in &self.lamps {
            lamps.insert(z - self.pos, base.inv(v));
        }
        WreathZElement { lamps, pos: -self.pos }
    }

    pub fn is_identity(&self) -> bool {
        self.lamps.is_empty() && self.pos == 0
    }
}

#[cfg(test)]
pub(crate) fn symmetric_3() -> FiniteGroup {
    // S3 as permutations of {0,1,2}; composition (a*b)(x) = a(b(x)).
    let perms: Vec<[usize; 3]> =
        vec![[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];
    let find = |p: &[usize; 3]| perms.iter().position(|q| q == p).unwrap();
    let n = perms.len();
    let mut mul = vec![vec![0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let comp = [perms[a][perms[b][0]], perms[a][perms[b][1]], perms[a][perms[b][2]]];
            mul[a][b] = find(&comp);
        }
    }
    let labels = vec!["e", "(01)", "(02)", "(12)", "(012)", "(021)"]
        .into_iter()
        .map(String::from)
        .collect();
    // Generated by a transposition and a 3-cycle.
    FiniteGroup::from_table(mul, vec![1, 4], Some(labels)).unwrap()
}
