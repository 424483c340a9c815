//! Fixed-universe bit sets.
//!
//! Halfspaces, supports and embedding incidence rows are all subsets of a
//! small indexed universe; a packed representation keeps the cut tests and
//! symmetric differences in the inner loops cheap.

/// Subset of `{0, .., len-1}` packed into 64-bit blocks.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct BitSet {
    len: usize,
    blocks: Vec<u64>,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet { len, blocks: vec![0; len.div_ceil(64)] }
    }

    pub fn from_indices(len: usize, idx: &[usize]) -> Self {
        let mut s = Self::new(len);
        for &i in idx {
            s.insert(i);
        }
        s
    }

    pub fn universe_len(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "index {i} outside universe of {}", self.len);
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.blocks[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.len
    }

    pub fn complement(&self) -> Self {
        let mut out = BitSet { len: self.len, blocks: self.blocks.iter().map(|b| !b).collect() };
        out.mask_tail();
        out
    }

    fn mask_tail(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    /// True if every element of `other` lies in `self`.
    pub fn is_superset_of(&self, other: &BitSet) -> bool {
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| b & !a == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(k, &b)| {
            let mut b = b;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let t = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }

    /// Number of positions where the two sets disagree.
    pub fn sym_diff_count(&self, other: &BitSet) -> usize {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    /// Indices where the two sets disagree.
    pub fn sym_diff_iter<'a>(&'a self, other: &'a BitSet) -> impl Iterator<Item = usize> + 'a {
        self.blocks.iter().zip(&other.blocks).enumerate().flat_map(|(k, (a, b))| {
            let mut x = a ^ b;
            std::iter::from_fn(move || {
                if x == 0 {
                    None
                } else {
                    let t = x.trailing_zeros() as usize;
                    x &= x - 1;
                    Some(k * 64 + t)
                }
            })
        })
    }

    /// Does this set split `points` (contain some of them but not all)?
    pub fn cuts(&self, points: impl IntoIterator<Item = usize>) -> bool {
        let mut seen_in = false;
        let mut seen_out = false;
        for p in points {
            if self.contains(p) {
                seen_in = true;
            } else {
                seen_out = true;
            }
            if seen_in && seen_out {
                return true;
            }
        }
        false
    }
}
