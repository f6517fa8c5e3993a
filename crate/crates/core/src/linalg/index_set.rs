use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// A strictly increasing choice of `p` rows out of `p + q`.
///
/// Stored 0-based; displayed and constructed 1-based in the public helpers
/// since that is how row labels are usually written.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexSet {
    p: usize,
    q: usize,
    members: Vec<usize>,
}

impl IndexSet {
    /// `members` are 0-based row indices.
    pub fn new(p: usize, q: usize, members: Vec<usize>) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(GeometryError::InvalidIndexSet(format!("p={p}, q={q} must both be positive")));
        }
        if members.len() != p {
            return Err(GeometryError::InvalidIndexSet(format!("{} members, expected {p}", members.len())));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::InvalidIndexSet(format!("{members:?} is not strictly increasing")));
        }
        if members.last().is_some_and(|&m| m >= p + q) {
            return Err(GeometryError::InvalidIndexSet(format!("{members:?} exceeds {}", p + q)));
        }
        Ok(Self { p, q, members })
    }

    pub fn from_one_based(p: usize, q: usize, members: &[usize]) -> Result<Self> {
        if members.contains(&0) {
            return Err(GeometryError::InvalidIndexSet("1-based labels start at 1".into()));
        }
        Self::new(p, q, members.iter().map(|m| m - 1).collect())
    }

    /// The rows `{1, ..., p}`.
    pub fn leading(p: usize, q: usize) -> Self {
        Self { p, q, members: (0..p).collect() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.members.iter().map(|m| m + 1).collect()
    }

    pub fn contains(&self, row: usize) -> bool {
        self.members.binary_search(&row).is_ok()
    }

    /// Remaining `q` rows, increasing. As an index set it lives in `G(q, p)`.
    pub fn complement_rows(&self) -> Vec<usize> {
        (0..self.p + self.q).filter(|r| !self.contains(*r)).collect()
    }

    pub fn complement(&self) -> IndexSet {
        IndexSet { p: self.q, q: self.p, members: self.complement_rows() }
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.members.iter().all(|m| !other.contains(*m))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.one_based().iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

/// All `C(p+q, p)` index sets in lexicographic order.
pub fn enumerate_index_sets(p: usize, q: usize) -> Vec<IndexSet> {
    assert!(p >= 1 && q >= 1, "p and q must be positive");
    let n = p + q;
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..p).collect();
    loop {
        out.push(IndexSet { p, q, members: current.clone() });
        // advance to the next combination
        let mut i = p;
        while i > 0 && current[i - 1] == n - p + (i - 1) {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        current[i - 1] += 1;
        for k in i..p {
            current[k] = current[k - 1] + 1;
        }
    }
    out
}

pub fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
