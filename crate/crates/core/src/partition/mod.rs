//! Set partitions of `{0, .., n-1}` in restricted-growth-string form, the
//! coarsening order and the common refinement.
//!
//! The order follows the Carlson-Simpson convention: `s <= t` when `s` is
//! *coarser* than `t`, i.e. every block of `s` is a union of blocks of `t`.
//! The one-block partition is the bottom element, the discrete partition the
//! top.

mod enumerate;
mod profile;

pub(crate) use enumerate::bell_u64;
pub use enumerate::{
    bell_table, count_partitions, enumerate_equipartitions, enumerate_partitions,
    equipartition_count, prefix_shards, rank, unrank, EquipartitionIter, PartitionCursor,
    PartitionIter,
};
pub use profile::{BlockProfile, CoarseningProfile};

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, LabError, Result};

/// A partition of `{0, .., n-1}` stored as its restricted growth string.
///
/// Block `b` is the set of points `i` with `rgs[i] == b`; block indices are
/// assigned in order of first occurrence, so block `b` has the `b`-th smallest
/// minimum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SetPartition {
    rgs: Vec<u32>,
    num_blocks: u32,
}

impl SetPartition {
    /// The partition of the empty set.
    pub fn empty() -> Self {
        SetPartition {
            rgs: Vec::new(),
            num_blocks: 0,
        }
    }

    pub fn discrete(n: usize) -> Self {
        SetPartition {
            rgs: (0..n as u32).collect(),
            num_blocks: n as u32,
        }
    }

    pub fn single_block(n: usize) -> Self {
        SetPartition {
            rgs: vec![0; n],
            num_blocks: (n > 0) as u32,
        }
    }

    /// Validates an already-canonical restricted growth string.
    pub fn from_rgs(rgs: Vec<u32>) -> Result<Self> {
        let mut next = 0u32;
        for (i, &b) in rgs.iter().enumerate() {
            if b > next {
                return domain(format!(
                    "not a restricted growth string: rgs[{i}] = {b} exceeds {next}"
                ));
            }
            if b == next {
                next += 1;
            }
        }
        Ok(SetPartition {
            rgs,
            num_blocks: next,
        })
    }

    /// Builds the canonical form of any labelling: points with equal labels
    /// share a block.
    pub fn from_labels<L: Eq + std::hash::Hash + Copy>(labels: &[L]) -> Self {
        let mut seen = std::collections::HashMap::with_capacity(labels.len());
        let rgs = labels
            .iter()
            .map(|l| {
                let next = seen.len() as u32;
                *seen.entry(*l).or_insert(next)
            })
            .collect();
        SetPartition {
            rgs,
            num_blocks: seen.len() as u32,
        }
    }

    /// Canonical form of a block list. Blocks must be nonempty, disjoint and
    /// cover `{0, .., n-1}`.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return domain("empty block");
            }
            for &p in block {
                if p >= n {
                    return domain(format!("point {p} outside domain of size {n}"));
                }
                if labels[p] != usize::MAX {
                    return domain(format!("point {p} appears in two blocks"));
                }
                labels[p] = b;
            }
        }
        if labels.contains(&usize::MAX) {
            return domain("blocks do not cover the domain");
        }
        Ok(Self::from_labels(&labels))
    }

    pub(crate) fn from_rgs_unchecked(rgs: Vec<u32>, num_blocks: u32) -> Self {
        debug_assert_eq!(
            Self::from_rgs(rgs.clone()).map(|p| p.num_blocks),
            Ok(num_blocks)
        );
        SetPartition { rgs, num_blocks }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rgs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rgs.is_empty()
    }

    #[inline]
    pub fn rgs(&self) -> &[u32] {
        &self.rgs
    }

    #[inline]
    pub fn num_blocks(&self) -> usize {
        self.num_blocks as usize
    }

    #[inline]
    pub fn block_of(&self, point: usize) -> usize {
        self.rgs[point] as usize
    }

    #[inline]
    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.rgs[i] == self.rgs[j]
    }

    /// Blocks as sorted point lists, indexed by block number.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (i, &b) in self.rgs.iter().enumerate() {
            out[b as usize].push(i);
        }
        out
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_blocks()];
        for &b in &self.rgs {
            sizes[b as usize] += 1;
        }
        sizes
    }

    /// Block minima in increasing order.
    pub fn minima(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_blocks());
        let mut next = 0u32;
        for (i, &b) in self.rgs.iter().enumerate() {
            if b == next {
                out.push(i);
                next += 1;
            }
        }
        out
    }

    /// Restriction to `{0, .., len-1}`; a prefix of a canonical rgs is canonical.
    pub fn restrict(&self, len: usize) -> SetPartition {
        assert!(len <= self.len(), "restriction beyond domain");
        let rgs = self.rgs[..len].to_vec();
        let num_blocks = rgs.iter().max().map_or(0, |&b| b + 1);
        SetPartition { rgs, num_blocks }
    }

    /// True iff points `0, .., m-1` lie in pairwise distinct blocks.
    pub fn separates_first(&self, m: usize) -> bool {
        m <= self.len()
            && self.rgs[..m]
                .iter()
                .enumerate()
                .all(|(i, &b)| b as usize == i)
    }

    /// Merges blocks of `self` according to a partition of its block indices.
    pub fn merge_blocks(&self, by: &SetPartition) -> SetPartition {
        assert_eq!(
            by.len(),
            self.num_blocks(),
            "block partition has wrong size"
        );
        // Block minima stay in order under merging, so relabelling through
        // `by` is already canonical.
        let rgs = self.rgs.iter().map(|&b| by.rgs[b as usize]).collect();
        SetPartition {
            rgs,
            num_blocks: by.num_blocks,
        }
    }
}

/// `s <= t` in the coarsening order: every block of `t` lies inside one block of `s`.
pub fn is_coarsening(s: &SetPartition, t: &SetPartition) -> Result<bool> {
    if s.len() != t.len() {
        return domain(format!("domain sizes differ: {} vs {}", s.len(), t.len()));
    }
    Ok(coarsens(s, t))
}

/// Unchecked form of [`is_coarsening`] for hot loops; panics on size mismatch.
#[inline]
pub fn coarsens(s: &SetPartition, t: &SetPartition) -> bool {
    assert_eq!(s.len(), t.len());
    // t-block b must map to a single s-block. Since both strings are canonical
    // and t-blocks are discovered in order, a stack buffer covers small inputs.
    const UNSET: u32 = u32::MAX;
    let mut small = [UNSET; 64];
    let mut big;
    let remap: &mut [u32] = if t.num_blocks() <= 64 {
        &mut small[..t.num_blocks()]
    } else {
        big = vec![UNSET; t.num_blocks()];
        &mut big
    };
    for (&sb, &tb) in s.rgs.iter().zip(&t.rgs) {
        let slot = &mut remap[tb as usize];
        if *slot == UNSET {
            *slot = sb;
        } else if *slot != sb {
            return false;
        }
    }
    true
}

/// Common refinement: `i ~ j` iff `i ~ j` in both inputs. It is the least
/// partition above both in the coarsening order.
pub fn meet_refine(t1: &SetPartition, t2: &SetPartition) -> Result<SetPartition> {
    if t1.len() != t2.len() {
        return domain(format!("domain sizes differ: {} vs {}", t1.len(), t2.len()));
    }
    Ok(refine(t1, t2))
}

pub(crate) fn refine(t1: &SetPartition, t2: &SetPartition) -> SetPartition {
    let width = t2.num_blocks();
    let mut table = vec![u32::MAX; t1.num_blocks() * width];
    let mut next = 0u32;
    let rgs = t1
        .rgs
        .iter()
        .zip(&t2.rgs)
        .map(|(&a, &b)| {
            let slot = &mut table[a as usize * width + b as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect();
    SetPartition {
        rgs,
        num_blocks: next,
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.rgs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{self}]")
    }
}

impl FromStr for SetPartition {
    type Err = LabError;

    /// Parses the comma-separated rgs text form, e.g. `0,0,1,2,1`. The empty
    /// string is the empty partition.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(SetPartition::empty());
        }
        let rgs = s
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<u32>()
                    .map_err(|e| LabError::Parse(format!("{tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SetPartition::from_rgs(rgs).map_err(|e| LabError::Parse(e.to_string()))
    }
}

impl serde::Serialize for SetPartition {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for SetPartition {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
