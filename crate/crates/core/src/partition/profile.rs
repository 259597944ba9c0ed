use serde::{Deserialize, Serialize};

use super::{coarsens, SetPartition};
use crate::error::{domain, Result};

/// One block `X_i` of a coarse partition `t`, measured in units of `N`, and
/// how a finer partition splits it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockProfile {
    /// `k_i`: block size divided by `N`.
    pub k: usize,
    /// `m_i`: number of distinguished points `0..m` inside the block.
    pub m: usize,
    /// `(k_{i,j}, m_{i,j})` for each sub-block, in order of sub-block minimum.
    /// A block that is not split has the single entry `(k_i, m_i)`.
    pub splits: Vec<(usize, usize)>,
}

/// The `(u, k_i, m_i, k_{i,j}, m_{i,j})` data of a pair `t <= h` as seen by the
/// counting arguments over `Q_k^m(kN)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseningProfile {
    pub blocks: Vec<BlockProfile>,
}

impl CoarseningProfile {
    /// Profile of `t` alone (no refinement). `None` when no equipartition in
    /// `Q_k^m(kN)` refines `t`: some block size is not a multiple of `N`, or a
    /// block holds more distinguished points than it has `N`-units.
    pub fn of(t: &SetPartition, block_size: usize, m: usize) -> Option<Self> {
        Self::of_pair(t, t, block_size, m)
    }

    /// Profile of `t` together with a refinement `h` (`t <= h`). Sub-blocks
    /// of each `t`-block are the `h`-blocks inside it. `None` when `h` is not
    /// refined by any element of `Q_k^m(kN)`, or `t` is not coarser than `h`.
    pub fn of_pair(
        t: &SetPartition,
        h: &SetPartition,
        block_size: usize,
        m: usize,
    ) -> Option<Self> {
        if t.len() != h.len() || block_size == 0 || !coarsens(t, h) {
            return None;
        }
        let h_sizes = h.block_sizes();
        let mut h_marked = vec![0usize; h.num_blocks()];
        for p in 0..m.min(h.len()) {
            h_marked[h.block_of(p)] += 1;
        }
        let mut blocks: Vec<BlockProfile> = (0..t.num_blocks())
            .map(|_| BlockProfile {
                k: 0,
                m: 0,
                splits: Vec::new(),
            })
            .collect();
        // h-blocks arrive in order of their minima, so splits come out ordered.
        for (hb, &p) in h.minima().iter().enumerate() {
            let size = h_sizes[hb];
            if !size.is_multiple_of(block_size) {
                return None;
            }
            let (kj, mj) = (size / block_size, h_marked[hb]);
            if mj > kj {
                return None;
            }
            let b = &mut blocks[t.block_of(p)];
            b.k += kj;
            b.m += mj;
            b.splits.push((kj, mj));
        }
        Some(CoarseningProfile { blocks })
    }

    pub fn u(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_k(&self) -> usize {
        self.blocks.iter().map(|b| b.k).sum()
    }

    pub fn total_m(&self) -> usize {
        self.blocks.iter().map(|b| b.m).sum()
    }

    /// Checks every consistency condition against the ambient `(k, m)`.
    pub fn validate(&self, k: usize, m: usize) -> Result<()> {
        if self.blocks.is_empty() {
            return domain("profile has no blocks");
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.k == 0 {
                return domain(format!("block {i}: k_i must be positive"));
            }
            if b.m > b.k {
                return domain(format!("block {i}: m_i = {} exceeds k_i = {}", b.m, b.k));
            }
            if b.splits.is_empty() {
                return domain(format!("block {i}: no sub-blocks"));
            }
            let (sk, sm) = b
                .splits
                .iter()
                .fold((0, 0), |(a, c), &(kj, mj)| (a + kj, c + mj));
            if sk != b.k || sm != b.m {
                return domain(format!(
                    "block {i}: sub-blocks sum to ({sk}, {sm}), expected ({}, {})",
                    b.k, b.m
                ));
            }
            if let Some(j) = b.splits.iter().position(|&(kj, mj)| kj == 0 || mj > kj) {
                return domain(format!(
                    "block {i}, sub-block {j}: need 0 <= m_ij <= k_ij and k_ij > 0"
                ));
            }
        }
        if self.total_k() != k {
            return domain(format!(
                "sum of k_i is {}, expected k = {k}",
                self.total_k()
            ));
        }
        if self.total_m() != m {
            return domain(format!(
                "sum of m_i is {}, expected m = {m}",
                self.total_m()
            ));
        }
        Ok(())
    }

    /// Single block holding everything: `u = 1`, `k_1 = k`, `m_1 = m`.
    pub fn single_block(k: usize, m: usize) -> Self {
        CoarseningProfile {
            blocks: vec![BlockProfile {
                k,
                m,
                splits: vec![(k, m)],
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> SetPartition {
        s.parse().unwrap()
    }

    #[test]
    fn profile_of_block_sizes() {
        // k = 3, N = 2, m = 2
        let t = p("0,1,0,0,1,0");
        let prof = CoarseningProfile::of(&t, 2, 2).unwrap();
        assert_eq!(prof.blocks.len(), 2);
        assert_eq!((prof.blocks[0].k, prof.blocks[0].m), (2, 1));
        assert_eq!((prof.blocks[1].k, prof.blocks[1].m), (1, 1));
        prof.validate(3, 2).unwrap();
        assert!(CoarseningProfile::of(&p("0,0,0,1,1,2"), 2, 0).is_none());
        // both marked points in a one-unit block
        assert!(CoarseningProfile::of(&p("0,0,1,1"), 2, 2).is_none());
    }

    #[test]
    fn pair_profile_splits() {
        let t = SetPartition::single_block(4);
        let h = p("0,1,1,0");
        let prof = CoarseningProfile::of_pair(&t, &h, 2, 0).unwrap();
        assert_eq!(prof.blocks[0].splits, vec![(1, 0), (1, 0)]);
        prof.validate(2, 0).unwrap();
        assert!(CoarseningProfile::of_pair(&h, &t, 2, 0).is_none());
    }

    #[test]
    fn validation_errors() {
        let mut prof = CoarseningProfile::single_block(2, 1);
        prof.validate(2, 1).unwrap();
        assert!(prof.validate(3, 1).is_err());
        prof.blocks[0].splits = vec![(1, 1), (1, 1)];
        assert!(prof.validate(2, 1).is_err());
        prof.blocks[0].m = 3;
        assert!(prof.validate(2, 3).is_err());
    }
}
