//! Lazy enumeration of `Q^m(n)` and `Q_k^m(kN)` in lexicographic rgs order,
//! plus ranking against that order and exact Bell numbers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use super::SetPartition;
use crate::error::{domain, Result};

/// In-place cursor over all restricted growth strings of length `n` that
/// start with a fixed prefix. Advancing does not allocate.
#[derive(Clone, Debug)]
pub struct PartitionCursor {
    rgs: Vec<u32>,
    // prefix_max[i] = max(rgs[0..=i])
    prefix_max: Vec<u32>,
    fixed: usize,
    started: bool,
    done: bool,
}

impl PartitionCursor {
    pub fn new(n: usize) -> Self {
        Self::with_prefix(n, &[0][..n.min(1)]).expect("trivial prefix is valid")
    }

    /// Cursor over every partition of `{0, .., n-1}` whose rgs begins with `prefix`.
    pub fn with_prefix(n: usize, prefix: &[u32]) -> Result<Self> {
        if prefix.len() > n {
            return domain(format!(
                "prefix of length {} longer than n = {n}",
                prefix.len()
            ));
        }
        SetPartition::from_rgs(prefix.to_vec())?;
        let mut rgs = vec![0u32; n];
        rgs[..prefix.len()].copy_from_slice(prefix);
        let mut prefix_max = vec![0u32; n];
        let mut m = 0;
        for i in 0..n {
            m = m.max(rgs[i]);
            prefix_max[i] = m;
        }
        Ok(PartitionCursor {
            rgs,
            prefix_max,
            fixed: prefix.len().max(n.min(1)),
            started: false,
            done: false,
        })
    }

    /// Moves to the next string; returns `false` once exhausted.
    pub fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        if !self.started {
            self.started = true;
            return true;
        }
        let n = self.rgs.len();
        let mut i = n;
        while i > self.fixed {
            i -= 1;
            // i >= 1 here since fixed >= 1 for n >= 1
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
        }
        self.done = true;
        false
    }

    #[inline]
    pub fn rgs(&self) -> &[u32] {
        &self.rgs
    }

    #[inline]
    pub fn num_blocks(&self) -> u32 {
        self.prefix_max.last().map_or(0, |m| m + 1)
    }

    pub fn current(&self) -> SetPartition {
        SetPartition::from_rgs_unchecked(self.rgs.clone(), self.num_blocks())
    }
}

/// Owning iterator over a [`PartitionCursor`].
#[derive(Clone, Debug)]
pub struct PartitionIter(PartitionCursor);

impl Iterator for PartitionIter {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        self.0.advance().then(|| self.0.current())
    }
}

/// Every element of `Q^m(n)` exactly once, in lexicographic rgs order.
///
/// In a canonical rgs, points `0..m` lie in distinct blocks exactly when
/// `rgs[i] == i` for `i < m`, so `Q^m(n)` is the set of strings with prefix
/// `0, 1, .., m-1`.
pub fn enumerate_partitions(n: usize, m: usize) -> Result<PartitionIter> {
    if n == 0 {
        return domain("n must be at least 1");
    }
    if m > n {
        return domain(format!("m = {m} exceeds n = {n}"));
    }
    let prefix: Vec<u32> = (0..m.max(1) as u32).collect();
    Ok(PartitionIter(PartitionCursor::with_prefix(n, &prefix)?))
}

/// All valid rgs prefixes of length `depth` extending `base`, for sharding an
/// enumeration across workers. Shards are disjoint and listed in lex order.
pub fn prefix_shards(n: usize, base: &[u32], depth: usize) -> Result<Vec<Vec<u32>>> {
    let depth = depth.min(n);
    if base.len() > depth {
        return Ok(vec![base.to_vec()]);
    }
    SetPartition::from_rgs(base.to_vec())?;
    let mut out = vec![base.to_vec()];
    for _ in base.len()..depth {
        out = out
            .into_iter()
            .flat_map(|p| {
                let next = p.iter().max().map_or(0, |m| m + 1);
                (0..=next).map(move |b| {
                    let mut q = p.clone();
                    q.push(b);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

/// Iterator over `Q_k^m(kN)`: partitions of `kN` points into `k` blocks of
/// exactly `N` points with `0..m` pairwise separated, in lexicographic rgs order.
#[derive(Clone, Debug)]
pub struct EquipartitionIter {
    k: u32,
    block_size: u32,
    m: usize,
    rgs: Vec<u32>,
    sizes: Vec<u32>,
    used: u32,
    started: bool,
    done: bool,
}

impl EquipartitionIter {
    fn new(k: usize, block_size: usize, m: usize) -> Self {
        let n = k * block_size;
        let mut it = EquipartitionIter {
            k: k as u32,
            block_size: block_size as u32,
            m,
            rgs: vec![0; n],
            sizes: vec![0; k],
            used: 0,
            started: false,
            done: false,
        };
        for i in 0..m {
            it.place(i, i as u32);
        }
        it.fill_from(m);
        it
    }

    fn place(&mut self, i: usize, b: u32) {
        self.rgs[i] = b;
        self.sizes[b as usize] += 1;
        if b == self.used {
            self.used += 1;
        }
    }

    fn unplace(&mut self, i: usize) {
        let b = self.rgs[i];
        self.sizes[b as usize] -= 1;
        if self.sizes[b as usize] == 0 {
            // b was the newest block, opened at point i
            self.used -= 1;
        }
    }

    fn feasible(&self, b: u32) -> bool {
        (b < self.used && self.sizes[b as usize] < self.block_size)
            || (b == self.used && b < self.k)
    }

    // With block capacities respected the remaining points always fit, so the
    // smallest feasible label at every step completes the string.
    fn fill_from(&mut self, start: usize) {
        for i in start..self.rgs.len() {
            let b = (0..=self.used)
                .find(|&b| self.feasible(b))
                .expect("capacity invariant");
            self.place(i, b);
        }
    }

    fn step(&mut self) -> bool {
        let n = self.rgs.len();
        let mut i = n;
        while i > self.m {
            i -= 1;
            let cur = self.rgs[i];
            self.unplace(i);
            if let Some(b) = (cur + 1..=self.used).find(|&b| self.feasible(b)) {
                self.place(i, b);
                self.fill_from(i + 1);
                return true;
            }
        }
        false
    }
}

impl Iterator for EquipartitionIter {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if self.done {
            return None;
        }
        if self.started && !self.step() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(SetPartition::from_rgs_unchecked(self.rgs.clone(), self.k))
    }
}

pub fn enumerate_equipartitions(
    k: usize,
    block_size: usize,
    m: usize,
) -> Result<EquipartitionIter> {
    if k == 0 || block_size == 0 {
        return domain("k and N must be positive");
    }
    if m > k {
        return domain(format!("m = {m} exceeds k = {k}"));
    }
    Ok(EquipartitionIter::new(k, block_size, m))
}

/// `|Q_k(kN)| = (kN)! / (N!^k k!)`.
pub fn equipartition_count(k: usize, block_size: usize) -> BigUint {
    let fact = |n: usize| (1..=n).fold(BigUint::one(), |acc, i| acc * i);
    fact(k * block_size) / (fact(block_size).pow(k as u32) * fact(k))
}

/// `|Q(n)|` by the Bell triangle.
pub fn count_partitions(n: usize) -> BigUint {
    if n == 0 {
        return BigUint::one();
    }
    let mut row = vec![BigUint::one()];
    for _ in 1..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().unwrap().clone());
        for x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row.last().unwrap().clone()
}

/// `table[r][j]`: number of ways to complete an rgs with `r` positions left
/// when `j` blocks are already open. Entries saturate at `u64::MAX`.
pub fn bell_table(n: usize) -> Vec<Vec<u64>> {
    let mut table = vec![vec![1u64; n + 2]];
    for r in 1..=n {
        let prev = &table[r - 1];
        let row = (0..n + 2 - r)
            .map(|j| {
                (j as u64)
                    .saturating_mul(prev[j])
                    .saturating_add(prev[j + 1])
            })
            .chain(std::iter::repeat_n(0, r))
            .collect();
        table.push(row);
    }
    table
}

/// Position of `p` in the lexicographic enumeration of `Q(n)`.
pub fn rank(p: &SetPartition, table: &[Vec<u64>]) -> u64 {
    let n = p.len();
    let mut open = 1usize;
    let mut r = 0u64;
    for i in 1..n {
        let b = p.rgs()[i] as usize;
        r += b as u64 * table[n - 1 - i][open];
        if b == open {
            open += 1;
        }
    }
    r
}

/// Inverse of [`rank`].
pub fn unrank(n: usize, mut r: u64, table: &[Vec<u64>]) -> SetPartition {
    let mut rgs = Vec::with_capacity(n);
    if n > 0 {
        rgs.push(0);
    }
    let mut open = 1usize;
    for i in 1..n {
        let w = table[n - 1 - i][open];
        let b = (r / w).min(open as u64) as usize;
        r -= b as u64 * w;
        rgs.push(b as u32);
        if b == open {
            open += 1;
        }
    }
    SetPartition::from_rgs_unchecked(rgs, open.min(n) as u32)
}

pub(crate) fn bell_u64(n: usize) -> Option<u64> {
    count_partitions(n).to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::is_coarsening;

    fn rgs_list(it: impl Iterator<Item = SetPartition>) -> Vec<String> {
        it.map(|p| p.to_string()).collect()
    }

    #[test]
    fn tiny_enumerations() {
        assert_eq!(rgs_list(enumerate_partitions(1, 0).unwrap()), vec!["0"]);
        assert_eq!(
            rgs_list(enumerate_partitions(3, 0).unwrap()),
            vec!["0,0,0", "0,0,1", "0,1,0", "0,1,1", "0,1,2"]
        );
        assert_eq!(
            rgs_list(enumerate_partitions(3, 2).unwrap()),
            vec!["0,1,0", "0,1,1", "0,1,2"][..].to_vec()
        );
        assert_eq!(enumerate_partitions(3, 1).unwrap().count(), 5);
    }

    #[test]
    fn enumeration_errors() {
        assert!(enumerate_partitions(0, 0).is_err());
        assert!(enumerate_partitions(2, 3).is_err());
        assert!(enumerate_equipartitions(2, 2, 3).is_err());
        assert!(enumerate_equipartitions(0, 2, 0).is_err());
    }

    #[test]
    fn equipartition_examples() {
        assert_eq!(
            rgs_list(enumerate_equipartitions(2, 2, 2).unwrap()),
            vec!["0,1,0,1", "0,1,1,0"]
        );
        assert_eq!(enumerate_equipartitions(3, 2, 3).unwrap().count(), 6);
        assert_eq!(
            rgs_list(enumerate_equipartitions(1, 5, 1).unwrap()),
            vec!["0,0,0,0,0"]
        );
        assert_eq!(enumerate_equipartitions(2, 2, 0).unwrap().count(), 3);
    }

    #[test]
    fn equipartitions_match_filtered_enumeration() {
        for k in 1..=3 {
            for n in 1..=3 {
                for m in 0..=k {
                    let direct: Vec<_> = enumerate_equipartitions(k, n, m).unwrap().collect();
                    let filtered: Vec<_> = enumerate_partitions(k * n, m)
                        .unwrap()
                        .filter(|p| p.num_blocks() == k && p.block_sizes().iter().all(|&s| s == n))
                        .collect();
                    assert_eq!(direct, filtered, "k={k} N={n} m={m}");
                    if m <= 1 {
                        assert_eq!(BigUint::from(direct.len()), equipartition_count(k, n));
                    }
                }
            }
        }
    }

    #[test]
    fn bell_numbers() {
        let expect = [
            1u64, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597,
        ];
        for (n, &b) in expect.iter().enumerate() {
            assert_eq!(count_partitions(n), BigUint::from(b));
        }
    }

    #[test]
    fn rank_roundtrip() {
        let table = bell_table(7);
        for n in 1..=7 {
            for (i, p) in enumerate_partitions(n, 0).unwrap().enumerate() {
                assert_eq!(rank(&p, &table), i as u64);
                assert_eq!(unrank(n, i as u64, &table), p);
            }
        }
    }

    #[test]
    fn shards_partition_the_stream() {
        let shards = prefix_shards(6, &[0], 3).unwrap();
        assert_eq!(shards.len(), 5);
        let mut all = Vec::new();
        for s in &shards {
            let mut c = PartitionCursor::with_prefix(6, s).unwrap();
            while c.advance() {
                all.push(c.current());
            }
        }
        let direct: Vec<_> = enumerate_partitions(6, 0).unwrap().collect();
        assert_eq!(all, direct);
    }

    #[test]
    fn coarsening_is_a_partial_order_on_q5() {
        let all: Vec<_> = enumerate_partitions(5, 0).unwrap().collect();
        for a in &all {
            assert!(is_coarsening(a, a).unwrap());
            for b in &all {
                let ab = is_coarsening(a, b).unwrap();
                if ab && is_coarsening(b, a).unwrap() {
                    assert_eq!(a, b);
                }
            }
        }
    }
}
