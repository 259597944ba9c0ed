//! Sections of `(k, N)`-partitions and the section lemma at desk scale.
//!
//! A section of `P = {X_0, .., X_{k-1}}` meets every block in at most one
//! point; a complete section meets every block in exactly one. Sections are
//! indexed in mixed radix: digit `i` is `0` when the section misses `X_i` and
//! `j + 1` when it contains the `j`-th smallest point of `X_i`. Enumeration
//! streams use this order with block 0 as the least significant digit.

use std::fmt;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{domain, LabError, Result};
use crate::lemma::{binomial, Strategy};
use crate::report::{fraction_string, Lemma, Params, WitnessReport};
use crate::rng::stream;

/// A finite point set as a sorted list of points.
pub type PointSet = Vec<u32>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(width: usize) -> Self {
        Bits(vec![0; width.div_ceil(64).max(1)])
    }

    fn from_points(width: usize, points: &[u32]) -> Self {
        let mut b = Self::empty(width);
        for &p in points {
            b.insert(p);
        }
        b
    }

    fn insert(&mut self, p: u32) {
        self.0[p as usize / 64] |= 1 << (p % 64);
    }

    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn points(&self) -> PointSet {
        let mut out = Vec::new();
        for (w, &word) in self.0.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                out.push(w as u32 * 64 + word.trailing_zeros());
                word &= word - 1;
            }
        }
        out
    }
}

/// A `(k, N)`-partition: `k` disjoint blocks, each with at least `N` points.
/// The ground set `X` is the union of the blocks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BlockPartitionKN {
    blocks: Vec<PointSet>,
    min_size: usize,
    points: PointSet,
    width: usize,
    strides: Vec<usize>,
}

impl BlockPartitionKN {
    pub fn new(blocks: Vec<PointSet>, min_size: usize) -> Result<Self> {
        if blocks.is_empty() {
            return domain("a (k, N)-partition needs k >= 1 blocks");
        }
        let mut blocks = blocks;
        for b in &mut blocks {
            b.sort_unstable();
            if b.len() < min_size.max(1) {
                return domain(format!(
                    "block {b:?} has fewer than {} points",
                    min_size.max(1)
                ));
            }
        }
        let mut points: PointSet = blocks.iter().flatten().copied().collect();
        points.sort_unstable();
        if points.windows(2).any(|w| w[0] == w[1]) {
            return domain("blocks are not disjoint");
        }
        let width = *points.last().unwrap() as usize + 1;
        let mut strides = Vec::with_capacity(blocks.len());
        let mut acc = 1usize;
        for b in &blocks {
            strides.push(acc);
            acc = acc
                .checked_mul(b.len() + 1)
                .ok_or_else(|| LabError::Domain("too many sections to index".into()))?;
        }
        Ok(BlockPartitionKN {
            blocks,
            min_size,
            points,
            width,
            strides,
        })
    }

    /// Blocks `{iN, .., iN + N - 1}` for `i < k`.
    pub fn equal_blocks(k: usize, n: usize) -> Result<Self> {
        if k == 0 || n == 0 {
            return domain("k and N must be positive");
        }
        let blocks = (0..k)
            .map(|i| ((i * n) as u32..((i + 1) * n) as u32).collect())
            .collect();
        Self::new(blocks, n)
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn min_size(&self) -> usize {
        self.min_size
    }

    pub fn blocks(&self) -> &[PointSet] {
        &self.blocks
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }

    pub fn section_count(&self) -> usize {
        self.blocks.iter().map(|b| b.len() + 1).product()
    }

    pub fn complete_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).product()
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        self.blocks
            .iter()
            .map(|b| {
                let d = index % (b.len() + 1);
                index /= b.len() + 1;
                d
            })
            .collect()
    }

    fn section_of_digits(&self, digits: &[usize]) -> PointSet {
        let mut s: PointSet = digits
            .iter()
            .zip(&self.blocks)
            .filter(|(&d, _)| d > 0)
            .map(|(&d, b)| b[d - 1])
            .collect();
        s.sort_unstable();
        s
    }

    /// Mixed-radix index of a section, or an error if `s` is not one.
    pub fn section_index(&self, s: &[u32]) -> Result<usize> {
        let mut index = 0;
        let mut seen = vec![false; self.k()];
        for &p in s {
            let hit = self
                .blocks
                .iter()
                .enumerate()
                .find_map(|(i, b)| b.binary_search(&p).ok().map(|j| (i, j)));
            let (i, j) = hit.ok_or_else(|| LabError::Domain(format!("point {p} is not in X")))?;
            if std::mem::replace(&mut seen[i], true) {
                return domain(format!("{s:?} meets block {i} twice"));
            }
            index += (j + 1) * self.strides[i];
        }
        Ok(index)
    }

    pub fn is_subset_of_ground(&self, s: &[u32]) -> bool {
        s.iter().all(|p| self.points.binary_search(p).is_ok())
    }

    /// The equal-block partition `Q` with `Z_i` the `size` least points of `X_i`.
    pub fn shrink_to_equal(&self, size: usize) -> Result<Self> {
        if size == 0 || self.blocks.iter().any(|b| b.len() < size) {
            return domain(format!("cannot pick {size} points from every block"));
        }
        Self::new(
            self.blocks.iter().map(|b| b[..size].to_vec()).collect(),
            size,
        )
    }
}

/// All sections (or only complete ones) in mixed-radix order.
pub fn enumerate_sections(
    p: &BlockPartitionKN,
    complete_only: bool,
) -> impl Iterator<Item = PointSet> + '_ {
    (0..p.section_count()).filter_map(move |i| {
        let d = p.digits(i);
        (!complete_only || d.iter().all(|&x| x > 0)).then(|| p.section_of_digits(&d))
    })
}

/// A total map `e : T(P) -> P(X)`, stored by section index.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SectionMapTable {
    partition: BlockPartitionKN,
    values: Vec<Bits>,
}

impl SectionMapTable {
    /// `e(F) = {}` everywhere.
    pub fn empty(p: &BlockPartitionKN) -> Self {
        SectionMapTable {
            partition: p.clone(),
            values: vec![Bits::empty(p.width); p.section_count()],
        }
    }

    pub fn from_fn(p: &BlockPartitionKN, mut f: impl FnMut(&[u32]) -> PointSet) -> Result<Self> {
        let mut table = Self::empty(p);
        for (i, s) in enumerate_sections(p, false).enumerate() {
            let v = f(&s);
            table.set_index(i, &v)?;
        }
        Ok(table)
    }

    pub fn partition(&self) -> &BlockPartitionKN {
        &self.partition
    }

    fn set_index(&mut self, index: usize, v: &[u32]) -> Result<()> {
        if !self.partition.is_subset_of_ground(v) {
            return domain(format!("value {v:?} is not a subset of X"));
        }
        self.values[index] = Bits::from_points(self.partition.width, v);
        Ok(())
    }

    pub fn set(&mut self, section: &[u32], v: &[u32]) -> Result<()> {
        let i = self.partition.section_index(section)?;
        self.set_index(i, v)
    }

    pub fn get(&self, section: &[u32]) -> Result<PointSet> {
        Ok(self.values[self.partition.section_index(section)?].points())
    }

    /// `e(S) ∩ Z` on the sections of `q`, whose blocks must sit inside the
    /// blocks of this table's partition.
    pub fn restrict_to(&self, q: &BlockPartitionKN) -> Result<Self> {
        if q.k() != self.partition.k()
            || q.blocks
                .iter()
                .zip(&self.partition.blocks)
                .any(|(z, x)| !z.iter().all(|p| x.binary_search(p).is_ok()))
        {
            return domain("restriction target is not a sub-partition");
        }
        let z = Bits::from_points(self.partition.width, &q.points);
        SectionMapTable::from_fn(q, |s| {
            let v = self.get(s).expect("sections of q are sections of P");
            v.into_iter()
                .filter(|p| z.0[*p as usize / 64] >> (p % 64) & 1 == 1)
                .collect()
        })
    }
}

impl fmt::Display for SectionMapTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |s: &[u32]| {
            format!(
                "{{{}}}",
                s.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
            )
        };
        for (s, v) in enumerate_sections(&self.partition, false).zip(&self.values) {
            writeln!(f, "{} -> {}", set(&s), set(&v.points()))?;
        }
        Ok(())
    }
}

/// Bad pairs of one map: `(F, E)` with `F ⊆ E`, `e(F) ⊆ E` and `e(F) ⊄ F`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectionCensus {
    /// `|B|`.
    pub bad_pairs: u64,
    /// Complete sections with at least one bad `F`.
    pub bad_sections: u64,
    pub complete_sections: u64,
    /// Least good complete section by sorted point tuple.
    pub witness: Option<PointSet>,
    /// Per complete section (mixed-radix order): whether it is bad.
    pub per_section: Vec<bool>,
}

pub fn section_census(e: &SectionMapTable) -> SectionCensus {
    let p = &e.partition;
    let k = p.k();
    let mut census = SectionCensus {
        bad_pairs: 0,
        bad_sections: 0,
        complete_sections: 0,
        witness: None,
        per_section: Vec::with_capacity(p.complete_count()),
    };
    let mut digits = vec![1usize; k];
    loop {
        let section = p.section_of_digits(&digits);
        let e_bits = Bits::from_points(p.width, &section);
        let mut bad = 0u64;
        for mask in 0u32..1 << k {
            let mut index = 0;
            let mut f_points = Vec::with_capacity(k);
            for (i, &d) in digits.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    index += d * p.strides[i];
                    f_points.push(p.blocks[i][d - 1]);
                }
            }
            let v = &e.values[index];
            if v.subset_of(&e_bits) && !v.subset_of(&Bits::from_points(p.width, &f_points)) {
                bad += 1;
            }
        }
        census.complete_sections += 1;
        census.bad_pairs += bad;
        census.per_section.push(bad > 0);
        if bad > 0 {
            census.bad_sections += 1;
        } else if census.witness.as_ref().is_none_or(|w| section < *w) {
            census.witness = Some(section);
        }
        // advance the mixed-radix counter over digits 1..=|X_i|
        let mut i = 0;
        while i < k && digits[i] == p.blocks[i].len() {
            digits[i] = 1;
            i += 1;
        }
        if i == k {
            break;
        }
        digits[i] += 1;
    }
    census
}

/// Least complete section `E` with `e(F) ⊆ F` or `e(F) ⊄ E` for all `F ⊆ E`.
pub fn find_section_witness(e: &SectionMapTable) -> Option<PointSet> {
    section_census(e).witness
}

/// Re-checks a claimed witness by scanning all subsets of `E` through the
/// public lookup.
pub fn validate_section_witness(e: &SectionMapTable, section: &[u32]) -> Result<bool> {
    let p = &e.partition;
    if section.len() != p.k() {
        return Ok(false);
    }
    p.section_index(section)?;
    for mask in 0u64..1 << section.len() {
        let f: PointSet = section
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &x)| x)
            .collect();
        let v = e.get(&f)?;
        let in_f = v.iter().all(|x| f.contains(x));
        let in_e = v.iter().all(|x| section.contains(x));
        if !in_f && in_e {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `2^k (1 - ((N-1)/N)^k)`.
pub fn tree_bound(k: usize, n: usize) -> Result<BigRational> {
    if n == 0 {
        return domain("N must be positive");
    }
    let q = BigRational::new((n as u64 - 1).into(), (n as u64).into());
    let two = BigRational::from_integer(2u32.into());
    Ok(Pow::pow(two, k as u32) * (BigRational::one() - Pow::pow(q, k as u32)))
}

/// `sum_{m<=k} C(k,m) N^m (N^{k-m} - (N-1)^{k-m}) / N^k`.
pub fn tree_intermediate_bound(k: usize, n: usize) -> Result<BigRational> {
    if n == 0 {
        return domain("N must be positive");
    }
    let big = BigUint::from(n as u64);
    let less = BigUint::from(n as u64 - 1);
    let num: BigUint = (0..=k)
        .map(|m| {
            binomial(k, m)
                * Pow::pow(&big, m as u32)
                * (Pow::pow(&big, (k - m) as u32) - Pow::pow(&less, (k - m) as u32))
        })
        .sum();
    Ok(BigRational::new(num.into(), Pow::pow(big, k as u32).into()))
}

/// Least `N >= 1` with `tree_bound(k, N) < 1`; the bound decreases in `N`.
pub fn least_n_bound_below_one(k: usize) -> usize {
    let one = BigRational::one();
    (1..)
        .find(|&n| tree_bound(k, n).expect("n >= 1") < one)
        .expect("bound tends to 0")
}

fn random_table(p: &BlockPartitionKN, seed: u64, index: u64) -> SectionMapTable {
    let mut rng = stream(seed, index);
    let mut table = SectionMapTable::empty(p);
    for v in &mut table.values {
        for &x in &p.points {
            if rng.random::<bool>() {
                v.insert(x);
            }
        }
    }
    table
}

fn exhaustive_table(p: &BlockPartitionKN, mut index: u64) -> SectionMapTable {
    let size = 1u64 << p.points.len();
    let mut table = SectionMapTable::empty(p);
    for v in &mut table.values {
        let mut code = index % size;
        index /= size;
        for &x in &p.points {
            if code & 1 == 1 {
                v.insert(x);
            }
            code >>= 1;
        }
    }
    table
}

/// Tests section maps on the equal-block `(k, N)`-partition.
pub fn verify_tree(
    k: usize,
    n: usize,
    strategy: Strategy,
    budget_cap: u64,
) -> Result<WitnessReport> {
    let start = Instant::now();
    let p = BlockPartitionKN::equal_blocks(k, n)?;
    let maps: u64 = match strategy {
        Strategy::Exhaustive => {
            let total = Pow::pow(
                BigUint::from(2u32),
                (p.points.len() * p.section_count()) as u64,
            );
            match total.to_u64() {
                Some(t) if t <= budget_cap => t,
                _ => {
                    return Err(LabError::Budget {
                        needed: total.to_string(),
                        cap: budget_cap,
                    })
                }
            }
        }
        Strategy::Sampled { count, .. } => count,
        Strategy::Adversarial { .. } => {
            return domain("the section lemma supports exhaustive or sampled strategies")
        }
    };
    let seed = strategy.seed().unwrap_or(0);
    let censuses: Vec<(u64, SectionCensus)> = (0..maps)
        .into_par_iter()
        .map(|i| {
            let table = match strategy {
                Strategy::Exhaustive => exhaustive_table(&p, i),
                _ => random_table(&p, seed, i),
            };
            (i, section_census(&table))
        })
        .collect();

    let bound = tree_bound(k, n)?;
    let intermediate = tree_intermediate_bound(k, n)?;
    let complete = p.complete_count() as u64;
    let mut report = WitnessReport::new(
        Lemma::Tree,
        Params {
            k: Some(k),
            n: Some(n),
            ..Params::default()
        },
        strategy.to_string(),
        strategy.seed(),
    );
    report.candidate_count = complete.into();
    report.tested_maps = maps;
    report.census = vec![0; complete as usize];
    let mut worst: Option<&SectionCensus> = None;
    let mut bound_violations = 0u64;
    let mut intermediate_violations = 0u64;
    for (i, c) in &censuses {
        for (slot, &bad) in report.census.iter_mut().zip(&c.per_section) {
            *slot += bad as u64;
        }
        if c.witness.is_none() {
            report.failing_maps += 1;
            if report.counterexample.is_none() {
                let table = match strategy {
                    Strategy::Exhaustive => exhaustive_table(&p, *i),
                    _ => random_table(&p, seed, *i),
                };
                report.counterexample = Some(table.to_string());
            }
        }
        let measured = BigRational::new(c.bad_sections.into(), complete.into());
        if bound <= BigRational::one() && measured > bound {
            bound_violations += 1;
        }
        if BigRational::new(c.bad_pairs.into(), complete.into()) > intermediate {
            intermediate_violations += 1;
        }
        if worst.is_none_or(|w| c.bad_sections > w.bad_sections) {
            worst = Some(c);
        }
    }
    if let Some(w) = worst {
        report.bad_pair_count = w.bad_pairs.into();
        report.ratio = BigRational::new(w.bad_sections.into(), complete.into());
        if report.failing_maps == 0 {
            report.witness = w
                .witness
                .as_ref()
                .map(|s| s.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
        }
    } else {
        report.ratio = BigRational::zero();
    }
    report.note("bound", fraction_string(&bound));
    report.note("intermediate_bound", fraction_string(&intermediate));
    report.note("least_n_bound_below_one", least_n_bound_below_one(k));
    report.note("bound_violations", bound_violations);
    report.note("intermediate_violations", intermediate_violations);
    report.note(
        "ratio_meaning",
        "max over tested maps of |{E : some F is bad}| / |CT(P)|; bad_pair_count is |B| for that map",
    );
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singletons() -> BlockPartitionKN {
        BlockPartitionKN::new(vec![vec![0], vec![1]], 1).unwrap()
    }

    #[test]
    fn section_examples() {
        let p = singletons();
        let all: Vec<PointSet> = enumerate_sections(&p, false).collect();
        assert_eq!(all, vec![vec![], vec![0], vec![1], vec![0, 1]]);
        assert_eq!(
            enumerate_sections(&p, true).collect::<Vec<_>>(),
            vec![vec![0, 1]]
        );
        let p = BlockPartitionKN::equal_blocks(2, 2).unwrap();
        assert_eq!(enumerate_sections(&p, false).count(), 9);
        assert_eq!(enumerate_sections(&p, true).count(), 4);
    }

    #[test]
    fn section_counts_match_products() {
        for sizes in [vec![1, 2, 3], vec![4, 1], vec![2, 2, 2, 2], vec![5]] {
            let mut next = 0u32;
            let blocks = sizes
                .iter()
                .map(|&s| {
                    let b: PointSet = (next..next + s).collect();
                    next += s;
                    b
                })
                .collect();
            let p = BlockPartitionKN::new(blocks, 1).unwrap();
            let t: usize = sizes.iter().map(|s| *s as usize + 1).product();
            let ct: usize = sizes.iter().map(|s| *s as usize).product();
            assert_eq!(enumerate_sections(&p, false).count(), t);
            assert_eq!(enumerate_sections(&p, true).count(), ct);
            for (i, s) in enumerate_sections(&p, false).enumerate() {
                assert_eq!(p.section_index(&s).unwrap(), i);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(BlockPartitionKN::new(vec![vec![0, 1], vec![1, 2]], 1).is_err());
        assert!(BlockPartitionKN::new(vec![vec![0], vec![1, 2]], 2).is_err());
        assert!(BlockPartitionKN::new(vec![], 1).is_err());
        let p = BlockPartitionKN::equal_blocks(2, 2).unwrap();
        assert!(p.section_index(&[0, 1]).is_err());
        assert!(p.section_index(&[7]).is_err());
    }

    #[test]
    fn witness_examples() {
        for p in [singletons(), BlockPartitionKN::equal_blocks(3, 2).unwrap()] {
            let least = enumerate_sections(&p, true).min().unwrap();
            let empty = SectionMapTable::empty(&p);
            assert_eq!(find_section_witness(&empty), Some(least.clone()));
            let id = SectionMapTable::from_fn(&p, |f| f.to_vec()).unwrap();
            assert_eq!(find_section_witness(&id), Some(least));
        }
        let p = singletons();
        let complement = SectionMapTable::from_fn(&p, |f| {
            p.points()
                .iter()
                .copied()
                .filter(|x| !f.contains(x))
                .collect()
        })
        .unwrap();
        assert_eq!(find_section_witness(&complement), None);
        assert!(!validate_section_witness(&complement, &[0, 1]).unwrap());
    }

    #[test]
    fn witness_order_is_by_sorted_tuple() {
        // blocks interleave, so mixed-radix order differs from tuple order
        let p = BlockPartitionKN::new(vec![vec![1, 2], vec![0, 3]], 1).unwrap();
        let mut e = SectionMapTable::empty(&p);
        // make {0,1} bad: e({1}) = {0}
        e.set(&[1], &[0]).unwrap();
        let c = section_census(&e);
        assert_eq!(c.bad_sections, 1);
        assert_eq!(c.witness, Some(vec![0, 2]));
        assert!(validate_section_witness(&e, &[0, 2]).unwrap());
    }

    #[test]
    fn bound_thresholds() {
        assert_eq!(least_n_bound_below_one(2), 8);
        assert_eq!(least_n_bound_below_one(3), 23);
        assert_eq!(least_n_bound_below_one(1), 3);
        assert_eq!(
            tree_bound(2, 8).unwrap(),
            BigRational::new(15.into(), 16.into())
        );
        for k in 0..5 {
            for n in 1..12 {
                assert!(tree_intermediate_bound(k, n).unwrap() <= tree_bound(k, n).unwrap());
            }
        }
    }

    #[test]
    fn exhaustive_tiny() {
        let r = verify_tree(1, 1, Strategy::Exhaustive, 100).unwrap();
        assert_eq!(r.tested_maps, 4);
        // only e({}) = {0} defeats the single complete section {0}
        assert_eq!(r.failing_maps, 2);
        assert!(verify_tree(2, 2, Strategy::Exhaustive, 1000).is_err());
    }

    #[test]
    fn sampled_measured_below_intermediate() {
        let r = verify_tree(
            2,
            3,
            Strategy::Sampled {
                count: 200,
                seed: 3,
            },
            0,
        )
        .unwrap();
        assert_eq!(r.extra["intermediate_violations"], 0);
        assert_eq!(r.tested_maps, 200);
    }

    #[test]
    fn witness_lifts_from_equal_blocks() {
        for seed in 0..30 {
            let mut rng = stream(seed, 0);
            let sizes: Vec<usize> = (0..3).map(|_| rng.random_range(2..5)).collect();
            let mut pts: Vec<u32> = (0..sizes.iter().sum::<usize>() as u32).collect();
            rand::seq::SliceRandom::shuffle(&mut pts[..], &mut rng);
            let mut blocks = Vec::new();
            let mut at = 0;
            for s in &sizes {
                blocks.push(pts[at..at + s].to_vec());
                at += s;
            }
            let p = BlockPartitionKN::new(blocks, 2).unwrap();
            let e = random_table(&p, seed, 1);
            let q = p.shrink_to_equal(2).unwrap();
            let ehat = e.restrict_to(&q).unwrap();
            if let Some(w) = find_section_witness(&ehat) {
                assert!(validate_section_witness(&e, &w).unwrap(), "seed {seed}");
            }
        }
    }
}
