//! One step of the fusion construction `B_l -> B_{l+1}` at finite scale.
//!
//! Given a finite stand-in `f` for a map on the partition space, the step
//! pulls `f` back to `e = g . f . h` on `Q(M')`, finds a witness `s'` for `e`
//! and returns `B' = h(s')`.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;

use super::witness::{find_witness_with_blocks, validate_witness};
use super::EMapTable;
use crate::cs_space::{below_on_common, induced_coarsening_h, project_g, PartitionPrefix};
use crate::error::{domain, truncation, LabError, Result};
use crate::partition::{
    bell_table, coarsens, count_partitions, enumerate_partitions, unrank, SetPartition,
};
use crate::rng::stream;

/// A finite explicit map on prefixes keyed by canonical prefix text.
/// Looking up an unmapped prefix is an error.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct FTable {
    entries: BTreeMap<String, (PartitionPrefix, PartitionPrefix)>,
}

impl FTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `a -> c`. An existing entry for `a` is kept.
    pub fn insert(&mut self, a: PartitionPrefix, c: PartitionPrefix) {
        self.entries.entry(a.to_text()).or_insert((a, c));
    }

    pub fn get(&self, a: &PartitionPrefix) -> Result<&PartitionPrefix> {
        self.entries
            .get(&a.to_text())
            .map(|(_, c)| c)
            .ok_or_else(|| LabError::Domain(format!("f is not defined at {a}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PartitionPrefix, &PartitionPrefix)> {
        self.entries.values().map(|(a, c)| (a, c))
    }

    /// Lines of the form `L=..;.. -> L=..;..`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = FTable::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (a, c) = line
                .split_once("->")
                .ok_or_else(|| LabError::Parse(format!("expected 'A -> C': {line:?}")))?;
            table.insert(a.parse()?, c.parse()?);
        }
        Ok(table)
    }
}

impl fmt::Display for FTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, c) in self.iter() {
            writeln!(f, "{a} -> {c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for FTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.iter()).finish()
    }
}

/// `e(t) = g(f(h(t)))` on all of `Q(M')`.
pub fn pullback_emap(b: &PartitionPrefix, f: &FTable, mprime: usize) -> Result<EMapTable> {
    let mut e = EMapTable::identity(mprime);
    for t in enumerate_partitions(mprime, 0)? {
        let c = f.get(&induced_coarsening_h(&t, b, mprime)?)?;
        let v = project_g(c, b, mprime)?;
        e.set(t, v)?;
    }
    Ok(e)
}

#[derive(Clone, Debug)]
pub struct FusionStep {
    pub next: PartitionPrefix,
    pub witness: SetPartition,
    pub emap: EMapTable,
    pub mprime: usize,
    /// `n0 + l + 1`.
    pub depth: usize,
}

/// A violation of the depth condition for one entry of `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionTwoViolation {
    pub a: PartitionPrefix,
    pub fa: PartitionPrefix,
}

/// Outcome of checking the depth condition over the domain of `f`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConditionTwoCheck {
    pub checked: usize,
    /// `A` not below `B'`, or `A` has no block starting at the cut.
    pub not_applicable: usize,
    pub violations: Vec<ConditionTwoViolation>,
}

/// Performs one fusion step at the given `M'`.
///
/// The witness is searched among `s' in Q^m(M')` with exactly `m = n0 + l + 1`
/// blocks. With that many blocks the `m`-th block minimum of `B' = h(s')` is
/// the `M'`-th block minimum of `B`, which is the cut at which the trace
/// condition is read.
pub fn fusion_step(
    b: &PartitionPrefix,
    f: &FTable,
    n0: usize,
    ell: usize,
    mprime: usize,
) -> Result<FusionStep> {
    let depth = n0 + ell + 1;
    if depth > mprime {
        return domain(format!("n0 + l + 1 = {depth} exceeds M' = {mprime}"));
    }
    if b.visible_blocks() <= mprime {
        return truncation(format!(
            "need more than M' = {mprime} visible blocks, prefix shows {}",
            b.visible_blocks()
        ));
    }
    let emap = pullback_emap(b, f, mprime)?;
    let witness = find_witness_with_blocks(&emap, depth, mprime, Some(depth))?
        .ok_or(LabError::Threshold { m: depth, mprime })?;
    let next = induced_coarsening_h(&witness, b, mprime)?;
    debug_assert!(condition_one(b, &next, n0 + ell)?);
    Ok(FusionStep {
        next,
        witness,
        emap,
        mprime,
        depth,
    })
}

/// Repeats [`fusion_step`] with `M' = m, 2m, 4m, ..` until a witness exists
/// or `M'` would exceed `mprime_cap`.
pub fn fusion_step_doubling(
    b: &PartitionPrefix,
    f: &FTable,
    n0: usize,
    ell: usize,
    mprime_cap: usize,
) -> Result<FusionStep> {
    let mut mprime = n0 + ell + 1;
    loop {
        match fusion_step(b, f, n0, ell, mprime) {
            Err(LabError::Threshold { .. }) if mprime * 2 <= mprime_cap => mprime *= 2,
            other => return other,
        }
    }
}

/// `r_n(B') = r_n(B)`.
pub fn condition_one(b: &PartitionPrefix, next: &PartitionPrefix, n: usize) -> Result<bool> {
    Ok(next.approx_r(n)? == b.approx_r(n)?)
}

/// For every `A -> f(A)` with `A <= B'` and a block of `A` starting at
/// `mu_n(B')`: `tr(f(A), B', n) <= tr(A, B', n)` or
/// `tr(f(A), B', n) </= r_n(B')`.
pub fn condition_two(next: &PartitionPrefix, f: &FTable, n: usize) -> Result<ConditionTwoCheck> {
    let cut = next.mu(n)?;
    let r = next.restrict(cut)?;
    let mut out = ConditionTwoCheck::default();
    for (a, fa) in f.iter() {
        let starts_block =
            cut < a.len() && a.as_partition().rgs()[cut] as usize == a.restrict(cut)?.num_blocks();
        if !below_on_common(a, next) || !starts_block {
            out.not_applicable += 1;
            continue;
        }
        out.checked += 1;
        let tr_fa = fa.restrict(cut)?;
        let tr_a = a.restrict(cut)?;
        if !(coarsens(&tr_fa, &tr_a) || !coarsens(&tr_fa, &r)) {
            out.violations.push(ConditionTwoViolation {
                a: a.clone(),
                fa: fa.clone(),
            });
        }
    }
    Ok(out)
}

/// Independent confirmation of a threshold error: no `s` with exactly `m`
/// blocks in `Q^m(M')` passes the raw witness check.
pub fn confirm_no_witness(e: &EMapTable, m: usize, mprime: usize) -> Result<bool> {
    Ok(enumerate_partitions(mprime, m)?
        .filter(|s| s.num_blocks() == m)
        .all(|s| !validate_witness(e, &s)))
}

/// Random `f` defined on `h(t)` for every `t in Q(M')` and every listed `M'`.
/// Half the values are `h(u)` for a uniform `u` (so `g` sees them), the rest
/// are arbitrary partitions of the same length.
pub fn random_ftable(b: &PartitionPrefix, mprimes: &[usize], seed: u64) -> Result<FTable> {
    let mut f = FTable::new();
    let len = b.len();
    for &mprime in mprimes {
        let table = bell_table(mprime);
        let size = count_partitions(mprime)
            .try_into()
            .map_err(|_| LabError::Domain("Q(M') too large".into()))?;
        for (i, t) in enumerate_partitions(mprime, 0)?.enumerate() {
            let mut rng = stream(seed ^ ((mprime as u64) << 32), i as u64);
            let a = induced_coarsening_h(&t, b, mprime)?;
            let c = if rng.random_bool(0.5) {
                induced_coarsening_h(
                    &unrank(mprime, rng.random_range(0..size), &table),
                    b,
                    mprime,
                )?
            } else {
                let width = rng.random_range(1..=len.max(1)) as u32;
                let labels: Vec<u32> = (0..len).map(|_| rng.random_range(0..width)).collect();
                PartitionPrefix::new(SetPartition::from_labels(&labels))
            };
            f.insert(a, c);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pre(s: &str) -> PartitionPrefix {
        s.parse().unwrap()
    }

    fn identity_f(b: &PartitionPrefix, mprime: usize) -> FTable {
        let mut f = FTable::new();
        for t in enumerate_partitions(mprime, 0).unwrap() {
            let a = induced_coarsening_h(&t, b, mprime).unwrap();
            f.insert(a.clone(), a);
        }
        f
    }

    #[test]
    fn identity_f_takes_least_candidate() {
        let b = PartitionPrefix::discrete(8);
        let f = identity_f(&b, 4);
        let step = fusion_step(&b, &f, 1, 0, 4).unwrap();
        // e is the identity, so the least s in Q^2(4) with two blocks wins
        assert_eq!(step.witness, "0,1,0,0".parse().unwrap());
        assert_eq!(step.next, pre("0,1,0,0,2,3,4,5"));
        assert!(condition_one(&b, &step.next, 1).unwrap());
        assert!(condition_two(&step.next, &f, 2)
            .unwrap()
            .violations
            .is_empty());
    }

    #[test]
    fn unmapped_input_is_an_error() {
        let b = PartitionPrefix::discrete(6);
        assert!(matches!(
            fusion_step(&b, &FTable::new(), 0, 0, 2),
            Err(LabError::Domain(_))
        ));
    }

    #[test]
    fn preconditions() {
        let b = PartitionPrefix::discrete(4);
        let f = identity_f(&b, 3);
        assert!(matches!(
            fusion_step(&b, &f, 2, 1, 3),
            Err(LabError::Domain(_))
        ));
        assert!(matches!(
            fusion_step(&b, &f, 0, 0, 4),
            Err(LabError::InsufficientTruncation(_))
        ));
    }

    #[test]
    fn adversarial_f_hits_threshold() {
        // e([0,0]) = g(B) = [0,1] kills the only candidate at M' = 2
        let b = PartitionPrefix::discrete(6);
        let mut f = FTable::new();
        f.insert(
            induced_coarsening_h(&"0,0".parse().unwrap(), &b, 2).unwrap(),
            b.clone(),
        );
        f.insert(b.clone(), b.clone());
        let err = fusion_step(&b, &f, 1, 0, 2).unwrap_err();
        assert_eq!(err, LabError::Threshold { m: 2, mprime: 2 });
        let e = pullback_emap(&b, &f, 2).unwrap();
        assert!(confirm_no_witness(&e, 2, 2).unwrap());
    }

    #[test]
    fn constant_f_below_b() {
        // f constant at a coarsening of B: e is constant at its projection
        let b = PartitionPrefix::discrete(7);
        let c = pre("0,0,1,1,2,3,4");
        for mprime in 2..=4 {
            let mut f = FTable::new();
            for t in enumerate_partitions(mprime, 0).unwrap() {
                f.insert(induced_coarsening_h(&t, &b, mprime).unwrap(), c.clone());
            }
            let v = project_g(&c, &b, mprime).unwrap();
            let e = pullback_emap(&b, &f, mprime).unwrap();
            let expect = enumerate_partitions(mprime, 2)
                .unwrap()
                .filter(|s| s.num_blocks() == 2)
                .find(|s| {
                    super::super::witness::coarsenings(s)
                        .all(|t| coarsens(&v, &t) || !coarsens(&v, s))
                });
            match fusion_step(&b, &f, 1, 0, mprime) {
                Ok(step) => {
                    assert_eq!(Some(step.witness.clone()), expect);
                    assert!(validate_witness(&e, &step.witness));
                }
                Err(LabError::Threshold { .. }) => assert!(expect.is_none()),
                Err(other) => panic!("{other}"),
            }
        }
    }

    #[test]
    fn ftable_text_round_trip() {
        let b = PartitionPrefix::discrete(5);
        let f = random_ftable(&b, &[2, 3], 4).unwrap();
        assert_eq!(FTable::parse(&f.to_string()).unwrap(), f);
    }
}
