//! Witness search for the partition lemma: find `s` such that every `t <= s`
//! has `e(t) <= t` or `e(t) </= s`.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;

use super::EMapTable;
use crate::error::{domain, Result};
use crate::partition::{
    coarsens, count_partitions, enumerate_equipartitions, enumerate_partitions, SetPartition,
};
use crate::report::{Lemma, Params, WitnessReport};

/// `(s, t)` is bad for `e` when `t <= s`, `e(t) <= s` and `e(t) </= t`.
#[inline]
pub fn is_bad_pair(s: &SetPartition, t: &SetPartition, et: &SetPartition) -> bool {
    coarsens(et, s) && !coarsens(et, t)
}

/// All coarsenings of `s`, obtained by merging its blocks.
pub fn coarsenings(s: &SetPartition) -> impl Iterator<Item = SetPartition> + '_ {
    let q = s.num_blocks().max(1);
    enumerate_partitions(q, 0).expect("q >= 1").map(move |by| {
        if s.is_empty() {
            SetPartition::empty()
        } else {
            s.merge_blocks(&by)
        }
    })
}

/// Does `s` satisfy the witness condition for `e`?
pub fn is_witness(e: &EMapTable, s: &SetPartition) -> bool {
    coarsenings(s).all(|t| !is_bad_pair(s, &t, e.get(&t)))
}

/// Re-checks a witness against the raw definition by scanning every
/// `t in Q(M')` and testing `t <= s` directly, without the block-merging
/// shortcut used by the search.
pub fn validate_witness(e: &EMapTable, s: &SetPartition) -> bool {
    enumerate_partitions(s.len(), 0)
        .expect("witness has at least one point")
        .filter(|t| coarsens(t, s))
        .all(|t| {
            let et = e.get(&t);
            coarsens(et, &t) || !coarsens(et, s)
        })
}

/// Lexicographically least `s in Q^m(M')` satisfying the witness condition.
pub fn find_witness(e: &EMapTable, m: usize, mprime: usize) -> Result<Option<SetPartition>> {
    find_witness_with_blocks(e, m, mprime, None)
}

/// As [`find_witness`], optionally restricted to `s` with exactly `blocks` blocks.
pub fn find_witness_with_blocks(
    e: &EMapTable,
    m: usize,
    mprime: usize,
    blocks: Option<usize>,
) -> Result<Option<SetPartition>> {
    if e.mprime() != mprime {
        return domain(format!("e lives on Q({}), not Q({mprime})", e.mprime()));
    }
    Ok(enumerate_partitions(mprime, m)?
        .filter(|s| blocks.is_none_or(|b| s.num_blocks() == b))
        .find(|s| is_witness(e, s)))
}

/// The candidates `Q_k^m(kN)` together with every partition that coarsens at
/// least one of them. Only those arguments of `e` can affect the witness
/// condition.
#[derive(Clone, Debug)]
pub struct CombUniverse {
    pub k: usize,
    pub m: usize,
    pub block_size: usize,
    pub candidates: Vec<SetPartition>,
    /// Relevant arguments, in lexicographic order.
    pub relevant: Vec<SetPartition>,
    pub index: HashMap<SetPartition, usize>,
    /// `below[s]`: relevant indices of all `t <= s`.
    pub below: Vec<Vec<u32>>,
    /// `above[t]`: candidate indices of all `s >= t`.
    pub above: Vec<Vec<u32>>,
}

impl CombUniverse {
    pub fn new(k: usize, m: usize, block_size: usize) -> Result<Self> {
        let candidates: Vec<_> = enumerate_equipartitions(k, block_size, m)?.collect();
        let mut relevant: Vec<SetPartition> = candidates.iter().flat_map(coarsenings).collect();
        relevant.sort();
        relevant.dedup();
        let index: HashMap<_, _> = relevant
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let mut above = vec![Vec::new(); relevant.len()];
        let below = candidates
            .iter()
            .enumerate()
            .map(|(si, s)| {
                coarsenings(s)
                    .map(|t| {
                        let ti = index[&t];
                        above[ti].push(si as u32);
                        ti as u32
                    })
                    .collect()
            })
            .collect();
        Ok(CombUniverse {
            k,
            m,
            block_size,
            candidates,
            relevant,
            index,
            below,
            above,
        })
    }

    pub fn n(&self) -> usize {
        self.k * self.block_size
    }

    pub fn params(&self) -> Params {
        Params {
            k: Some(self.k),
            m: Some(self.m),
            n: Some(self.block_size),
            mprime: None,
        }
    }

    /// Relevant arguments strictly coarser than some candidate: the only
    /// entries at which a bad pair can occur.
    pub fn can_be_bad(&self, ti: usize) -> bool {
        let t = &self.relevant[ti];
        self.above[ti]
            .iter()
            .any(|&si| self.candidates[si as usize] != *t)
    }

    /// Values of `e` on the relevant arguments.
    pub fn values_of(&self, e: &EMapTable) -> Vec<SetPartition> {
        self.relevant.iter().map(|t| e.get(t).clone()).collect()
    }

    /// Builds the map that takes `values` on the relevant arguments and is the
    /// identity elsewhere.
    pub fn to_emap(&self, values: &[SetPartition]) -> EMapTable {
        EMapTable::with_entries(
            self.n(),
            self.relevant.iter().cloned().zip(values.iter().cloned()),
        )
        .expect("values live on Q(kN)")
    }

    /// Evaluates one map given by its values on the relevant arguments.
    pub fn evaluate(&self, values: &[SetPartition]) -> MapOutcome {
        debug_assert_eq!(values.len(), self.relevant.len());
        let escapes: Vec<bool> = values
            .iter()
            .zip(&self.relevant)
            .map(|(v, t)| !coarsens(v, t))
            .collect();
        let per_candidate: Vec<u32> = self
            .candidates
            .iter()
            .zip(&self.below)
            .map(|(s, ts)| {
                ts.iter()
                    .filter(|&&ti| escapes[ti as usize] && coarsens(&values[ti as usize], s))
                    .count() as u32
            })
            .collect();
        let bad_pairs = per_candidate.iter().map(|&c| c as u64).sum();
        let witness = per_candidate.iter().position(|&c| c == 0);
        MapOutcome {
            bad_pairs,
            witness,
            per_candidate,
        }
    }

    /// Entries of the map that can produce bad pairs: `e(t) </= t` and
    /// `e(t) <= s` for some candidate `s >= t`. The verdict of a map depends
    /// only on these.
    pub fn active_entries(&self, values: &[SetPartition]) -> Vec<(SetPartition, SetPartition)> {
        self.relevant
            .iter()
            .zip(values)
            .enumerate()
            .filter(|(ti, (t, v))| {
                !coarsens(v, t)
                    && self.above[*ti]
                        .iter()
                        .any(|&si| coarsens(v, &self.candidates[si as usize]))
            })
            .map(|(_, (t, v))| (t.clone(), v.clone()))
            .collect()
    }
}

/// Result of checking one map against all candidates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapOutcome {
    /// `|B_e|`.
    pub bad_pairs: u64,
    /// Index of the least candidate with no bad pair.
    pub witness: Option<usize>,
    pub per_candidate: Vec<u32>,
}

/// Census of `B_e` over `Q_k^m(kN)` for a single map `e` on `Q(kN)`.
pub fn bad_pairs(e: &EMapTable, k: usize, m: usize, block_size: usize) -> Result<WitnessReport> {
    let start = Instant::now();
    if m > k {
        return domain(format!("m = {m} exceeds k = {k}"));
    }
    if e.mprime() != k * block_size {
        return domain(format!(
            "e lives on Q({}), expected Q({})",
            e.mprime(),
            k * block_size
        ));
    }
    let uni = CombUniverse::new(k, m, block_size)?;
    let outcome = uni.evaluate(&uni.values_of(e));
    let mut report = WitnessReport::new(Lemma::Comb, uni.params(), "single", None);
    report.witness = outcome.witness.map(|i| uni.candidates[i].to_string());
    report.bad_pair_count = outcome.bad_pairs.into();
    report.candidate_count = uni.candidates.len().into();
    // ratio against all comparable pairs: each candidate has |Q(k)| coarsenings
    let pairs = BigUint::from(uni.candidates.len()) * count_partitions(k);
    report.ratio = BigRational::new(outcome.bad_pairs.into(), pairs.clone().into());
    report.tested_maps = 1;
    report.failing_maps = outcome.witness.is_none() as u64;
    if outcome.witness.is_none() {
        report.counterexample = Some(e.to_string());
    }
    report.census = outcome.per_candidate.iter().map(|&c| c as u64).collect();
    report.note("comparable_pairs", pairs.to_string());
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
