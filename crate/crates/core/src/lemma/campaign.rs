//! Runs the partition lemma against many maps `e` and aggregates the outcome.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::witness::{CombUniverse, MapOutcome};
use crate::error::{domain, LabError, Result};
use crate::partition::{bell_table, coarsens, count_partitions, unrank, SetPartition};
use crate::report::{Lemma, WitnessReport};
use crate::rng::stream;

/// Exhaustive runs refuse to enumerate more maps than this unless told otherwise.
pub const DEFAULT_BUDGET_CAP: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
    Adversarial { budget: u64, seed: u64 },
}

impl Strategy {
    pub fn seed(&self) -> Option<u64> {
        match *self {
            Strategy::Exhaustive => None,
            Strategy::Sampled { seed, .. } | Strategy::Adversarial { seed, .. } => Some(seed),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::Sampled { .. } => "sampled",
            Strategy::Adversarial { .. } => "adversarial",
        }
    }

    /// Number of maps a non-exhaustive strategy tests.
    pub fn count(&self) -> Option<u64> {
        match *self {
            Strategy::Exhaustive => None,
            Strategy::Sampled { count, .. } => Some(count),
            Strategy::Adversarial { budget, .. } => Some(budget),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Exhaustive => f.write_str("exhaustive"),
            Strategy::Sampled { count, seed } => write!(f, "sampled({count},{seed})"),
            Strategy::Adversarial { budget, seed } => write!(f, "adversarial({budget},{seed})"),
        }
    }
}

impl FromStr for Strategy {
    type Err = LabError;

    /// `exhaustive`, `sampled(<count>,<seed>)` or `adversarial(<budget>,<seed>)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "exhaustive" {
            return Ok(Strategy::Exhaustive);
        }
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|s| s.split_once('('))
            .ok_or_else(|| LabError::Parse(format!("unknown strategy {s:?}")))?;
        let (a, b) = args
            .split_once(',')
            .ok_or_else(|| LabError::Parse(format!("expected two arguments in {s:?}")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|e| LabError::Parse(format!("{x:?}: {e}")))
        };
        match name {
            "sampled" => Ok(Strategy::Sampled {
                count: parse(a)?,
                seed: parse(b)?,
            }),
            "adversarial" => Ok(Strategy::Adversarial {
                budget: parse(a)?,
                seed: parse(b)?,
            }),
            _ => Err(LabError::Parse(format!("unknown strategy {name:?}"))),
        }
    }
}

/// Per-map record kept by [`verify_comb_detailed`].
#[derive(Clone, Debug)]
pub struct TestedMap {
    pub index: u64,
    pub values: Vec<SetPartition>,
    pub outcome: MapOutcome,
}

/// Draws `e(t)` uniformly from `Q(kN)` for every relevant `t`.
pub fn sample_values(
    uni: &CombUniverse,
    table: &[Vec<u64>],
    size: u64,
    seed: u64,
    index: u64,
) -> Vec<SetPartition> {
    let mut rng = stream(seed, index);
    let n = uni.n();
    uni.relevant
        .iter()
        .map(|_| unrank(n, rng.random_range(0..size), table))
        .collect()
}

/// Greedy adversary: for every relevant `t`, the values that invalidate the
/// most candidates, i.e. maximize `#{s >= t : v <= s}` over `v </= t`.
/// Values outside the relevant set are below no candidate and never help.
pub fn greedy_choices(uni: &CombUniverse) -> Vec<Vec<u32>> {
    (0..uni.relevant.len())
        .into_par_iter()
        .map(|ti| {
            let t = &uni.relevant[ti];
            let mut best = 0usize;
            let mut choices = Vec::new();
            for (vi, v) in uni.relevant.iter().enumerate() {
                if coarsens(v, t) {
                    continue;
                }
                let gain = uni.above[ti]
                    .iter()
                    .filter(|&&si| coarsens(v, &uni.candidates[si as usize]))
                    .count();
                if gain > best {
                    best = gain;
                    choices.clear();
                }
                if gain == best && gain > 0 {
                    choices.push(vi as u32);
                }
            }
            // nothing to gain: leave e(t) = t
            if choices.is_empty() {
                choices.push(ti as u32);
            }
            choices
        })
        .collect()
}

/// One adversarial map: ties between equally damaging values are broken by
/// the `(seed, index)` stream.
pub fn adversarial_values(
    uni: &CombUniverse,
    choices: &[Vec<u32>],
    seed: u64,
    index: u64,
) -> Vec<SetPartition> {
    let mut rng = stream(seed, index);
    choices
        .iter()
        .map(|c| uni.relevant[*c.choose(&mut rng).expect("nonempty") as usize].clone())
        .collect()
}

fn exhaustive_count(uni: &CombUniverse) -> BigUint {
    count_partitions(uni.n()).pow(uni.relevant.len() as u32)
}

fn exhaustive_values(
    uni: &CombUniverse,
    table: &[Vec<u64>],
    size: u64,
    mut index: u64,
) -> Vec<SetPartition> {
    uni.relevant
        .iter()
        .map(|_| {
            let digit = index % size;
            index /= size;
            unrank(uni.n(), digit, table)
        })
        .collect()
}

/// Everything fixed for one campaign: the universe at `(k, m, N)` and the
/// rule producing the `index`-th map.
pub struct CombRunner {
    pub uni: CombUniverse,
    pub strategy: Strategy,
    /// Number of maps the strategy tests.
    pub total: u64,
    table: Vec<Vec<u64>>,
    size: u64,
    choices: Vec<Vec<u32>>,
}

impl CombRunner {
    pub fn new(
        k: usize,
        m: usize,
        block_size: usize,
        strategy: Strategy,
        budget_cap: u64,
    ) -> Result<Self> {
        if k == 0 || block_size == 0 {
            return domain("k and N must be positive");
        }
        if m > k {
            return domain(format!("m = {m} exceeds k = {k}"));
        }
        let uni = CombUniverse::new(k, m, block_size)?;
        let n = uni.n();
        let size = count_partitions(n)
            .to_u64()
            .ok_or_else(|| LabError::Domain(format!("Q({n}) too large to sample")))?;
        let (total, choices) = match strategy {
            Strategy::Exhaustive => {
                let needed = exhaustive_count(&uni);
                let total = needed
                    .to_u64()
                    .filter(|&c| c <= budget_cap)
                    .ok_or_else(|| LabError::Budget {
                        needed: needed.to_string(),
                        cap: budget_cap,
                    })?;
                (total, Vec::new())
            }
            Strategy::Sampled { count, .. } => (count, Vec::new()),
            Strategy::Adversarial { budget, .. } => (budget, greedy_choices(&uni)),
        };
        Ok(CombRunner {
            table: bell_table(n),
            uni,
            strategy,
            total,
            size,
            choices,
        })
    }

    /// Values of the `index`-th map on the relevant arguments.
    pub fn values(&self, index: u64) -> Vec<SetPartition> {
        match self.strategy {
            Strategy::Exhaustive => exhaustive_values(&self.uni, &self.table, self.size, index),
            Strategy::Sampled { seed, .. } => {
                sample_values(&self.uni, &self.table, self.size, seed, index)
            }
            Strategy::Adversarial { seed, .. } => {
                adversarial_values(&self.uni, &self.choices, seed, index)
            }
        }
    }

    /// Evaluates maps `range` in parallel, in index order.
    pub fn test_range(&self, range: std::ops::Range<u64>) -> Vec<TestedMap> {
        range
            .into_par_iter()
            .map(|index| {
                let values = self.values(index);
                let outcome = self.uni.evaluate(&values);
                TestedMap {
                    index,
                    values,
                    outcome,
                }
            })
            .collect()
    }

    /// Tests maps `state.next ..` up to `end` (capped at `total`) and folds
    /// them into `state`.
    pub fn advance(&self, state: &mut CampaignState, end: u64) {
        let end = end.min(self.total);
        if state.next < end {
            for map in self.test_range(state.next..end) {
                state.absorb(&self.uni, &map);
            }
        }
    }

    pub fn fresh_state(&self) -> CampaignState {
        CampaignState {
            census: vec![0; self.uni.candidates.len()],
            ..CampaignState::default()
        }
    }

    pub fn report(&self, state: &CampaignState, elapsed_ms: u64) -> WitnessReport {
        let uni = &self.uni;
        let strategy = self.strategy;
        let mut report = WitnessReport::new(
            Lemma::Comb,
            uni.params(),
            strategy.to_string(),
            strategy.seed(),
        );
        let candidates = uni.candidates.len();
        report.candidate_count = candidates.into();
        report.tested_maps = state.next;
        report.failing_maps = state.failing;
        report.census = state.census.clone();
        report.counterexample = state
            .first_failure
            .map(|i| uni.to_emap(&self.values(i)).to_string());
        if let Some(w) = &state.worst {
            report.bad_pair_count = w.bad_pairs.into();
            report.ratio = BigRational::new(w.bad_pairs.into(), (candidates as u64).into());
            if state.failing == 0 {
                report.witness = w.witness.map(|i| uni.candidates[i].to_string());
            }
        }
        report.note("failing_shapes", &state.failing_shapes);
        report.note("relevant_arguments", uni.relevant.len());
        report.note(
            "ratio_meaning",
            "max over tested maps of |B_e| / |Q_k^m(kN)|; bad_pair_count and witness refer to that map",
        );
        if let Strategy::Adversarial { .. } = strategy {
            report.note(
                "adversary",
                "greedy per-argument maximizer; a lower bound on difficulty, not the worst case",
            );
        }
        report.elapsed_ms = elapsed_ms;
        report
    }
}

/// Resumable summary of the maps tested so far, in index order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignState {
    /// Maps `0..next` have been tested.
    pub next: u64,
    pub failing: u64,
    /// Per candidate: number of maps under which it has a bad pair.
    pub census: Vec<u64>,
    pub failing_shapes: BTreeSet<String>,
    pub first_failure: Option<u64>,
    /// First map with the most bad pairs.
    pub worst: Option<WorstMap>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorstMap {
    pub index: u64,
    pub bad_pairs: u64,
    pub witness: Option<usize>,
}

impl CampaignState {
    fn absorb(&mut self, uni: &CombUniverse, map: &TestedMap) {
        debug_assert_eq!(map.index, self.next);
        self.next += 1;
        for (c, &bad) in self.census.iter_mut().zip(&map.outcome.per_candidate) {
            *c += (bad > 0) as u64;
        }
        if map.outcome.witness.is_none() {
            self.failing += 1;
            self.first_failure.get_or_insert(map.index);
            let shape: Vec<String> = uni
                .active_entries(&map.values)
                .iter()
                .map(|(t, v)| format!("{t} -> {v}"))
                .collect();
            self.failing_shapes.insert(shape.join("; "));
        }
        if self
            .worst
            .as_ref()
            .is_none_or(|w| map.outcome.bad_pairs > w.bad_pairs)
        {
            self.worst = Some(WorstMap {
                index: map.index,
                bad_pairs: map.outcome.bad_pairs,
                witness: map.outcome.witness,
            });
        }
    }
}

/// Tests the lemma at `(k, m, N)` against the maps chosen by `strategy` and
/// keeps every per-map outcome.
pub fn verify_comb_detailed(
    k: usize,
    m: usize,
    block_size: usize,
    strategy: Strategy,
    budget_cap: u64,
) -> Result<(WitnessReport, Vec<TestedMap>)> {
    let start = Instant::now();
    let runner = CombRunner::new(k, m, block_size, strategy, budget_cap)?;
    let tested = runner.test_range(0..runner.total);
    let mut state = runner.fresh_state();
    for map in &tested {
        state.absorb(&runner.uni, map);
    }
    Ok((
        runner.report(&state, start.elapsed().as_millis() as u64),
        tested,
    ))
}

pub fn verify_comb(
    k: usize,
    m: usize,
    block_size: usize,
    strategy: Strategy,
    budget_cap: u64,
) -> Result<WitnessReport> {
    let start = Instant::now();
    let runner = CombRunner::new(k, m, block_size, strategy, budget_cap)?;
    let mut state = runner.fresh_state();
    // bounded memory: fold in chunks
    while state.next < runner.total {
        let end = state.next + CHUNK;
        runner.advance(&mut state, end);
    }
    Ok(runner.report(&state, start.elapsed().as_millis() as u64))
}

const CHUNK: u64 = 10_000;

/// One row of a threshold hunt.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdStep {
    #[serde(rename = "N")]
    pub block_size: usize,
    pub failing_maps: u64,
    pub max_bad_pairs: String,
    pub candidates: String,
    pub certificate_ratio: String,
    pub passed: bool,
}

/// Empirical threshold: the least `N <= n_max` at which every tested map has
/// a witness and `max |B_e| / |Q_k^m(kN)| < 1`. This bounds the lemma's
/// constant from below for the tested maps only; it does not certify it.
pub fn min_threshold_comb(
    k: usize,
    m: usize,
    strategy: Strategy,
    n_max: usize,
    budget_cap: u64,
) -> Result<(Option<usize>, Vec<ThresholdStep>)> {
    let mut steps = Vec::new();
    for block_size in 1..=n_max {
        let report = verify_comb(k, m, block_size, strategy, budget_cap)?;
        let passed = report.failing_maps == 0 && report.ratio < BigRational::one();
        steps.push(ThresholdStep {
            block_size,
            failing_maps: report.failing_maps,
            max_bad_pairs: report.bad_pair_count.to_string(),
            candidates: report.candidate_count.to_string(),
            certificate_ratio: crate::report::fraction_string(&report.ratio),
            passed,
        });
        if passed {
            return Ok((Some(block_size), steps));
        }
    }
    Ok((None, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    use crate::lemma::{bad_pairs, validate_witness, EMapTable};

    /// Matches every candidate `s` to its own two-block `t = {A, X - A}` with
    /// `A` a block of `s`, and sets `e(t) = s`. Each such pair is bad, so no
    /// candidate survives. Both sides have degree at most 3 with left degree
    /// exactly 3, so Hall's condition gives the matching.
    #[test]
    fn matching_counterexample_at_3_2_2() {
        let uni = CombUniverse::new(3, 2, 2).unwrap();
        let n = uni.n();
        let options: Vec<Vec<SetPartition>> = uni
            .candidates
            .iter()
            .map(|s| {
                s.blocks()
                    .iter()
                    .map(|a| {
                        let labels: Vec<u32> = (0..n).map(|p| u32::from(!a.contains(&p))).collect();
                        SetPartition::from_labels(&labels)
                    })
                    .collect()
            })
            .collect();
        let mut owner: HashMap<SetPartition, usize> = HashMap::new();
        fn augment(
            s: usize,
            options: &[Vec<SetPartition>],
            owner: &mut HashMap<SetPartition, usize>,
            seen: &mut Vec<SetPartition>,
        ) -> bool {
            for t in &options[s] {
                if seen.contains(t) {
                    continue;
                }
                seen.push(t.clone());
                let prev = owner.get(t).copied();
                if prev.is_none_or(|o| augment(o, options, owner, seen)) {
                    owner.insert(t.clone(), s);
                    return true;
                }
            }
            false
        }
        for s in 0..options.len() {
            assert!(
                augment(s, &options, &mut owner, &mut Vec::new()),
                "Hall's condition fails"
            );
        }
        let e = EMapTable::with_entries(
            n,
            owner
                .iter()
                .map(|(t, &s)| (t.clone(), uni.candidates[s].clone())),
        )
        .unwrap();
        let report = bad_pairs(&e, 3, 2, 2).unwrap();
        assert_eq!(report.witness, None);
        assert_eq!(report.bad_pair_count, uni.candidates.len().into());
        assert!(uni.candidates.iter().all(|s| !validate_witness(&e, s)));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!(
            "exhaustive".parse::<Strategy>().unwrap(),
            Strategy::Exhaustive
        );
        assert_eq!(
            "sampled(1000, 7)".parse::<Strategy>().unwrap(),
            Strategy::Sampled {
                count: 1000,
                seed: 7
            }
        );
        assert_eq!(
            "adversarial(10,3)".parse::<Strategy>().unwrap(),
            Strategy::Adversarial {
                budget: 10,
                seed: 3
            }
        );
        assert!("sampled(1)".parse::<Strategy>().is_err());
        assert!("random(1,2)".parse::<Strategy>().is_err());
        let s = Strategy::Sampled { count: 5, seed: 9 };
        assert_eq!(s.to_string().parse::<Strategy>().unwrap(), s);
    }

    #[test]
    fn exhaustive_tiny_cases() {
        let r = verify_comb(2, 2, 1, Strategy::Exhaustive, DEFAULT_BUDGET_CAP).unwrap();
        assert_eq!(r.tested_maps, 4);
        assert_eq!(r.failing_maps, 2);
        assert_eq!(r.extra["failing_shapes"], serde_json::json!(["0,0 -> 0,1"]));
        let r = verify_comb(1, 0, 1, Strategy::Exhaustive, DEFAULT_BUDGET_CAP).unwrap();
        assert_eq!((r.tested_maps, r.failing_maps), (1, 0));
    }

    #[test]
    fn exhaustive_respects_cap() {
        let err = verify_comb(2, 0, 2, Strategy::Exhaustive, 1000).unwrap_err();
        assert!(matches!(err, LabError::Budget { .. }));
    }

    #[test]
    fn sampled_is_deterministic() {
        let s = Strategy::Sampled {
            count: 50,
            seed: 11,
        };
        let mut a = verify_comb(2, 1, 2, s, 0).unwrap();
        let mut b = verify_comb(2, 1, 2, s, 0).unwrap();
        a.elapsed_ms = 0;
        b.elapsed_ms = 0;
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn threshold_small() {
        let (n, steps) =
            min_threshold_comb(1, 0, Strategy::Sampled { count: 10, seed: 1 }, 3, 0).unwrap();
        assert_eq!(n, Some(1));
        assert_eq!(steps.len(), 1);
        let (n, steps) = min_threshold_comb(
            2,
            2,
            Strategy::Sampled {
                count: 200,
                seed: 5,
            },
            4,
            0,
        )
        .unwrap();
        assert!(n.unwrap() >= 2);
        assert!(!steps[0].passed);
    }
}
