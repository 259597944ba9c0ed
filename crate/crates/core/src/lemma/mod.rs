//! Exact counting, bad-pair census and witness search for the partition
//! lemma, plus single steps of the fusion construction built on it.

mod campaign;
mod counting;
mod emap;
mod fusion;
mod witness;

pub use campaign::{
    adversarial_values, greedy_choices, min_threshold_comb, sample_values, verify_comb,
    verify_comb_detailed, CampaignState, CombRunner, Strategy, TestedMap, ThresholdStep, WorstMap,
    DEFAULT_BUDGET_CAP,
};
pub use counting::{
    binomial, comb_ratio_bound, count_extensions, count_refined_extensions, entropy_bounds,
    factorial, ratio_r, ratio_threshold, rational_to_f64, CombRatioBound, EntropyBounds,
};
pub use emap::EMapTable;
pub use fusion::{
    condition_one, condition_two, confirm_no_witness, fusion_step, fusion_step_doubling,
    pullback_emap, random_ftable, ConditionTwoCheck, ConditionTwoViolation, FTable, FusionStep,
};
pub use witness::{
    bad_pairs, coarsenings, find_witness, find_witness_with_blocks, is_bad_pair, is_witness,
    validate_witness, CombUniverse, MapOutcome,
};
