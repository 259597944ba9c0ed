//! Finite truncations of points of the Carlson-Simpson space.
//!
//! A [`PartitionPrefix`] of length `L` stands for the restriction to
//! `{0, .., L-1}` of an equivalence relation on the naturals with infinitely
//! many classes, each of which may keep growing past `L`. Any question whose
//! answer depends on points at or beyond `L` fails with
//! [`LabError::InsufficientTruncation`] instead of guessing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, truncation, LabError, Result};
use crate::partition::{coarsens, SetPartition};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartitionPrefix(SetPartition);

impl PartitionPrefix {
    pub fn new(p: SetPartition) -> Self {
        PartitionPrefix(p)
    }

    pub fn discrete(len: usize) -> Self {
        PartitionPrefix(SetPartition::discrete(len))
    }

    pub fn from_rgs(rgs: Vec<u32>) -> Result<Self> {
        SetPartition::from_rgs(rgs).map(PartitionPrefix)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_partition(&self) -> &SetPartition {
        &self.0
    }

    pub fn into_partition(self) -> SetPartition {
        self.0
    }

    /// Number of blocks with a minimum below `L`.
    pub fn visible_blocks(&self) -> usize {
        self.0.num_blocks()
    }

    /// `mu_0 < mu_1 < ..`: the block minima below `L`. `mu_0 = 0` whenever `L > 0`.
    pub fn mu_sequence(&self) -> Vec<usize> {
        self.0.minima()
    }

    /// `mu_n`, or an error if the `n`-th block has not appeared below `L`.
    /// `mu_0 = 0` is always known.
    pub fn mu(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Ok(0);
        }
        self.mu_sequence().get(n).copied().ok_or_else(|| {
            LabError::InsufficientTruncation(format!(
                "mu_{n} not visible: prefix of length {} shows {} blocks",
                self.len(),
                self.visible_blocks()
            ))
        })
    }

    /// `r_n(B)`: the restriction to `{0, .., mu_n(B)-1}`.
    pub fn approx_r(&self, n: usize) -> Result<SetPartition> {
        Ok(self.0.restrict(self.mu(n)?))
    }

    /// Restriction to a shorter prefix.
    pub fn restrict(&self, len: usize) -> Result<SetPartition> {
        if len > self.len() {
            return truncation(format!(
                "restriction to {len} points of a prefix of length {}",
                self.len()
            ));
        }
        Ok(self.0.restrict(len))
    }

    /// Text form `L=<n>;<rgs>`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PartitionPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L={};{}", self.len(), self.0)
    }
}

impl fmt::Debug for PartitionPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for PartitionPrefix {
    type Err = LabError;

    /// Accepts `L=<n>;<rgs>`; a bare rgs line is also accepted and its length
    /// taken as `L`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let Some(rest) = s.strip_prefix("L=") else {
            return s.parse().map(PartitionPrefix);
        };
        let (len, rgs) = rest
            .split_once(';')
            .ok_or_else(|| LabError::Parse(format!("missing ';' in {s:?}")))?;
        let len: usize = len
            .trim()
            .parse()
            .map_err(|e| LabError::Parse(format!("bad length {len:?}: {e}")))?;
        let p: SetPartition = rgs.parse()?;
        if p.len() != len {
            return Err(LabError::Parse(format!(
                "header says L={len} but rgs has {} entries",
                p.len()
            )));
        }
        Ok(PartitionPrefix(p))
    }
}

impl From<SetPartition> for PartitionPrefix {
    fn from(p: SetPartition) -> Self {
        PartitionPrefix(p)
    }
}

impl Serialize for PartitionPrefix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PartitionPrefix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// `tr(A, B, n)`: `A` cut at `B`'s `n`-th block minimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceResult {
    pub partition: SetPartition,
    pub depth: usize,
    /// Length of the prefix of `A` the trace was read from.
    pub source_len: usize,
}

pub fn trace(a: &PartitionPrefix, b: &PartitionPrefix, n: usize) -> Result<TraceResult> {
    let cut = b.mu(n)?;
    let partition = a.restrict(cut)?;
    Ok(TraceResult {
        partition,
        depth: n,
        source_len: a.len(),
    })
}

/// The unique `m` with `dom(s) = {0, .., mu_m(B)-1}`.
pub fn depth(b: &PartitionPrefix, s: &SetPartition) -> Result<usize> {
    let d = s.len();
    if d == 0 {
        return Ok(0);
    }
    if d >= b.len() {
        return truncation(format!(
            "cannot tell whether {d} is a block minimum of a prefix of length {}",
            b.len()
        ));
    }
    match b.mu_sequence().binary_search(&d) {
        Ok(m) => Ok(m),
        Err(_) => Err(LabError::NotACut { size: d }),
    }
}

/// `s ⊑ B`: `s = r_n(B)` for some `n`.
pub fn end_extends(s: &SetPartition, b: &PartitionPrefix) -> Result<bool> {
    let d = s.len();
    if d == 0 {
        return Ok(true);
    }
    if d > b.len() {
        return truncation(format!("s has {d} points, prefix only {}", b.len()));
    }
    if b.as_partition().rgs()[..d] != *s.rgs() {
        return Ok(false);
    }
    // s agrees with B below d; it is an approximation iff d starts a new block.
    if d == b.len() {
        return truncation(format!(
            "cannot tell whether {d} is a block minimum of a prefix of length {d}"
        ));
    }
    Ok(b.as_partition().rgs()[d] as usize == s.num_blocks())
}

/// `B <= A` on the common domain of the two prefixes.
pub fn below_on_common(b: &PartitionPrefix, a: &PartitionPrefix) -> bool {
    let c = a.len().min(b.len());
    coarsens(&b.as_partition().restrict(c), &a.as_partition().restrict(c))
}

/// Finite-scale membership of `B` in the cube `[s, A]`: `s ⊑ B` and `B <= A`
/// on the common domain.
pub fn cube_member(s: &SetPartition, a: &PartitionPrefix, b: &PartitionPrefix) -> Result<bool> {
    Ok(end_extends(s, b)? && below_on_common(b, a))
}

/// `h(t)`: the coarsening of `B` that merges `B`-blocks `i, j < M'` exactly
/// when `i t j`, leaving blocks `>= M'` alone.
pub fn induced_coarsening_h(
    t: &SetPartition,
    b: &PartitionPrefix,
    mprime: usize,
) -> Result<PartitionPrefix> {
    if t.len() != mprime {
        return domain(format!("t has {} points, expected M' = {mprime}", t.len()));
    }
    if b.visible_blocks() < mprime {
        return truncation(format!(
            "need {mprime} visible blocks, prefix shows {}",
            b.visible_blocks()
        ));
    }
    let extra = (b.visible_blocks() - mprime) as u32;
    let mut by = t.rgs().to_vec();
    by.extend((0..extra).map(|j| t.num_blocks() as u32 + j));
    let by = SetPartition::from_rgs(by).expect("extension of t by fresh blocks is canonical");
    Ok(PartitionPrefix(b.as_partition().merge_blocks(&by)))
}

/// `g(C)`: the partition of `{0, .., M'-1}` that `C` induces on `B`'s first
/// `M'` block minima, provided `C` restricted below `mu_{M'}(B)` coarsens
/// `r_{M'}(B)`; otherwise the discrete partition.
pub fn project_g(c: &PartitionPrefix, b: &PartitionPrefix, mprime: usize) -> Result<SetPartition> {
    let cut = b.mu(mprime)?;
    let c_cut = c.restrict(cut)?;
    let r = b.as_partition().restrict(cut);
    if !coarsens(&c_cut, &r) {
        return Ok(SetPartition::discrete(mprime));
    }
    let minima = b.mu_sequence();
    let labels: Vec<u32> = minima[..mprime].iter().map(|&p| c_cut.rgs()[p]).collect();
    Ok(SetPartition::from_labels(&labels))
}
