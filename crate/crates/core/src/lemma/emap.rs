use std::collections::BTreeMap;
use std::fmt;

use crate::error::{domain, LabError, Result};
use crate::partition::{bell_table, enumerate_partitions, rank, unrank, SetPartition};

/// A total map `e : Q(M') -> Q(M')`.
///
/// Only entries that differ from the identity are stored; every other
/// partition maps to itself. Tables built from index pairs must list every
/// element of `Q(M')`.
#[derive(Clone, PartialEq, Eq)]
pub struct EMapTable {
    mprime: usize,
    entries: BTreeMap<SetPartition, SetPartition>,
}

impl EMapTable {
    pub fn identity(mprime: usize) -> Self {
        EMapTable {
            mprime,
            entries: BTreeMap::new(),
        }
    }

    /// Identity except on the listed arguments.
    pub fn with_entries(
        mprime: usize,
        entries: impl IntoIterator<Item = (SetPartition, SetPartition)>,
    ) -> Result<Self> {
        let mut table = Self::identity(mprime);
        for (t, v) in entries {
            table.set(t, v)?;
        }
        Ok(table)
    }

    /// Tabulates `f` over all of `Q(M')`; only sensible for small `M'`.
    pub fn from_fn(
        mprime: usize,
        mut f: impl FnMut(&SetPartition) -> SetPartition,
    ) -> Result<Self> {
        let mut table = Self::identity(mprime);
        for t in enumerate_partitions(mprime, 0)? {
            let v = f(&t);
            table.set(t, v)?;
        }
        Ok(table)
    }

    pub fn constant(mprime: usize, value: &SetPartition) -> Result<Self> {
        Self::from_fn(mprime, |_| value.clone())
    }

    /// Builds a table from `(argument rank, value rank)` pairs over the
    /// lexicographic enumeration of `Q(M')`. Every rank must appear exactly once.
    pub fn from_index_pairs(mprime: usize, pairs: &[(u64, u64)]) -> Result<Self> {
        let size = crate::partition::bell_u64(mprime)
            .ok_or_else(|| LabError::Domain(format!("Q({mprime}) too large to index")))?;
        let table = bell_table(mprime);
        let mut seen = vec![false; size as usize];
        let mut out = Self::identity(mprime);
        for &(a, v) in pairs {
            if a >= size || v >= size {
                return domain(format!(
                    "index pair ({a}, {v}) out of range for Q({mprime}) of size {size}"
                ));
            }
            if std::mem::replace(&mut seen[a as usize], true) {
                return domain(format!("argument index {a} listed twice"));
            }
            out.set(unrank(mprime, a, &table), unrank(mprime, v, &table))?;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return domain(format!(
                "map is not total: argument index {missing} missing"
            ));
        }
        Ok(out)
    }

    pub fn set(&mut self, t: SetPartition, v: SetPartition) -> Result<()> {
        if t.len() != self.mprime || v.len() != self.mprime {
            return domain(format!(
                "entry {t:?} -> {v:?} does not live on Q({})",
                self.mprime
            ));
        }
        if t == v {
            self.entries.remove(&t);
        } else {
            self.entries.insert(t, v);
        }
        Ok(())
    }

    pub fn mprime(&self) -> usize {
        self.mprime
    }

    pub fn get<'a>(&'a self, t: &'a SetPartition) -> &'a SetPartition {
        debug_assert_eq!(t.len(), self.mprime);
        self.entries.get(t).unwrap_or(t)
    }

    /// Non-identity entries in argument order.
    pub fn non_identity(&self) -> impl Iterator<Item = (&SetPartition, &SetPartition)> {
        self.entries.iter()
    }

    /// Non-identity entries as `(argument rank, value rank)`.
    pub fn index_pairs(&self) -> Vec<(u64, u64)> {
        let table = bell_table(self.mprime);
        self.entries
            .iter()
            .map(|(t, v)| (rank(t, &table), rank(v, &table)))
            .collect()
    }

    /// Parses lines `arg -> value` (rgs text); blank lines and `#` comments
    /// are skipped, unlisted arguments map to themselves.
    pub fn parse(mprime: usize, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for line in text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let (a, v) = line
                .split_once("->")
                .ok_or_else(|| LabError::Parse(format!("expected 'arg -> value': {line:?}")))?;
            entries.push((a.parse()?, v.parse()?));
        }
        Self::with_entries(mprime, entries)
    }
}

impl fmt::Display for EMapTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, v) in &self.entries {
            writeln!(f, "{t} -> {v}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for EMapTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EMapTable")
            .field("mprime", &self.mprime)
            .field("entries", &self.entries)
            .finish()
    }
}
