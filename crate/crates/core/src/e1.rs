//! Finite windows of the `E_1` machinery: the CS grid encoding, windowed
//! `E_1` and tail equivalence, the reduction `f` and the blow-up map.
//!
//! Every verdict here is relative to the window `[0, R) x [0, C)` of the
//! grids involved; nothing is extrapolated past the truncation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::cs_space::PartitionPrefix;
use crate::error::{domain, truncation, LabError, Result};
use crate::partition::SetPartition;

/// A finite `R x C` window of a point of `2^(N x N)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BinaryGrid {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BinaryGrid {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return domain(format!(
                "grid dimensions must be positive, got {rows} x {cols}"
            ));
        }
        Ok(BinaryGrid {
            rows,
            cols,
            bits: vec![false; rows * cols],
        })
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return domain("ragged grid rows");
        }
        let mut g = Self::zeros(rows.len(), cols)?;
        g.bits = rows.concat();
        Ok(g)
    }

    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Result<Self> {
        let mut g = Self::zeros(rows, cols)?;
        g.bits.iter_mut().for_each(|b| *b = rng.random());
        Ok(g)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, n: usize, m: usize) -> bool {
        assert!(
            n < self.rows && m < self.cols,
            "({n}, {m}) outside {} x {}",
            self.rows,
            self.cols
        );
        self.bits[n * self.cols + m]
    }

    pub fn set(&mut self, n: usize, m: usize, v: bool) {
        assert!(
            n < self.rows && m < self.cols,
            "({n}, {m}) outside {} x {}",
            self.rows,
            self.cols
        );
        self.bits[n * self.cols + m] = v;
    }

    pub fn row(&self, n: usize) -> &[bool] {
        &self.bits[n * self.cols..(n + 1) * self.cols]
    }

    /// Row supports are nonempty, pairwise disjoint and have increasing minima.
    pub fn is_cs(&self) -> bool {
        let mut last_min = None;
        let mut used = vec![false; self.cols];
        for n in 0..self.rows {
            let row = self.row(n);
            let Some(min) = row.iter().position(|&b| b) else {
                return false;
            };
            if last_min.is_some_and(|l| min <= l) {
                return false;
            }
            last_min = Some(min);
            for (u, &b) in used.iter_mut().zip(row) {
                if b && std::mem::replace(u, true) {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for BinaryGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.rows, self.cols)?;
        for n in 0..self.rows {
            let line: String = self
                .row(n)
                .iter()
                .map(|&b| if b { '1' } else { '0' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryGrid {
    type Err = LabError;

    /// Header `R C`, then `R` lines of `C` binary digits.
    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LabError::Parse("empty grid file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| LabError::Parse(format!("bad grid header {header:?}")))
            })
            .collect::<Result<_>>()?;
        let [r, c] = dims[..] else {
            return Err(LabError::Parse(format!("bad grid header {header:?}")));
        };
        let mut rows = Vec::with_capacity(r);
        for line in lines {
            let row: Vec<bool> = line
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(LabError::Parse(format!("bad grid digit {ch:?}"))),
                })
                .collect::<Result<_>>()?;
            if row.len() != c {
                return Err(LabError::Parse(format!("row {:?} is not {c} wide", line)));
            }
            rows.push(row);
        }
        if rows.len() != r {
            return Err(LabError::Parse(format!(
                "expected {r} rows, found {}",
                rows.len()
            )));
        }
        BinaryGrid::from_rows(&rows)
    }
}

/// Row `n` is the indicator of the `n`-th block of `a`.
pub fn cs_encode(a: &PartitionPrefix) -> Result<BinaryGrid> {
    let p = a.as_partition();
    let mut g = BinaryGrid::zeros(p.num_blocks().max(1), p.len().max(1))?;
    for (i, &b) in p.rgs().iter().enumerate() {
        g.set(b as usize, i, true);
    }
    Ok(g)
}

/// Inverse of [`cs_encode`]: every column must carry exactly one `1`.
pub fn cs_decode(g: &BinaryGrid) -> Result<PartitionPrefix> {
    if !g.is_cs() {
        return domain("grid violates the CS conditions");
    }
    let labels = (0..g.cols)
        .map(|m| {
            let mut hits = (0..g.rows).filter(|&n| g.get(n, m));
            match (hits.next(), hits.next()) {
                (Some(n), None) => Ok(n as u32),
                _ => domain(format!("column {m} does not belong to exactly one row")),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionPrefix::new(SetPartition::from_rgs(labels)?))
}

/// Which set of the allocation a point went to.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Owner {
    /// `t_{-1}(j)`.
    Spine(usize),
    /// `t_n(j)`.
    Part { n: usize, j: usize },
}

/// The partition `N_{-1}, N_0, N_1, ..` of `[0, L)` with increasing
/// enumerations `t_k`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AllocationScheme {
    owners: Vec<Owner>,
    spine: Vec<u32>,
    parts: Vec<Vec<u32>>,
}

impl AllocationScheme {
    pub fn horizon(&self) -> usize {
        self.owners.len()
    }

    pub fn owner(&self, p: usize) -> Option<Owner> {
        self.owners.get(p).copied()
    }

    /// Visible part of `N_{-1}`, in increasing order.
    pub fn spine(&self) -> &[u32] {
        &self.spine
    }

    /// Visible part of `N_n`; empty if `N_n` has not started.
    pub fn part(&self, n: usize) -> &[u32] {
        self.parts.get(n).map_or(&[], Vec::as_slice)
    }

    pub fn t_spine(&self, j: usize) -> Option<u32> {
        self.spine.get(j).copied()
    }

    pub fn t(&self, n: usize, j: usize) -> Option<u32> {
        self.part(n).get(j).copied()
    }
}

/// Round `n`: two points to `N_{-1}`, the next to start `N_n`, then one more
/// to each of `N_0, .., N_n`. Truncated at `L`.
pub fn round_robin_alloc(horizon: usize) -> AllocationScheme {
    let mut s = AllocationScheme {
        owners: Vec::with_capacity(horizon),
        spine: Vec::new(),
        parts: Vec::new(),
    };
    let mut round = 0;
    'outer: loop {
        let mut plan = vec![None, None, Some(round)];
        plan.extend((0..=round).map(Some));
        for target in plan {
            let p = s.owners.len();
            if p == horizon {
                break 'outer;
            }
            let owner = match target {
                None => {
                    s.spine.push(p as u32);
                    Owner::Spine(s.spine.len() - 1)
                }
                Some(n) => {
                    if n == s.parts.len() {
                        s.parts.push(Vec::new());
                    }
                    s.parts[n].push(p as u32);
                    Owner::Part {
                        n,
                        j: s.parts[n].len() - 1,
                    }
                }
            };
            s.owners.push(owner);
        }
        round += 1;
    }
    s
}

/// Largest `L` for which `reduce_f` only reads inside an `R x C` window.
pub fn max_window_len(rows: usize, cols: usize) -> usize {
    let mut horizon = 0;
    let mut round = 0;
    let mut part_sizes: Vec<usize> = Vec::new();
    loop {
        horizon += 2;
        if round >= rows {
            return horizon;
        }
        part_sizes.push(0);
        let mut plan = vec![round];
        plan.extend(0..=round);
        for n in plan {
            if part_sizes[n] >= cols {
                return horizon;
            }
            part_sizes[n] += 1;
            horizon += 1;
        }
        round += 1;
    }
}

/// The windowed reduction `f`: `t_{-1}(j)` lies in block `j`; `t_n(j)` lies
/// in block `2n` if `x(n, j) = 1` and in block `2n + 1` otherwise.
pub fn reduce_f(x: &BinaryGrid, horizon: usize) -> Result<PartitionPrefix> {
    let scheme = round_robin_alloc(horizon);
    let labels = scheme
        .owners
        .iter()
        .enumerate()
        .map(|(p, owner)| match *owner {
            Owner::Spine(j) => Ok(j as u32),
            Owner::Part { n, j } if n < x.rows && j < x.cols => {
                Ok((2 * n + usize::from(!x.get(n, j))) as u32)
            }
            Owner::Part { n, j } => truncation(format!(
                "point {p} is t_{n}({j}) but the grid is only {} x {}",
                x.rows, x.cols
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionPrefix::new(SetPartition::from_rgs(labels)?))
}

/// True if `a` and `b` have the same blocks with index `>= j0` on their
/// common domain.
pub fn blocks_agree_from(a: &PartitionPrefix, b: &PartitionPrefix, j0: u32) -> bool {
    a.as_partition()
        .rgs()
        .iter()
        .zip(b.as_partition().rgs())
        .all(|(&x, &y)| (x < j0 && y < j0) || x == y)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowMode {
    Fixed,
    Tail,
}

impl FromStr for WindowMode {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(WindowMode::Fixed),
            "tail" => Ok(WindowMode::Tail),
            _ => Err(LabError::Parse(format!("unknown window mode {s:?}"))),
        }
    }
}

/// Least shift at which the rows agree to the end of the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum E1Witness {
    Fixed(usize),
    Tail { nx: usize, ny: usize },
}

/// Fixed mode: least `n0 < R` with rows `n0..R` equal. Tail mode: least
/// `(nx, ny)`, ordered by `(nx + ny, nx)`, with `x(nx + n) = y(ny + n)` for
/// every row index that stays in the window; at least one row must be
/// compared.
pub fn e1_window_equiv(
    x: &BinaryGrid,
    y: &BinaryGrid,
    mode: WindowMode,
) -> Result<Option<E1Witness>> {
    if (x.rows, x.cols) != (y.rows, y.cols) {
        return domain(format!(
            "grid sizes differ: {}x{} vs {}x{}",
            x.rows, x.cols, y.rows, y.cols
        ));
    }
    let r = x.rows;
    let agree = |nx: usize, ny: usize| (0..r - nx.max(ny)).all(|n| x.row(nx + n) == y.row(ny + n));
    Ok(match mode {
        WindowMode::Fixed => (0..r).find(|&n0| agree(n0, n0)).map(E1Witness::Fixed),
        WindowMode::Tail => (0..2 * r - 1)
            .flat_map(|sum| (0..=sum).map(move |nx| (nx, sum - nx)))
            .filter(|&(nx, ny)| nx < r && ny < r)
            .find(|&(nx, ny)| agree(nx, ny))
            .map(|(nx, ny)| E1Witness::Tail { nx, ny }),
    })
}

/// Block `n` of the result is the union of `D_k` over `k` in block `n` of
/// `a`. `a` indexes blocks of `d`, so `d` must show at least `len(a)`
/// blocks; the result lives on `[0, mu_{len a}(d))`.
pub fn blowup_iso(a: &PartitionPrefix, d: &PartitionPrefix) -> Result<PartitionPrefix> {
    let len_a = a.len();
    let visible = d.visible_blocks();
    if len_a > visible {
        return truncation(format!(
            "A covers {len_a} blocks of D but D shows only {visible}"
        ));
    }
    let cut = if len_a == visible {
        d.len()
    } else {
        d.mu(len_a)?
    };
    let ar = a.as_partition().rgs();
    let labels = d.as_partition().rgs()[..cut]
        .iter()
        .map(|&k| ar[k as usize])
        .collect();
    Ok(PartitionPrefix::new(SetPartition::from_rgs(labels)?))
}

/// Reads `A` back from a blow-up by sampling `c` at the minima of `d`.
pub fn blowup_inverse(c: &PartitionPrefix, d: &PartitionPrefix) -> Result<PartitionPrefix> {
    if c.len() > d.len() {
        return truncation(format!("C has length {} but D only {}", c.len(), d.len()));
    }
    let labels: Vec<u32> = d
        .mu_sequence()
        .into_iter()
        .take_while(|&m| m < c.len())
        .map(|m| c.as_partition().rgs()[m])
        .collect();
    let a = PartitionPrefix::new(SetPartition::from_rgs(labels)?);
    if blowup_iso(&a, d)? != *c {
        return domain("C is not a blow-up over D");
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn pp(s: &str) -> PartitionPrefix {
        s.parse().unwrap()
    }

    fn grid(rows: &[&str]) -> BinaryGrid {
        BinaryGrid::from_rows(
            &rows
                .iter()
                .map(|r| r.chars().map(|c| c == '1').collect())
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn allocation_examples() {
        let s = round_robin_alloc(9);
        assert_eq!(s.spine(), &[0, 1, 4, 5]);
        assert_eq!(s.part(0), &[2, 3, 7]);
        assert_eq!(s.part(1), &[6, 8]);
        assert!(s.t_spine(3).unwrap() < s.part(1)[0]);
        let s = round_robin_alloc(3);
        assert_eq!((s.spine(), s.part(0)), (&[0, 1][..], &[2][..]));
        assert!(s.part(1).is_empty());
    }

    #[test]
    fn allocation_invariants() {
        let s = round_robin_alloc(500);
        for n in 0..s.parts.len() {
            let min = s.part(n)[0];
            assert!(s.t_spine(2 * n + 1).unwrap() < min);
        }
        // every started part keeps growing
        assert!(s.part(0).len() > 20 && s.part(5).len() > 10);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(cs_encode(&pp("0,1,0,1")).unwrap(), grid(&["1010", "0101"]));
        assert_eq!(
            cs_encode(&pp("0,1,2")).unwrap(),
            grid(&["100", "010", "001"])
        );
        assert_eq!(cs_encode(&pp("0,0,0")).unwrap(), grid(&["111"]));
    }

    #[test]
    fn encode_round_trip() {
        for n in 1..=7 {
            for p in crate::partition::enumerate_partitions(n, 0).unwrap() {
                let a = PartitionPrefix::new(p);
                let g = cs_encode(&a).unwrap();
                assert!(g.is_cs());
                assert_eq!(cs_decode(&g).unwrap(), a);
            }
        }
        assert!(cs_decode(&grid(&["110", "011"])).is_err());
    }

    #[test]
    fn grid_text() {
        let g = grid(&["101", "010"]);
        assert_eq!(g.to_string(), "2 3\n101\n010\n");
        assert_eq!(g.to_string().parse::<BinaryGrid>().unwrap(), g);
        assert!("2 3\n101\n".parse::<BinaryGrid>().is_err());
        assert!("1 2\n1x\n".parse::<BinaryGrid>().is_err());
    }

    #[test]
    fn window_examples() {
        let x = grid(&["10", "01", "11"]);
        assert_eq!(
            e1_window_equiv(&x, &x, WindowMode::Fixed).unwrap(),
            Some(E1Witness::Fixed(0))
        );
        let y = grid(&["00", "01", "11"]);
        assert_eq!(
            e1_window_equiv(&x, &y, WindowMode::Fixed).unwrap(),
            Some(E1Witness::Fixed(1))
        );
        let z = grid(&["00", "01", "10"]);
        assert_eq!(e1_window_equiv(&x, &z, WindowMode::Fixed).unwrap(), None);
        let x = grid(&["10", "01", "11", "00"]);
        let shifted = grid(&["01", "11", "00", "10"]);
        assert_eq!(
            e1_window_equiv(&x, &shifted, WindowMode::Tail).unwrap(),
            Some(E1Witness::Tail { nx: 1, ny: 0 })
        );
        assert_eq!(
            e1_window_equiv(&shifted, &x, WindowMode::Tail).unwrap(),
            Some(E1Witness::Tail { nx: 0, ny: 1 })
        );
        assert!(e1_window_equiv(&x, &grid(&["1"]), WindowMode::Fixed).is_err());
    }

    #[test]
    fn reduction_examples() {
        let zero = BinaryGrid::zeros(2, 3).unwrap();
        let a = reduce_f(&zero, 9).unwrap();
        assert_eq!(a.as_partition().rgs(), &[0, 1, 1, 1, 2, 3, 3, 1, 3]);
        let mut x = zero.clone();
        x.set(0, 0, true);
        let a = reduce_f(&x, 9).unwrap();
        assert_eq!(a.as_partition().block_of(2), 0);
        assert_eq!(
            (a.as_partition().block_of(0), a.as_partition().block_of(1)),
            (0, 1)
        );
        assert!(matches!(
            reduce_f(&zero, 30),
            Err(LabError::InsufficientTruncation(_))
        ));
    }

    #[test]
    fn window_length() {
        assert_eq!(max_window_len(8, 16), 62);
        for (r, c) in [(1, 1), (2, 3), (3, 2), (8, 16), (4, 30)] {
            let l = max_window_len(r, c);
            let g = BinaryGrid::zeros(r, c).unwrap();
            assert!(reduce_f(&g, l).is_ok());
            assert!(reduce_f(&g, l + 1).is_err(), "{r} x {c}");
        }
    }

    #[test]
    fn blowup_examples() {
        let d = pp("0,1,0,1,2,3");
        assert_eq!(blowup_iso(&pp("0,0,1,2"), &d).unwrap(), pp("0,0,0,0,1,2"));
        assert_eq!(blowup_iso(&pp("0,1,2,3"), &d).unwrap(), d);
        assert_eq!(blowup_iso(&pp("0,0,0,0"), &d).unwrap(), pp("0,0,0,0,0,0"));
        assert_eq!(blowup_iso(&pp("0,1"), &d).unwrap(), pp("0,1,0,1"));
        assert!(blowup_iso(&pp("0,1,2,3,4"), &d).is_err());
        assert_eq!(
            blowup_inverse(&pp("0,0,0,0,1,2"), &d).unwrap(),
            pp("0,0,1,2")
        );
        assert!(blowup_inverse(&pp("0,1,1,0"), &d).is_err());
    }

    #[test]
    fn blowup_round_trip_random() {
        for i in 0..200 {
            let mut rng = stream(11, i);
            let d = PartitionPrefix::new(random_partition(&mut rng, 12));
            let len_a = rng.random_range(0..=d.visible_blocks());
            let a = PartitionPrefix::new(random_partition(&mut rng, len_a));
            let c = blowup_iso(&a, &d).unwrap();
            assert!(crate::partition::coarsens(
                c.as_partition(),
                &d.restrict(c.len()).unwrap()
            ));
            assert_eq!(blowup_inverse(&c, &d).unwrap(), a);
        }
    }

    fn random_partition(rng: &mut impl Rng, n: usize) -> SetPartition {
        let mut labels = Vec::with_capacity(n);
        let mut blocks = 0u32;
        for _ in 0..n {
            let l = rng.random_range(0..=blocks);
            blocks = blocks.max(l + 1);
            labels.push(l);
        }
        SetPartition::from_rgs(labels).unwrap()
    }
}
