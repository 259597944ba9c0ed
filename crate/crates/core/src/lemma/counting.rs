//! Closed-form counts over `Q_k^m(kN)` and the bounds used to show that bad
//! pairs are rare. Everything here is exact; the entropy-relaxed product is
//! the one floating-point diagnostic.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::partition::CoarseningProfile;

pub fn factorial(n: usize) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    // running product stays integral: C(n-k+i, i) at step i
    (1..=k).fold(BigUint::one(), |acc, i| acc * (n - k + i) / i)
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

fn common_denominator(k: usize, block_size: usize, m: usize) -> BigUint {
    factorial(block_size - 1).pow(m as u32) * factorial(block_size).pow((k - m) as u32)
}

fn product_term(ki: usize, mi: usize, block_size: usize) -> BigUint {
    factorial(ki * block_size - mi) / factorial(ki - mi)
}

fn exact_div(num: BigUint, den: &BigUint) -> BigUint {
    let (q, r) = num.div_rem(den);
    assert!(r.is_zero(), "closed-form count is not an integer");
    q
}

/// `|{s in Q_k^m(kN) : t <= s}|` for any `t` with the given profile:
/// `prod_i (k_i N - m_i)! / (k_i - m_i)!` over `(N-1)!^m N!^(k-m)`.
/// Only the coarse data `(k_i, m_i)` of the profile is used.
pub fn count_extensions(
    profile: &CoarseningProfile,
    k: usize,
    block_size: usize,
    m: usize,
) -> Result<BigUint> {
    if block_size == 0 {
        return domain("N must be positive");
    }
    profile.validate(k, m)?;
    let num = profile.blocks.iter().fold(BigUint::one(), |acc, b| {
        acc * product_term(b.k, b.m, block_size)
    });
    Ok(exact_div(num, &common_denominator(k, block_size, m)))
}

/// `|{s in Q_k^m(kN) : h <= s}|` where `h` is the refinement described by the
/// profile's sub-blocks.
pub fn count_refined_extensions(
    profile: &CoarseningProfile,
    k: usize,
    block_size: usize,
    m: usize,
) -> Result<BigUint> {
    if block_size == 0 {
        return domain("N must be positive");
    }
    profile.validate(k, m)?;
    let num = profile
        .blocks
        .iter()
        .flat_map(|b| b.splits.iter())
        .fold(BigUint::one(), |acc, &(kj, mj)| {
            acc * product_term(kj, mj, block_size)
        });
    Ok(exact_div(num, &common_denominator(k, block_size, m)))
}

/// The binomial coefficient between its entropy bounds:
/// `2^{bH(a/b)} / (b+1) <= C(b, a) <= 2^{bH(a/b)}`, with
/// `2^{bH(a/b)} = b^b / (a^a (b-a)^(b-a))` and `0^0 = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EntropyBounds {
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub lower: BigRational,
    #[serde(serialize_with = "crate::report::ser_display")]
    pub binom: BigUint,
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub upper: BigRational,
}

impl EntropyBounds {
    pub fn holds(&self) -> bool {
        let c = BigRational::from_integer(self.binom.clone().into());
        self.lower <= c && c <= self.upper
    }
}

pub fn entropy_bounds(a: usize, b: usize) -> Result<EntropyBounds> {
    if b == 0 {
        return domain("b must be positive");
    }
    if a > b {
        return domain(format!("a = {a} exceeds b = {b}"));
    }
    let pow = |x: usize| BigUint::from(x).pow(x as u32);
    let upper = ratio(pow(b), pow(a) * pow(b - a));
    let lower = &upper / BigRational::from_integer((b + 1).into());
    Ok(EntropyBounds {
        lower,
        binom: binomial(b, a),
        upper,
    })
}

/// The factorial-combination ratio
/// `(a1N-b1)!/(a1-b1)! * (a2N-b2)!/(a2-b2)! * ((a1+a2)-(b1+b2))! / ((a1+a2)N-(b1+b2))!`.
pub fn ratio_r(
    a1: usize,
    a2: usize,
    b1: usize,
    b2: usize,
    block_size: usize,
) -> Result<BigRational> {
    if a1 == 0 || a2 == 0 {
        return domain("a1 and a2 must be positive");
    }
    if b1 > a1 || b2 > a2 {
        return domain(format!("need b_i <= a_i, got ({a1}, {a2}, {b1}, {b2})"));
    }
    if block_size == 0 {
        return domain("N must be positive");
    }
    let n = block_size;
    let num = factorial(a1 * n - b1) * factorial(a2 * n - b2) * factorial(a1 + a2 - b1 - b2);
    let den = factorial(a1 - b1) * factorial(a2 - b2) * factorial((a1 + a2) * n - b1 - b2);
    Ok(ratio(num, den))
}

/// Least `M` such that `ratio_r(.., N) < 1` for every `N` in `[M, M + window]`,
/// scanning `M` up to `n_max`.
pub fn ratio_threshold(
    a1: usize,
    a2: usize,
    b1: usize,
    b2: usize,
    window: usize,
    n_max: usize,
) -> Result<Option<usize>> {
    let one = BigRational::one();
    let below: Vec<bool> = (1..=n_max + window)
        .map(|n| ratio_r(a1, a2, b1, b2, n).map(|r| r < one))
        .collect::<Result<_>>()?;
    // below[i] is for N = i + 1
    Ok((1..=n_max).find(|&m| below[m - 1..m + window].iter().all(|&b| b)))
}

/// The per-block bound on `r_t^e`: the exact binomial-quotient product and its
/// entropy relaxation (approximate, `f64`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombRatioBound {
    #[serde(serialize_with = "crate::report::ser_rational")]
    pub exact: BigRational,
    pub entropy_relaxed_approx: f64,
}

fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

/// `prod_{i : k_{i,1} < k_i} C(k_i - m_i, k_{i,1} - m_{i,1}) / C(k_i N - m_i, k_{i,1} N - m_{i,1})`,
/// where sub-block 1 is the sub-block containing the block's minimum.
pub fn comb_ratio_bound(profile: &CoarseningProfile, block_size: usize) -> Result<CombRatioBound> {
    if block_size == 0 {
        return domain("N must be positive");
    }
    profile.validate(profile.total_k(), profile.total_m())?;
    let n = block_size;
    let mut exact = BigRational::one();
    let mut log2_relaxed = 0.0f64;
    let mut split_any = false;
    for b in &profile.blocks {
        let (k1, m1) = b.splits[0];
        if k1 >= b.k {
            continue;
        }
        split_any = true;
        let (top, top_pick) = (b.k - b.m, k1 - m1);
        let (bot, bot_pick) = (b.k * n - b.m, k1 * n - m1);
        exact *= ratio(binomial(top, top_pick), binomial(bot, bot_pick));
        let h_top = if top == 0 {
            0.0
        } else {
            top as f64 * binary_entropy(top_pick as f64 / top as f64)
        };
        let h_bot = bot as f64 * binary_entropy(bot_pick as f64 / bot as f64);
        log2_relaxed += h_top + ((bot + 1) as f64).log2() - h_bot;
    }
    if !split_any {
        return domain("no block is strictly split (t equals its refinement)");
    }
    Ok(CombRatioBound {
        exact,
        entropy_relaxed_approx: log2_relaxed.exp2(),
    })
}

/// Lossy conversion for reports and plots.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::BlockProfile;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn extension_examples() {
        let c =
            |k, m, n| count_extensions(&CoarseningProfile::single_block(k, m), k, n, m).unwrap();
        assert_eq!(c(3, 3, 2), BigUint::from(6u32));
        assert_eq!(c(2, 0, 2), BigUint::from(3u32));
        assert_eq!(c(2, 2, 2), BigUint::from(2u32));
        // m <= 1 gives the full equipartition count
        assert_eq!(c(3, 1, 3), crate::partition::equipartition_count(3, 3));
        assert_eq!(c(3, 0, 3), crate::partition::equipartition_count(3, 3));
    }

    #[test]
    fn extension_rejects_bad_profiles() {
        let prof = CoarseningProfile::single_block(2, 1);
        assert!(count_extensions(&prof, 3, 2, 1).is_err());
        assert!(count_extensions(&prof, 2, 0, 1).is_err());
        let bad = CoarseningProfile {
            blocks: vec![BlockProfile {
                k: 1,
                m: 2,
                splits: vec![(1, 2)],
            }],
        };
        assert!(count_extensions(&bad, 1, 2, 2).is_err());
    }

    #[test]
    fn entropy_examples() {
        let e = entropy_bounds(1, 2).unwrap();
        assert_eq!(
            (e.lower.clone(), e.binom.clone(), e.upper.clone()),
            (q(4, 3), BigUint::from(2u32), q(4, 1))
        );
        let e = entropy_bounds(0, 5).unwrap();
        assert_eq!((e.lower.clone(), e.upper.clone()), (q(1, 6), q(1, 1)));
        let e = entropy_bounds(3, 3).unwrap();
        assert_eq!(
            (e.lower.clone(), e.binom.clone(), e.upper.clone()),
            (q(1, 4), BigUint::one(), q(1, 1))
        );
        assert!(entropy_bounds(4, 3).is_err());
        assert!(entropy_bounds(0, 0).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(ratio_r(1, 1, 0, 0, 2).unwrap(), q(1, 3));
        // a_i = b_i collapses to (N-1)!^2 / (2N-2)!, which is 1 only at N = 1
        assert_eq!(ratio_r(1, 1, 1, 1, 1).unwrap(), q(1, 1));
        assert_eq!(ratio_r(1, 1, 1, 1, 3).unwrap(), q(1, 6));
        assert_eq!(ratio_r(2, 1, 0, 0, 2).unwrap(), q(1, 5));
        assert!(ratio_r(0, 1, 0, 0, 2).is_err());
        assert!(ratio_r(1, 1, 2, 0, 2).is_err());
    }

    #[test]
    fn ratio_at_n1_is_one() {
        assert_eq!(ratio_r(3, 2, 1, 2, 1).unwrap(), q(1, 1));
        assert_eq!(ratio_threshold(1, 1, 0, 0, 50, 10).unwrap(), Some(2));
    }

    fn split_profile(n_units: usize, first: usize) -> CoarseningProfile {
        CoarseningProfile {
            blocks: vec![BlockProfile {
                k: n_units,
                m: 0,
                splits: vec![(first, 0), (n_units - first, 0)],
            }],
        }
    }

    #[test]
    fn comb_ratio_examples() {
        let prof = split_profile(2, 1);
        assert_eq!(comb_ratio_bound(&prof, 2).unwrap().exact, q(1, 3));
        assert_eq!(comb_ratio_bound(&prof, 4).unwrap().exact, q(1, 35));
        assert!(comb_ratio_bound(&CoarseningProfile::single_block(2, 0), 2).is_err());
        let b = comb_ratio_bound(&prof, 4).unwrap();
        assert!(b.entropy_relaxed_approx >= rational_to_f64(&b.exact));
    }

    #[test]
    fn binomial_small() {
        assert_eq!(binomial(6, 2), BigUint::from(15u32));
        assert_eq!(binomial(3, 5), BigUint::zero());
        assert_eq!(
            binomial(64, 32),
            "1832624140942590534".parse::<BigUint>().unwrap()
        );
    }
}
