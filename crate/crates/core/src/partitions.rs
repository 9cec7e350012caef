//! Integer partitions, the cyclicity index, and counts of attainable
//! partitions (those with nonnegative cyclicity index).

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numtheory::bessel_i0;

/// Largest n for which partitions are listed explicitly.
pub const ENUMERATION_CAP: u32 = 40;

/// A partition n₁ ≥ n₂ ≥ … ≥ n_r ≥ 1. Ordered lexicographically by parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() || parts.contains(&0) {
            return Err(Error::Domain(format!("partition parts must be positive: {parts:?}")));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Domain(format!("partition parts must not increase: {parts:?}")));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn n(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn r(&self) -> usize {
        self.parts.len()
    }

    /// Multiplicities of the distinct parts, largest part first.
    pub fn multiplicities(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for (i, &x) in self.parts.iter().enumerate() {
            if i > 0 && self.parts[i - 1] == x {
                *out.last_mut().expect("nonempty") += 1;
            } else {
                out.push(1);
            }
        }
        out
    }

    /// The conjugate partition (column lengths of the Young diagram).
    pub fn conjugate(&self) -> Partition {
        let cols = self.parts[0];
        Partition {
            parts: (1..=cols)
                .map(|j| self.parts.iter().filter(|&&x| x >= j).count() as u32)
                .collect(),
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(u32::to_string).collect();
        write!(f, "{}", s.join("+"))
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .split('+')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Domain(format!("bad partition part {t:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

/// c(λ) = Σ (3 − 2i)·nᵢ.
pub fn cyclicity_index(lambda: &Partition) -> i64 {
    lambda
        .parts
        .iter()
        .enumerate()
        .map(|(i, &x)| (1 - 2 * i as i64) * i64::from(x))
        .sum()
}

pub fn is_attainable(lambda: &Partition) -> bool {
    cyclicity_index(lambda) >= 0
}

/// Which partitions a table counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    /// c(λ) ≥ 0, the attainable partitions.
    NonNegative,
    /// c(λ) > 0. Differs from `NonNegative` only for even n.
    Positive,
}

/// Dense table of c_{n,r} for n ≤ max_n, built with the length recurrence
/// c_{n,r+1} = Σ_i c_{n−2r−i(r²+r), r} from c_{n,1} = 1 (n ≥ 1).
#[derive(Clone, Debug)]
pub struct AttainableTable {
    max_n: usize,
    /// rows[r - 1][n] = c_{n,r}
    rows: Vec<Vec<BigUint>>,
}

impl AttainableTable {
    pub fn new(max_n: usize) -> Self {
        Self::with_threshold(max_n, Threshold::NonNegative)
    }

    pub fn with_threshold(max_n: usize, threshold: Threshold) -> Self {
        // The generating function for r = 1 is 1/(1 − x), so c_{0,1} = 1 seeds
        // the equal-parts partitions such as (2,2) in the next row; seeding
        // with 0 instead drops exactly the partitions with c(λ) = 0.
        let mut first = vec![BigUint::from(1u32); max_n + 1];
        if threshold == Threshold::Positive {
            first[0] = BigUint::zero();
        }
        let mut rows = vec![first];
        let mut r = 1usize;
        while (r + 1) * r <= max_n {
            let prev = &rows[r - 1];
            let step = r * r + r;
            let row: Vec<BigUint> = (0..=max_n)
                .map(|n| {
                    let mut acc = BigUint::zero();
                    let mut m = n as i64 - 2 * r as i64;
                    while m >= 0 {
                        acc += &prev[m as usize];
                        m -= step as i64;
                    }
                    acc
                })
                .collect();
            rows.push(row);
            r += 1;
        }
        Self { max_n, rows }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// c_{n,r}; zero outside the populated range.
    pub fn get(&self, n: usize, r: usize) -> BigUint {
        assert!(n <= self.max_n, "n = {n} beyond table size {}", self.max_n);
        if r == 0 || r > self.rows.len() {
            return BigUint::zero();
        }
        self.rows[r - 1][n].clone()
    }

    /// c_n = Σ_r c_{n,r} for n ≥ 1.
    pub fn total(&self, n: usize) -> BigUint {
        assert!(n >= 1 && n <= self.max_n);
        self.rows.iter().map(|row| &row[n]).sum()
    }
}

pub fn count_attainable_by_length(n: usize, r: usize) -> BigUint {
    AttainableTable::new(n).get(n, r)
}

pub fn count_attainable(n: usize) -> BigUint {
    AttainableTable::new(n).total(n)
}

/// p(n) by Euler's pentagonal recurrence, or p_{n,r} when r is given.
pub fn count_partitions(n: usize, r: Option<usize>) -> BigUint {
    match r {
        None => partition_numbers(n).pop().expect("nonempty"),
        Some(r) => partitions_by_length(n, r),
    }
}

/// p(0), …, p(n).
pub fn partition_numbers(n: usize) -> Vec<BigUint> {
    let mut p: Vec<BigInt> = Vec::with_capacity(n + 1);
    p.push(BigInt::from(1));
    for m in 1..=n {
        let mut acc = BigInt::zero();
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > m {
                break;
            }
            let sign_pos = k % 2 == 1;
            let mut term = p[m - g1].clone();
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= m {
                term += &p[m - g2];
            }
            if sign_pos {
                acc += term;
            } else {
                acc -= term;
            }
        }
        p.push(acc);
    }
    p.into_iter()
        .map(|x| x.to_biguint().expect("partition numbers are positive"))
        .collect()
}

/// p_{n,r} from p_{n,r} = p_{n−1,r−1} + p_{n−r,r}.
pub fn partitions_by_length(n: usize, r: usize) -> BigUint {
    if r == 0 {
        return BigUint::from(u32::from(n == 0));
    }
    if r > n {
        return BigUint::zero();
    }
    // table[k][m] = p_{m,k}
    let mut prev = vec![BigUint::zero(); n + 1];
    prev[0] = BigUint::from(1u32);
    for k in 1..=r {
        let mut cur = vec![BigUint::zero(); n + 1];
        for m in k..=n {
            cur[m] = &prev[m - 1] + &cur[m - k];
        }
        prev = cur;
    }
    prev[n].clone()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttainableSummary {
    pub n: usize,
    pub attainable: BigUint,
    /// Partitions with c(λ) > 0.
    pub positive: BigUint,
    pub total: BigUint,
    pub ratio: f64,
    pub bessel_bound: f64,
    pub bound_holds: bool,
}

pub fn attainable_summary(n: usize) -> Result<AttainableSummary> {
    attainable_summaries(n)?
        .pop()
        .ok_or_else(|| Error::Domain("attainable_summary needs n ≥ 1".into()))
}

/// Summaries for 1..=max_n sharing one table.
pub fn attainable_summaries(max_n: usize) -> Result<Vec<AttainableSummary>> {
    let table = AttainableTable::new(max_n);
    let strict = AttainableTable::with_threshold(max_n, Threshold::Positive);
    let p = partition_numbers(max_n);
    (1..=max_n)
        .map(|n| summary_from(&table, &strict, &p, n))
        .collect()
}

fn summary_from(
    table: &AttainableTable,
    strict: &AttainableTable,
    p: &[BigUint],
    n: usize,
) -> Result<AttainableSummary> {
    let attainable = table.total(n);
    let total = p[n].clone();
    let c = attainable.to_f64().unwrap_or(f64::INFINITY);
    let bessel_bound = bessel_i0(2.0 * (n as f64).sqrt());
    Ok(AttainableSummary {
        n,
        ratio: c / total.to_f64().unwrap_or(f64::INFINITY),
        bound_holds: c <= bessel_bound,
        bessel_bound,
        attainable,
        positive: strict.total(n),
        total,
    })
}

/// All partitions of n in lexicographic order.
pub fn enumerate_partitions(n: u32) -> Result<Vec<Partition>> {
    if n > ENUMERATION_CAP {
        return Err(Error::Resource(format!(
            "n = {n} exceeds the enumeration cap {ENUMERATION_CAP}"
        )));
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fill(n, n, &mut cur, &mut out);
    out.reverse();
    Ok(out)
}

fn fill(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if rest == 0 {
        if !cur.is_empty() {
            out.push(Partition { parts: cur.clone() });
        }
        return;
    }
    for x in (1..=max.min(rest)).rev() {
        cur.push(x);
        fill(rest - x, x, cur, out);
        cur.pop();
    }
}

/// Partitions of n with c(λ) ≥ 0, lexicographic order.
pub fn enumerate_attainable(n: u32) -> Result<Vec<Partition>> {
    Ok(enumerate_partitions(n)?
        .into_iter()
        .filter(is_attainable)
        .collect())
}
