//! Full class group structure as a chain of elementary divisors.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::bsgs::{class_number_bsgs, element_order, ProbeSource};
use super::{enumerate_reduced, prime_form, Discriminant, QuadForm};
use crate::error::{Error, Result};
use crate::numtheory::{factorize, kronecker, sieve_primes};

/// Largest |d| accepted by [`group_table_oracle`].
pub const ORACLE_CAP: u64 = 200_000;

/// The class group of d as Z/d₁ ⊕ … ⊕ Z/d_k with d₁ | d₂ | … | d_k.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassGroupStructure {
    disc: Discriminant,
    h: u64,
    divisors: Vec<u64>,
}

impl ClassGroupStructure {
    pub fn new(disc: Discriminant, divisors: Vec<u64>) -> Result<Self> {
        if divisors.iter().any(|&x| x < 2) {
            return Err(Error::InvariantViolation(format!(
                "elementary divisors must be ≥ 2: {divisors:?}"
            )));
        }
        if divisors.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(Error::InvariantViolation(format!(
                "{divisors:?} is not a divisibility chain"
            )));
        }
        let h = divisors
            .iter()
            .try_fold(1u64, |acc, &x| acc.checked_mul(x))
            .ok_or(Error::Overflow("class number"))?;
        Ok(Self { disc, h, divisors })
    }

    pub fn discriminant(&self) -> Discriminant {
        self.disc
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    pub fn divisors(&self) -> &[u64] {
        &self.divisors
    }

    pub fn is_cyclic(&self) -> bool {
        self.divisors.len() <= 1
    }

    /// Exponents of p in the elementary divisors, largest first, zeros dropped.
    pub fn p_partition(&self, p: u64) -> Vec<u32> {
        let mut parts: Vec<u32> = self
            .divisors
            .iter()
            .map(|&x| {
                let mut x = x;
                let mut k = 0;
                while x % p == 0 {
                    x /= p;
                    k += 1;
                }
                k
            })
            .filter(|&k| k > 0)
            .collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        parts
    }

    /// Builds the chain from per-prime partitions (each sorted largest first).
    fn from_sylow(disc: Discriminant, sylow: &[(u64, Vec<u32>)]) -> Result<Self> {
        let len = sylow.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
        let mut divisors = vec![1u64; len];
        for (p, lambda) in sylow {
            for (i, &k) in lambda.iter().enumerate() {
                // largest part goes to the last divisor
                divisors[len - 1 - i] *= p.pow(k);
            }
        }
        Self::new(disc, divisors)
    }
}

impl fmt::Display for ClassGroupStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.divisors.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.divisors.iter().map(|x| format!("Z/{x}")).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Brute-force structure from the full multiplication table.
pub fn group_table_oracle(disc: Discriminant) -> Result<ClassGroupStructure> {
    if disc.abs() > ORACLE_CAP {
        return Err(Error::Resource(format!(
            "|d| = {} exceeds the table oracle cap {ORACLE_CAP}",
            disc.abs()
        )));
    }
    let forms = enumerate_reduced(disc)?;
    let index: HashMap<(i64, i64), usize> =
        forms.iter().enumerate().map(|(i, f)| (f.key(), i)).collect();
    let n = forms.len();
    let mut table = vec![0usize; n * n];
    for i in 0..n {
        for j in i..n {
            let k = index[&forms[i].compose(forms[j])?.key()];
            table[i * n + j] = k;
            table[j * n + i] = k;
        }
    }
    let identity = index[&disc.principal().key()];
    let mut divisors = Vec::new();
    let mut group = TableGroup { n, table, identity };
    while group.n > 1 {
        let (g, m) = group.max_order_element();
        divisors.push(m as u64);
        group = group.quotient(g);
    }
    divisors.reverse();
    ClassGroupStructure::new(disc, divisors)
}

/// A finite abelian group given by its Cayley table.
struct TableGroup {
    n: usize,
    table: Vec<usize>,
    identity: usize,
}

impl TableGroup {
    fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.n + b]
    }

    fn order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    fn max_order_element(&self) -> (usize, usize) {
        (0..self.n)
            .map(|g| (g, self.order(g)))
            .max_by_key(|&(g, m)| (m, std::cmp::Reverse(g)))
            .expect("nonempty group")
    }

    /// G / ⟨g⟩, with cosets numbered by first appearance.
    fn quotient(&self, g: usize) -> TableGroup {
        let mut sub = vec![self.identity];
        let mut x = g;
        while x != self.identity {
            sub.push(x);
            x = self.mul(x, g);
        }
        let mut coset = vec![usize::MAX; self.n];
        let mut reps = Vec::new();
        for a in 0..self.n {
            if coset[a] != usize::MAX {
                continue;
            }
            for &s in &sub {
                coset[self.mul(a, s)] = reps.len();
            }
            reps.push(a);
        }
        let m = reps.len();
        let mut table = vec![0; m * m];
        for i in 0..m {
            for j in 0..m {
                table[i * m + j] = coset[self.mul(reps[i], reps[j])];
            }
        }
        TableGroup {
            n: m,
            table,
            identity: coset[self.identity],
        }
    }
}

/// Subgroup generated by `gens`, as an explicit element list.
fn closure<I>(disc: Discriminant, gens: I, limit: usize) -> Result<Vec<QuadForm>>
where
    I: IntoIterator<Item = QuadForm>,
{
    let mut elems = vec![disc.principal()];
    let mut seen: HashSet<(i64, i64)> = HashSet::from([disc.principal().key()]);
    for g in gens {
        if seen.contains(&g.key()) {
            continue;
        }
        let base = elems.clone();
        let mut gk = g;
        while !seen.contains(&gk.key()) {
            for s in &base {
                let t = s.compose(gk)?;
                seen.insert(t.key());
                elems.push(t);
            }
            if elems.len() > limit {
                return Err(Error::Resource(format!(
                    "subgroup closure for {disc} exceeded {limit} elements"
                )));
            }
            gk = gk.compose(g)?;
        }
    }
    Ok(elems)
}

/// Prime forms below the GRH generation bound 12·log²|d|.
fn grh_generators(disc: Discriminant) -> Result<Vec<QuadForm>> {
    let ln = (disc.abs() as f64).ln();
    let bound = ((12.0 * ln * ln).ceil() as u64).max(3);
    Ok(sieve_primes(bound)?
        .iter()
        .filter(|&p| kronecker(disc.value(), p) != -1)
        .filter_map(|p| prime_form(disc, p))
        .filter(|f| !f.is_identity())
        .collect())
}

/// h(d) by explicit closure of the GRH generating set; exact under GRH.
pub fn class_number_closure(disc: Discriminant) -> Result<u64> {
    Ok(closure(disc, grh_generators(disc)?, usize::MAX)?.len() as u64)
}

/// Knobs for [`group_structure`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructureConfig {
    pub probe_order: usize,
    pub probe_exponent: usize,
    pub seed: u64,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            probe_order: 3,
            probe_exponent: 12,
            seed: 0,
        }
    }
}

/// h(d) together with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassNumberReport {
    pub h: u64,
    /// lcm of the exponent-probe orders; divides the group exponent.
    pub exponent: u64,
    /// h was proven by the probe exponent being the unique multiple in the window.
    pub certified_by_probes: bool,
    /// The generator closure had to be used to determine h.
    pub closure_fallback: bool,
}

/// A structure together with how its order was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureReport {
    pub structure: ClassGroupStructure,
    pub class_number: ClassNumberReport,
}

/// h(d) from a window known to contain it: a BSGS candidate certified by
/// the exponent probe, or else the GRH generator closure.
pub fn class_number_certified(
    disc: Discriminant,
    window: (f64, f64),
    cfg: StructureConfig,
) -> Result<ClassNumberReport> {
    if !disc.is_fundamental() {
        return Err(Error::Domain(format!("{disc} is not fundamental")));
    }
    let (lo, hi) = window;
    if let Ok(out) = class_number_bsgs(disc, lo, hi, cfg.probe_order, cfg.seed) {
        if let Some(e) = exponent_or_fail(probe_exponent(disc, out.h, cfg)?, out.h) {
            let lo_i = lo.max(1.0).ceil() as u64;
            let hi_i = hi.floor() as u64;
            if lo_i.div_ceil(e) * e == out.h && out.h + e > hi_i {
                return Ok(ClassNumberReport {
                    h: out.h,
                    exponent: e,
                    certified_by_probes: true,
                    closure_fallback: false,
                });
            }
        }
    }
    let h = class_number_closure(disc)?;
    Ok(ClassNumberReport {
        h,
        exponent: probe_exponent(disc, h, cfg)?,
        certified_by_probes: false,
        closure_fallback: true,
    })
}

/// Structure of a class group of known order h; `exponent` is any divisor
/// of the group exponent that is a known element order (1 if none).
pub fn structure_with_order(
    disc: Discriminant,
    h: u64,
    exponent: u64,
) -> Result<ClassGroupStructure> {
    if exponent == h {
        return ClassGroupStructure::new(disc, if h == 1 { vec![] } else { vec![h] });
    }
    let gens = grh_generators(disc)?;
    let mut sylow = Vec::new();
    for (p, k) in factorize(h) {
        sylow.push((p, sylow_partition(disc, &gens, h, p, k)?));
    }
    ClassGroupStructure::from_sylow(disc, &sylow)
}

/// Class group structure of d given a window known to contain h(d).
pub fn group_structure(disc: Discriminant, window: (f64, f64)) -> Result<ClassGroupStructure> {
    group_structure_detailed(disc, window, StructureConfig::default()).map(|r| r.structure)
}

pub fn group_structure_detailed(
    disc: Discriminant,
    window: (f64, f64),
    cfg: StructureConfig,
) -> Result<StructureReport> {
    let class_number = class_number_certified(disc, window, cfg)?;
    Ok(StructureReport {
        structure: structure_with_order(disc, class_number.h, class_number.exponent)?,
        class_number,
    })
}

fn exponent_or_fail(e: u64, h: u64) -> Option<u64> {
    (e > 0 && h % e == 0).then_some(e)
}

/// Smallest divisor of h killing all exponent probes; 0 if some probe
/// survives h itself.
fn probe_exponent(disc: Discriminant, h: u64, cfg: StructureConfig) -> Result<u64> {
    let mut source = ProbeSource::new(disc, cfg.seed.wrapping_add(0x9e37_79b9));
    let mut e = 1u64;
    for _ in 0..cfg.probe_exponent {
        let g = source.next_element(disc)?.pow(e)?;
        match element_order(g, h / e) {
            Ok(o) => e *= o,
            Err(Error::Inconsistent(_)) => return Ok(0),
            Err(err) => return Err(err),
        }
    }
    Ok(e)
}

/// Partition λ with Sylow_p ≅ ⊕ Z/p^{λᵢ}, given |Sylow_p| = p^k.
fn sylow_partition(
    disc: Discriminant,
    gens: &[QuadForm],
    h: u64,
    p: u64,
    k: u32,
) -> Result<Vec<u32>> {
    let cofactor = h / p.pow(k);
    let projected = gens
        .iter()
        .map(|g| g.pow(cofactor))
        .collect::<Result<Vec<_>>>()?;
    let sylow = closure(disc, projected, p.pow(k) as usize)?;
    if sylow.len() as u64 != p.pow(k) {
        return Err(Error::Inconsistent(format!(
            "{p}-Sylow subgroup of {disc} has {} elements, expected {}",
            sylow.len(),
            p.pow(k)
        )));
    }
    // log_p of the order of every element
    let mut count_by_log = vec![0u64; k as usize + 1];
    for s in &sylow {
        let mut x = *s;
        let mut j = 0;
        while !x.is_identity() {
            x = x.pow(p)?;
            j += 1;
        }
        count_by_log[j] += 1;
    }
    // |S[p^j]| = p^{Σ min(λᵢ, j)}; successive quotients give the conjugate partition
    let mut conjugate = Vec::new();
    let mut killed = 0u64;
    let mut prev_log = 0u32;
    for (j, &c) in count_by_log.iter().enumerate() {
        killed += c;
        let log = ilog_exact(killed, p).ok_or_else(|| {
            Error::Inconsistent(format!("p-torsion count {killed} is not a power of {p}"))
        })?;
        if j > 0 {
            let r = log - prev_log;
            if r == 0 {
                break;
            }
            conjugate.push(r);
        }
        prev_log = log;
    }
    let len = conjugate.first().copied().unwrap_or(0) as usize;
    Ok((0..len)
        .map(|i| conjugate.iter().filter(|&&r| r as usize > i).count() as u32)
        .collect())
}

fn ilog_exact(mut n: u64, p: u64) -> Option<u32> {
    let mut k = 0;
    while n > 1 {
        if n % p != 0 {
            return None;
        }
        n /= p;
        k += 1;
    }
    (n == 1).then_some(k)
}
