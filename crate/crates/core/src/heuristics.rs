//! Conjectural frequencies of odd class numbers and of p-group class groups:
//! random Euler product moments, the constants of the asymptotic expansion,
//! Cohen–Lenstra weights and automorphism counts.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numtheory::{expint_e1, factorize, is_prime, log_integral, sieve_primes, PrimeTable};
use crate::partitions::{cyclicity_index, Partition};

/// Inner products stop once the factor is this close to 1.
const INNER_EPS: f64 = 1e-16;

/// Default prime cutoff for the product defining the constant 𝔠.
///
/// The published predictions are reproduced exactly with the product taken
/// over ℓ ≤ 5·10⁴; over all ℓ the constant moves by about 2·10⁻⁶.
pub const FRAK_C_PRIME_LIMIT: u64 = 50_000;

/// Number of primes behind the published c1, c2, c3.
pub const PAPER_PRIME_COUNT: usize = 100_000;

/// Largest |z| accepted by [`euler_moment`].
pub const MOMENT_Z_CAP: f64 = 10.0;

/// An abelian p-group ⊕ Z/p^{nᵢ} for an odd prime p. Ordered by (p, n, λ).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupShape {
    p: u64,
    lambda: Partition,
}

impl GroupShape {
    pub fn new(p: u64, lambda: Partition) -> Result<Self> {
        if p < 3 || !is_prime(p) {
            return Err(Error::Domain(format!("{p} is not an odd prime")));
        }
        Ok(Self { p, lambda })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn lambda(&self) -> &Partition {
        &self.lambda
    }

    pub fn n(&self) -> u32 {
        self.lambda.n()
    }

    /// |G| = pⁿ, if it fits in 64 bits.
    pub fn order(&self) -> Option<u64> {
        self.p.checked_pow(self.n())
    }

    pub fn cyclicity(&self) -> i64 {
        cyclicity_index(&self.lambda)
    }
}

impl Ord for GroupShape {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.p, self.n(), &self.lambda).cmp(&(other.p, other.n(), &other.lambda))
    }
}

impl PartialOrd for GroupShape {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GroupShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.p, self.lambda)
    }
}

impl FromStr for GroupShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, lambda) = s
            .split_once(':')
            .ok_or_else(|| Error::Domain(format!("shape {s:?} is not of the form p:λ")))?;
        let p = p
            .trim()
            .parse()
            .map_err(|_| Error::Domain(format!("bad prime in shape {s:?}")))?;
        GroupShape::new(p, lambda.parse()?)
    }
}

/// Truncated product ∏ ½((1+1/p)^{−z} + (1−1/p)^{−z}) over the table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerMoment {
    pub value: f64,
    /// |factor − 1| at the last prime, a convergence indicator.
    pub last_factor_deviation: f64,
}

pub fn euler_moment(z: f64, table: &PrimeTable) -> Result<EulerMoment> {
    if !(z.abs() <= MOMENT_Z_CAP) {
        return Err(Error::Domain(format!("moment exponent {z} outside ±{MOMENT_Z_CAP}")));
    }
    let mut log_value = 0.0;
    let mut last = 0.0;
    for p in table.iter() {
        let x = 1.0 / p as f64;
        let factor = 0.5 * ((-z * x.ln_1p()).exp() + (-z * (-x).ln_1p()).exp());
        log_value += factor.ln();
        last = (factor - 1.0).abs();
    }
    Ok(EulerMoment {
        value: log_value.exp(),
        last_factor_deviation: last,
    })
}

/// 𝔠 = 15·∏_{3≤ℓ≤limit} ∏_{i≥2} (1 − ℓ^{−i}).
pub fn frak_c(table: &PrimeTable, limit: u64) -> f64 {
    let log: f64 = table
        .up_to(limit)
        .iter()
        .filter(|&&l| l >= 3)
        .map(|&l| {
            let inv = 1.0 / l as f64;
            let mut t = inv * inv;
            let mut s = 0.0;
            while t > INNER_EPS {
                s += (-t).ln_1p();
                t *= inv;
            }
            s
        })
        .sum();
    15.0 * log.exp()
}

/// 𝔠, c0…c3 and the prime truncation that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionConstants {
    pub frak_c: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub prime_count: usize,
    /// Set when fewer primes were used than the published constants need.
    pub precision_warning: Option<String>,
}

pub fn prediction_constants(table: &PrimeTable) -> PredictionConstants {
    prediction_constants_with(table, FRAK_C_PRIME_LIMIT)
}

pub fn prediction_constants_with(table: &PrimeTable, frak_c_limit: u64) -> PredictionConstants {
    // Per prime: a = E(L²logL)/E(L²), b = E(L²log²L)/E(L²), c = E(L²log³L)/E(L²)
    let (mut s1, mut s2, mut s3, mut t, mut u, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut log_c0 = 0.0;
    for p in table.iter() {
        let x = 1.0 / p as f64;
        let (lm, lp) = ((-x).ln_1p(), x.ln_1p());
        let (wm, wp) = ((1.0 - x) * (1.0 - x), (1.0 + x) * (1.0 + x));
        let el2 = 1.0 + x * x;
        let a = 0.5 * (wm * lm + wp * lp) / el2;
        let b = 0.5 * (wm * lm * lm + wp * lp * lp) / el2;
        let c = 0.5 * (wm * lm.powi(3) + wp * lp.powi(3)) / el2;
        s1 += a;
        s2 += a * a;
        s3 += a * a * a;
        t += b;
        u += c;
        ab += a * b;
        log_c0 += (x * x).ln_1p();
    }
    // Σ_{p>P} p⁻² ≈ ∫_P^∞ dt/(t² log t) = E1(log P)
    if table.limit() >= 3 {
        log_c0 += expint_e1((table.limit() as f64).ln());
    }
    let precision_warning = (table.len() < PAPER_PRIME_COUNT).then(|| {
        format!(
            "{} primes used; the published constants use {PAPER_PRIME_COUNT}",
            table.len()
        )
    });
    PredictionConstants {
        frak_c: frak_c(table, frak_c_limit),
        c0: log_c0.exp(),
        c1: -s1,
        c2: s1 * s1 - s2 + t,
        c3: -(s1.powi(3) - 3.0 * s1 * s2 + 2.0 * s3 + 3.0 * (t * s1 - ab) + u),
        prime_count: table.len(),
        precision_warning,
    }
}

impl PredictionConstants {
    /// The constants from the first `count` primes.
    pub fn with_prime_count(count: usize) -> Result<Self> {
        Ok(prediction_constants(&PrimeTable::with_count(count)?))
    }

    /// Cache file: one `key<TAB>value<TAB>prime_count` line per constant.
    pub fn to_cache_string(&self) -> String {
        [
            ("frakC", self.frak_c),
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
        ]
        .iter()
        .map(|(k, v)| format!("{k}\t{v:e}\t{}\n", self.prime_count))
        .collect()
    }

    pub fn write_cache(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_cache_string())?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut vals = [None; 5];
        let mut count = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(parse_err(i + 1, format!("expected 3 fields, got {}", f.len())));
            }
            let slot = match f[0] {
                "frakC" => 0,
                "c0" => 1,
                "c1" => 2,
                "c2" => 3,
                "c3" => 4,
                k => return Err(parse_err(i + 1, format!("unknown key {k:?}"))),
            };
            let v: f64 = f[1]
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad value {:?}", f[1])))?;
            let n: usize = f[2]
                .parse()
                .map_err(|_| parse_err(i + 1, format!("bad prime count {:?}", f[2])))?;
            if count.is_some_and(|c| c != n) {
                return Err(parse_err(i + 1, "inconsistent prime counts".into()));
            }
            count = Some(n);
            vals[slot] = Some(v);
        }
        let get = |i: usize, k: &str| {
            vals[i].ok_or_else(|| parse_err(0, format!("missing key {k}")))
        };
        let prime_count = count.ok_or_else(|| parse_err(0, "empty cache".into()))?;
        Ok(Self {
            frak_c: get(0, "frakC")?,
            c0: get(1, "c0")?,
            c1: get(2, "c1")?,
            c2: get(3, "c2")?,
            c3: get(4, "c3")?,
            prime_count,
            precision_warning: None,
        })
    }
}

/// 𝔠(h) = ∏_{pⁿ∥h} ∏_{i=1}^{n} (1 − p^{−i})^{−1}, exactly.
pub fn c_factor(h: u64) -> Result<BigRational> {
    if h == 0 || h % 2 == 0 {
        return Err(Error::Domain(format!("c_factor needs odd h ≥ 1, got {h}")));
    }
    let mut acc = BigRational::one();
    for (p, n) in factorize(h) {
        let p = BigInt::from(p);
        for i in 1..=n {
            let pi: BigInt = Pow::pow(&p, i);
            acc *= BigRational::new(pi.clone(), pi - 1);
        }
    }
    Ok(acc)
}

pub fn c_factor_f64(h: u64) -> Result<f64> {
    if h == 0 || h % 2 == 0 {
        return Err(Error::Domain(format!("c_factor needs odd h ≥ 1, got {h}")));
    }
    Ok(c_factor_from(&factorize(h)))
}

fn c_factor_from(fac: &[(u64, u32)]) -> f64 {
    let mut acc = 1.0;
    for &(p, n) in fac {
        let inv = 1.0 / p as f64;
        let mut t = 1.0;
        for _ in 0..n {
            t *= inv;
            acc /= 1.0 - t;
        }
    }
    acc
}

/// Truncated c̃(h) = ∏_{odd p} (1 − 1/p)^{−1} ∏_{i>n} (1 − p^{−i}), pⁿ ∥ h.
pub fn c_tilde(h: u64, table: &PrimeTable) -> Result<f64> {
    if h == 0 || h % 2 == 0 {
        return Err(Error::Domain(format!("c_tilde needs odd h ≥ 1, got {h}")));
    }
    let mut log = 0.0;
    for p in table.iter().filter(|&p| p >= 3) {
        let mut n = 0;
        let mut m = h;
        while m % p == 0 {
            m /= p;
            n += 1;
        }
        let inv = 1.0 / p as f64;
        log -= (-inv).ln_1p();
        let mut t = inv.powi(n + 1);
        while t > INNER_EPS {
            log += (-t).ln_1p();
            t *= inv;
        }
    }
    Ok(log.exp())
}

fn expansion(h: f64, k: &PredictionConstants) -> f64 {
    let l = (PI * h).ln();
    k.frak_c * h / l * (1.0 + k.c1 / l + k.c2 / (l * l) + k.c3 / (l * l * l))
}

/// pred(h) = 𝔠·𝔠(h)·h/L·(1 + c1/L + c2/L² + c3/L³), L = log(πh).
pub fn pred(h: u64, k: &PredictionConstants) -> Result<f64> {
    if h < 3 || h % 2 == 0 {
        return Err(Error::Domain(format!("pred needs odd h ≥ 3, got {h}")));
    }
    Ok(c_factor_f64(h)? * expansion(h as f64, k))
}

/// Σ pred(h) over odd 3 ≤ h ≤ h_max.
pub fn sum_pred(h_max: u64, k: &PredictionConstants) -> f64 {
    if h_max < 3 {
        return 0.0;
    }
    let spf = smallest_prime_factors(h_max as usize);
    let factor = |mut h: usize| {
        let mut fac: Vec<(u64, u32)> = Vec::new();
        while h > 1 {
            let p = spf[h];
            let mut e = 0;
            while h % p == 0 {
                h /= p;
                e += 1;
            }
            fac.push((p as u64, e));
        }
        fac
    };
    (1..=(h_max as usize - 1) / 2)
        .into_par_iter()
        .map(|i| 2 * i + 1)
        .map(|h| c_factor_from(&factor(h)) * expansion(h as f64, k))
        .sum()
}

fn smallest_prime_factors(n: usize) -> Vec<usize> {
    let mut spf: Vec<usize> = (0..=n).collect();
    let mut i = 2;
    while i * i <= n {
        if spf[i] == i {
            for j in (i * i..=n).step_by(i) {
                if spf[j] == j {
                    spf[j] = i;
                }
            }
        }
        i += 1;
    }
    spf
}

/// How 𝕐(p) is drawn in [`cumulative_pred_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    /// Independent fair signs.
    Uniform,
    /// Every 𝕐(p) = +1; a single-point distribution.
    AllPlus,
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Samples per independent RNG stream.
const MC_CHUNK: usize = 1024;

/// ½·E(Li(π²H²/L(1,𝕐)²)) over the table primes, by Monte Carlo.
pub fn cumulative_pred(h: f64, table: &PrimeTable, samples: usize, seed: u64) -> Result<Estimate> {
    cumulative_pred_with(h, table, samples, seed, Sampler::Uniform)
}

pub fn cumulative_pred_with(
    h: f64,
    table: &PrimeTable,
    samples: usize,
    seed: u64,
    sampler: Sampler,
) -> Result<Estimate> {
    if !(h >= 1e3) {
        return Err(Error::Domain(format!("cumulative prediction needs H ≥ 1000, got {h}")));
    }
    if samples < 1000 {
        return Err(Error::Domain(format!("need at least 1000 samples, got {samples}")));
    }
    // −log(1 − y/p) for y = +1 and y = −1
    let plus: Vec<f64> = table.iter().map(|p| -(-1.0 / p as f64).ln_1p()).collect();
    let minus: Vec<f64> = table.iter().map(|p| -(1.0 / p as f64).ln_1p()).collect();
    let log_target = 2.0 * (PI * h).ln();
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let n = MC_CHUNK.min(samples - c * MC_CHUNK);
            let (mut mean, mut m2) = (0.0, 0.0);
            for k in 0..n {
                let mut log_l = 0.0;
                let mut bits = 0u64;
                for (i, (a, b)) in plus.iter().zip(&minus).enumerate() {
                    let up = match sampler {
                        Sampler::AllPlus => true,
                        Sampler::Uniform => {
                            if i % 64 == 0 {
                                bits = rng.next_u64();
                            }
                            let bit = bits & 1 == 1;
                            bits >>= 1;
                            bit
                        }
                    };
                    log_l += if up { a } else { b };
                }
                let x = (log_target - 2.0 * log_l).exp();
                let v = 0.5 * log_integral(x).expect("argument far above 2");
                let delta = v - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (v - mean);
            }
            (mean, m2, n)
        })
        .collect();
    // combine per-chunk (mean, M2) pairs
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for (cm, cm2, cn) in partial {
        let total = n + cn;
        let delta = cm - mean;
        mean += delta * cn as f64 / total as f64;
        m2 += cm2 + delta * delta * (n as f64) * (cn as f64) / total as f64;
        n = total;
    }
    let var = m2 / (n as f64 - 1.0);
    Ok(Estimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        samples: n,
    })
}

/// Cohen–Lenstra divisibility probabilities for an odd class number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClProbabilities {
    /// Prob(pⁿ ∥ h)
    pub prob_exact: f64,
    /// Prob(pⁿ | h)
    pub prob_divides: f64,
    /// η∞(p) = ∏_{i≥1} (1 − p^{−i})
    pub eta_inf: f64,
}

/// ∏_{i≥from} (1 − p^{−i}), truncated once p^{−i} < 10⁻¹⁶.
fn tail_product(p: u64, from: u32) -> f64 {
    let inv = 1.0 / p as f64;
    let mut t = inv.powi(from as i32);
    let mut acc = 1.0;
    while t > INNER_EPS {
        acc *= 1.0 - t;
        t *= inv;
    }
    acc
}

pub fn cl_probabilities(p: u64, n: u32) -> Result<ClProbabilities> {
    if p < 3 || !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not an odd prime")));
    }
    let prob_divides = if n == 0 { 1.0 } else { 1.0 - tail_product(p, n) };
    Ok(ClProbabilities {
        prob_exact: (p as f64).powi(-(n as i32)) * tail_product(p, n + 1),
        prob_divides,
        eta_inf: tail_product(p, 1),
    })
}

/// ∏_{distinct parts} ∏_{j=1}^{m} (1 − p^{−j}) as an exact rational.
fn multiplicity_product(p: &BigInt, lambda: &Partition) -> BigRational {
    let mut acc = BigRational::one();
    for m in lambda.multiplicities() {
        for j in 1..=m {
            let pj: BigInt = Pow::pow(p, j);
            acc *= BigRational::new(&pj - 1, pj);
        }
    }
    acc
}

fn rational_pow(p: &BigInt, e: i64) -> BigRational {
    let base: BigInt = Pow::pow(p, e.unsigned_abs());
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(BigInt::one(), base)
    }
}

/// |Aut(G_λ(p))| = p^{2n−c(λ)} ∏∏ (1 − p^{−j}).
pub fn aut_order(shape: &GroupShape) -> BigUint {
    let p = BigInt::from(shape.p());
    let n = i64::from(shape.n());
    let value = rational_pow(&p, 2 * n - shape.cyclicity()) * multiplicity_product(&p, shape.lambda());
    assert!(value.is_integer(), "automorphism count must be an integer");
    value
        .to_integer()
        .to_biguint()
        .expect("automorphism count is positive")
}

/// P(G_λ(p)) = p^{c(λ)−n} ∏∏ (1 − p^{−j})^{−1} ∏_{i=1}^{n} (1 − p^{−i}).
pub fn pgroup_prob(shape: &GroupShape) -> BigRational {
    let p = BigInt::from(shape.p());
    let n = shape.n();
    let mut acc = rational_pow(&p, shape.cyclicity() - i64::from(n))
        / multiplicity_product(&p, shape.lambda());
    for i in 1..=n {
        let pi: BigInt = Pow::pow(&p, i);
        acc *= BigRational::new(&pi - 1, pi);
    }
    acc
}

/// Σ_{|G|=pⁿ} 1/|Aut G| = p^{−n} ∏_{i=1}^{n} (1 − p^{−i})^{−1}.
pub fn aut_mass(p: u64, n: u32) -> BigRational {
    let p = BigInt::from(p);
    let mut acc = rational_pow(&p, -i64::from(n));
    for i in 1..=n {
        let pi: BigInt = Pow::pow(&p, i);
        acc *= BigRational::new(pi.clone(), pi - 1);
    }
    acc
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    match (n.to_f64(), d.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() && b != 0.0 => a / b,
        _ => {
            // scale both down to keep the quotient representable
            let shift = n.bits().max(d.bits()).saturating_sub(1000);
            let a = (n.abs() >> shift).to_f64().unwrap_or(f64::MAX);
            let b = (d >> shift).to_f64().unwrap_or(f64::MAX);
            if n.is_negative() {
                -a / b
            } else {
                a / b
            }
        }
    }
}

/// Expected 𝓕(G_λ(p)) by the finite formula and its large-p asymptotic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FgPrediction {
    pub finite_pred: f64,
    pub asymptotic: f64,
}

pub fn predict_fg(shape: &GroupShape, k: &PredictionConstants) -> Result<FgPrediction> {
    let n = shape.n();
    let order = shape
        .order()
        .ok_or_else(|| Error::Domain(format!("|G| for {shape} exceeds 64 bits")))?;
    let p = shape.p() as f64;
    Ok(FgPrediction {
        finite_pred: rational_to_f64(&pgroup_prob(shape)) * pred(order, k)?,
        asymptotic: k.frak_c / f64::from(n) * p.powi(shape.cyclicity() as i32) / p.ln(),
    })
}

/// Σ over odd primes p in the table and n ≥ n_min (at most n_max) with
/// pⁿ > cutoff of 1/(n·p^{n²−2n}·log p).
pub fn rank3_sum(cutoff: f64, table: &PrimeTable, n_max: Option<u32>) -> f64 {
    let mut total = 0.0;
    for p in table.iter().filter(|&p| p >= 3) {
        let lp = (p as f64).ln();
        let mut n = 3u32;
        while f64::from(n) * lp <= cutoff.ln() {
            n += 1;
        }
        loop {
            if n_max.is_some_and(|m| n > m) {
                break;
            }
            let nf = f64::from(n);
            let term = (-(nf * nf - 2.0 * nf) * lp).exp() / (nf * lp);
            if term == 0.0 || term < total * 1e-18 {
                break;
            }
            total += term;
            n += 1;
        }
    }
    total
}

/// Expected number of elementary abelian class groups of rank ≥ 3 with
/// order above the cutoff: 𝔠·∏(1 − 2^{−i})^{−1} times [`rank3_sum`].
pub fn rank3_bound(cutoff: f64, table: &PrimeTable) -> Result<f64> {
    if !(cutoff >= 1e6) {
        return Err(Error::Domain(format!("rank-3 bound needs cutoff ≥ 1e6, got {cutoff}")));
    }
    let k = frak_c(table, FRAK_C_PRIME_LIMIT);
    Ok(k / tail_product(2, 1) * rank3_sum(cutoff, table, None))
}

/// Prime table large enough for the published constants.
pub fn paper_table() -> Result<PrimeTable> {
    PrimeTable::with_count(PAPER_PRIME_COUNT)
}

/// Primes up to 10⁴, used for the Monte Carlo model by default.
pub fn monte_carlo_table() -> Result<PrimeTable> {
    sieve_primes(10_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::enumerate_partitions;

    fn shape(s: &str) -> GroupShape {
        s.parse().unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn shape_parsing() {
        let s = shape("3:2+1");
        assert_eq!((s.p(), s.n(), s.order()), (3, 3, Some(27)));
        assert_eq!(s.to_string(), "3:2+1");
        assert!("2:1".parse::<GroupShape>().is_err());
        assert!("9:1".parse::<GroupShape>().is_err());
        assert!("3-1".parse::<GroupShape>().is_err());
    }

    #[test]
    fn moment_examples() {
        let t = sieve_primes(10_000).unwrap();
        assert_eq!(euler_moment(0.0, &t).unwrap().value, 1.0);
        let big = paper_table().unwrap();
        let m = euler_moment(-2.0, &big).unwrap();
        assert!((m.value - 15.0 / (PI * PI)).abs() < 1e-6);
        assert!(m.last_factor_deviation < 1e-12);
        assert!(euler_moment(-11.0, &t).is_err());
    }

    #[test]
    fn moment_matches_sampling() {
        use rand::Rng;
        let t = sieve_primes(10_000).unwrap();
        let exact = euler_moment(-2.0, &t).unwrap().value;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| {
                t.iter()
                    .map(|p| {
                        let y = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        (1.0 - y / p as f64).powi(2)
                    })
                    .product()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((mean - exact).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn constants_with_few_primes_warn() {
        let k = prediction_constants(&sieve_primes(10_000).unwrap());
        assert!(k.precision_warning.is_some());
        assert!(k.c1 < 0.0 && k.c2 > 0.0 && k.c3 < 0.0);
        assert!(k.frak_c > 11.0 && k.frak_c < 11.6);
    }

    #[test]
    fn cache_round_trip() {
        let k = prediction_constants(&sieve_primes(20_000).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("constants.tsv");
        k.write_cache(&path).unwrap();
        let back = PredictionConstants::read_cache(&path).unwrap();
        assert_eq!(back.frak_c, k.frak_c);
        assert_eq!(back.c3, k.c3);
        assert_eq!(back.prime_count, k.prime_count);
        fs::write(&path, "frakC\t1.0\t5\nc9\t1\t5\n").unwrap();
        match PredictionConstants::read_cache(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn c_factor_examples() {
        assert_eq!(c_factor(1).unwrap(), rat(1, 1));
        assert_eq!(c_factor(9).unwrap(), rat(27, 16));
        assert_eq!(c_factor(15).unwrap(), rat(15, 8));
        assert!(c_factor(10).is_err());
        assert!((c_factor_f64(9).unwrap() - 27.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn c_tilde_identity() {
        let t = sieve_primes(20_000).unwrap();
        let k = frak_c(&t, u64::MAX);
        for h in (1..1000u64).step_by(2) {
            let want = k / 15.0 * c_factor_f64(h).unwrap();
            let got = c_tilde(h, &t).unwrap();
            assert!((got / want - 1.0).abs() < 1e-9, "h = {h}");
        }
    }

    #[test]
    fn pred_domain() {
        let k = prediction_constants(&sieve_primes(10_000).unwrap());
        assert!(pred(1, &k).is_err());
        assert!(pred(4, &k).is_err());
        assert!(pred(3, &k).unwrap() > 0.0);
    }

    #[test]
    fn pred_monotone_on_fixed_factor() {
        // primes h have 𝔠(h) = h/(h−1), close to constant; use h = 3p
        let k = prediction_constants(&sieve_primes(10_000).unwrap());
        let mut prev = 0.0;
        for p in sieve_primes(300_000).unwrap().iter().filter(|&p| p > 400) {
            let v = pred(3 * p, &k).unwrap() / c_factor_f64(3 * p).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn degenerate_sampler_is_exact() {
        let t = sieve_primes(1_000).unwrap();
        let h = 1e4;
        let est = cumulative_pred_with(h, &t, 1000, 0, Sampler::AllPlus).unwrap();
        let log_l: f64 = t.iter().map(|p| -(-1.0 / p as f64).ln_1p()).sum();
        let want = 0.5 * log_integral((PI * h).powi(2) / (2.0 * log_l).exp()).unwrap();
        assert!((est.mean / want - 1.0).abs() < 1e-12);
        assert!(est.std_error < 1e-9 * want);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let t = sieve_primes(1_000).unwrap();
        let a = cumulative_pred(1e4, &t, 3000, 9).unwrap();
        let b = cumulative_pred(1e4, &t, 3000, 9).unwrap();
        assert_eq!(a, b);
        assert!(cumulative_pred(10.0, &t, 3000, 9).is_err());
        assert!(cumulative_pred(1e4, &t, 10, 9).is_err());
    }

    #[test]
    fn cl_probability_examples() {
        let c = cl_probabilities(3, 1).unwrap();
        assert!((c.prob_divides - 0.4399).abs() < 1e-4);
        let c0 = cl_probabilities(3, 0).unwrap();
        assert!((c0.prob_exact - 0.5601).abs() < 1e-4);
        assert_eq!(c0.prob_exact, c0.eta_inf);
        assert_eq!(c0.prob_divides, 1.0);
        let total: f64 = (0..60).map(|n| cl_probabilities(3, n).unwrap().prob_exact).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Prob(pⁿ∥h) = Prob(pⁿ|h) − Prob(pⁿ⁺¹|h)
        for n in 0..6 {
            let a = cl_probabilities(5, n).unwrap();
            let b = cl_probabilities(5, n + 1).unwrap();
            assert!((a.prob_exact - (a.prob_divides - b.prob_divides)).abs() < 1e-15);
        }
        assert!(cl_probabilities(4, 1).is_err());
    }

    #[test]
    fn aut_examples() {
        assert_eq!(aut_order(&shape("3:1+1")), BigUint::from(48u32));
        assert_eq!(aut_order(&shape("3:2")), BigUint::from(6u32));
        assert_eq!(aut_order(&shape("3:2+1")), BigUint::from(108u32));
    }

    #[test]
    fn pgroup_examples() {
        assert_eq!(pgroup_prob(&shape("3:2")), rat(8, 9));
        assert_eq!(pgroup_prob(&shape("3:1+1")), rat(1, 9));
        assert_eq!(pgroup_prob(&shape("7:1")), rat(1, 1));
    }

    #[test]
    fn mass_identities() {
        for p in [3u64, 5, 7] {
            for n in 1..=5 {
                let parts = enumerate_partitions(n).unwrap();
                let mass: BigRational = parts
                    .iter()
                    .map(|l| {
                        let a = aut_order(&GroupShape::new(p, l.clone()).unwrap());
                        BigRational::new(BigInt::one(), BigInt::from(a))
                    })
                    .sum();
                assert_eq!(mass, aut_mass(p, n));
                let prob: BigRational = parts
                    .iter()
                    .map(|l| pgroup_prob(&GroupShape::new(p, l.clone()).unwrap()))
                    .sum();
                assert!(prob.is_one());
                for l in &parts {
                    let s = GroupShape::new(p, l.clone()).unwrap();
                    let a = BigRational::from_integer(BigInt::from(aut_order(&s)));
                    assert_eq!(pgroup_prob(&s), BigRational::one() / a / aut_mass(p, n));
                }
            }
        }
    }

    #[test]
    fn fg_predictions() {
        let k = prediction_constants(&sieve_primes(20_000).unwrap());
        let z27 = predict_fg(&shape("3:3"), &k).unwrap();
        let expect = rational_to_f64(&pgroup_prob(&shape("3:3"))) * pred(27, &k).unwrap();
        assert_eq!(z27.finite_pred, expect);
        assert!(z27.finite_pred > 10.0 && z27.finite_pred < 1000.0);
        let big = predict_fg(&shape("1009:1+1+1"), &k).unwrap();
        assert!(big.asymptotic < 1e-9);
        let ratios: Vec<f64> = [1009u64, 10_007, 100_003]
            .iter()
            .map(|&p| {
                let f = predict_fg(&GroupShape::new(p, "2+1".parse().unwrap()).unwrap(), &k).unwrap();
                f.finite_pred / f.asymptotic
            })
            .collect();
        assert!((ratios[2] - 1.0).abs() < (ratios[0] - 1.0).abs());
        assert!((ratios[2] - 1.0).abs() < 0.15);
    }

    #[test]
    fn rank3_examples() {
        let t = sieve_primes(1_000_000).unwrap();
        let b6 = rank3_bound(1e6, &t).unwrap();
        assert!(b6 > 0.0 && b6 <= 1e-4, "{b6}");
        assert!(rank3_bound(1e9, &t).unwrap() < b6);
        assert!(rank3_sum(1e6, &t, Some(3)) <= rank3_sum(1e6, &t, None));
        assert!(rank3_bound(1e5, &t).is_err());
    }

    #[test]
    fn sum_pred_matches_direct() {
        let k = prediction_constants(&sieve_primes(10_000).unwrap());
        let direct: f64 = (3..=2001u64).step_by(2).map(|h| pred(h, &k).unwrap()).sum();
        assert!((sum_pred(2001, &k) / direct - 1.0).abs() < 1e-12);
    }
}
