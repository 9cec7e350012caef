//! GRH-certified approximation of h(d) from a truncated Euler product, and
//! the GRH lower bound for class numbers of large discriminants.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forms::Discriminant;
use crate::numtheory::{kronecker, sieve_primes, EULER_GAMMA};

/// Prime reciprocal constant B = lim Σ_{p≤x} 1/p − log log x.
pub const MERTENS_B: f64 = 0.261_497_212_8;

/// Smallest x2 for which the explicit L-function bound holds.
pub const MIN_X2: u64 = 100_000;

/// Up to this x1 the Kronecker symbols come from precomputed residue tables.
const RESIDUE_TABLE_LIMIT: u64 = 5_000;

/// Truncation points: ν sums over p ≤ x1, the error term uses x2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EstimatorParams {
    x1: u64,
    x2: u64,
}

impl EstimatorParams {
    pub fn new(x1: u64, x2: u64) -> Result<Self> {
        if x2 < MIN_X2 {
            return Err(Error::Hypothesis(format!("x2 = {x2} is below {MIN_X2}")));
        }
        if x1 == 0 || x1 >= x2 {
            return Err(Error::Hypothesis(format!("need 1 ≤ x1 < x2, got x1 = {x1}, x2 = {x2}")));
        }
        Ok(Self { x1, x2 })
    }

    /// The widest x1 allowed for a given x2; gives E close to 1.
    pub fn tight(x2: u64) -> Result<Self> {
        Self::new(x2.saturating_sub(1), x2)
    }

    pub fn x1(&self) -> u64 {
        self.x1
    }

    pub fn x2(&self) -> u64 {
        self.x2
    }
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self { x1: 1_000, x2: MIN_X2 }
    }
}

/// h_approx with its certified multiplicative error factor E.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HApproxResult {
    pub h_approx: f64,
    pub error_factor: f64,
}

impl HApproxResult {
    pub fn lower(&self) -> f64 {
        self.h_approx / self.error_factor
    }

    pub fn upper(&self) -> f64 {
        self.h_approx * self.error_factor
    }

    pub fn certified_interval(&self) -> (f64, f64) {
        (self.lower(), self.upper())
    }

    pub fn contains(&self, h: u64) -> bool {
        let h = h as f64;
        self.lower() <= h && h <= self.upper()
    }
}

/// Precomputed d-independent parts of the estimator for one (x1, x2).
#[derive(Clone, Debug)]
pub struct Estimator {
    params: EstimatorParams,
    primes: Vec<u64>,
    /// Quadratic residue tables indexed by d mod p, when x1 is small.
    residues: Option<Vec<Vec<i8>>>,
    /// log log x2 + B + (3 log x2 + 4)/(8π√x2) − Σ_{p≤x1} 1/p + 1/x1
    eta_tail: f64,
}

impl Estimator {
    pub fn new(params: EstimatorParams) -> Result<Self> {
        let primes = if params.x1 >= 2 {
            sieve_primes(params.x1)?.primes().to_vec()
        } else {
            Vec::new()
        };
        let recip: f64 = primes.iter().map(|&p| 1.0 / p as f64).sum();
        let lx2 = (params.x2 as f64).ln();
        let sx2 = (params.x2 as f64).sqrt();
        let eta_tail = lx2.ln() + MERTENS_B + (3.0 * lx2 + 4.0) / (8.0 * PI * sx2) - recip
            + 1.0 / params.x1 as f64;
        let residues = (params.x1 <= RESIDUE_TABLE_LIMIT).then(|| {
            primes
                .iter()
                .map(|&p| {
                    if p == 2 {
                        return Vec::new();
                    }
                    let mut t = vec![-1i8; p as usize];
                    t[0] = 0;
                    for x in 1..=p / 2 {
                        t[(x * x % p) as usize] = 1;
                    }
                    t
                })
                .collect()
        });
        Ok(Self {
            params,
            primes,
            residues,
            eta_tail,
        })
    }

    pub fn params(&self) -> EstimatorParams {
        self.params
    }

    fn chi(&self, i: usize, d: i64) -> i32 {
        let p = self.primes[i];
        match &self.residues {
            Some(tables) if p != 2 => i32::from(tables[i][d.rem_euclid(p as i64) as usize]),
            _ => kronecker(d, p),
        }
    }

    /// ν(x1, d) = Σ_{p≤x1} −log(1 − (d/p)/p).
    pub fn nu(&self, d: Discriminant) -> f64 {
        let dv = d.value();
        (0..self.primes.len())
            .map(|i| {
                let p = self.primes[i] as f64;
                -(-f64::from(self.chi(i, dv)) / p).ln_1p()
            })
            .sum()
    }

    pub fn eta(&self, d: Discriminant) -> f64 {
        let lx2 = (self.params.x2 as f64).ln();
        (1.562 * (d.abs() as f64).ln() + 0.655 * lx2) / (self.params.x2 as f64).sqrt()
            + self.eta_tail
    }

    /// Certified interval for h(d), valid under GRH for fundamental d < −8.
    pub fn h_interval(&self, d: Discriminant) -> Result<HApproxResult> {
        if d.value() >= -8 || !d.is_fundamental() {
            return Err(Error::Hypothesis(format!(
                "the estimate needs a fundamental d < -8, got {d}"
            )));
        }
        let h_approx = (d.abs() as f64).sqrt() / PI * self.nu(d).exp();
        Ok(HApproxResult {
            h_approx,
            error_factor: self.eta(d).exp(),
        })
    }
}

pub fn nu(params: EstimatorParams, d: Discriminant) -> Result<f64> {
    Ok(Estimator::new(params)?.nu(d))
}

pub fn eta(params: EstimatorParams, d: Discriminant) -> Result<f64> {
    Ok(Estimator::new(params)?.eta(d))
}

pub fn h_interval(params: EstimatorParams, d: Discriminant) -> Result<HApproxResult> {
    Estimator::new(params)?.h_interval(d)
}

/// GRH lower bound for h(−q), valid for q ≥ 10¹⁰.
pub fn grh_floor(q: f64) -> Result<f64> {
    if !(q >= 1e10) {
        return Err(Error::Hypothesis(format!("the class number floor needs q ≥ 1e10, got {q}")));
    }
    let lq = q.ln();
    let llq = lq.ln();
    let bracket = llq - 2f64.ln() + 0.5 + 1.0 / llq + 14.0 * llq / lq;
    Ok(PI / (12.0 * EULER_GAMMA.exp()) * q.sqrt() / bracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::enumerate_reduced;

    fn disc(d: i64) -> Discriminant {
        Discriminant::fundamental(d).unwrap()
    }

    fn p(x1: u64, x2: u64) -> EstimatorParams {
        EstimatorParams::new(x1, x2).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(matches!(EstimatorParams::new(10, 99_999), Err(Error::Hypothesis(_))));
        assert!(EstimatorParams::new(0, 100_000).is_err());
        assert!(EstimatorParams::new(100_000, 100_000).is_err());
        assert_eq!(EstimatorParams::tight(100_000).unwrap().x1(), 99_999);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu(p(1, MIN_X2), disc(-23)).unwrap(), 0.0);
        let v = nu(p(2, MIN_X2), disc(-23)).unwrap();
        assert!((v + 0.5f64.ln()).abs() < 1e-15);
        let v = nu(p(3, MIN_X2), disc(-4)).unwrap();
        assert!((v + (1.0 + 1.0 / 3.0f64).ln()).abs() < 1e-15);
    }

    #[test]
    fn residue_tables_agree_with_kronecker() {
        let small = Estimator::new(p(1_000, MIN_X2)).unwrap();
        assert!(small.residues.is_some());
        for q in [23i64, 163, 3299, 1_000_003, 9_999_991] {
            let d = disc(-q);
            let direct: f64 = sieve_primes(1_000)
                .unwrap()
                .iter()
                .map(|pr| -(1.0 - f64::from(kronecker(-q, pr)) / pr as f64).ln())
                .sum();
            assert!((small.nu(d) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_direct_evaluation() {
        let d = disc(-10_000_019);
        let got = eta(p(1_000, MIN_X2), d).unwrap();
        let x2 = 1e5f64;
        let recip: f64 = sieve_primes(1_000).unwrap().iter().map(|q| 1.0 / q as f64).sum();
        let want = (1.562 * 10_000_019f64.ln() + 0.655 * x2.ln()) / x2.sqrt()
            + x2.ln().ln()
            + 0.2614972128
            + (3.0 * x2.ln() + 4.0) / (8.0 * PI * x2.sqrt())
            - recip
            + 1e-3;
        assert!(got > 0.0 && got.is_finite());
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn eta_tail_at_x1_one() {
        let d = disc(-23);
        let x2 = 1e5f64;
        let without = (1.562 * 23f64.ln() + 0.655 * x2.ln()) / x2.sqrt()
            + x2.ln().ln()
            + MERTENS_B
            + (3.0 * x2.ln() + 4.0) / (8.0 * PI * x2.sqrt());
        assert!((eta(p(1, MIN_X2), d).unwrap() - without - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eta_in_x2_with_fixed_x1() {
        // The log log x2 term outgrows the shrinking error terms, so with x1
        // held fixed a larger x2 gives a larger η.
        let d = disc(-10_000_019);
        let a = eta(p(1_000, 100_000), d).unwrap();
        let b = eta(p(1_000, 400_000), d).unwrap();
        assert!(b > a);
    }

    #[test]
    fn tight_params_shrink_with_x2() {
        let d = disc(-10_000_019);
        let mut prev = f64::INFINITY;
        for x2 in [100_000u64, 200_000, 400_000, 800_000] {
            let e = eta(EstimatorParams::tight(x2).unwrap(), d).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn intervals_contain_small_class_numbers() {
        let est = Estimator::new(EstimatorParams::default()).unwrap();
        for (d, h) in [(-163, 1u64), (-23, 3), (-3299, 27), (-4027, 9)] {
            assert!(est.h_interval(disc(d)).unwrap().contains(h), "d = {d}");
        }
        assert!(est.h_interval(disc(-8)).is_err());
    }

    #[test]
    fn intervals_contain_enumerated_h() {
        let est = Estimator::new(EstimatorParams::default()).unwrap();
        let tight = Estimator::new(EstimatorParams::tight(MIN_X2).unwrap()).unwrap();
        let primes = sieve_primes(100_000).unwrap();
        for q in primes.iter().filter(|&q| q >= 10_000 && q % 4 == 3).step_by(3) {
            let d = disc(-(q as i64));
            let h = enumerate_reduced(d).unwrap().len() as u64;
            assert!(est.h_interval(d).unwrap().contains(h), "d = -{q}");
            assert!(tight.h_interval(d).unwrap().contains(h), "d = -{q}");
        }
    }

    #[test]
    fn interval_brackets_longer_product() {
        // the truncated product up to x2 should land inside the interval
        let est = Estimator::new(EstimatorParams::default()).unwrap();
        let long = Estimator::new(EstimatorParams::tight(MIN_X2).unwrap()).unwrap();
        for q in [10_007i64, 1_000_003, 9_999_991] {
            let d = disc(-q);
            let r = est.h_interval(d).unwrap();
            let v = (q as f64).sqrt() / PI * long.nu(d).exp();
            assert!(r.lower() <= v && v <= r.upper());
        }
    }

    #[test]
    fn grh_floor_values() {
        assert!(grh_floor(1.1881e15).unwrap() > 1e6);
        let f = grh_floor(1e10).unwrap();
        assert!(f > 1e3 && f < 1e4, "{f}");
        assert!(grh_floor(2e10).unwrap() > f);
        assert!(matches!(grh_floor(9e9), Err(Error::Hypothesis(_))));
        let mut prev = 0.0;
        for k in 0..50 {
            let v = grh_floor(1e10 * 1.5f64.powi(k)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
