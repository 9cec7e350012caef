//! Fit diagnostics: normalized residuals, the empirical three-divisibility
//! adjustment of pred(h), and histogram summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::heuristics::{cl_probabilities, pred, PredictionConstants};

/// (observed − predicted)/√predicted.
pub fn residual_from(observed: u64, predicted: f64) -> Result<f64> {
    if !(predicted > 0.0) {
        return Err(Error::Domain(format!("prediction {predicted} is not positive")));
    }
    Ok((observed as f64 - predicted) / predicted.sqrt())
}

/// r(h) = (𝓕(h) − pred(h))/√pred(h).
pub fn residual(h: u64, observed: u64, k: &PredictionConstants) -> Result<f64> {
    residual_from(observed, pred(h, k)?)
}

/// Exponent of 3 in h and the k with h ∈ [3ᵏ, 3ᵏ⁺¹).
pub fn three_adic_position(h: u64) -> (u32, u32) {
    let k = h.ilog(3);
    let mut n = 0;
    let mut m = h;
    while m % 3 == 0 {
        m /= 3;
        n += 1;
    }
    (k, n)
}

/// Observed Prob(3ⁿ ∥ h | h ∈ [3ᵏ, 3ᵏ⁺¹)) from a table of 𝓕(h).
#[derive(Clone, Debug, PartialEq)]
pub struct ThreeBiasTable {
    /// (k, n) ↦ probability, for every n ≤ k of each observed interval.
    probs: BTreeMap<(u32, u32), f64>,
    /// (k, n) ↦ Σ_{3ⁿ∥h} 𝓕(h) over the interval.
    counts: BTreeMap<(u32, u32), u64>,
    /// k ↦ Σ 𝓕(h) over the interval.
    totals: BTreeMap<u32, u64>,
    /// Entries with k above this are not used for adjustment.
    pub k_max: Option<u32>,
    /// Only n ≤ k − min_gap are used for adjustment.
    pub min_gap: u32,
}

impl ThreeBiasTable {
    /// None when no class number of the interval was observed.
    pub fn entry(&self, k: u32, n: u32) -> Option<f64> {
        self.probs.get(&(k, n)).copied()
    }

    pub fn entries(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.probs
    }

    pub fn count(&self, k: u32, n: u32) -> u64 {
        self.counts.get(&(k, n)).copied().unwrap_or(0)
    }

    pub fn total(&self, k: u32) -> Option<u64> {
        self.totals.get(&k).copied()
    }

    pub fn intervals(&self) -> impl Iterator<Item = u32> + '_ {
        let mut ks: Vec<u32> = self.probs.keys().map(|&(k, _)| k).collect();
        ks.dedup();
        ks.into_iter()
    }

    /// Whether (k, n) is inside the adjustment domain and observed.
    pub fn covers(&self, k: u32, n: u32) -> bool {
        self.probs.contains_key(&(k, n))
            && n + self.min_gap <= k
            && self.k_max.is_none_or(|m| k <= m)
    }

    /// Table of given probabilities with no underlying counts.
    pub fn from_probabilities(probs: &BTreeMap<(u32, u32), f64>) -> Self {
        Self {
            probs: probs.clone(),
            counts: BTreeMap::new(),
            totals: BTreeMap::new(),
            k_max: None,
            min_gap: 3,
        }
    }
}

/// Interval-wise 3-adic distribution of the class numbers in `fh`.
pub fn three_bias_table(fh: &BTreeMap<u64, u64>) -> ThreeBiasTable {
    let mut counts = BTreeMap::new();
    let mut totals = BTreeMap::new();
    for (&h, &c) in fh {
        if h % 2 == 0 || c == 0 {
            continue;
        }
        let (k, n) = three_adic_position(h);
        *counts.entry((k, n)).or_insert(0) += c;
        *totals.entry(k).or_insert(0) += c;
    }
    let mut probs = BTreeMap::new();
    for (&k, &total) in &totals {
        for n in 0..=k {
            let c = counts.get(&(k, n)).copied().unwrap_or(0);
            probs.insert((k, n), c as f64 / total as f64);
        }
    }
    ThreeBiasTable {
        probs,
        counts,
        totals,
        k_max: None,
        min_gap: 3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjustedPred {
    pub value: f64,
    /// False when (k, n) was not covered and plain pred(h) was returned.
    pub adjusted: bool,
}

/// pred′(h): pred(h) with its Cohen–Lenstra factor Prob(3ⁿ ∥ h) replaced by
/// the observed frequency for h's interval.
pub fn pred_adjusted(
    h: u64,
    k: &PredictionConstants,
    bias: &ThreeBiasTable,
) -> Result<AdjustedPred> {
    let base = pred(h, k)?;
    let (kk, n) = three_adic_position(h);
    if !bias.covers(kk, n) {
        return Ok(AdjustedPred {
            value: base,
            adjusted: false,
        });
    }
    let observed = bias.entry(kk, n).expect("covered");
    let expected = cl_probabilities(3, n)?.prob_exact;
    Ok(AdjustedPred {
        value: base * observed / expected,
        adjusted: true,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub mean: f64,
    /// Population standard deviation.
    pub sigma: f64,
    pub n: usize,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lo + w * i as f64, self.lo + w * (i + 1) as f64)
    }

    /// `bin_lo,bin_hi,count` rows and a trailing `# mu= sigma= n=` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let (a, b) = self.edges(i);
            writeln!(out, "{a},{b},{c}").expect("write to string");
        }
        writeln!(out, "# mu={} sigma={} n={}", self.mean, self.sigma, self.n)
            .expect("write to string");
        out
    }
}

/// Uniform bins over [lo, hi]; out-of-range values land in the end bins but
/// count fully toward μ and σ.
pub fn histogram_stats(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if values.is_empty() {
        return Err(Error::Domain("histogram of no values".into()));
    }
    if bins == 0 || !(lo < hi) {
        return Err(Error::Domain(format!("need bins ≥ 1 and lo < hi, got {bins}, [{lo}, {hi}]")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("histogram values must be finite".into()));
    }
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let i = ((v - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
        counts[i] += 1;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(Histogram {
        lo,
        hi,
        counts,
        mean,
        sigma: var.sqrt(),
        n: values.len(),
    })
}
