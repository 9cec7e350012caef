//! Order computations: divisor descent and baby-step giant-step searches
//! inside a window known to contain h(d).

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{prime_form, Discriminant, QuadForm};
use crate::error::{Error, Result};
use crate::numtheory::{factorize, kronecker};

/// Number of small prime forms random probes are built from.
const PROBE_BASES: usize = 8;

/// Exact order of `g`, given that g^h is the identity.
pub fn element_order(g: QuadForm, h: u64) -> Result<u64> {
    if h == 0 {
        return Err(Error::Domain("element_order needs h ≥ 1".into()));
    }
    if !g.pow(h)?.is_identity() {
        return Err(Error::Inconsistent(format!("{g}^{h} is not the identity")));
    }
    let mut n = h;
    for (p, _) in factorize(h) {
        while n % p == 0 && g.pow(n / p)?.is_identity() {
            n /= p;
        }
    }
    Ok(n)
}

/// Seeded supply of pseudo-random class group elements, each a product of
/// random powers of the smallest split prime forms.
#[derive(Clone, Debug)]
pub struct ProbeSource {
    bases: Vec<QuadForm>,
    rng: ChaCha8Rng,
}

impl ProbeSource {
    pub fn new(disc: Discriminant, seed: u64) -> Self {
        let mut bases = Vec::with_capacity(PROBE_BASES);
        let mut p = 2u64;
        // Bounded scan: a fundamental discriminant has split primes below any
        // reasonable limit, but tiny |d| may have few classes at all.
        while bases.len() < PROBE_BASES && p < 10_000 {
            if crate::numtheory::is_prime(p) && kronecker(disc.value(), p) == 1 {
                if let Some(f) = prime_form(disc, p) {
                    bases.push(f);
                }
            }
            p += 1;
        }
        let stream = seed ^ (disc.value() as u64).rotate_left(17);
        Self {
            bases,
            rng: ChaCha8Rng::seed_from_u64(stream),
        }
    }

    pub fn bases(&self) -> &[QuadForm] {
        &self.bases
    }

    pub fn next_element(&mut self, disc: Discriminant) -> Result<QuadForm> {
        let mut acc = disc.principal();
        for f in &self.bases {
            let e = self.rng.random_range(0..1u64 << 32);
            acc = acc.compose(f.pow(e)?)?;
        }
        Ok(acc)
    }
}

/// Result of a windowed order search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BsgsOutcome {
    /// Candidate h* in the window killing every probe.
    pub h: u64,
    /// lcm of the probe orders; divides the group exponent.
    pub exponent: u64,
    /// Whether h* is the only multiple of `exponent` in the window, which
    /// proves h(d) = h* once the window is known to contain h(d).
    pub certified: bool,
}

/// Finds t ∈ [t_lo, t_hi] with x^t = 1, returning the exact order of x.
fn order_in_window(x: QuadForm, t_lo: u64, t_hi: u64) -> Result<Option<u64>> {
    let disc = x.discriminant();
    let width = t_hi - t_lo;
    let m = ((width + 1) as f64).sqrt().ceil().max(1.0) as u64;
    let inv = x.inverse();
    let mut table: HashMap<(i64, i64), u64> = HashMap::with_capacity(m as usize);
    let mut step = disc.principal();
    for j in 0..m {
        if j > 0 && step.is_identity() {
            // x has order j < m, found directly
            return Ok(Some(j));
        }
        table.entry(step.key()).or_insert(j);
        step = step.compose(inv)?;
    }
    let giant = x.pow(m)?;
    let mut z = x.pow(t_lo)?;
    let mut base = t_lo;
    loop {
        if let Some(&j) = table.get(&z.key()) {
            let t = base + j;
            if t <= t_hi && t > 0 {
                return element_order(x, t).map(Some);
            }
        }
        base += m;
        if base > t_hi {
            return Ok(None);
        }
        z = z.compose(giant)?;
    }
}

/// Candidate class number in [lo, hi] killing `probes` pseudo-random elements.
///
/// Among several admissible multiples of the probe exponent the one nearest
/// the geometric centre of the window is returned.
pub fn class_number_bsgs(
    disc: Discriminant,
    lo: f64,
    hi: f64,
    probes: usize,
    seed: u64,
) -> Result<BsgsOutcome> {
    let lo_i = lo.max(1.0).ceil() as u64;
    let hi_i = hi.floor() as u64;
    if !(lo.is_finite() && hi.is_finite()) || lo_i > hi_i {
        return Err(Error::SearchFailure {
            d: disc.value(),
            lo: lo_i,
            hi: hi_i,
        });
    }
    let mut source = ProbeSource::new(disc, seed);
    let mut e = 1u64;
    for _ in 0..probes.max(1) {
        let g = source.next_element(disc)?;
        let x = g.pow(e)?;
        if x.is_identity() {
            continue;
        }
        let t_lo = lo_i.div_ceil(e).max(1);
        let t_hi = hi_i / e;
        let fail = Error::SearchFailure {
            d: disc.value(),
            lo: lo_i,
            hi: hi_i,
        };
        if t_lo > t_hi {
            return Err(fail);
        }
        match order_in_window(x, t_lo, t_hi)? {
            Some(ord) => e = e.checked_mul(ord).ok_or(Error::Overflow("probe exponent"))?,
            None => return Err(fail),
        }
    }
    let first = lo_i.div_ceil(e) * e;
    if first > hi_i {
        return Err(Error::SearchFailure {
            d: disc.value(),
            lo: lo_i,
            hi: hi_i,
        });
    }
    let last = hi_i / e * e;
    let centre = (lo.max(1.0) * hi).sqrt();
    let below = ((centre / e as f64).floor() as u64 * e).clamp(first, last);
    let above = (below + e).min(last);
    let h = if (above as f64 - centre).abs() < (centre - below as f64).abs() {
        above
    } else {
        below
    };
    Ok(BsgsOutcome {
        h,
        exponent: e,
        certified: first == last,
    })
}
