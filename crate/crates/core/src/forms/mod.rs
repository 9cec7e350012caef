//! Positive definite binary quadratic forms of negative discriminant and the
//! class group they realize under Gauss composition.

mod bsgs;
mod structure;

pub use bsgs::{class_number_bsgs, element_order, BsgsOutcome, ProbeSource};
pub use structure::{
    class_number_certified, class_number_closure, group_structure, group_structure_detailed,
    group_table_oracle, structure_with_order, ClassGroupStructure, ClassNumberReport,
    StructureConfig, StructureReport, ORACLE_CAP,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::numtheory::{self, kronecker, sqrt_mod_prime};

/// Largest |d| `enumerate_reduced` accepts by default.
pub const ENUMERATION_CAP: u64 = 100_000_000;

/// A negative discriminant d ≡ 0, 1 (mod 4).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Discriminant {
    d: i64,
    fundamental: bool,
}

impl Discriminant {
    pub fn new(d: i64) -> Result<Self> {
        if d >= 0 {
            return Err(Error::Domain(format!("discriminant must be negative, got {d}")));
        }
        if !matches!(d.rem_euclid(4), 0 | 1) {
            return Err(Error::Domain(format!("{d} is not 0 or 1 mod 4")));
        }
        Ok(Self {
            d,
            fundamental: is_fundamental(d)?,
        })
    }

    /// For values already known to be fundamental discriminants.
    pub(crate) fn trusted_fundamental(d: i64) -> Self {
        debug_assert!(d < 0 && is_fundamental(d).unwrap_or(false));
        Self {
            d,
            fundamental: true,
        }
    }

    /// Like [`Discriminant::new`] but rejects non-fundamental values.
    pub fn fundamental(d: i64) -> Result<Self> {
        let disc = Self::new(d)?;
        if !disc.fundamental {
            return Err(Error::Domain(format!("{d} is not a fundamental discriminant")));
        }
        Ok(disc)
    }

    pub fn value(self) -> i64 {
        self.d
    }

    pub fn abs(self) -> u64 {
        self.d.unsigned_abs()
    }

    pub fn is_fundamental(self) -> bool {
        self.fundamental
    }

    /// Number of distinct primes dividing d.
    pub fn prime_divisor_count(self) -> usize {
        numtheory::factorize(self.abs()).len()
    }

    pub fn principal(self) -> QuadForm {
        let d = self.d;
        if d.rem_euclid(4) == 0 {
            QuadForm::raw(1, 0, -d / 4, self)
        } else {
            QuadForm::raw(1, 1, (1 - d) / 4, self)
        }
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.d)
    }
}

/// Whether d < 0 is a fundamental discriminant.
pub fn is_fundamental(d: i64) -> Result<bool> {
    if d >= 0 {
        return Err(Error::Domain(format!("is_fundamental needs d < 0, got {d}")));
    }
    let q = d.unsigned_abs();
    Ok(match d.rem_euclid(4) {
        1 => numtheory::is_squarefree(q),
        // d = 4m with m ≡ 2, 3 (mod 4) and m squarefree
        0 => matches!((d / 4).rem_euclid(4), 2 | 3) && numtheory::is_squarefree(q / 4),
        _ => false,
    })
}

/// A form ax² + bxy + cy² with b² − 4ac = d and a > 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadForm {
    a: i64,
    b: i64,
    c: i64,
    disc: Discriminant,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64, disc: Discriminant) -> Result<Self> {
        let lhs = i128::from(b) * i128::from(b) - 4 * i128::from(a) * i128::from(c);
        if lhs != i128::from(disc.d) || a <= 0 {
            return Err(Error::InvariantViolation(format!(
                "({a}, {b}, {c}) is not a positive definite form of discriminant {}",
                disc.d
            )));
        }
        Ok(Self { a, b, c, disc })
    }

    fn raw(a: i64, b: i64, c: i64, disc: Discriminant) -> Self {
        debug_assert_eq!(
            i128::from(b) * i128::from(b) - 4 * i128::from(a) * i128::from(c),
            i128::from(disc.d)
        );
        Self { a, b, c, disc }
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn c(&self) -> i64 {
        self.c
    }

    pub fn triple(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn discriminant(&self) -> Discriminant {
        self.disc
    }

    /// Hash key; (a, b) determines the form once d is fixed.
    pub fn key(&self) -> (i64, i64) {
        (self.a, self.b)
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn is_identity(&self) -> bool {
        self.a == 1
    }

    /// The unique reduced form equivalent to this one.
    pub fn reduce(self) -> Self {
        let (mut a, mut b, mut c) = (
            i128::from(self.a),
            i128::from(self.b),
            i128::from(self.c),
        );
        loop {
            // normalize: -a < b <= a
            if b > a || b <= -a {
                let two_a = 2 * a;
                let r = (a - b).div_euclid(two_a);
                let nb = b + two_a * r;
                c += r * (b + a * r);
                b = nb;
            }
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            if (a == c || b == -a) && b < 0 {
                b = -b;
            }
            break;
        }
        Self::raw(a as i64, b as i64, c as i64, self.disc)
    }

    pub fn inverse(self) -> Self {
        Self::raw(self.a, -self.b, self.c, self.disc).reduce()
    }

    /// Gauss composition followed by reduction.
    pub fn compose(self, other: Self) -> Result<Self> {
        if self.disc != other.disc {
            return Err(Error::Domain(format!(
                "cannot compose forms of discriminants {} and {}",
                self.disc, other.disc
            )));
        }
        compose_raw(&self, &other)
    }

    pub fn square(self) -> Result<Self> {
        compose_raw(&self, &self)
    }

    pub fn pow(self, mut n: u64) -> Result<Self> {
        let mut acc = self.disc.principal();
        let mut base = self;
        while n > 0 {
            if n & 1 == 1 {
                acc = compose_raw(&acc, &base)?;
            }
            n >>= 1;
            if n > 0 {
                base = compose_raw(&base, &base)?;
            }
        }
        Ok(acc)
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

/// Free-function form of [`QuadForm::reduce`].
pub fn reduce(f: QuadForm) -> QuadForm {
    f.reduce()
}

pub fn compose(f: QuadForm, g: QuadForm) -> Result<QuadForm> {
    f.compose(g)
}

/// Extended gcd: (g, x, y) with a·x + b·y = g ≥ 0.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow("form composition"))
}

fn add(a: i128, b: i128) -> Result<i128> {
    a.checked_add(b).ok_or(Error::Overflow("form composition"))
}

fn compose_raw(f: &QuadForm, g: &QuadForm) -> Result<QuadForm> {
    let d = i128::from(f.disc.d);
    let (a1, b1) = (i128::from(f.a), i128::from(f.b));
    let (a2, b2) = (i128::from(g.a), i128::from(g.b));
    let s = (b1 + b2) / 2;
    let (g1, x1, y1) = ext_gcd(a1, a2);
    let (e, x2, w) = ext_gcd(g1, s);
    let (u, v) = (x1 * x2, y1 * x2);

    let a3 = (a1 / e) * (a2 / e);
    // B = (u a1 b2 + v a2 b1 + w (b1 b2 + d)/2) / e
    let t1 = mul(mul(u, a1)?, b2)?;
    let t2 = mul(mul(v, a2)?, b1)?;
    let t3 = mul(w, (mul(b1, b2)? + d) / 2)?;
    let num = add(add(t1, t2)?, t3)?;
    debug_assert_eq!(num % e, 0);
    let two_a3 = 2 * a3;
    let b3 = (num / e).rem_euclid(two_a3);
    let num_c = mul(b3, b3)? - d;
    debug_assert_eq!(num_c % (4 * a3), 0);
    let c3 = num_c / (4 * a3);
    let out_of_range = |v: i128| v > i128::from(i64::MAX) || v < i128::from(i64::MIN);
    if out_of_range(a3) || out_of_range(b3) || out_of_range(c3) {
        return Err(Error::Overflow("form composition"));
    }
    Ok(QuadForm::raw(a3 as i64, b3 as i64, c3 as i64, f.disc).reduce())
}

/// All reduced forms of discriminant d; their number is h(d).
pub fn enumerate_reduced(disc: Discriminant) -> Result<Vec<QuadForm>> {
    enumerate_reduced_capped(disc, ENUMERATION_CAP)
}

pub fn enumerate_reduced_capped(disc: Discriminant, cap: u64) -> Result<Vec<QuadForm>> {
    if !disc.is_fundamental() {
        return Err(Error::Domain(format!("{disc} is not fundamental")));
    }
    if disc.abs() > cap {
        return Err(Error::Resource(format!(
            "|d| = {} exceeds enumeration cap {cap}",
            disc.abs()
        )));
    }
    let d = disc.d;
    let a_max = numtheory::isqrt(disc.abs() / 3);
    let parity = d.rem_euclid(2);
    let mut out = Vec::new();
    for a in 1..=a_max as i64 {
        let four_a = 4 * a;
        let mut b = -a + 1;
        if b.rem_euclid(2) != parity {
            b += 1;
        }
        while b <= a {
            let num = b * b - d;
            if num % four_a == 0 {
                let c = num / four_a;
                if c >= a && !(b < 0 && a == c) {
                    out.push(QuadForm::raw(a, b, c, disc));
                }
            }
            b += 2;
        }
    }
    Ok(out)
}

/// The form (p, b, c) over the prime p, when p splits or ramifies in d.
pub fn prime_form(disc: Discriminant, p: u64) -> Option<QuadForm> {
    let d = disc.d;
    if kronecker(d, p) == -1 {
        return None;
    }
    let pi = p as i64;
    let b = if p == 2 {
        (0..4).find(|&b: &i64| (b * b - d).rem_euclid(8) == 0)?
    } else {
        let r = sqrt_mod_prime(d.rem_euclid(pi) as u64, p)? as i64;
        if r.rem_euclid(2) == d.rem_euclid(2) {
            r
        } else {
            pi - r
        }
    };
    let num = i128::from(b) * i128::from(b) - i128::from(d);
    let c = num / (4 * i128::from(pi));
    Some(QuadForm::raw(pi, b, c as i64, disc).reduce())
}
