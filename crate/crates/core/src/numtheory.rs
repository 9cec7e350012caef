//! Arithmetic kernel shared by every other module: a segmented prime sieve,
//! the Kronecker symbol, modular square roots, trial-division factoring and
//! the handful of special functions the predictions need.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// li(2), the offset between the principal-value integral and `Li`.
const LI_AT_2: f64 = 1.045_163_780_117_492_784_8;

/// Default number of odd integers covered by one sieve segment.
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 18;

/// All primes up to `limit`, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn new(limit: u64) -> Result<Self> {
        sieve_primes(limit)
    }

    /// Smallest table holding at least `count` primes.
    pub fn with_count(count: usize) -> Result<Self> {
        let mut limit = nth_prime_upper_bound(count.max(1));
        loop {
            let table = sieve_primes(limit)?;
            if table.len() >= count {
                let last = table.primes[count - 1];
                return sieve_primes(last);
            }
            limit *= 2;
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().copied()
    }

    /// Primes `p <= bound`.
    pub fn up_to(&self, bound: u64) -> &[u64] {
        let end = self.primes.partition_point(|&p| p <= bound);
        &self.primes[..end]
    }

    /// Membership for `n <= limit`; `None` past the sieved range.
    pub fn contains(&self, n: u64) -> Option<bool> {
        (n <= self.limit).then(|| self.primes.binary_search(&n).is_ok())
    }
}

fn nth_prime_upper_bound(n: usize) -> u64 {
    if n < 6 {
        return 15;
    }
    let n = n as f64;
    (n * (n.ln() + n.ln().ln())).ceil() as u64 + 10
}

/// Primes up to `limit` with the default segment length.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    sieve_primes_segmented(limit, DEFAULT_SEGMENT_LEN)
}

/// Segmented sieve of Eratosthenes over odd numbers. `segment_len` counts odd
/// integers per segment.
pub fn sieve_primes_segmented(limit: u64, segment_len: usize) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::EmptyRange { limit });
    }
    let segment_len = segment_len.max(64) as u64;
    let root = isqrt(limit);
    let base = small_sieve(root);

    let mut primes = vec![2u64];
    let mut seg = vec![true; segment_len as usize];
    // Segment k covers odd numbers low, low+2, ..., low + 2*(segment_len-1).
    let mut low = 3u64;
    while low <= limit {
        let high = (low + 2 * (segment_len - 1)).min(if limit % 2 == 0 { limit - 1 } else { limit });
        let count = ((high - low) / 2 + 1) as usize;
        seg[..count].fill(true);
        for &p in base.iter().skip(1) {
            let p2 = p * p;
            if p2 > high {
                break;
            }
            let mut start = if p2 >= low { p2 } else { low.div_ceil(p) * p };
            if start % 2 == 0 {
                start += p;
            }
            let mut m = start;
            while m <= high {
                seg[((m - low) / 2) as usize] = false;
                m += 2 * p;
            }
        }
        primes.extend(
            seg[..count]
                .iter()
                .enumerate()
                .filter(|(_, &is_p)| is_p)
                .map(|(i, _)| low + 2 * i as u64),
        );
        low = high + 2;
    }
    Ok(PrimeTable { limit, primes })
}

fn small_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut is = vec![true; n + 1];
    is[0] = false;
    is[1] = false;
    let mut i = 2;
    while i * i <= n {
        if is[i] {
            let mut j = i * i;
            while j <= n {
                is[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    is.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}

pub fn isqrt(n: u64) -> u64 {
    if n < 2 {
        return n;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Jacobi symbol (a/n) for odd n > 0.
pub fn jacobi(mut a: u64, mut n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    a %= n;
    let mut t = 1;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            t = -t;
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol (d/n). Total: (d/0) is 1 for d = ±1 and 0 otherwise.
pub fn kronecker(d: i64, n: u64) -> i32 {
    if n == 0 {
        return i32::from(d == 1 || d == -1);
    }
    let tz = n.trailing_zeros();
    let odd = n >> tz;
    let mut sign = 1;
    if tz > 0 {
        if d % 2 == 0 {
            return 0;
        }
        // (d/2) = 1 for d ≡ ±1 (mod 8), -1 for d ≡ ±3 (mod 8)
        if tz % 2 == 1 && matches!(d.rem_euclid(8), 3 | 5) {
            sign = -1;
        }
    }
    if odd == 1 {
        return sign;
    }
    sign * jacobi(d.rem_euclid(odd as i64) as u64, odd)
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// A square root of `a` modulo the odd prime `p` (Tonelli–Shanks), if one exists.
pub fn sqrt_mod_prime(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if p == 2 {
        return Some(a);
    }
    if jacobi(a, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    let s = (p - 1).trailing_zeros();
    let q = (p - 1) >> s;
    let mut z = 2;
    while jacobi(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mul_mod(t2, t2, p);
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    Some(r)
}

/// Prime factorization by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut push = |p: u64, n: &mut u64| {
        let mut k = 0;
        while *n % p == 0 {
            *n /= p;
            k += 1;
        }
        if k > 0 {
            out.push((p, k));
        }
    };
    push(2, &mut n);
    push(3, &mut n);
    let mut p = 5;
    while p * p <= n {
        push(p, &mut n);
        push(p + 2, &mut n);
        p += 6;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    matches!(factorize(n).as_slice(), [(p, 1)] if *p == n)
}

pub fn is_squarefree(n: u64) -> bool {
    n != 0 && factorize(n).iter().all(|&(_, k)| k == 1)
}

/// li(x) for x > 1 by Ramanujan's series.
fn li(x: f64) -> f64 {
    let l = x.ln();
    let mut sum = 0.0;
    let mut inner = 0.0;
    let mut term = 1.0; // (ln x)^n / (n! 2^(n-1)) without sign
    let mut n = 1u32;
    loop {
        term *= l / f64::from(n);
        if n > 1 {
            term /= 2.0;
        }
        if n % 2 == 1 {
            inner += 1.0 / f64::from(n);
        }
        let signed = if n % 2 == 1 { term } else { -term } * inner;
        sum += signed;
        if f64::from(n) > l && signed.abs() < 1e-17 * sum.abs() {
            break;
        }
        n += 1;
        if n > 2000 {
            break;
        }
    }
    EULER_GAMMA + l.ln() + x.sqrt() * sum
}

/// Li(x) = ∫₂ˣ dt / log t.
pub fn log_integral(x: f64) -> Result<f64> {
    if !(x > 2.0) {
        return Err(Error::Domain(format!("log_integral needs x > 2, got {x}")));
    }
    Ok(li(x) - LI_AT_2)
}

/// Modified Bessel function I₀ by its power series.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-15 * sum {
            return sum;
        }
        k += 1.0;
    }
}

/// Exponential integral E₁(x) for x > 0, by continued fraction (x ≥ 1) or series.
pub fn expint_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 needs x > 0");
    if x < 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / f64::from(k);
            let add = -term / f64::from(k);
            sum += add;
            if add.abs() < 1e-17 {
                break;
            }
        }
        return -EULER_GAMMA - x.ln() + sum;
    }
    // Modified Lentz on E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
    let tiny = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -f64::from(i * i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}
